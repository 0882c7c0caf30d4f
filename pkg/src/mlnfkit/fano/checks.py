"""Ready-made certification runs on the reservoir model.

Each function builds a model from a handful of physical parameters, runs
one family of checks and returns :class:`CheckReport` objects together with
the raw numbers, so the CLI and the tests share the same presets.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from ..layered import Structure1D, refractive_index, slab
from ..report import CheckReport
from ..response import (Constants, eval_response, standard_electric_model,
                        standard_magnetodielectric_model)
from .bogoliubov import BogoliubovModes, diagonalize
from .defect import lnf_defect
from .model import BathGrid, PhaseSpaceModel, build_model
from .polariton import polariton_vectors

__all__ = [
    "standard_slab", "certification_check", "BracketResult", "smeared_rows", "bosonicity_check",
    "bosonicity_sweep", "finite_slab_defect", "filled_box_defect", "defect_vs_filling",
    "defect_vs_bath", "spectrum_rows", "model_summary", "polariton_overlap", "overlap_sweep",
]

ANCHOR_DIAG = "normal-mode diagonalisation of the discretised reservoir Hamiltonian"
ANCHOR_BOSE = "bosonic commutation of the polariton map (smeared rows)"
ANCHOR_DEFECT = "completeness defect of material-only polaritons (finite versus unbounded media)"


def standard_slab(response=None, thickness: float = 2.0, center: float = 0.0,
                  constants: Constants | None = None) -> Structure1D:
    """A single absorbing slab centred on ``center``; magnetodielectric by default."""
    response = standard_magnetodielectric_model() if response is None else response
    st = slab(response, thickness=thickness, x_min=center - thickness / 2)
    if constants is not None:
        st = Structure1D(st.layers, constants)
    return st


def _zero_report(name, value, tol, params, anchor, **meta) -> CheckReport:
    return CheckReport(name, params, float(value), float(value), tol, reference_is_zero=True,
                       anchor=anchor, metadata=meta)


# -- diagonalisation --------------------------------------------------------

def certification_check(n_sites: int = 128, n_bath: int = 64, box: float = 10.0,
                        bath_range: tuple[float, float] = (0.05, 6.0),
                        structure: Structure1D | None = None,
                        tol: float = 1e-8) -> tuple[list[CheckReport], BogoliubovModes]:
    """Diagonalise the slab model and certify the transform.

    Reports the symplectic residual max|T J T^T - J|, the most negative
    squared frequency relative to the largest, the per-mode energy
    residual and the positivity of the Hamiltonian blocks.
    """
    structure = standard_slab() if structure is None else structure
    t0 = time.perf_counter()
    model = build_model(structure, box, n_sites, BathGrid(*bath_range, n_bath))
    modes = diagonalize(model)
    elapsed = time.perf_counter() - t0
    params = {"n_sites": n_sites, "n_bath": n_bath, "box": box, "n_pairs": model.n_pairs}
    freqs = modes.frequencies
    lo, hi = model.psd_defect()
    neg = max(0.0, -float(np.min(freqs))) / max(float(np.max(freqs)), 1e-300)
    reports = [
        _zero_report("bogoliubov_symplectic", modes.symplectic_residual(), tol, params, ANCHOR_DIAG,
                     seconds=elapsed),
        _zero_report("bogoliubov_frequencies", neg if np.all(np.isfinite(freqs)) else math.inf,
                     tol, params, ANCHOR_DIAG, min_frequency=float(np.min(freqs)),
                     max_frequency=float(np.max(freqs)), n_zero=int(modes.zero_modes.size)),
        _zero_report("bogoliubov_energy", modes.energy_residual(), tol, params, ANCHOR_DIAG),
        _zero_report("hamiltonian_psd", max(0.0, -lo) / max(hi, 1e-300), tol, params, ANCHOR_DIAG,
                     min_eigenvalue=lo, max_eigenvalue=hi),
    ]
    return reports, modes


# -- smeared brackets -------------------------------------------------------

@dataclass
class BracketResult:
    """Bracket tables of smeared polariton rows at one bath resolution.

    ``labels`` name the rows; ``bracket[a, b] = <u_a, u_b>`` and
    ``pairing[a, b] = [u_a, u_b]`` (no conjugation).
    """

    n_bath: int
    labels: list[str]
    bracket: np.ndarray = field(repr=False)
    pairing: np.ndarray = field(repr=False)
    budget: float
    seconds: float

    @property
    def diagonal_error(self) -> float:
        return float(np.max(np.abs(np.diag(self.bracket) - 1.0)))

    @property
    def cross_error(self) -> float:
        off = self.bracket - np.diag(np.diag(self.bracket))
        return float(np.max(np.abs(off)))

    @property
    def pairing_error(self) -> float:
        return float(np.max(np.abs(self.pairing)))


def _bracket(U, V, n, hbar, conj=True):
    V = np.conj(V) if conj else V
    return 1j * hbar * (U[:, :n] @ V[:, n:].T - U[:, n:] @ V[:, :n].T)


def smeared_rows(model: PhaseSpaceModel, center: float, sigma_nodes: float = 3.0,
                 half_width: int = 12) -> tuple[list[str], np.ndarray]:
    """Gaussian-smeared scattering and medium rows around ``center``.

    Rows at bath nodes within ``half_width`` of the node nearest ``center``
    are summed with Gaussian weights of width ``sigma_nodes`` spacings and
    divided by the root of the summed squared weights, so a delta-normalised
    family yields unit diagonal brackets.
    """
    bath = model.bath
    jc = bath.nearest(center)
    js = range(max(1, jc - half_width), min(bath.n_bath - 1, jc + half_width + 1))
    sigma = sigma_nodes * bath.spacing
    acc: dict[str, np.ndarray] = {}
    norm = 0.0
    for j in js:
        pv = polariton_vectors(model, float(bath.nodes[j]))
        s = math.exp(-(bath.nodes[j] - bath.nodes[jc]) ** 2 / (2 * sigma ** 2))
        picks = {"g+": pv.g.get(1), "g-": pv.g.get(-1)}
        if pv.fe.size:
            mid = len(pv.fe) // 2
            picks["fe"] = pv.fe[mid]
            picks["fe'"] = pv.fe[min(mid + 2, len(pv.fe) - 1)]
        if pv.fm.size:
            picks["fm"] = pv.fm[len(pv.fm) // 2]
        for key, row in picks.items():
            if row is not None:
                acc[key] = acc.get(key, 0) + s * row
        norm += s * s
    labels = list(acc)
    return labels, np.array([acc[k] for k in labels]) / math.sqrt(norm)


def _budget(model: PhaseSpaceModel, omega: float) -> float:
    """(q_max dx)^2 + spacing / omega: lattice dispersion plus bath graining."""
    c = model.constants
    n_max = 1.0
    if model.structure is not None:
        for layer in model.structure.layers:
            eps, mu = eval_response(layer.response, omega)
            n_max = max(n_max, abs(refractive_index(complex(eps), complex(mu))))
    q = n_max * omega / c.c
    return (q * model.dx) ** 2 + model.bath.spacing / omega


def bosonicity_check(n_bath: int, dx: float = 0.1, omega_c: float = 1.5,
                     structure: Structure1D | None = None,
                     bath_range: tuple[float, float] = (0.05, 6.0), box_factor: float = 2.0,
                     tol_diagonal: float = 0.1) -> tuple[list[CheckReport], BracketResult]:
    """Brackets of smeared polariton rows for a unit slab at ``n_bath`` nodes.

    The box half-width is ``box_factor * c / spacing`` so that a smeared
    wave packet does not wrap around the periodic box within the bath
    recurrence time. Cross and pairing brackets are judged against the
    discretisation budget, the diagonal against ``tol_diagonal``.
    """
    structure = standard_slab(thickness=1.0) if structure is None else structure
    bath = BathGrid(*bath_range, n_bath)
    box = box_factor * structure.constants.c / bath.spacing
    n_sites = int(round(2 * box / dx))
    n_sites += n_sites % 2
    t0 = time.perf_counter()
    model = build_model(structure, box, n_sites, bath)
    labels, rows = smeared_rows(model, omega_c)
    n, hbar = model.n_pairs, model.constants.hbar
    res = BracketResult(n_bath, labels, _bracket(rows, rows, n, hbar),
                        _bracket(rows, rows, n, hbar, conj=False), _budget(model, omega_c),
                        time.perf_counter() - t0)
    params = {"n_bath": n_bath, "dx": dx, "omega_c": omega_c, "n_sites": n_sites,
              "n_pairs": n}
    meta = {"labels": labels, "budget": res.budget, "seconds": res.seconds}
    reports = [
        CheckReport("bosonic_diagonal", params, res.diagonal_error, res.diagonal_error,
                    tol_diagonal, anchor=ANCHOR_BOSE,
                    metadata={**meta, "diagonal": np.diag(res.bracket).real}),
        _zero_report("bosonic_cross", res.cross_error, res.budget, params, ANCHOR_BOSE, **meta),
        _zero_report("bosonic_annihilation", res.pairing_error, res.budget, params, ANCHOR_BOSE,
                     **meta),
    ]
    return reports, res


def bosonicity_sweep(n_baths=(64, 128, 256), **kw) -> tuple[list[CheckReport], list[BracketResult]]:
    """Run :func:`bosonicity_check` at several resolutions plus a monotonicity report.

    The monotonicity report's error is the largest ratio of successive
    diagonal errors; it passes when every refinement strictly improves.
    """
    reports, results = [], []
    for nb in n_baths:
        reps, res = bosonicity_check(nb, **kw)
        reports += reps
        results.append(res)
    errs = [r.diagonal_error for r in results]
    ratio = max((b / a for a, b in zip(errs, errs[1:])), default=0.0)
    reports.append(CheckReport("bosonic_refinement", {"n_baths": list(n_baths)}, ratio, ratio,
                               1.0 - 1e-12, anchor=ANCHOR_BOSE,
                               metadata={"diagonal_errors": errs}))
    return reports, results


# -- completeness defect ----------------------------------------------------

def _slab_model(filling, box, n_sites, n_bath, bath_range, response):
    response = standard_electric_model() if response is None else response
    if not 0 < filling <= 1:
        raise DomainError("filling must lie in (0, 1]")
    st = slab(response, thickness=2 * box * filling, x_min=-box * filling)
    return build_model(st, box, n_sites, BathGrid(*bath_range, n_bath))


def finite_slab_defect(filling: float = 0.1, box: float = 10.0, n_sites: int = 128,
                       n_bath: int = 128, bath_range=(0.05, 6.0), band=(1.2, 1.6),
                       response=None) -> tuple[list[CheckReport], dict]:
    """Material-only and material-plus-scattering spanning for a thin slab.

    The band sits in the propagating window below the absorption line,
    where the slab is nearly transparent and most field modes live in the
    surrounding vacuum.
    """
    model = _slab_model(filling, box, n_sites, n_bath, bath_range, response)
    modes = diagonalize(model)
    d_mat, rep_mat, res_mat = lnf_defect(model, modes, band, expect="incomplete")
    d_all, rep_all, res_all = lnf_defect(model, modes, band, include_scattering=True)
    for rep in (rep_mat, rep_all):
        rep.params["filling"] = filling
    return [rep_mat, rep_all], {"material": res_mat, "all": res_all, "model": model,
                                "modes": modes}


def filled_box_defect(n_bath: int = 256, box: float = 4.0, n_sites: int = 64,
                      bath_range=(0.8, 2.8), band=(1.8, 2.2), response=None,
                      tol: float = 0.02) -> tuple[CheckReport, object]:
    """Material-only defect when the absorber fills the whole periodic box."""
    model = _slab_model(1.0, box, n_sites, n_bath, bath_range, response)
    modes = diagonalize(model)
    _, rep, res = lnf_defect(model, modes, band, expect="complete", tol=tol)
    rep.params["filling"] = 1.0
    return rep, res


def defect_vs_filling(fillings=(0.1, 0.2, 0.4, 0.6, 0.8, 1.0), box: float = 10.0,
                      n_sites: int = 96, n_bath: int = 48, bath_range=(0.5, 3.5),
                      band=(1.8, 2.2), response=None) -> tuple[list[dict], CheckReport]:
    """Material-only defect as the slab grows to fill the box.

    Returns CSV-ready rows and a report whose error is the largest increase
    between successive fillings (zero for a non-increasing curve).
    """
    rows = []
    for f in fillings:
        t0 = time.perf_counter()
        model = _slab_model(f, box, n_sites, n_bath, bath_range, response)
        modes = diagonalize(model)
        d, _, res = lnf_defect(model, modes, band)
        rows.append({"filling": f, "defect": d, "signed_defect": res.raw, "n_pairs": model.n_pairs,
                     "n_modes": int(res.omega.size), "n_vectors": res.n_vectors,
                     "seconds": time.perf_counter() - t0})
    rise = max((max(0.0, b["defect"] - a["defect"]) for a, b in zip(rows, rows[1:])), default=0.0)
    rep = _zero_report("defect_vs_filling", rise, 1e-12,
                       {"fillings": list(fillings), "band": list(band), "n_bath": n_bath,
                        "n_sites": n_sites, "box": box}, ANCHOR_DEFECT,
                       defects=[r["defect"] for r in rows])
    return rows, rep


def defect_vs_bath(n_baths=(32, 64, 128, 256), **kw) -> tuple[list[dict], CheckReport]:
    """Filled-box defect against bath resolution, with a monotonicity report."""
    rows = []
    for nb in n_baths:
        rep, res = filled_box_defect(n_bath=nb, **kw)
        rows.append({"n_bath": nb, "defect": res.defect, "signed_defect": res.raw,
                     "n_modes": int(res.omega.size)})
    rise = max((max(0.0, b["defect"] - a["defect"]) for a, b in zip(rows, rows[1:])), default=0.0)
    rep = _zero_report("defect_vs_bath", rise, 1e-12, {"n_baths": list(n_baths)}, ANCHOR_DEFECT,
                       defects=[r["defect"] for r in rows])
    return rows, rep


# -- tabulation -------------------------------------------------------------

def spectrum_rows(modes: BogoliubovModes) -> list[dict]:
    rows = []
    for k, s in enumerate(modes.sectors):
        for i in np.argsort(s.omega):
            rows.append({"sector": s.label, "index": int(i), "omega": float(s.omega[i]),
                         "zero_mode": bool(s.zero[i])})
    return rows


def model_summary(model: PhaseSpaceModel) -> dict:
    return {"n_sites": model.n_sites, "n_bath": model.n_bath, "n_pairs": model.n_pairs,
            "box": model.box, "dx": model.dx, "electric_sites": int(model.e_sites.size),
            "magnetic_sites": int(model.m_sites.size), "uniform": bool(model.uniform)}


# -- spectral overlap -------------------------------------------------------

def polariton_overlap(model: PhaseSpaceModel, modes: BogoliubovModes, omega: float,
                      window: float) -> tuple[float, np.ndarray]:
    """Largest principal angle between polariton rows at ``omega`` and nearby modes.

    Every row (scattering and medium) is expanded on the annihilation
    operators of all normal modes; the share of its weight carried by modes
    with |w_m - omega| <= window gives cos^2 of its angle to that subspace.

    Returns:
        (max angle in radians, per-row angles).
    """
    from .defect import _amplitudes

    pv = polariton_vectors(model, omega)
    rows = pv.all_rows()
    if not rows.size:
        raise DomainError("no polariton rows at this frequency")
    inside = np.zeros(rows.shape[0])
    total = np.zeros(rows.shape[0])
    for k, sec in enumerate(modes.sectors):
        A = np.abs(_amplitudes(sec, modes.to_sector(rows, k), modes.hbar)) ** 2
        near = np.abs(sec.omega - pv.omega) <= window
        inside += A[:, near].sum(axis=1)
        total += A.sum(axis=1)
    cos2 = np.clip(inside / np.maximum(total, 1e-300), 0.0, 1.0)
    angles = np.arccos(np.sqrt(cos2))
    return float(angles.max()), angles


def overlap_sweep(n_baths=(32, 64, 128), omega: float = 1.4, window: float = 0.3,
                  dx: float = 0.2, box_factor: float = 2.0, bath_range=(0.05, 6.0),
                  structure: Structure1D | None = None) -> tuple[list[dict], CheckReport]:
    """Principal angle from :func:`polariton_overlap` as the bath is refined.

    The box grows with the bath (half-width ``box_factor * c / spacing``) so
    that the vacuum spectrum is refined together with the reservoirs.
    """
    structure = standard_slab(thickness=1.0) if structure is None else structure
    rows = []
    for nb in n_baths:
        bath = BathGrid(*bath_range, nb)
        box = box_factor * structure.constants.c / bath.spacing
        n_sites = int(round(2 * box / dx))
        n_sites += n_sites % 2
        model = build_model(structure, box, n_sites, bath)
        modes = diagonalize(model)
        angle, _ = polariton_overlap(model, modes, omega, window)
        rows.append({"n_bath": nb, "n_pairs": model.n_pairs, "max_angle": angle})
    ratio = max((b["max_angle"] / a["max_angle"] for a, b in zip(rows, rows[1:])), default=0.0)
    rep = CheckReport("polariton_overlap", {"n_baths": list(n_baths), "omega": omega,
                                            "window": window},
                      ratio, ratio, 1.0 - 1e-12, anchor=ANCHOR_BOSE,
                      metadata={"angles": [r["max_angle"] for r in rows]})
    return rows, rep
