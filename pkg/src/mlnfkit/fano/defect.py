"""Spanning fractions of normal modes by polariton families.

Each normal mode b_m with frequency in a band is projected onto the span of
a set of polariton rows under the bracket <u, v> = [u, v^dagger]:

    p_m = c^H G^+ c,  c_n = <v_n, b_m>,  G = A A^H,

where A holds the annihilation amplitudes <v_n, b_k> of every row on every
mode. Using only the positive-frequency part keeps G positive semidefinite
(the full bracket Gram matrix is indefinite at the level of discretisation
error) and bounds each p_m by one. G^+ comes from a rank-revealing pivoted
Cholesky factor.

Modes are weighted by their electric-field content
w_m = sum_i dx |[E(x_i), b_m^dagger]|^2, so the result measures the share
of field fluctuations reachable from the chosen family. The defect is
1 - sum w_m p_m / sum w_m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from ..errors import DomainError
from ..report import CheckReport
from .bogoliubov import BogoliubovModes, fourier_patterns
from .model import PhaseSpaceModel
from .polariton import polariton_vectors

__all__ = ["DefectResult", "field_rows", "frequency_grid", "lnf_defect", "spanning_fraction"]

ANCHOR = "completeness defect of material-only polaritons (finite versus unbounded media)"


def frequency_grid(model: PhaseSpaceModel) -> tuple[np.ndarray, float]:
    """Frequencies at which polariton rows can be built, and their spacing."""
    if model.bath is not None and (model.e_sites.size or model.m_sites.size):
        return model.bath.nodes[1:-1], model.bath.spacing
    c = model.constants.c
    step = 2 * math.pi * c / (2 * model.box)
    # stay inside the resolved part of the lattice (8 points per wavelength)
    kmax = min(model.n_sites // 2, int(2 * math.pi * c / (8 * model.dx) / step) + 1)
    return step * np.arange(1, kmax), step


def field_rows(model: PhaseSpaceModel) -> sp.csr_matrix:
    """Rows of E(x_i) = -(Pi + int alpha X) / eps0 on the canonical variables."""
    n, N = model.n_sites, model.n_pairs
    c = 1.0 / (model.constants.eps0 * math.sqrt(model.dx))
    rows = list(range(n))
    cols = list(range(N, N + n))
    vals = [-c] * n
    if model.e_sites.size:
        sw = np.sqrt(model.bath.weights)
        for e, i in enumerate(model.e_sites):
            idx = model.x_index(e, 0) + np.arange(model.n_bath)
            rows += [i] * idx.size
            cols += list(idx)
            vals += list(-c * sw * model.alpha[e])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, 2 * N))


def _bracket(U, V, hbar):
    """<u, v> = i hbar (u_q . v_p* - u_p . v_q*) for row stacks."""
    n = U.shape[1] // 2
    return 1j * hbar * (U[:, :n] @ V[:, n:].conj().T - U[:, n:] @ V[:, :n].conj().T)


@dataclass
class DefectResult:
    defect: float
    band: tuple[float, float]
    raw: float
    omega: np.ndarray = field(repr=False)
    weight: np.ndarray = field(repr=False)
    spanned: np.ndarray = field(repr=False)
    n_vectors: int = 0
    rank: int = 0

    def table(self) -> list[dict]:
        return [{"omega": float(w), "field_weight": float(a), "spanned": float(p)}
                for w, a, p in zip(self.omega, self.weight, self.spanned)]


def _sector_vectors(model, modes, nodes, families):
    """Polariton rows expressed in each sector's coordinates."""
    out = {k: [] for k in range(len(modes.sectors))}
    fourier = len(modes.sectors) > 1
    pats = fourier_patterns(model.n_sites) if fourier else None
    if fourier:
        order = np.vstack([p for _, p in pats])
        owner = np.concatenate([np.full(p.shape[0], k) for k, (_, p) in enumerate(pats)])
    for w in nodes:
        kw = {}
        if fourier:
            if model.e_sites.size:
                kw["e_combos"] = order
            if model.m_sites.size:
                kw["m_combos"] = order
        pv = polariton_vectors(model, float(w), **kw)
        parts = []
        if "material" in families:
            parts += [(pv.fe, True), (pv.fm, True)]
        if "scattering" in families and pv.g:
            parts.append((pv.scattering(), False))
        for rows, by_sector in parts:
            if not rows.size:
                continue
            if fourier and by_sector:
                for k in range(len(modes.sectors)):
                    sel = rows[owner == k]
                    if sel.size:
                        out[k].append(modes.to_sector(sel, k))
            else:
                for k in range(len(modes.sectors)):
                    out[k].append(modes.to_sector(rows, k))
    return {k: (np.vstack(v) if v else None) for k, v in out.items()}


def _amplitudes(sec, V, hbar):
    """Annihilation amplitudes <v, b_m> of sector rows on every mode.

    In normal coordinates <v, b_m> = sqrt(hbar/2) (v_Q - i v_P). Zero modes
    carry no annihilation part and get a zero column.
    """
    n = sec.size
    w = np.where(sec.zero, 1.0, sec.omega)
    vQ = np.asarray((sec.L.T @ V[:, :n].T).T) @ sec.U / np.sqrt(w)
    vP = np.asarray((sec.Linv @ V[:, n:].T).T) @ sec.U * np.sqrt(w)
    A = math.sqrt(hbar / 2) * (vQ - 1j * vP)
    A[:, sec.zero] = 0.0
    return A


def _pivoted_factor(G, rcond):
    """Rank-revealing pivoted Cholesky of the Gram matrix.

    Returns (L, piv) with G[piv][:, piv] ~ L L^H restricted to the numerically
    positive part. Directions whose residual diagonal falls below
    ``rcond * max(diag)`` are dropped, which also discards the small negative
    part that discretisation leaves in the Gram matrix.
    """
    scale = max(float(np.abs(np.diag(G)).max()), 1e-300)
    c, piv, rank, info = la.lapack.zpstrf(G, tol=rcond * scale, lower=1)
    if info < 0:
        raise DomainError("pivoted Cholesky rejected the Gram matrix")
    return np.tril(c[:rank, :rank]), piv[:rank] - 1


def spanning_fraction(model: PhaseSpaceModel, modes: BogoliubovModes, band: tuple[float, float],
                      families=("material",), margin: float | None = None,
                      rcond: float = 1e-8) -> DefectResult:
    """Field-weighted fraction of in-band modes spanned by the given families."""
    lo, hi = band
    if not 0 < lo < hi:
        raise DomainError("band must satisfy 0 < lo < hi")
    grid, step = frequency_grid(model)
    margin = max(8 * step, 0.75 * (hi - lo)) if margin is None else margin
    nodes = grid[(grid >= lo - margin) & (grid <= hi + margin)]
    hbar = modes.hbar
    Erows = field_rows(model)
    om_all, wt_all, sp_all = [], [], []
    has_any = False
    has_medium = bool(model.e_sites.size or model.m_sites.size)
    wanted = "scattering" in families or has_medium
    vecs = _sector_vectors(model, modes, nodes, families) if nodes.size and wanted else {}
    nvec, rank = 0, 0
    for k, sec in enumerate(modes.sectors):
        sel = np.nonzero((sec.omega >= lo) & (sec.omega <= hi) & ~sec.zero)[0]
        if not sel.size:
            continue
        has_any = True
        B = modes.annihilation_rows(k, sel)
        Es = modes.to_sector(Erows, k)
        wts = model.dx * np.sum(np.abs(_bracket(Es, B, hbar)) ** 2, axis=0)
        V = vecs.get(k)
        if V is None or not V.size:
            p = np.zeros(sel.size)
        else:
            nvec += V.shape[0]
            A = _amplitudes(sec, V, hbar)
            G = A @ A.conj().T
            L, piv = _pivoted_factor(G, rcond)
            rank += L.shape[0]
            C = la.solve_triangular(L, A[piv][:, sel], lower=True, check_finite=False)
            p = np.sum(np.abs(C) ** 2, axis=0)
        om_all.append(sec.omega[sel])
        wt_all.append(wts)
        sp_all.append(p)
    if not has_any:
        raise DomainError("no normal modes in the requested band")
    om, wt, pr = (np.concatenate(a) for a in (om_all, wt_all, sp_all))
    order = np.argsort(om)
    frac = float(np.sum(wt * pr) / np.sum(wt))
    defect = min(1.0, max(0.0, 1.0 - frac))
    return DefectResult(defect, (lo, hi), 1.0 - frac, om[order], wt[order], pr[order], nvec, rank)


def lnf_defect(model: PhaseSpaceModel, modes: BogoliubovModes, band: tuple[float, float],
               expect: str | None = None, tol: float | None = None,
               include_scattering: bool = False, **kw) -> tuple[float, CheckReport, DefectResult]:
    """Material-only (or material + scattering) spanning defect over a band.

    ``expect="complete"`` passes when the defect is at most ``tol``
    (default 0.02); ``expect="incomplete"`` passes when the spanned
    fraction is at most ``tol`` (default 0.5), i.e. the defect is large.
    """
    fam = ("material", "scattering") if include_scattering else ("material",)
    res = spanning_fraction(model, modes, band, fam, **kw)
    if expect in (None, "complete"):
        err, tol = res.defect, (0.02 if tol is None else tol)
    elif expect == "incomplete":
        err, tol = 1.0 - res.defect, (0.5 if tol is None else tol)
    else:
        raise DomainError("expect must be 'complete' or 'incomplete'")
    name = "mlnf_spanning" if include_scattering else "lnf_defect"
    rep = CheckReport(name, {"band": list(band), "n_sites": model.n_sites, "n_bath": model.n_bath,
                             "expect": expect or "complete"},
                      err, err, tol, anchor=ANCHOR,
                      metadata={"defect": res.defect, "signed_defect": res.raw, "n_modes": int(res.omega.size),
                                "n_vectors": res.n_vectors, "gram_rank": res.rank})
    return res.defect, rep, res
