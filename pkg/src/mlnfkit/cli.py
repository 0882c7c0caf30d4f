"""Batch runner: config file in, JSON-lines reports, CSV tables and figures out.

Config files are INI. A ``[run]`` section sets defaults; ``[model NAME]``
and ``[structure NAME]`` sections define named inputs in the flat key
format of :mod:`mlnfkit.response` / :mod:`mlnfkit.layered`; each
``[suite NAME]`` runs one registered check over the cartesian product of
its ``grid.*`` keys::

    [run]
    output_dir = out
    parallelism = 2
    seed = 7

    [model lorentz]
    electric.pole.0.strength = 1.0
    electric.pole.0.resonance = 2.0
    electric.pole.0.damping = 0.1

    [suite kk]
    check = kk_check
    model = lorentz
    grid.omega = 0.2:5:20
    tol = 1e-6

Grid values are ``a:b:n`` (inclusive linspace), comma lists, or a single
value. ``set.*`` keys pass a fixed value (lists allowed) to every point;
``tol`` overrides every tolerance of the suite and ``tol.<report>`` a
single report's.
"""

from __future__ import annotations

import argparse
import configparser
import itertools
import json
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .errors import ConfigError, MLNFError
from .layered import Structure1D, green, reflection_transmission, refractive_index, slab, \
    structure_from_flat
from .report import CheckReport, compare, report_row, write_csv, write_jsonl
from .response import (ConstantResponse, Constants, cauchy_loop, dispersion_suite,
                       eval_response, kk_check, model_from_flat, reality_defect,
                       standard_electric_model, standard_magnetic_model,
                       standard_magnetodielectric_model)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# metadata keys that vary between identical runs; kept out of reports.jsonl
VOLATILE_KEYS = frozenset({"seconds"})


# -- registry ---------------------------------------------------------------

@dataclass(frozen=True)
class CheckSpec:
    """A registered check.

    ``runner(point, ctx)`` returns a list of reports, or a pair
    (reports, {table name: rows}) for sweeps that also produce curves.
    """

    name: str
    anchor: str
    runner: Callable
    grid: dict[str, list] = field(default_factory=dict)
    fixed: dict[str, Any] = field(default_factory=dict)
    tol: float | None = None
    needs: tuple[str, ...] = ()
    default_model: str | None = None
    default_structure: str | None = None


@dataclass
class PointContext:
    model: Any = None
    structure: Structure1D | None = None
    seed: tuple[int, ...] = (0,)

    @property
    def rng(self) -> np.random.Generator:
        return np.random.default_rng(list(self.seed))


BUILTIN_MODELS: dict[str, Callable[[], Any]] = {
    "electric": standard_electric_model,
    "magnetic": standard_magnetic_model,
    "magnetodielectric": standard_magnetodielectric_model,
    "absorber": lambda: ConstantResponse(2 + 0.5j, 1.0),
}


def _builtin_structures() -> dict[str, Callable[[], Structure1D]]:
    return {
        "vacuum": Structure1D,
        "md_slab": lambda: slab(standard_magnetodielectric_model(), 1.0, -0.5),
        "electric_slab": lambda: slab(standard_electric_model(), 1.0, -0.5),
        "lossless_slab": lambda: slab(4.0, 1.0, -0.5),
    }


def _run_kk(p, ctx):
    return [kk_check(ctx.model, p.get("channel", "electric"), p["omega"])]


def _run_dispersion(p, ctx):
    return dispersion_suite(ctx.model, Constants(), int(p.get("n", 0)), int(p.get("sigma", 1)),
                            int(p.get("sigma_prime", 1)), p["omega"], p["omega_prime"])


def _run_reality(p, ctx):
    d = reality_defect(ctx.model, [p["omega"]])
    return [CheckReport("response_reality", {"omega": p["omega"]}, d, d, 0.0, True,
                        anchor="reality condition of the response functions")]


def _run_cauchy(p, ctx):
    lo = complex(p.get("corner_lo", 0.05 + 0.05j))
    hi = complex(p.get("corner_hi", 6 + 4j))
    val = cauchy_loop(ctx.model, p.get("channel", "electric"), (lo, hi))
    return [compare("cauchy_loop", val, 0.0, 0.0, params={"channel": p.get("channel", "electric")},
                    anchor="analyticity in the upper half-plane")]


def _run_vacuum_green(p, ctx):
    w, x, xp = p["omega"], p["x"], p["x_prime"]
    k = w / Constants().c
    exact = 1j * np.exp(1j * k * abs(x - xp)) / (2 * k)
    return [compare("vacuum_green_1d", green(Structure1D(), w, x, xp), exact, 0.0,
                    params={"omega": w, "x": x, "x_prime": xp},
                    anchor="outgoing 1D vacuum Green's function")]


def _run_flux(p, ctx):
    w, s = p["omega"], int(p.get("sigma", 1))
    r, t = reflection_transmission(ctx.structure, w, s)
    return [compare("slab_flux", abs(r) ** 2 + abs(t) ** 2, 1.0, 0.0,
                    params={"omega": w, "sigma": s},
                    anchor="flux conservation of a lossless slab")]


def _run_completeness(p, ctx):
    from .identity import completeness_1d
    return [completeness_1d(ctx.structure, p["omega"], p["x"], p["x_prime"])]


def _run_completeness_order(p, ctx):
    from .identity import completeness_refinement
    return [completeness_refinement(ctx.structure, p["omega"], p["x"], p["x_prime"])]


def _run_commutator_psd(p, ctx):
    from .identity import psd_report
    xs = np.linspace(p.get("x_min", -1.5), p.get("x_max", 1.5), int(p.get("n_points", 12)))
    return [psd_report(ctx.structure, p["omega"], xs)]


def _run_unbounded(p, ctx):
    from .identity import unbounded_lnf_identity
    w = p["omega"]
    trunc = p.get("truncation")
    if trunc is None:
        eps, mu = eval_response(ctx.model, w)
        kn = w / Constants().c * refractive_index(complex(eps), complex(mu))
        trunc = math.log(1e8) / (2 * kn.imag) if kn.imag > 0 else 50.0
    return [unbounded_lnf_identity(ctx.model, w, p["x"], p["x_prime"], truncation=trunc)]


def _run_asymptotic(p, ctx):
    from .identity import asymptotic_amplitude_check
    return [asymptotic_amplitude_check(ctx.structure, p["omega"], p["x_prime"], p["x_far"])]


def _run_im_green_origin(p, ctx):
    from .vacuum3d import im_free_green
    w = p["omega"]
    k = w / Constants().c
    return [compare("im_free_green_origin", im_free_green(w, [0.0, 0.0, 0.0]),
                    k / (6 * math.pi) * np.eye(3), 0.0, params={"omega": w},
                    anchor="radiative part of the free dyadic Green's function at coincidence")]


def _run_angular(p, ctx):
    from .vacuum3d import angular_completeness
    w = p["omega"]
    k = w / Constants().c
    rng = ctx.rng
    d = rng.normal(size=3)
    d *= rng.uniform(0.0, p.get("kr_max", 6.0)) / (k * np.linalg.norm(d))
    r_prime = rng.uniform(-1.0, 1.0, size=3)
    rep = angular_completeness(w, r_prime + d, r_prime)
    rep.params["pair"] = int(p.get("pair", 0))
    return [rep]


def _jones_f(kind):
    u = np.array([1.0, 2.0, 2.0]) / 3.0
    if kind == "constant":
        return lambda m: np.ones(len(m))
    if kind == "quadratic":
        return lambda m: 1.0 + (m @ u) ** 2
    raise ConfigError(f"unknown Jones test function {kind!r}")


def _run_jones(p, ctx):
    from .vacuum3d import jones_check
    w = p.get("omega", 1.0)
    k = w / Constants().c
    # radii on the envelope of the oscillating next-order term
    ms = [8, 16, 32, 64, 127]
    rep = jones_check(w, [0.0, 0.0, 1.0], _jones_f(p.get("f", "quadratic")),
                      [2 * math.pi * m / k for m in ms])
    rep.params["f"] = p.get("f", "quadratic")
    return [rep]


def _run_plemelj(p, ctx):
    from .vacuum3d import plemelj_limit_check
    radii = p.get("radii", [50.0, 100.0, 200.0])
    return [plemelj_limit_check(list(map(float, radii)), int(p["sigma"]),
                                lambda K: math.exp(-K * K))]


def _run_maxwell(p, ctx):
    from .fano.maxwell import maxwell_ampere_check
    return [maxwell_ampere_check(ctx.structure, p["omega"], p.get("ppw", 64),
                                 column=p.get("column", "g+"), mode=p.get("mode"))]


def _run_maxwell_slope(p, ctx):
    from .fano.maxwell import maxwell_ampere_refinement
    return [maxwell_ampere_refinement(ctx.structure, p["omega"], column=p.get("column", "g+"))]


def _run_bogoliubov(p, ctx):
    from .fano.checks import certification_check, standard_slab
    st = ctx.structure if ctx.structure is not None else standard_slab()
    reps, modes = certification_check(int(p.get("n_sites", 128)), int(p.get("n_bath", 64)),
                                      structure=st)
    from .fano.checks import model_summary, spectrum_rows
    return reps, {"spectrum": spectrum_rows(modes), "model": [model_summary(modes.model)]}


def _run_bosonicity(p, ctx):
    from .fano.checks import bosonicity_check
    kw = {"structure": ctx.structure} if ctx.structure is not None else {}
    reps, res = bosonicity_check(int(p["n_bath"]), omega_c=p.get("omega_c", 1.5), **kw)
    return reps, {"brackets": [{"n_bath": res.n_bath, "diagonal_error": res.diagonal_error,
                                "cross_error": res.cross_error, "pairing_error": res.pairing_error,
                                "budget": res.budget}]}


def _run_bosonic_refinement(p, ctx):
    from .fano.checks import bosonicity_sweep
    kw = {"structure": ctx.structure} if ctx.structure is not None else {}
    reps, results = bosonicity_sweep(tuple(int(v) for v in p.get("n_baths", (64, 128, 256))), **kw)
    rows = [{"n_bath": r.n_bath, "diagonal_error": r.diagonal_error, "cross_error": r.cross_error,
             "pairing_error": r.pairing_error, "budget": r.budget} for r in results]
    return reps, {"brackets": rows}


def _run_overlap(p, ctx):
    from .fano.checks import overlap_sweep
    rows, rep = overlap_sweep(tuple(int(v) for v in p.get("n_baths", (32, 64, 128))),
                              omega=p.get("omega", 1.4), window=p.get("window", 0.3))
    return [rep], {"overlap": rows}


def _run_defect_finite(p, ctx):
    from .fano.checks import finite_slab_defect
    reps, res = finite_slab_defect(filling=p.get("filling", 0.1),
                                   n_bath=int(p.get("n_bath", 128)),
                                   n_sites=int(p.get("n_sites", 128)))
    return reps, {"spanned": [dict(r, family="material") for r in res["material"].table()]
                  + [dict(r, family="all") for r in res["all"].table()]}


def _run_defect_filled(p, ctx):
    from .fano.checks import filled_box_defect
    rep, res = filled_box_defect(n_bath=int(p.get("n_bath", 256)))
    return [rep], {"spanned": res.table()}


def _run_defect_vacuum(p, ctx):
    from .fano.bogoliubov import diagonalize
    from .fano.defect import lnf_defect
    from .fano.model import BathGrid, build_model
    model = build_model(Structure1D(), p.get("box", 10.0), int(p.get("n_sites", 64)),
                        BathGrid(0.5, 3.0, 8))
    d, rep, _ = lnf_defect(model, diagonalize(model), (1.0, 2.0), expect="incomplete", tol=0.0)
    rep.name = "lnf_defect_vacuum"
    return [rep]


def _run_defect_filling(p, ctx):
    from .fano.checks import defect_vs_filling
    rows, rep = defect_vs_filling(tuple(float(v) for v in p.get(
        "fillings", (0.1, 0.2, 0.4, 0.6, 0.8, 1.0))))
    return [rep], {"defect_vs_filling": rows}


def _run_defect_bath(p, ctx):
    from .fano.checks import defect_vs_bath
    rows, rep = defect_vs_bath(tuple(int(v) for v in p.get("n_baths", (32, 64, 128, 256))))
    return [rep], {"defect_vs_bath": rows}


_OMEGA20 = list(np.linspace(0.2, 5.0, 20))
_XS = [-1.2, -0.3, 0.0, 0.4, 1.1]

REGISTRY: dict[str, CheckSpec] = {s.name: s for s in [
    CheckSpec("kk_check", "single-pole dispersion identities of eps and 1/mu", _run_kk,
              {"omega": _OMEGA20, "channel": ["electric", "inverse_mu"]}, tol=1e-6,
              needs=("model",), default_model="magnetodielectric"),
    CheckSpec("dispersion_suite", "two-frequency dispersion integrals", _run_dispersion,
              {"omega": [0.7, 1.9], "omega_prime": [1.3], "n": [0, 1], "sigma": [1, -1],
               "sigma_prime": [1, -1]}, tol=1e-6, needs=("model",),
              default_model="magnetodielectric"),
    CheckSpec("response_reality", "reality condition of the response functions", _run_reality,
              {"omega": _OMEGA20}, tol=1e-12, needs=("model",), default_model="magnetodielectric"),
    CheckSpec("cauchy_loop", "analyticity in the upper half-plane", _run_cauchy,
              {"channel": ["electric", "inverse_mu"]}, tol=1e-8, needs=("model",),
              default_model="magnetodielectric"),
    CheckSpec("vacuum_green_1d", "outgoing 1D vacuum Green's function", _run_vacuum_green,
              {"omega": [0.5, 1.3, 3.0], "x": [-0.7, 0.2], "x_prime": [-0.5, 1.4]}, tol=1e-10),
    CheckSpec("slab_flux", "flux conservation of a lossless slab", _run_flux,
              {"omega": [0.4, 1.3, 2.9], "sigma": [1, -1]}, tol=1e-10,
              needs=("structure",), default_structure="lossless_slab"),
    CheckSpec("completeness_1d", "fundamental completeness relation (1D)", _run_completeness,
              {"omega": [0.5, 1.5, 1.9], "x": _XS, "x_prime": [-0.8, 0.1, 0.9]}, tol=1e-6,
              needs=("structure",), default_structure="md_slab"),
    CheckSpec("completeness_refinement", "fundamental completeness relation (1D), quadrature order",
              _run_completeness_order, {"omega": [1.5], "x": [-0.7], "x_prime": [0.2]}, tol=0.0,
              needs=("structure",), default_structure="md_slab"),
    CheckSpec("commutator_psd", "positivity of the equal-frequency field commutator",
              _run_commutator_psd, {"omega": [0.8, 1.5]}, tol=1e-10, needs=("structure",),
              default_structure="md_slab"),
    CheckSpec("unbounded_lnf_identity", "medium-only completeness for an unbounded absorber",
              _run_unbounded, {"omega": [1.0], "x": [0.0], "x_prime": [0.3, 1.0]}, tol=1e-6,
              needs=("model",), default_model="absorber"),
    CheckSpec("asymptotic_amplitude", "far-zone amplitude of g versus scattering modes",
              _run_asymptotic, {"omega": [0.8, 1.5], "x_prime": [-0.2, 0.3],
                                "x_far": [40.0, -40.0]}, tol=1e-8, needs=("structure",),
              default_structure="md_slab"),
    CheckSpec("im_free_green_origin", "radiative part of the free dyadic Green's function",
              _run_im_green_origin, {"omega": [0.5, 1.0, 3.0]}, tol=1e-9),
    CheckSpec("angular_completeness", "plane-wave completeness in vacuum", _run_angular,
              {"omega": [1.0], "pair": list(range(20))}, tol=1e-7),
    CheckSpec("jones_lemma", "Jones lemma asymptotics", _run_jones,
              {"f": ["quadratic", "constant"]}),
    CheckSpec("plemelj_limit", "smeared Plemelj and Riemann-Lebesgue limits", _run_plemelj,
              {"sigma": [1, -1]}, tol=1e-6),
    CheckSpec("maxwell_ampere", "Ampere-Maxwell relation for the polariton columns", _run_maxwell,
              {"omega": [1.5], "column": ["g+", "g-", "fe", "fm"], "mode": ["lattice"]},
              needs=("structure",), default_structure="md_slab"),
    CheckSpec("maxwell_ampere_slope", "Ampere-Maxwell relation, grid refinement",
              _run_maxwell_slope, {"omega": [1.5], "column": ["g+", "fe", "fm"]}, tol=0.1,
              needs=("structure",), default_structure="md_slab"),
    CheckSpec("bogoliubov_certification",
              "normal-mode diagonalisation of the discretised reservoir Hamiltonian",
              _run_bogoliubov, {"n_sites": [128], "n_bath": [64]}),
    CheckSpec("bosonicity", "bosonic commutation of the polariton map (smeared rows)",
              _run_bosonicity, {"n_bath": [64, 128, 256]}),
    CheckSpec("bosonic_refinement", "bosonic commutation of the polariton map, bath refinement",
              _run_bosonic_refinement, {}, fixed={"n_baths": [64, 128, 256]}),
    CheckSpec("polariton_overlap", "polariton rows versus nearby normal modes", _run_overlap,
              {}, fixed={"n_baths": [32, 64, 128]}),
    CheckSpec("lnf_defect_finite", "completeness defect for a finite slab", _run_defect_finite,
              {"filling": [0.1]}),
    CheckSpec("lnf_defect_filled", "completeness defect for a box-filling absorber",
              _run_defect_filled, {"n_bath": [256]}),
    CheckSpec("lnf_defect_vacuum", "completeness defect without any medium", _run_defect_vacuum,
              {"n_sites": [64]}),
    CheckSpec("defect_vs_filling", "completeness defect versus filling fraction",
              _run_defect_filling, {}, fixed={"fillings": [0.1, 0.2, 0.4, 0.6, 0.8, 1.0]}),
    CheckSpec("defect_vs_bath", "completeness defect versus bath resolution", _run_defect_bath,
              {}, fixed={"n_baths": [32, 64, 128, 256]}),
]}


# -- configuration ----------------------------------------------------------

@dataclass
class Suite:
    name: str
    check: str
    grid: dict[str, list]
    fixed: dict[str, Any]
    tol: float | None = None
    tol_by_name: dict[str, float] = field(default_factory=dict)
    model: str | None = None
    structure: str | None = None

    def points(self) -> list[dict]:
        keys = list(self.grid)
        return [dict(self.fixed, **dict(zip(keys, combo)))
                for combo in itertools.product(*(self.grid[k] for k in keys))]


@dataclass
class RunConfig:
    models: dict[str, Any]
    structures: dict[str, Structure1D]
    suites: list[Suite]
    output_dir: Path
    parallelism: int = 1
    seed: int = 0


@dataclass
class RunSummary:
    total: int
    passed: int
    failed: int
    worst: tuple[str, float]
    wall_time: float

    def line(self) -> str:
        return (f"total={self.total} passed={self.passed} failed={self.failed} "
                f"worst={self.worst[0]} rel_err={self.worst[1]:.3e} time={self.wall_time:.1f}s")


def _scalar(text: str):
    text = text.strip()
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        return text


def parse_grid(text: str) -> list:
    """``a:b:n`` inclusive linspace, a comma list, or one value."""
    text = text.strip()
    if not text:
        raise ConfigError("empty parameter grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"malformed range {text!r}; expected start:stop:count")
        try:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ConfigError(f"malformed range {text!r}: {exc}") from None
        if n < 1:
            raise ConfigError(f"range {text!r} has no points")
        return [float(v) for v in np.linspace(a, b, n)]
    items = [t for t in (s.strip() for s in text.split(",")) if t]
    if not items:
        raise ConfigError(f"malformed grid {text!r}")
    return [_scalar(t) for t in items]


def load_config(path: str | Path, out: str | None = None, jobs: int | None = None,
                seed: int | None = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    run = cp["run"] if cp.has_section("run") else {}
    models = {k: f() for k, f in BUILTIN_MODELS.items()}
    structures = {k: f() for k, f in _builtin_structures().items()}
    suites: list[Suite] = []
    for sec in cp.sections():
        kind, _, name = sec.partition(" ")
        name = name.strip()
        items = dict(cp[sec])
        if kind == "run":
            continue
        if not name:
            raise ConfigError(f"section [{sec}] needs a name")
        if kind == "model":
            if "preset" in items:
                if items["preset"] not in BUILTIN_MODELS:
                    raise ConfigError(f"model {name!r}: unknown preset {items['preset']!r}")
                models[name] = BUILTIN_MODELS[items["preset"]]()
            else:
                try:
                    models[name] = model_from_flat(items)
                except MLNFError as exc:
                    raise ConfigError(f"model {name!r}: {exc}") from None
        elif kind == "structure":
            pass
        elif kind == "suite":
            suites.append(_parse_suite(name, items))
        else:
            raise ConfigError(f"unknown section kind [{sec}]")
    # structures last so they may use models defined anywhere in the file
    for sec in cp.sections():
        kind, _, name = sec.partition(" ")
        if kind != "structure":
            continue
        try:
            structures[name.strip()] = structure_from_flat(dict(cp[sec]), models)
        except KeyError as exc:
            raise ConfigError(f"structure {name.strip()!r} references undefined model {exc}") from None
        except MLNFError as exc:
            raise ConfigError(f"structure {name.strip()!r}: {exc}") from None
    if not suites:
        raise ConfigError("config defines no [suite ...] sections")
    for s in suites:
        if s.model is not None and s.model not in models:
            raise ConfigError(f"suite {s.name!r} references undefined model {s.model!r}")
        if s.structure is not None and s.structure not in structures:
            raise ConfigError(f"suite {s.name!r} references undefined structure {s.structure!r}")
    try:
        par = int(jobs if jobs is not None else run.get("parallelism", 1))
        sd = int(seed if seed is not None else run.get("seed", 0))
    except ValueError as exc:
        raise ConfigError(f"[run]: {exc}") from None
    if par < 1:
        raise ConfigError("parallelism must be >= 1")
    outdir = Path(out if out is not None else run.get("output_dir", "mlnf_out"))
    return RunConfig(models, structures, suites, outdir, par, sd)


def _parse_suite(name: str, items: dict[str, str]) -> Suite:
    check = items.get("check", "").strip()
    if check not in REGISTRY:
        raise ConfigError(f"suite {name!r}: unknown check {check!r}")
    spec = REGISTRY[check]
    grid = {k: list(v) for k, v in spec.grid.items()}
    fixed = dict(spec.fixed)
    suite = Suite(name, check, grid, fixed, model=items.get("model"), structure=items.get("structure"))
    for key, value in items.items():
        if key.startswith("grid."):
            grid[key[5:]] = parse_grid(value)
        elif key.startswith("set."):
            vals = parse_grid(value)
            fixed[key[4:]] = vals if ("," in value or ":" in value) else vals[0]
            grid.pop(key[4:], None)
        elif key == "tol":
            suite.tol = _float(name, key, value)
        elif key.startswith("tol."):
            suite.tol_by_name[key[4:]] = _float(name, key, value)
        elif key not in ("check", "model", "structure"):
            raise ConfigError(f"suite {name!r}: unrecognised key {key!r}")
    if "model" in spec.needs and suite.model is None:
        suite.model = spec.default_model
    if "structure" in spec.needs and suite.structure is None:
        suite.structure = spec.default_structure
    if any(len(v) == 0 for v in grid.values()):
        raise ConfigError(f"suite {name!r}: empty parameter grid")
    return suite


def _float(suite, key, value):
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"suite {suite!r}: {key} must be a number, got {value!r}") from None


# -- execution --------------------------------------------------------------

def _execute(task):
    """Run one parameter point; never raises (errors become failing reports)."""
    check, point, model, structure, seed = task
    spec = REGISTRY[check]
    ctx = PointContext(model, structure, seed)
    t0 = time.perf_counter()
    try:
        out = spec.runner(point, ctx)
    except Exception as exc:  # surfaced as a failing report
        rep = CheckReport(check, _plain(point), math.inf, math.inf, spec.tol or 0.0,
                          status=f"error: {type(exc).__name__}: {exc}", anchor=spec.anchor)
        return [rep], {}, time.perf_counter() - t0
    reports, tables = out if isinstance(out, tuple) else (out, {})
    return reports, tables, time.perf_counter() - t0


def _plain(point):
    return {k: (v if isinstance(v, (int, float, str, bool, list)) else str(v))
            for k, v in point.items()}


def run(config: RunConfig, tol_scale: float = 1.0, echo=print) -> RunSummary:
    """Execute every suite and write reports.jsonl, per-suite CSVs and figures."""
    t0 = time.perf_counter()
    tasks, owners = [], []
    for si, suite in enumerate(config.suites):
        model = config.models.get(suite.model) if suite.model else None
        structure = config.structures.get(suite.structure) if suite.structure else None
        for pi, point in enumerate(suite.points()):
            tasks.append((suite.check, point, model, structure, (config.seed, si, pi)))
            owners.append(si)
    if config.parallelism > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.parallelism) as pool:
            results = list(pool.map(_execute, tasks))
    else:
        results = [_execute(t) for t in tasks]

    try:
        config.output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {config.output_dir}: {exc}") from None
    all_reports: list[CheckReport] = []
    timing = []
    for si, suite in enumerate(config.suites):
        spec = REGISTRY[suite.check]
        reps, tables = [], {}
        for owner, task, (r, tb, secs) in zip(owners, tasks, results):
            if owner != si:
                continue
            for rep in r:
                _apply_tolerance(rep, spec, suite, tol_scale)
                rep.params.setdefault("suite", suite.name)
                timing.append({"suite": suite.name, "name": rep.name,
                               "seconds": rep.metadata.pop("seconds", None)})
                for key in VOLATILE_KEYS:
                    rep.metadata.pop(key, None)
            reps += r
            for tname, rows in tb.items():
                tables.setdefault(tname, []).extend(_plain_row(row) for row in rows)
            timing.append({"suite": suite.name, "point_seconds": secs})
        all_reports += reps
        write_csv([report_row(r) for r in reps], config.output_dir / f"{suite.name}.csv")
        for tname, rows in tables.items():
            write_csv(rows, config.output_dir / f"{suite.name}_{tname}.csv")
        _plot_suite(suite, reps, tables, config.output_dir)
        for rep in reps:
            echo(rep.summary_line())
    write_jsonl(all_reports, config.output_dir / "reports.jsonl")
    wall = time.perf_counter() - t0
    summary = _summarise(all_reports, wall)
    # the only non-deterministic output lives here
    (config.output_dir / "run_info.json").write_text(json.dumps(
        {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"), "wall_time": wall,
         "version": __version__, "timing": timing}, indent=1, default=str), encoding="utf-8")
    return summary


def _plain_row(row):
    return {k: (float(v) if isinstance(v, np.floating) else v) for k, v in row.items()}


def _apply_tolerance(rep: CheckReport, spec: CheckSpec, suite: Suite, scale: float):
    if rep.name in suite.tol_by_name:
        rep.tol = suite.tol_by_name[rep.name]
    elif suite.tol is not None:
        rep.tol = suite.tol
    elif spec.tol is not None:
        rep.tol = spec.tol
    rep.tol *= scale


def _summarise(reports, wall) -> RunSummary:
    passed = sum(r.passed for r in reports)
    def effective(r):
        e = r.abs_err if r.reference_is_zero else r.rel_err
        return e if math.isfinite(e) else math.inf

    worst = max(reports, key=lambda r: (not r.passed, effective(r)), default=None)
    return RunSummary(len(reports), passed, len(reports) - passed,
                      (worst.name, effective(worst)) if worst else ("", 0.0), wall)


def _plot_suite(suite: Suite, reps: list[CheckReport], tables: dict, outdir: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if reps:
        fig, ax = plt.subplots(figsize=(6, 3.5))
        err = [r.abs_err if r.reference_is_zero else r.rel_err for r in reps]
        err = [e if math.isfinite(e) else np.nan for e in err]
        idx = np.arange(len(reps))
        colors = ["tab:green" if r.passed else "tab:red" for r in reps]
        floor = 1e-17
        ax.scatter(idx, np.maximum(np.asarray(err, float), floor), c=colors, s=14, label="error")
        ax.scatter(idx, [max(r.tol, floor) for r in reps], marker="_", c="k", s=60, label="tol")
        ax.set_yscale("log")
        ax.set_xlabel("report index")
        ax.set_ylabel("error")
        ax.set_title(f"{suite.name} ({suite.check})")
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        fig.savefig(outdir / f"{suite.name}.png", dpi=110)
        plt.close(fig)
    for tname, rows in tables.items():
        _plot_table(rows, outdir / f"{suite.name}_{tname}.png", f"{suite.name}: {tname}")


def _plot_table(rows: list[dict], path: Path, title: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if len(rows) < 2:
        return
    keys = [k for k in rows[0] if all(isinstance(r.get(k), (int, float)) and not isinstance(r.get(k), bool)
                                      for r in rows)]
    if len(keys) < 2:
        return
    xk, yks = keys[0], [k for k in keys[1:] if k not in ("n_pairs", "n_modes", "n_vectors", "index")][:3]
    if not yks:
        return
    fig, ax = plt.subplots(figsize=(6, 3.5))
    x = [r[xk] for r in rows]
    for yk in yks:
        ax.plot(x, [r[yk] for r in rows], "o-", ms=3, label=yk)
    ax.set_xlabel(xk)
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


# -- demo -------------------------------------------------------------------

def demo_defect(outdir: Path, echo=print, fillings=(0.1, 0.2, 0.4, 0.6, 0.8, 1.0)) -> int:
    """Defect-versus-filling sweep with built-in defaults."""
    from .fano.checks import defect_vs_filling

    outdir.mkdir(parents=True, exist_ok=True)
    rows, rep = defect_vs_filling(fillings)
    clean = [{k: v for k, v in r.items() if k != "seconds"} for r in rows]
    write_csv(clean, outdir / "defect_vs_filling.csv")
    write_jsonl([rep], outdir / "reports.jsonl")
    _plot_table([{"filling": r["filling"], "defect": r["defect"]} for r in rows],
                outdir / "defect_vs_filling.png", "material-only defect versus filling")
    for r in clean:
        echo(f"filling={r['filling']:.2f} defect={r['defect']:.4f}")
    echo(rep.summary_line())
    return EXIT_OK if rep.passed else EXIT_FAIL


# -- entry point ------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mlnfkit", description="Run numerical identity checks.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, help="worker processes")
    common.add_argument("--tol-scale", type=float, default=1.0,
                        help="multiply every tolerance (exploratory runs)")
    common.add_argument("--seed", type=int, help="seed for randomised point sampling")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("check", parents=[common], help="run the suites of a config file")
    p.add_argument("config")
    sub.add_parser("list", parents=[common], help="list registered checks")
    sub.add_parser("demo-defect", parents=[common], help="defect versus filling sweep")
    sub.add_parser("version", parents=[common], help="print build information")
    return ap


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if args.command == "version":
        import scipy
        print(f"mlnfkit {__version__} (python {platform.python_version()}, "
              f"numpy {np.__version__}, scipy {scipy.__version__})")
        return EXIT_OK
    if args.command == "list":
        width = max(len(n) for n in REGISTRY)
        for name, spec in REGISTRY.items():
            print(f"{name:<{width}}  {spec.anchor}")
        return EXIT_OK
    if args.tol_scale <= 0 or (args.jobs is not None and args.jobs < 1):
        print("error: --tol-scale must be > 0 and --jobs >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "demo-defect":
        return demo_defect(Path(args.out or "mlnf_demo"))
    try:
        cfg = load_config(args.config, args.out, args.jobs, args.seed)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        summary = run(cfg, args.tol_scale)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(summary.line())
    return EXIT_OK if summary.failed == 0 else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
