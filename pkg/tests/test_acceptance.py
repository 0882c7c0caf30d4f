"""Acceptance criteria, one test per criterion.

Every test records a PASS/FAIL line through the ``acceptance`` fixture;
the lines are repeated in the pytest terminal summary.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from mlnfkit.fano.checks import (bosonicity_sweep, certification_check, filled_box_defect,
                                 finite_slab_defect)
from mlnfkit.fano.maxwell import maxwell_ampere_check, maxwell_ampere_refinement
from mlnfkit.identity import completeness_1d, completeness_refinement
from mlnfkit.layered import Structure1D, green, reflection_transmission, slab
from mlnfkit.response import (Constants, dispersion_suite, kk_check, standard_electric_model,
                              standard_magnetic_model, standard_magnetodielectric_model)
from mlnfkit.vacuum3d import angular_completeness, im_free_green, jones_check, plemelj_limit_check

STANDARD_MODELS = {
    "electric": standard_electric_model,
    "magnetic": standard_magnetic_model,
    "magnetodielectric": standard_magnetodielectric_model,
}
OMEGAS = np.linspace(0.2, 5.0, 20)


def test_dispersion_identities(acceptance):
    t0 = time.perf_counter()
    reports = []
    for make in STANDARD_MODELS.values():
        model = make()
        for i, w in enumerate(OMEGAS):
            wp = OMEGAS[(i + 7) % OMEGAS.size]
            for channel in ("electric", "inverse_mu"):
                reports.append(kk_check(model, channel, w))
            for n in (0, 1):
                for s in (1, -1):
                    for sp in (1, -1):
                        reports += dispersion_suite(model, Constants(), n, s, sp, w, wp)
    elapsed = time.perf_counter() - t0
    errs = [r.abs_err if r.reference_is_zero else r.rel_err for r in reports]
    worst = max(errs)
    ok = all(r.status == "ok" for r in reports) and worst < 1e-6 and elapsed < 30
    acceptance(1, ok, f"{len(reports)} identities, worst err {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_vacuum_anchors(acceptance):
    c = Constants()
    errs = []
    for w in (0.3, 1.0, 2.7):
        k = w / c.c
        for x, xp in ((0.0, 0.0), (-1.3, 0.4), (2.0, -3.5)):
            exact = 1j * np.exp(1j * k * abs(x - xp)) / (2 * k)
            errs.append(abs(green(Structure1D(), w, x, xp) - exact) / abs(exact))
    g1 = max(errs)
    g3 = max(float(np.max(np.abs(im_free_green(w, [0.0, 0.0, 0.0]) - w / (6 * math.pi) * np.eye(3))))
             / (w / (6 * math.pi)) for w in (0.5, 1.0, 3.0))
    lossless = slab(4.0, 1.0, -0.5)
    flux = max(abs(abs(r) ** 2 + abs(t) ** 2 - 1.0)
               for w in np.linspace(0.2, 5.0, 11) for s in (1, -1)
               for r, t in [reflection_transmission(lossless, w, s)])
    ok = g1 < 1e-10 and g3 < 1e-9 and flux < 1e-10
    acceptance(2, ok, f"1D green {g1:.1e}, Im G0(0) {g3:.1e}, slab flux {flux:.1e}")
    assert ok


def test_fundamental_completeness(acceptance):
    st = slab(standard_magnetodielectric_model(), 1.0, -0.5)
    xs = np.linspace(-1.2, 1.2, 10)  # straddles both faces at -0.5 and 0.5
    worst, count = 0.0, 0
    for w in (0.4, 0.9, 1.3, 2.2, 3.5):
        g = green(st, w)
        for x in xs:
            for xp in xs:
                rep = completeness_1d(st, w, x, xp, g=g)
                assert rep.status == "ok"
                worst = max(worst, rep.rel_err)
                count += 1
    orders = [completeness_refinement(st, w, -0.8, 0.2).metadata["observed_order"]
              for w in (0.9, 2.2)]
    ok = worst < 1e-6 and min(orders) >= 2.0
    acceptance(3, ok, f"{count} points, worst rel {worst:.2e}, refinement order "
                      f"{min(orders):.2f}")
    assert ok


def test_angular_completeness(acceptance):
    rng = np.random.default_rng(20261016)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(20):
        w = rng.uniform(0.5, 3.0)
        d = rng.normal(size=3)
        d *= rng.uniform(0.0, 6.0) / (w * np.linalg.norm(d))
        rp = rng.uniform(-1.0, 1.0, size=3)
        rep = angular_completeness(w, rp + d, rp)
        worst = max(worst, rep.rel_err)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-7 and elapsed < 10
    acceptance(4, ok, f"20 pairs, worst rel {worst:.2e}, {elapsed:.1f} s")
    assert ok


def test_jones_lemma(acceptance):
    u = np.array([1.0, 2.0, 2.0]) / 3.0
    radii = [2 * math.pi * m for m in (8, 16, 32, 64, 127)]  # kr from 50 to 800 at k = 1
    quad = jones_check(1.0, [0.0, 0.0, 1.0], lambda m: 1.0 + (m @ u) ** 2, radii)
    const = jones_check(1.0, [0.0, 0.0, 1.0], lambda m: np.ones(len(m)), radii)
    slope = quad.metadata["slope"]
    ok = (quad.status == "ok" and abs(slope + 2.0) <= 0.3
          and const.status == "ok" and const.passed)
    acceptance(5, ok, f"slope {slope:.3f}, constant-f defect {const.abs_err:.1e}")
    assert ok


def test_distributional_limits(acceptance):
    f = lambda K: math.exp(-K * K)  # noqa: E731
    plus = plemelj_limit_check([50.0, 100.0, 200.0], 1, f)
    minus = plemelj_limit_check([50.0, 100.0, 200.0], -1, f)
    e_plus = float(plus.metadata["pole_errors"][-1])
    e_minus = float(minus.metadata["pole_errors"][-1])
    e_rl = float(max(plus.metadata["fourier_errors"][-1], minus.metadata["fourier_errors"][-1]))
    ok = (plus.status == "ok" and minus.status == "ok"
          and e_plus < 1e-6 and e_minus < 1e-6 and e_rl < 1e-6)
    acceptance(6, ok, f"sigma=+1 {e_plus:.1e}, sigma=-1 {e_minus:.1e}, Fourier {e_rl:.1e}")
    assert ok


def test_bogoliubov_certification(acceptance):
    t0 = time.perf_counter()
    reports, modes = certification_check(n_sites=128, n_bath=64)
    sweep, results = bosonicity_sweep((64, 128, 256))
    elapsed = time.perf_counter() - t0
    by = {r.name: r for r in reports}
    symp = by["bogoliubov_symplectic"].abs_err
    freqs = modes.frequencies
    freqs_ok = (by["bogoliubov_frequencies"].passed and np.isrealobj(freqs)
                and bool(np.all(freqs >= 0)))
    cross_ok = all(r.cross_error <= r.budget and r.pairing_error <= r.budget for r in results)
    diag = [r.diagonal_error for r in results]
    monotone = all(b < a for a, b in zip(diag, diag[1:]))
    ok = (symp < 1e-8 and freqs_ok and all(r.passed for r in reports) and cross_ok
          and diag[-1] < 0.1 and monotone and elapsed < 120)
    acceptance(7, ok, f"symplectic {symp:.1e}, diagonal errors "
                      f"{', '.join(f'{d:.1e}' for d in diag)}, {elapsed:.1f} s")
    assert ok


def test_ampere_maxwell(acceptance):
    st = slab(standard_magnetodielectric_model(), 1.0, -0.5)
    slopes = [maxwell_ampere_refinement(st, w).metadata["slope"] for w in (0.8, 1.7)]
    vac = max(maxwell_ampere_check(Structure1D(), w, 64, column=col).abs_err
              for w in (0.7, 1.9) for col in ("g+", "g-"))
    # a medium-free box has no material source, so only the g columns exist
    ok = all(abs(s - 2.0) <= 0.1 for s in slopes) and vac < 1e-8
    acceptance(8, ok, f"slopes {', '.join(f'{s:.3f}' for s in slopes)}, vacuum residual {vac:.1e}")
    assert ok


@pytest.mark.slow
def test_defect_demo(acceptance):
    (mat, both), res = finite_slab_defect(filling=0.1)
    _, filled = filled_box_defect()
    d_mat = res["material"].defect
    frac = 1.0 - res["all"].defect
    d_fill = filled.defect
    ok = d_mat > 0.5 and d_fill < 0.02 and frac > 0.98
    acceptance(9, ok, f"slab material-only defect {d_mat:.3f}, filled-box defect {d_fill:.4f}, "
                      f"material+scattering fraction {frac:.4f}")
    assert ok
