"""Quadrature building blocks: adaptive real/complex segments, principal values
by pole subtraction, and composite Gauss-Legendre panels."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError


@dataclass(frozen=True)
class QuadraturePolicy:
    """Tolerances for adaptive quadrature.

    Attributes:
        abs_tol: absolute tolerance handed to each adaptive call.
        rel_tol: relative tolerance handed to each adaptive call.
        max_subdivisions: subinterval limit per adaptive call.
        pv_window: half-width of the symmetric pole-subtraction window.
    """

    abs_tol: float = 1e-13
    rel_tol: float = 1e-11
    max_subdivisions: int = 400
    pv_window: float = 0.5

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be positive")
        if self.pv_window <= 0:
            raise DomainError("pv_window must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be >= 1")

    def scaled(self, factor: float) -> "QuadraturePolicy":
        return QuadraturePolicy(self.abs_tol * factor, self.rel_tol * factor,
                                self.max_subdivisions, self.pv_window)


@dataclass
class QuadStats:
    """Accumulated bookkeeping over a sequence of adaptive calls."""

    calls: int = 0
    evaluations: int = 0
    error_estimate: float = 0.0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {"calls": self.calls, "evaluations": self.evaluations,
                "error_estimate": self.error_estimate,
                "failures": list(self.failures)}


def _quad_real(func, a, b, policy: QuadraturePolicy, stats: QuadStats,
               weight=None, wvar=None) -> float:
    kwargs = dict(epsabs=policy.abs_tol, epsrel=policy.rel_tol,
                  limit=policy.max_subdivisions, full_output=1)
    if weight is not None:
        kwargs.update(weight=weight, wvar=wvar)
        if math.isinf(b):
            kwargs.pop("limit")
            kwargs["limlst"] = 200
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(func, a, b, **kwargs)
    value, err, info = out[0], out[1], out[2]
    stats.calls += 1
    stats.evaluations += int(info.get("neval", 0)) if isinstance(info, dict) else 0
    stats.error_estimate += abs(err)
    if len(out) > 3:
        msg = str(out[3]).strip().splitlines()[0] if out[3] else "quad warning"
        # roundoff-limited results are acceptable when the estimate is tiny
        if abs(err) > max(policy.abs_tol, policy.rel_tol * abs(value)) * 100:
            stats.failures.append(f"[{a:.4g}, {b:.4g}]: {msg}")
    return value


def quad_complex(func: Callable[[float], complex], a: float, b: float,
                 policy: QuadraturePolicy, stats: QuadStats,
                 points: Sequence[float] = ()) -> complex:
    """Integrate a complex function on [a, b] (b may be +inf), splitting at points."""
    edges = [a] + sorted(p for p in points if a < p < b) + [b]
    total = 0.0 + 0.0j
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        re = _quad_real(lambda t: func(t).real, lo, hi, policy, stats)
        im = _quad_real(lambda t: func(t).imag, lo, hi, policy, stats)
        total += complex(re, im)
    return total


def pv_half_line(r: Callable[[float], complex], w: float,
                 policy: QuadraturePolicy, stats: QuadStats,
                 points: Sequence[float] = (), tail_start: float | None = None) -> complex:
    """Principal value of the integral of r(t)/(t - w) over t in [0, inf).

    The pole is removed on the symmetric window [w - a, w + a],
    a = min(pv_window, w/2), where r(w)/(t - w) integrates to zero; the
    regularised remainder and the outer pieces are integrated adaptively.
    ``r`` must be smooth near ``w`` and decay fast enough for convergence.
    """
    if w <= 0:
        raise DomainError("pole must lie inside (0, inf)")
    a = min(policy.pv_window, 0.5 * w)
    r_w = r(w)

    def inner(t):
        return (r(t) - r_w) / (t - w)

    def outer(t):
        return r(t) / (t - w)

    lo, hi = w - a, w + a
    inside = [p for p in points if lo < p < hi] + [w]
    total = quad_complex(inner, lo, hi, policy, stats, inside)
    total += quad_complex(outer, 0.0, lo, policy, stats, points)
    if tail_start is None:
        tail_start = max([hi] + [2.0 * p for p in points if p > 0])
    tail_start = max(tail_start, hi)
    total += quad_complex(outer, hi, tail_start, policy, stats, points)
    total += quad_complex(outer, tail_start, math.inf, policy, stats)
    return total


def eta_kernel_integral(numerator: Callable[[float], complex],
                        poles: Sequence[tuple[float, int]],
                        policy: QuadraturePolicy, stats: QuadStats,
                        points: Sequence[float] = ()) -> complex:
    """Evaluate lim_{eta->0+} of the integral over (0, inf) of
    numerator(t) / prod_j (t^2 - (w_j + i s_j eta)^2).

    Each factor splits as (t - w_j - i s_j eta)(t + w_j + i s_j eta); the
    second is regular on t > 0. Partial fractions over the first factors and
    Plemelj (1/(t - w - i s eta) -> PV + i s pi delta) give a sum of principal
    values plus closed-form delta terms. Frequencies w_j must be distinct and
    positive.
    """
    ws = [float(w) for w, _ in poles]
    if any(w <= 0 for w in ws):
        raise DomainError("kernel frequencies must be positive")
    if len(set(ws)) != len(ws):
        raise DomainError("kernel frequencies must be distinct")

    def r(t):
        den = 1.0
        for w in ws:
            den *= (t + w)
        return numerator(t) / den

    total = 0.0 + 0.0j
    all_points = list(points) + ws
    for j, (w, s) in enumerate(poles):
        c = 1.0
        for l, wl in enumerate(ws):
            if l != j:
                c /= (w - wl)
        pv = pv_half_line(r, w, policy, stats, points=[p for p in all_points if p != w])
        total += c * (pv + 1j * s * math.pi * r(w))
    return total


def gauss_legendre_panels(edges: Sequence[float], order: int,
                          max_width: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights over consecutive panels.

    Args:
        edges: increasing panel boundaries; integrand kinks should sit here.
        order: nodes per panel.
        max_width: panels wider than this are split evenly.
    """
    x0, w0 = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        pieces = 1 if not max_width else max(1, int(math.ceil((hi - lo) / max_width)))
        sub = np.linspace(lo, hi, pieces + 1)
        for a, b in zip(sub[:-1], sub[1:]):
            half = 0.5 * (b - a)
            nodes.append(0.5 * (a + b) + half * x0)
            weights.append(half * w0)
    if not nodes:
        return np.empty(0), np.empty(0)
    return np.concatenate(nodes), np.concatenate(weights)
