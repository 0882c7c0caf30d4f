"""Normal-incidence layered media: transfer matrices, scattering modes and the
outgoing Green's function of L = -d/dx[(1/mu) d/dx] - k^2 eps.

Conventions (pinned by the vacuum Green's function i exp(ik|x-x'|)/(2k)):

* the state vector (F, G) with G = F'/mu is continuous across interfaces;
* inside a homogeneous region F = a exp(iq(x-x0)) + b exp(-iq(x-x0)) with
  q = k n, n = sqrt(eps mu), Im n >= 0, and G = iY (a e^{..} - b e^{..}),
  Y = q/mu;
* sigma = +1 is incident from -inf, sigma = -1 from +inf.

Mode fields are stored as local amplitudes plus a running log-scale so
that thick absorbers neither overflow nor lose the evanescent tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, MLNFError, SingularityError
from .response import Constants, ConstantResponse, ResponseModel, eval_response

__all__ = [
    "Layer", "Structure1D", "ModeSolution", "Green1D", "ScatteringError",
    "transfer_matrix", "scattering_matrix", "reflection_transmission", "refractive_index",
    "scattering_mode", "green",
    "slab", "make_grid", "structure_to_flat", "structure_from_flat",
]

# maximum attenuation (e-folds) accumulated inside one stored chunk
CHUNK_EFOLDS = 20.0


class ScatteringError(MLNFError, ArithmeticError):
    """Degenerate or non-finite intermediate quantity in the mode solve."""


@dataclass(frozen=True)
class Layer:
    x_min: float
    x_max: float
    response: object  # ResponseModel or ConstantResponse

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise DomainError(f"layer needs x_min < x_max, got [{self.x_min}, {self.x_max}]")


@dataclass(frozen=True)
class Structure1D:
    """Sorted, non-overlapping layers in vacuum."""

    layers: tuple[Layer, ...] = ()
    constants: Constants = field(default_factory=Constants)

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        for a, b in zip(layers[:-1], layers[1:]):
            if b.x_min < a.x_max:
                raise DomainError("layers must be sorted and pairwise disjoint")

    @property
    def extent(self) -> tuple[float, float]:
        if not self.layers:
            return (0.0, 0.0)
        return (self.layers[0].x_min, self.layers[-1].x_max)

    @property
    def is_empty(self) -> bool:
        return not self.layers

    def interfaces(self) -> list[float]:
        pts = []
        for layer in self.layers:
            pts += [layer.x_min, layer.x_max]
        return sorted(set(pts))

    def segments(self, omega: float) -> list[tuple[float, float, complex, complex]]:
        """Homogeneous pieces (lo, hi, eps, mu) covering the extent, gaps included."""
        out = []
        pos = None
        for layer in self.layers:
            if pos is not None and layer.x_min > pos:
                out.append((pos, layer.x_min, 1.0 + 0j, 1.0 + 0j))
            eps, mu = eval_response(layer.response, omega)
            out.append((layer.x_min, layer.x_max, complex(eps), complex(mu)))
            pos = layer.x_max
        return out

    def material(self, omega: float, x):
        """eps(x), mu(x) on an array of positions (right-continuous at interfaces)."""
        x = np.asarray(x, dtype=float)
        eps = np.ones(x.shape, dtype=complex)
        mu = np.ones(x.shape, dtype=complex)
        for layer in self.layers:
            inside = (x >= layer.x_min) & (x < layer.x_max)
            if np.any(inside):
                e, m = eval_response(layer.response, omega)
                eps[inside], mu[inside] = e, m
        return eps, mu


def slab(eps_or_model, thickness: float = 1.0, x_min: float = 0.0, mu: complex = 1.0,
         constants: Constants | None = None) -> Structure1D:
    """Single layer; a number (eps) builds a ConstantResponse."""
    if isinstance(eps_or_model, (ResponseModel, ConstantResponse)):
        resp = eps_or_model
    else:
        resp = ConstantResponse(complex(eps_or_model), complex(mu))
    return Structure1D((Layer(x_min, x_min + thickness, resp),),
                       constants or Constants())


def refractive_index(eps: complex, mu: complex) -> complex:
    n = np.sqrt(complex(eps) * complex(mu))
    if n.imag < 0 or (n.imag == 0 and n.real < 0):
        n = -n
    return complex(n)


def _wavenumber(structure: Structure1D, omega: float) -> float:
    if not omega > 0:
        raise DomainError("omega must be positive")
    return omega / structure.constants.c


def _layer_constants(k, eps, mu):
    q = k * refractive_index(eps, mu)
    return q, q / mu


def transfer_matrix(structure: Structure1D, omega: float) -> np.ndarray:
    """2x2 map of local plane-wave amplitudes from x_min- to x_max+.

    Amplitudes are referenced to exp(+-ik(x - x_min)) on the left and
    exp(+-ik(x - x_max)) on the right. Entries grow like exp(Im(q) d) in
    absorbers; use scattering_matrix for thick lossy stacks.
    """
    k = _wavenumber(structure, omega)
    P = np.eye(2, dtype=complex)
    for lo, hi, eps, mu in structure.segments(omega):
        q, Y = _layer_constants(k, eps, mu)
        d = hi - lo
        c, s = np.cos(q * d), np.sin(q * d)
        P = np.array([[c, s / Y], [-Y * s, c]], dtype=complex) @ P
    C = np.array([[1.0, 1.0], [1j * k, -1j * k]], dtype=complex)
    return np.linalg.solve(C, P @ C)


def _interface_s(Yi, Yj):
    den = Yi + Yj
    return np.array([[(Yi - Yj) / den, 2 * Yj / den],
                     [2 * Yi / den, (Yj - Yi) / den]], dtype=complex)


def _star(A, B):
    """Redheffer product of two-port S-matrices [[r11, t12], [t21, r22]]."""
    d1 = 1.0 - A[1, 1] * B[0, 0]
    d2 = 1.0 - B[0, 0] * A[1, 1]
    return np.array([
        [A[0, 0] + A[0, 1] * B[0, 0] * A[1, 0] / d1, A[0, 1] * B[0, 1] / d2],
        [B[1, 0] * A[1, 0] / d1, B[1, 1] + B[1, 0] * A[1, 1] * B[0, 1] / d2],
    ], dtype=complex)


def scattering_matrix(structure: Structure1D, omega: float) -> np.ndarray:
    """Local-basis S-matrix [[r11, t12], [t21, r22]] by Redheffer composition.

    Stable for arbitrarily thick absorbers (propagation factors only decay).
    """
    k = _wavenumber(structure, omega)
    S = np.array([[0, 1], [1, 0]], dtype=complex)
    Y_prev = k
    for lo, hi, eps, mu in structure.segments(omega):
        q, Y = _layer_constants(k, eps, mu)
        S = _star(S, _interface_s(Y_prev, Y))
        ph = np.exp(1j * q * (hi - lo))
        S = _star(S, np.array([[0, ph], [ph, 0]], dtype=complex))
        Y_prev = Y
    return _star(S, _interface_s(Y_prev, k))


def reflection_transmission(structure: Structure1D, omega: float, sigma: int):
    """Global (r, t) from the S-matrix route."""
    k = _wavenumber(structure, omega)
    xl, xr = structure.extent
    S = scattering_matrix(structure, omega)
    if sigma == 1:
        return S[0, 0] * np.exp(2j * k * xl), S[1, 0] * np.exp(1j * k * (xl - xr))
    if sigma == -1:
        return S[1, 1] * np.exp(-2j * k * xr), S[0, 1] * np.exp(1j * k * (xl - xr))
    raise DomainError("sigma must be +1 or -1")


@dataclass
class _Chunks:
    """Piecewise local-amplitude representation of one (unnormalised) solution."""

    lo: np.ndarray
    hi: np.ndarray
    anchor: np.ndarray
    q: np.ndarray
    mu: np.ndarray
    a: np.ndarray
    b: np.ndarray
    log: np.ndarray  # natural-log scale of each chunk's amplitudes

    def locate(self, x):
        idx = np.searchsorted(self.hi, x, side="right")
        return np.clip(idx, 0, len(self.hi) - 1)

    def evaluate(self, x, side: int = 1):
        """Mantissa of (F, F') and the log-scale at each x.

        ``side=-1`` evaluates in the region to the left of an interface point.
        """
        x = np.asarray(x, dtype=float)
        if side > 0:
            idx = np.searchsorted(self.hi, x, side="right")
        else:
            idx = np.searchsorted(self.hi, x, side="left")
        idx = np.clip(idx, 0, len(self.hi) - 1)
        dx = x - self.anchor[idx]
        q = self.q[idx]
        ep = np.exp(1j * q * dx)
        em = np.exp(-1j * q * dx)
        fa, fb = self.a[idx] * ep, self.b[idx] * em
        F = fa + fb
        dF = 1j * q * (fa - fb)
        return F, dF, self.log[idx], self.mu[idx]


def _raw_solution(structure: Structure1D, omega: float, sigma: int) -> tuple[_Chunks, complex, complex, float]:
    """Integrate from the outgoing side back through the stack.

    Returns the chunk table and the vacuum amplitudes (a, b) on the incidence
    side (referenced to that edge) together with their log-scale.
    """
    k = _wavenumber(structure, omega)
    xl, xr = structure.extent
    segs = structure.segments(omega)
    rows = []  # (lo, hi, anchor, q, mu, a, b, log)

    if sigma == 1:
        rows.append((xr, math.inf, xr, k, 1.0, 1.0, 0.0, 0.0))
        order = reversed(segs)
    elif sigma == -1:
        rows.append((-math.inf, xl, xl, k, 1.0, 0.0, 1.0, 0.0))
        order = iter(segs)
    else:
        raise DomainError("sigma must be +1 or -1")

    # state at the current edge: F and G = F'/mu, with log-scale
    if sigma == 1:
        F, G, log = 1.0 + 0j, 1j * k, 0.0
    else:
        F, G, log = 1.0 + 0j, -1j * k, 0.0
    for lo, hi, eps, mu in order:
        q, Y = _layer_constants(k, eps, mu)
        d = hi - lo
        n_chunks = max(1, int(math.ceil(abs(q.imag) * d / CHUNK_EFOLDS)))
        edges = np.linspace(lo, hi, n_chunks + 1)
        pieces = list(zip(edges[:-1], edges[1:]))
        if sigma == 1:
            pieces = pieces[::-1]
        for plo, phi in pieces:
            a = 0.5 * (F + G / (1j * Y))
            b = 0.5 * (F - G / (1j * Y))
            anchor = phi if sigma == 1 else plo
            rows.append((plo, phi, anchor, q, mu, a, b, log))
            step = (plo - phi) if sigma == 1 else (phi - plo)
            fa, fb = a * np.exp(1j * q * step), b * np.exp(-1j * q * step)
            F, G = fa + fb, 1j * Y * (fa - fb)
            s = max(abs(F), abs(G / Y))
            if not np.isfinite(s) or s == 0:
                raise ScatteringError("mode amplitude lost during propagation")
            F, G, log = F / s, G / s, log + math.log(s)
    edge = xl if sigma == 1 else xr
    a = 0.5 * (F + G / (1j * k))
    b = 0.5 * (F - G / (1j * k))
    if sigma == 1:
        rows.append((-math.inf, xl, edge, k, 1.0, a, b, log))
    else:
        rows.append((xr, math.inf, edge, k, 1.0, a, b, log))
    rows.sort(key=lambda r: (r[0], r[1]))
    cols = list(zip(*rows))
    table = _Chunks(*(np.array(c, dtype=complex if i >= 3 and i != 7 else float)
                      for i, c in enumerate(cols)))
    table.log = np.asarray(cols[7], dtype=float)
    return table, a, b, log


@dataclass
class ModeSolution:
    """Scattering mode F(x|sigma), normalised to a unit incident plane wave.

    ``field`` and ``dfield`` evaluate F and dF/dx at arbitrary x (arrays
    allowed); ``F_grid``/``dF_grid`` hold the values on the requested grid.
    """

    sigma: int
    omega: float
    k: float
    r: complex
    t: complex
    grid: np.ndarray
    F_grid: np.ndarray
    dF_grid: np.ndarray
    _chunks: _Chunks = field(repr=False)
    _lognorm: complex = field(repr=False)

    def state(self, x, side: int = 1):
        """(F, dF/dx, mu) at x; ``side`` picks the one-sided limit at interfaces."""
        F, dF, log, mu = self._chunks.evaluate(x, side)
        scale = np.exp(log + self._lognorm)
        return F * scale, dF * scale, mu

    def field(self, x):
        return self.state(x)[0]

    def dfield(self, x):
        return self.state(x)[1]


def scattering_mode(structure: Structure1D, omega: float, sigma: int,
                    grid: Sequence[float] | None = None) -> ModeSolution:
    """Scattering mode with incident exp(i sigma k x) and outgoing scattered waves."""
    k = _wavenumber(structure, omega)
    xl, xr = structure.extent
    grid_arr = np.asarray(grid if grid is not None else [xl, xr], dtype=float)
    if structure.layers and (grid_arr.min() > xl or grid_arr.max() < xr):
        raise DomainError("grid must span the structure extent")
    table, a, b, log = _raw_solution(structure, omega, sigma)
    if sigma == 1:
        inc = a * np.exp(-1j * k * xl)
        refl = b * np.exp(1j * k * xl)
        out_phase = np.exp(1j * k * xr)  # right region: exp(ik(x - xr))
    else:
        inc = b * np.exp(1j * k * xr)
        refl = a * np.exp(-1j * k * xr)
        out_phase = np.exp(-1j * k * xl)
    if inc == 0 or not np.isfinite(inc):
        raise ScatteringError("incident amplitude degenerate; transfer solve failed")
    lognorm = -log - np.log(complex(inc))
    r = refl / inc
    t = complex(np.exp(-log) / (inc * out_phase)) if log < 700 else 0j
    F, dF, lg, _ = table.evaluate(grid_arr)
    scale = np.exp(lg + lognorm)
    return ModeSolution(sigma, omega, k, complex(r), t, grid_arr, F * scale,
                        dF * scale, table, complex(lognorm))


@dataclass
class Green1D:
    """Outgoing Green's function g(x, x') with L g = delta(x - x').

    g = -psi_minus(x<) psi_plus(x>) / W, W = (1/mu)(psi_minus psi_plus' -
    psi_minus' psi_plus). Both solutions are kept unnormalised with separate
    log-scales so that the product stays finite for thick absorbers.
    """

    omega: float
    k: float
    structure: Structure1D
    _plus: _Chunks = field(repr=False)
    _minus: _Chunks = field(repr=False)
    _wronskian: complex = field(repr=False)
    _wlog: float = field(repr=False)
    psi_plus: ModeSolution = field(repr=False)
    psi_minus: ModeSolution = field(repr=False)

    @property
    def wronskian_weight(self) -> complex:
        """W for the normalised modes F(.|-1), F(.|+1); equals 2ik t."""
        return 2j * self.k * self.psi_plus.t

    def wronskian_at(self, x) -> np.ndarray:
        Fm, dFm, _ = self.psi_minus.state(x)
        Fp, dFp, mu = self.psi_plus.state(x)
        return (Fm * dFp - dFm * Fp) / mu

    def eval(self, x, x_prime):
        x, xp = np.broadcast_arrays(np.asarray(x, float), np.asarray(x_prime, float))
        lo, hi = np.minimum(x, xp), np.maximum(x, xp)
        Fm, _, lm, _ = self._minus.evaluate(lo)
        Fp, _, lp, _ = self._plus.evaluate(hi)
        return -Fm * Fp * np.exp(lm + lp - self._wlog) / self._wronskian

    def eval_dz(self, x, z):
        """d/dz g(x, z); at z == x the two one-sided values are averaged."""
        x, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(z, float))
        Fm_x, _, lm_x, _ = self._minus.evaluate(x)
        Fp_x, _, lp_x, _ = self._plus.evaluate(x)
        _, dFm_z, lm_z, _ = self._minus.evaluate(z)
        _, dFp_z, lp_z, _ = self._plus.evaluate(z)
        right = -Fm_x * dFp_z * np.exp(lm_x + lp_z - self._wlog)  # z > x
        left = -dFm_z * Fp_x * np.exp(lm_z + lp_x - self._wlog)   # z < x
        out = np.where(z > x, right, np.where(z < x, left, 0.5 * (left + right)))
        return out / self._wronskian

    def __call__(self, x, x_prime):
        return self.eval(x, x_prime)


def green(structure: Structure1D, omega: float, x=None, x_prime=None,
          wronskian_floor: float = 1e-300):
    """Build the Green's function; with x, x_prime given, return g(x, x')."""
    k = _wavenumber(structure, omega)
    plus, *_ = _raw_solution(structure, omega, 1)
    minus, *_ = _raw_solution(structure, omega, -1)
    xl, _ = structure.extent
    Fm, dFm, lm, mu = minus.evaluate(np.array([xl]), side=-1)
    Fp, dFp, lp, _ = plus.evaluate(np.array([xl]), side=-1)
    W = complex(((Fm * dFp - dFm * Fp) / mu)[0])
    if abs(W) < wronskian_floor or not np.isfinite(W):
        raise SingularityError(f"Wronskian degenerate (|W| = {abs(W):.3e})")
    g = Green1D(omega, k, structure, plus, minus, W, float(lm[0] + lp[0]),
                scattering_mode(structure, omega, 1),
                scattering_mode(structure, omega, -1))
    if x is None:
        return g
    return g.eval(x, x_prime)


def make_grid(structure: Structure1D, margin: float, dx: float) -> np.ndarray:
    """Uniform grid covering [x_min - margin, x_max + margin] with x_min on a node.

    Interfaces fall on nodes whenever layer edges are commensurate with dx.
    """
    if dx <= 0 or margin < 0:
        raise DomainError("dx must be positive and margin non-negative")
    xl, xr = structure.extent
    n_left = int(math.ceil(margin / dx - 1e-9))
    n_right = int(math.ceil((xr - xl + margin) / dx - 1e-9))
    return xl + dx * np.arange(-n_left, n_right + 1)


def structure_to_flat(structure: Structure1D, model_names: Mapping[int, str]) -> dict[str, str]:
    out = {}
    for i, layer in enumerate(structure.layers):
        out[f"layer.{i}.x_min"] = repr(float(layer.x_min))
        out[f"layer.{i}.x_max"] = repr(float(layer.x_max))
        out[f"layer.{i}.model"] = model_names[i]
    return out


def structure_from_flat(items: Mapping[str, str], models: Mapping[str, object],
                        constants: Constants | None = None) -> Structure1D:
    """Parse ``layer.<i>.{x_min,x_max,model}``; model names resolve via ``models``."""
    groups: dict[int, dict[str, str]] = {}
    for key, value in items.items():
        parts = key.split(".")
        if len(parts) != 3 or parts[0] != "layer" or not parts[1].isdigit() \
                or parts[2] not in ("x_min", "x_max", "model"):
            raise DomainError(f"unrecognised structure key {key!r}")
        groups.setdefault(int(parts[1]), {})[parts[2]] = value
    layers = []
    for idx in sorted(groups):
        g = groups[idx]
        missing = {"x_min", "x_max", "model"} - set(g)
        if missing:
            raise DomainError(f"layer.{idx} missing {sorted(missing)}")
        name = g["model"].strip()
        if name not in models:
            raise KeyError(name)
        layers.append(Layer(float(g["x_min"]), float(g["x_max"]), models[name]))
    return Structure1D(tuple(layers), constants or Constants())
