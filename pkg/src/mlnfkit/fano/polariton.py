"""Phase-space row vectors of the scattering and medium polariton operators.

Each operator is a linear functional u . z of the canonical variables. At a
bath node w = W_{j*} the excitation density is assembled site by site as a
sparse matrix, then projected with the mode or Green kernels. Rows are
stored unit-normalised: scattering rows are scaled by sqrt(w_{j*}) and
medium rows by sqrt(w_{j*} dx), so the ideal brackets are Kronecker deltas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..errors import DomainError, SingularityError
from ..layered import Layer, Structure1D, green, refractive_index, scattering_mode
from ..response import ConstantResponse, coupling_coefficients
from .model import PhaseSpaceModel, kernel_weights

__all__ = ["LayeredGreen", "PeriodicGreen", "PolaritonVectors", "polariton_vectors",
           "excitation_density", "snap_frequency", "realised_structure"]


def realised_structure(model: PhaseSpaceModel, j: int) -> Structure1D:
    """Structure with each layer's eps, mu replaced by the bath-realised values at node j."""
    st = model.structure
    if st is None or not st.layers:
        return Structure1D((), model.constants)
    wk = kernel_weights(model.bath, j, +1)
    c = model.constants
    layers = []
    for layer in st.layers:
        al, be = coupling_coefficients(layer.response, c, model.bath.nodes)
        eps = 1 + (al**2 @ wk) / c.eps0
        inv_mu = 1 - c.mu0 * (be**2 @ wk)
        layers.append(Layer(layer.x_min, layer.x_max, ConstantResponse(complex(eps), complex(1 / inv_mu))))
    return Structure1D(tuple(layers), c)


class LayeredGreen:
    """Outgoing open-space kernels of a layered structure."""

    def __init__(self, structure: Structure1D, omega: float):
        self.structure = structure
        self.omega = omega
        self._g = green(structure, omega)

    def g(self, x, z):
        return self._g.eval(x, z)

    def dz(self, x, z):
        return self._g.eval_dz(x, z)

    def mode(self, sigma: int, x):
        return scattering_mode(self.structure, self.omega, sigma).field(np.asarray(x, float))


class PeriodicGreen:
    """Homogeneous-medium kernel summed over the images of a periodic box."""

    def __init__(self, eps: complex, mu: complex, period: float, omega: float, c: float = 1.0):
        self.q = omega / c * refractive_index(eps, mu)
        self.mu = complex(mu)
        self.period = period
        self._den = 1 - np.exp(1j * self.q * period)

    def _u(self, x, z):
        x, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(z, float))
        return np.mod(z - x, self.period)

    def g(self, x, z):
        u = self._u(x, z)
        q, L = self.q, self.period
        return 1j * self.mu / (2 * q) * (np.exp(1j * q * u) + np.exp(1j * q * (L - u))) / self._den

    def dz(self, x, z):
        u = self._u(x, z)
        q, L = self.q, self.period
        out = -0.5 * self.mu * (np.exp(1j * q * u) - np.exp(1j * q * (L - u))) / self._den
        return np.where(u == 0, 0.0, out)

    def mode(self, sigma, x):
        return None


def snap_frequency(model: PhaseSpaceModel, omega: float) -> tuple[float, int | None, float]:
    """(snapped w, bath node or None, delta weight) for the requested frequency."""
    if model.bath is not None and (model.e_sites.size or model.m_sites.size):
        j = model.bath.nearest(omega)
        return float(model.bath.nodes[j]), j, float(model.bath.weights[j])
    c = model.constants.c
    L = 2 * model.box
    m = max(1, int(round(omega * L / (2 * math.pi * c))))
    return 2 * math.pi * c * m / L, None, 2 * math.pi * c / L


def _wk(model, j, omega, sign):
    if j is not None:
        return kernel_weights(model.bath, j, sign)
    if model.bath is None:
        return np.zeros(0)
    nodes = model.bath.nodes
    if np.any(np.abs(nodes - omega) < 1e-9 * omega):
        raise SingularityError("frequency collides with a bath node; enable pole subtraction")
    return model.bath.weights / (nodes**2 - omega**2)


def excitation_density(model: PhaseSpaceModel, omega: float, j: int | None) -> sp.csr_matrix:
    """Sparse (n_sites, 2N) rows of the excitation density at every site."""
    c = model.constants
    hbar, eps0 = c.hbar, c.eps0
    n, N = model.n_sites, model.n_pairs
    sdx = math.sqrt(model.dx)
    eps = model.realised_response(j)[0] if j is not None else np.ones(n, complex)
    rows = list(range(n)) * 2
    cols = list(range(n)) + list(range(N, N + n))
    vals = list(1j / hbar * eps0 * np.conj(eps) / sdx) + [-1 / (hbar * omega * sdx)] * n
    wk = _wk(model, j, omega, -1)
    if wk.size:
        sw = np.sqrt(model.bath.weights)
        base = wk / (sw * sdx)
        for e, i in enumerate(model.e_sites):
            idx = model.x_index(e, 0) + np.arange(model.n_bath)
            a = model.alpha[e] * base
            rows += [i] * (2 * model.n_bath)
            cols += list(idx) + list(idx + N)
            vals += list(omega / hbar * a) + list(1j / hbar * a)
        for m, h in enumerate(model.m_sites):
            idx = model.y_index(m, 0) + np.arange(model.n_bath)
            b = model.beta[m] * base / model.dx
            for site, sgn in ((h, 1.0), ((h + 1) % n, -1.0)):
                rows += [site] * (2 * model.n_bath)
                cols += list(idx) + list(idx + N)
                vals += list(-sgn * 1j / hbar * b) + list(sgn / (hbar * omega) * b)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, 2 * N), dtype=complex)


@dataclass
class PolaritonVectors:
    """Unit-normalised polariton rows at one frequency.

    Attributes:
        omega: snapped frequency.
        node: bath node index, or None for reservoir-free models.
        weight: delta weight used for normalisation.
        g: {sigma: row} scattering rows (empty when the kernel has no
            scattering modes, e.g. a box-filling medium).
        fe, fm: medium rows, one per source (or per requested combination).
        fe_sites, fm_sites: source site / half-site indices.
    """

    omega: float
    node: int | None
    weight: float
    g: dict = field(default_factory=dict)
    fe: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), complex))
    fm: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), complex))
    fe_sites: np.ndarray = field(default_factory=lambda: np.zeros(0, int))
    fm_sites: np.ndarray = field(default_factory=lambda: np.zeros(0, int))

    def material(self) -> np.ndarray:
        parts = [p for p in (self.fe, self.fm) if p.size]
        return np.vstack(parts) if parts else np.zeros((0, 0), complex)

    def scattering(self) -> np.ndarray:
        return np.vstack([self.g[s] for s in sorted(self.g)]) if self.g else np.zeros((0, 0), complex)

    def all_rows(self) -> np.ndarray:
        parts = [p for p in (self.scattering(), self.material()) if p.size]
        return np.vstack(parts) if parts else np.zeros((0, 0), complex)


def default_green(model: PhaseSpaceModel, omega: float, j: int | None):
    if model.uniform and (model.e_sites.size or model.m_sites.size):
        eps, mu = model.realised_response(j)
        return PeriodicGreen(eps[0], mu[0], 2 * model.box, omega, model.constants.c)
    st = realised_structure(model, j) if j is not None else (model.structure or Structure1D())
    return LayeredGreen(st, omega)


def polariton_vectors(model: PhaseSpaceModel, omega: float, green_provider=None,
                      pole_subtraction: bool = True, e_combos=None, m_combos=None,
                      min_points_per_wavelength: float = 8.0) -> PolaritonVectors:
    """Scattering and medium polariton rows at (the bath node nearest) ``omega``.

    Args:
        model: phase-space model.
        omega: target frequency; snapped to a bath node (or a box momentum
            when the model has no reservoirs).
        green_provider: object with ``g``, ``dz`` and ``mode``; defaults to
            the layered kernels of the bath-realised structure, or the
            periodic homogeneous kernel for translation-invariant media.
        pole_subtraction: when False the frequency is used as given and a
            collision with a bath node raises :class:`SingularityError`.
        e_combos, m_combos: optional (n_combo, n_source) weights; rows are
            then the corresponding linear combinations of point sources.
    """
    if not omega > 0:
        raise DomainError("omega must be positive")
    c = model.constants
    if pole_subtraction:
        omega, j, weight = snap_frequency(model, omega)
    else:
        j, weight = None, 1.0
        _wk(model, None, omega, -1)
    k = omega / c.c
    if k * model.dx > 2 * math.pi / min_points_per_wavelength:
        raise DomainError("frequency not resolved by the grid")
    hbar, eps0 = c.hbar, c.eps0
    gp = green_provider or default_green(model, omega, j)
    Fh = excitation_density(model, omega, j)
    x, dx, N = model.x, model.dx, model.n_pairs
    out = PolaritonVectors(omega, j, weight)
    modes_ok = gp.mode(1, x) is not None
    if modes_ok:
        cs = hbar * k / (4 * math.pi * eps0)
        for s in (1, -1):
            F = gp.mode(s, x)
            out.g[s] = math.sqrt(weight) * ((dx * math.sqrt(cs) * np.conj(F)) @ Fh)
    if j is None:
        return out
    wj = model.bath.weights[j]
    pref = math.sqrt(wj * dx)
    amp = 1 / math.sqrt(2 * hbar * omega)
    if model.e_sites.size:
        src = model.x[model.e_sites]
        a = model.alpha[:, j]
        im_e = math.pi * a**2 / (2 * omega * eps0)
        kern = 1j * np.sqrt(hbar * k**4 * im_e / (math.pi * eps0))[None, :] * gp.g(x[:, None], src[None, :])
        W = np.eye(src.size) if e_combos is None else np.asarray(e_combos)
        proj = (W @ (dx * np.conj(kern)).T)
        H = sp.lil_matrix((src.size, 2 * N), dtype=complex)
        for e, i in enumerate(model.e_sites):
            xi = model.x_index(e, j)
            H[e, i] = amp * a[e] / math.sqrt(dx)
            H[e, xi] = amp * (-1j * omega) / pref
            H[e, xi + N] = amp / pref
        rows = proj @ Fh + (sp.csr_matrix(W) @ H.tocsr())
        out.fe = pref * np.asarray(rows)
        out.fe_sites = model.e_sites
    if model.m_sites.size:
        src = model.half_sites[model.m_sites]
        b = model.beta[:, j]
        im_k = math.pi * c.mu0 * b**2 / (2 * omega)
        kern = (1j / k) * np.sqrt(hbar * k**4 * im_k / (math.pi * eps0))[None, :] * gp.dz(x[:, None], src[None, :])
        W = np.eye(src.size) if m_combos is None else np.asarray(m_combos)
        proj = (W @ (dx * np.conj(kern)).T)
        H = sp.lil_matrix((src.size, 2 * N), dtype=complex)
        for m in range(src.size):
            yi = model.y_index(m, j)
            H[m, yi] = amp * 1j * (-1j * omega) / pref
            H[m, yi + N] = amp * 1j / pref
        rows = proj @ Fh + (sp.csr_matrix(W) @ H.tocsr())
        out.fm = pref * np.asarray(rows)
        out.fm_sites = model.m_sites
    return out
