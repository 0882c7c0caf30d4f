"""Discretised canonical phase space on a periodic box with Fano reservoirs.

Canonical variables are the rescaled grid values

    A_i  = sqrt(dx) A(x_i),          P_i  = sqrt(dx) Pi_A(x_i),
    X_ij = sqrt(w_j dx) X^{W_j}(x_i), Y_hj = sqrt(w_j dx) Y^{W_j}(x_{h+1/2}),

so every pair obeys [q, p] = i hbar. Electric reservoirs sit on sites with
nonzero cell-averaged Im eps, magnetic ones on half-sites (the staggered
points where B = dA/dx lives). The Hamiltonian is

    H = sum_i (P_i + sum_j sqrt(w_j) a_ij X_ij)^2 / (2 eps0)
        + sum_h (A_{h+1} - A_h)^2 / (2 mu0 dx^2)
        - sum_hj (A_{h+1} - A_h) / dx * sqrt(w_j) b_hj Y_hj
        + 1/2 sum (P_X^2 + W_j^2 X^2) + 1/2 sum (P_Y^2 + W_j^2 Y^2).

The canonical swap X' = P_X, P_X' = -X makes H = 1/2 s_q V s_q + 1/2 s_p T s_p,
which the normal-mode solver exploits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ..errors import DomainError
from ..layered import Structure1D
from ..response import Constants, coupling_coefficients, eval_response

__all__ = ["BathGrid", "PhaseSpaceModel", "build_model", "model_from_matrix"]


@dataclass(frozen=True)
class BathGrid:
    """Uniform reservoir frequencies with trapezoid weights."""

    omega_min: float
    omega_max: float
    n_bath: int

    def __post_init__(self):
        if self.n_bath < 1:
            raise DomainError("n_bath must be >= 1")
        if not (0 < self.omega_min <= self.omega_max):
            raise DomainError("need 0 < omega_min <= omega_max")
        if self.n_bath > 1 and self.omega_max == self.omega_min:
            raise DomainError("several bath nodes need omega_max > omega_min")

    @cached_property
    def nodes(self) -> np.ndarray:
        if self.n_bath == 1:
            return np.array([0.5 * (self.omega_min + self.omega_max)])
        return np.linspace(self.omega_min, self.omega_max, self.n_bath)

    @property
    def spacing(self) -> float:
        if self.n_bath == 1:
            return max(self.omega_max - self.omega_min, 1.0)
        return (self.omega_max - self.omega_min) / (self.n_bath - 1)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.n_bath, self.spacing)
        if self.n_bath > 1:
            w[0] = w[-1] = 0.5 * self.spacing
        return w

    def nearest(self, omega: float) -> int:
        return int(np.argmin(np.abs(self.nodes - omega)))


def _cell_fractions(structure: Structure1D, lo: np.ndarray, hi: np.ndarray, period: float):
    """Per-layer overlap fraction of each periodic cell [lo, hi)."""
    fr = np.zeros((len(structure.layers), lo.size))
    width = hi - lo
    for n, layer in enumerate(structure.layers):
        for shift in (-period, 0.0, period):
            ov = np.minimum(hi + shift, layer.x_max) - np.maximum(lo + shift, layer.x_min)
            fr[n] += np.clip(ov, 0, None) / width
    return fr


@dataclass
class PhaseSpaceModel:
    """Quadratic bosonic model H = 1/2 z^T M z, z = (q, p).

    The q ordering is [A_0..A_{n-1}, X_(e, j) ..., Y_(h, j) ...]; ``labels``
    names each q entry, p entries mirror them.
    """

    structure: Structure1D | None
    constants: Constants
    bath: BathGrid | None
    box: float
    n_sites: int
    x: np.ndarray
    e_sites: np.ndarray        # site indices carrying electric reservoirs
    m_sites: np.ndarray        # half-site indices h (between x_h and x_{h+1})
    alpha: np.ndarray          # (n_e, n_bath) couplings a(x_i, W_j)
    beta: np.ndarray           # (n_m, n_bath)
    V: sp.csr_matrix = field(repr=False)  # q-block after the swap
    T: sp.csr_matrix = field(repr=False)  # p-block after the swap
    uniform: bool = False

    @property
    def dx(self) -> float:
        return 2 * self.box / self.n_sites

    @property
    def n_bath(self) -> int:
        return 0 if self.bath is None else self.bath.n_bath

    @property
    def n_pairs(self) -> int:
        return self.n_sites + (len(self.e_sites) + len(self.m_sites)) * self.n_bath

    @property
    def half_sites(self) -> np.ndarray:
        return self.x + 0.5 * self.dx

    def x_index(self, e: int, j: int) -> int:
        return self.n_sites + e * self.n_bath + j

    def y_index(self, m: int, j: int) -> int:
        return self.n_sites + len(self.e_sites) * self.n_bath + m * self.n_bath + j

    @cached_property
    def labels(self) -> list[str]:
        out = [f"A[{i}]" for i in range(self.n_sites)]
        out += [f"X[{i},{j}]" for i in self.e_sites for j in range(self.n_bath)]
        out += [f"Y[{h}+1/2,{j}]" for h in self.m_sites for j in range(self.n_bath)]
        return out

    @cached_property
    def swap(self) -> sp.csr_matrix:
        """Symplectic S with s = S z: (X, P_X) -> (P_X, -X) on electric pairs."""
        n = self.n_pairs
        ex = np.arange(self.n_sites, self.n_sites + len(self.e_sites) * self.n_bath)
        rows, cols, vals = [], [], []
        keep = np.ones(n, bool)
        keep[ex] = False
        idx = np.nonzero(keep)[0]
        rows += list(idx) + list(idx + n)
        cols += list(idx) + list(idx + n)
        vals += [1.0] * (2 * idx.size)
        rows += list(ex) + list(ex + n)
        cols += list(ex + n) + list(ex)
        vals += [1.0] * ex.size + [-1.0] * ex.size
        return sp.csr_matrix((vals, (rows, cols)), shape=(2 * n, 2 * n))

    @cached_property
    def M(self) -> sp.csr_matrix:
        S = self.swap
        return (S.T @ sp.block_diag([self.V, self.T]) @ S).tocsr()

    @cached_property
    def J(self) -> sp.csr_matrix:
        n = self.n_pairs
        eye = sp.identity(n, format="csr")
        return sp.bmat([[None, eye], [-eye, None]], format="csr")

    def energy(self, z) -> float:
        z = np.asarray(z)
        return float(0.5 * np.real(np.conj(z) @ (self.M @ z)))

    def psd_defect(self) -> tuple[float, float]:
        """(min eigenvalue, max eigenvalue) of M via its V and T blocks."""
        lo, hi = math.inf, -math.inf
        for blk in (self.V, self.T):
            ev = np.linalg.eigvalsh(blk.toarray())
            lo, hi = min(lo, ev[0]), max(hi, ev[-1])
        return lo, hi

    def realised_response(self, j: int):
        """Per-site eps and per-half-site mu realised by the discrete bath at node j.

        Uses the cell-averaged couplings: the imaginary part is the node's
        delta term, the real part a discrete principal value (midpoint rule
        plus an analytic correction for the node's own cell).
        """
        eps = np.ones(self.n_sites, complex)
        inv_mu = np.ones(self.n_sites, complex)
        if self.bath is None:
            return eps, 1.0 / inv_mu
        wk = kernel_weights(self.bath, j, +1)
        if self.e_sites.size:
            eps[self.e_sites] += (self.alpha**2 @ wk) / self.constants.eps0
        if self.m_sites.size:
            inv_mu[self.m_sites] -= self.constants.mu0 * (self.beta**2 @ wk)
        return eps, 1.0 / inv_mu


def kernel_weights(bath: BathGrid, j_star: int, sign: int, rule: str = "odd") -> np.ndarray:
    """Discrete weights w_j K_j for lim 1/(W^2 - (w +- i eta)^2), w = W_{j*}.

    The kernel splits as [1/(W - w) - 1/(W + w)] / (2w). The smooth second
    term uses the trapezoid weights off the node and its exact cell integral
    on the node. The singular first term uses either the midpoint rule
    (``rule="midpoint"``) or the odd-offset rule 2 dW / (W - w) on odd node
    offsets only (``rule="odd"``, the default). The odd-offset Hilbert
    matrix squares to minus the identity on the lattice, so products of
    two pole kernels keep their delta weight exactly. The node's own cell
    carries the delta term +- i pi / (2 w); ``sign`` selects +i eta (1) or
    -i eta (-1).
    """
    nodes, w = bath.nodes, bath.nodes[j_star]
    if not (0 < j_star < bath.n_bath - 1 or bath.n_bath == 1):
        raise DomainError("the snapped frequency must be an interior bath node")
    off = np.arange(bath.n_bath) - j_star
    mask = off != 0
    out = np.zeros(bath.n_bath, complex)
    out[mask] = -bath.weights[mask] / (nodes[mask] + w)
    if rule == "odd":
        odd = (off % 2) == 1
        out[odd] += 2 * bath.spacing / (nodes[odd] - w)
    elif rule == "midpoint":
        out[mask] += bath.weights[mask] / (nodes[mask] - w)
    else:
        raise DomainError(f"unknown kernel rule {rule!r}")
    out /= 2 * w
    half = 0.5 * bath.weights[j_star]
    out[j_star] = (math.log((2 * w - half) / (2 * w + half)) / (2 * w)
                   + sign * 1j * math.pi / (2 * w))
    return out


def build_model(structure: Structure1D, box: float, n_sites: int, bath: BathGrid,
                constants: Constants | None = None, min_sites: int = 64) -> PhaseSpaceModel:
    """Assemble the discretised Hamiltonian on the periodic box [-box, box).

    Couplings a(x_i, W_j)^2 are cell averages of alpha^2 over each site's
    dual cell [x_i - dx/2, x_i + dx/2); b^2 averages beta^2 over
    [x_h, x_{h+1}).
    """
    constants = constants or structure.constants
    if box <= 0:
        raise DomainError("box half-width must be positive")
    if n_sites < min_sites:
        raise DomainError(f"n_sites must be >= {min_sites}")
    xl, xr = structure.extent
    if structure.layers and (xl < -box or xr > box):
        raise DomainError("structure exceeds the box")
    dx = 2 * box / n_sites
    x = -box + dx * np.arange(n_sites)
    nodes = bath.nodes
    a2 = np.zeros((n_sites, bath.n_bath))
    b2 = np.zeros((n_sites, bath.n_bath))
    if structure.layers:
        fe = _cell_fractions(structure, x - dx / 2, x + dx / 2, 2 * box)
        fm = _cell_fractions(structure, x, x + dx, 2 * box)
        for n, layer in enumerate(structure.layers):
            al, be = coupling_coefficients(layer.response, constants, nodes)
            a2 += np.outer(fe[n], al**2)
            b2 += np.outer(fm[n], be**2)
    e_sites = np.nonzero(a2.max(axis=1) > 0)[0]
    m_sites = np.nonzero(b2.max(axis=1) > 0)[0]
    alpha = np.sqrt(a2[e_sites])
    beta = np.sqrt(b2[m_sites])
    V, T = _assemble(n_sites, dx, bath, e_sites, m_sites, alpha, beta, constants)
    uniform = _is_uniform(n_sites, e_sites, m_sites, alpha, beta)
    return PhaseSpaceModel(structure, constants, bath, box, n_sites, x, e_sites,
                           m_sites, alpha, beta, V, T, bool(uniform))


def _is_uniform(n_sites, e_sites, m_sites, alpha, beta) -> bool:
    for sites, c in ((e_sites, alpha), (m_sites, beta)):
        if sites.size not in (0, n_sites):
            return False
        if sites.size and not np.allclose(c, c[:1]):
            return False
    return True


def _assemble(n_sites, dx, bath, e_sites, m_sites, alpha, beta, constants):
    nb = bath.n_bath
    ne, nm = len(e_sites), len(m_sites)
    n = n_sites + (ne + nm) * nb
    sqw = np.sqrt(bath.weights)
    om2 = bath.nodes**2
    eps0, mu0 = constants.eps0, constants.mu0
    # V: field gradient energy, X' (= P_X) kinetic, Y potential, A-Y coupling
    V = sp.lil_matrix((n, n))
    for h in range(n_sites):
        i, ip = h, (h + 1) % n_sites
        c = 1.0 / (mu0 * dx * dx)
        V[i, i] += c
        V[ip, ip] += c
        V[i, ip] -= c
        V[ip, i] -= c
    V = V.tocsr()
    rows, cols, vals = [], [], []
    x0 = n_sites
    for e in range(ne):
        idx = x0 + e * nb + np.arange(nb)
        rows += list(idx); cols += list(idx); vals += [1.0] * nb
    y0 = n_sites + ne * nb
    for m, h in enumerate(m_sites):
        idx = y0 + m * nb + np.arange(nb)
        rows += list(idx); cols += list(idx); vals += list(om2)
        b = sqw * beta[m] / dx
        i, ip = h, (h + 1) % n_sites
        # -(A_{h+1} - A_h) b_j Y_j, counted symmetrically
        for a_idx, sgn in ((ip, -1.0), (i, 1.0)):
            rows += [a_idx] * nb + list(idx)
            cols += list(idx) + [a_idx] * nb
            vals += list(sgn * b) * 2
    V = V + sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    # T: (P_i - sum_j c_ij P'_ij)^2 / eps0 + W_j^2 P'^2 + P_Y^2
    rows, cols, vals = list(range(n_sites)), list(range(n_sites)), [1.0 / eps0] * n_sites
    for e, i in enumerate(e_sites):
        idx = x0 + e * nb + np.arange(nb)
        c = sqw * alpha[e]
        rows += [i] * nb + list(idx)
        cols += list(idx) + [i] * nb
        vals += list(-c / eps0) * 2
        blk = np.outer(c, c) / eps0 + np.diag(om2)
        rr, cc = np.meshgrid(idx, idx, indexing="ij")
        rows += list(rr.ravel()); cols += list(cc.ravel()); vals += list(blk.ravel())
    if nm:
        idx = np.arange(y0, n)
        rows += list(idx); cols += list(idx); vals += [1.0] * idx.size
    T = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    return V.tocsr(), T.tocsr()


def model_from_matrix(V, T, constants: Constants | None = None) -> PhaseSpaceModel:
    """Bare separable model H = 1/2 q^T V q + 1/2 p^T T p (for small tests)."""
    V = sp.csr_matrix(np.atleast_2d(np.asarray(V, float)))
    T = sp.csr_matrix(np.atleast_2d(np.asarray(T, float)))
    n = V.shape[0]
    return PhaseSpaceModel(None, constants or Constants(), None, 0.5 * n, n,
                           np.arange(n, dtype=float), np.array([], int), np.array([], int),
                           np.zeros((0, 0)), np.zeros((0, 0)), V, T, False)
