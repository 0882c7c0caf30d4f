"""Symplectic normal-mode decomposition of quadratic bosonic models.

Models built by :func:`build_model` are separable after a canonical swap,
H = 1/2 s_q^T V s_q + 1/2 s_p^T T s_p. With T = L L^T and
L^T V L = U diag(w^2) U^T, the normal coordinates are

    Q = diag(sqrt(w)) U^T L^{-1} s_q,   P = diag(1/sqrt(w)) U^T L^T s_p,

a linear canonical map by construction, so H = 1/2 sum_m w_m (Q_m^2 + P_m^2).
Translation-invariant models are first split into real Fourier sectors,
which keeps box-filling media tractable. Zero modes (the uniform vector
potential of the periodic box) are kept as a free canonical pair and flagged.

:func:`williamson` is the dense general path for positive-definite M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from ..errors import DegenerateInputError, DomainError
from .model import PhaseSpaceModel

__all__ = ["Sector", "BogoliubovModes", "diagonalize", "williamson", "fourier_patterns",
           "ZERO_MODE_RATIO"]

# zero modes: w^2 < ZERO_MODE_RATIO * max(w^2)
ZERO_MODE_RATIO = 1e-12


@dataclass
class Sector:
    """One invariant block: orthonormal rows R on q-index space plus its modes."""

    label: str
    R: sp.csr_matrix
    omega: np.ndarray
    U: np.ndarray = field(repr=False)
    L: sp.csr_matrix = field(repr=False)
    Linv: sp.csr_matrix = field(repr=False)
    zero: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.omega.size

    def _scale(self, sel):
        w = self.omega[sel]
        z = self.zero[sel]
        return np.where(z, 1.0, np.sqrt(np.where(z, 1.0, w)))

    def q_rows(self, sel=slice(None)) -> np.ndarray:
        """Rows mapping sector s_q to Q_m."""
        return self._scale(sel)[:, None] * (self.Linv.T @ self.U[:, sel]).T

    def p_rows(self, sel=slice(None)) -> np.ndarray:
        """Rows mapping sector s_p to P_m."""
        return (self.L @ self.U[:, sel]).T / self._scale(sel)[:, None]


@dataclass
class BogoliubovModes:
    """Normal modes of a :class:`PhaseSpaceModel`, stored per sector.

    Attributes:
        frequencies: all mode frequencies (sector-concatenated, >= 0).
        sector_of: sector index of each entry of ``frequencies``.
        local_index: index of each mode inside its sector.
    """

    model: PhaseSpaceModel
    sectors: list[Sector]
    hbar: float

    @property
    def frequencies(self) -> np.ndarray:
        return np.concatenate([s.omega for s in self.sectors])

    @property
    def zero_modes(self) -> np.ndarray:
        return np.nonzero(np.concatenate([s.zero for s in self.sectors]))[0]

    @property
    def sector_of(self) -> np.ndarray:
        return np.concatenate([np.full(s.size, k) for k, s in enumerate(self.sectors)])

    @property
    def local_index(self) -> np.ndarray:
        return np.concatenate([np.arange(s.size) for s in self.sectors])

    # -- coordinate maps ---------------------------------------------------
    def to_sector(self, rows: np.ndarray, k: int) -> np.ndarray:
        """Express phase-space row functionals (on z) in sector-k coordinates."""
        if not sp.issparse(rows):
            rows = np.atleast_2d(rows)
        n = self.model.n_pairs
        # u . z = u . S^T s  (S orthogonal)
        us = rows @ self.model.swap.T
        R = self.sectors[k].R
        q, p = us[:, :n] @ R.T, us[:, n:] @ R.T
        if sp.issparse(q):
            return sp.hstack([q, p]).toarray()
        return np.hstack([q, p])

    def from_sector(self, rows: np.ndarray, k: int) -> np.ndarray:
        """Lift sector-k row functionals back to functionals on z."""
        rows = np.atleast_2d(rows)
        ns = self.sectors[k].size
        R = self.sectors[k].R
        us = np.hstack([(R.T @ rows[:, :ns].T).T, (R.T @ rows[:, ns:].T).T])
        return (self.model.swap.T @ us.T).T

    def annihilation_rows(self, k: int, sel=slice(None)) -> np.ndarray:
        """b_m = (Q_m + i P_m) / sqrt(2 hbar) as rows in sector-k coordinates."""
        s = self.sectors[k]
        q, p = s.q_rows(sel), s.p_rows(sel)
        return np.hstack([q, 1j * p]) / math.sqrt(2 * self.hbar)

    def transform(self) -> np.ndarray:
        """Dense T with (Q, P) = T z. Intended for small models."""
        n = self.model.n_pairs
        out = np.zeros((2 * n, 2 * n))
        r = 0
        for k, s in enumerate(self.sectors):
            m = s.size
            rows = np.zeros((2 * m, 2 * m))
            rows[:m, :m] = s.q_rows()
            rows[m:, m:] = s.p_rows()
            lifted = self.from_sector(rows, k)
            out[r:r + m] = lifted[:m]
            out[n + r:n + r + m] = lifted[m:]
            r += m
        return out

    # -- certification -----------------------------------------------------
    def symplectic_residual(self) -> float:
        """max |T J T^T - J| assembled from the factored pieces."""
        n = self.model.n_pairs
        S, J = self.model.swap, self.model.J
        d = (S @ J @ S.T - J).tocsr()
        worst = float(abs(d).max()) if d.nnz else 0.0
        for s in self.sectors:
            q = s.q_rows()
            p = s.p_rows()
            worst = max(worst, np.abs(q @ p.T - np.eye(s.size)).max())
            RRt = (s.R @ s.R.T).toarray()
            worst = max(worst, np.abs(RRt - np.eye(s.size)).max())
        rows = sum(s.size for s in self.sectors)
        if rows != n:
            raise DomainError("sectors do not tile the phase space")
        return float(worst)

    def energy_residual(self) -> float:
        """max_m |H(Q_m = 1) - w_m / 2| / (w_m / 2) over non-zero modes."""
        worst = 0.0
        V, T = self.model.V, self.model.T
        for s in self.sectors:
            nz = ~s.zero
            if not nz.any():
                continue
            Rd = s.R
            Vs = (Rd @ V @ Rd.T)
            Ts = (Rd @ T @ Rd.T)
            sq = s.L @ s.U[:, nz] / np.sqrt(s.omega[nz])
            sp_ = sla.solve(s.L.T.toarray(), s.U[:, nz]) * np.sqrt(s.omega[nz])
            eq = 0.5 * np.einsum("im,im->m", sq, Vs @ sq)
            ep = 0.5 * np.einsum("im,im->m", sp_, Ts @ sp_)
            half = 0.5 * s.omega[nz]
            worst = max(worst, float(np.max(np.abs(eq - half) / half)),
                        float(np.max(np.abs(ep - half) / half)))
        return worst


def fourier_patterns(n: int) -> list[tuple[str, np.ndarray]]:
    """Real orthonormal Fourier patterns on n periodic sites, grouped by |k|."""
    i = np.arange(n)
    out = []
    for m in range(n // 2 + 1):
        if m == 0:
            pats = [np.full(n, 1 / math.sqrt(n))]
        elif 2 * m == n:
            pats = [(-1.0) ** i / math.sqrt(n)]
        else:
            pats = [math.sqrt(2 / n) * np.cos(2 * math.pi * m * i / n),
                    math.sqrt(2 / n) * np.sin(2 * math.pi * m * i / n)]
        out.append((f"k{m}", np.array(pats)))
    return out


def _fourier_rows(model: PhaseSpaceModel) -> list[tuple[str, sp.csr_matrix]]:
    """Sector rows for a translation-invariant model (same pattern on every field)."""
    n, nb = model.n_sites, model.n_bath
    site = np.arange(n)
    fields = [site]
    if model.e_sites.size:
        fields += [model.x_index(0, j) + nb * site for j in range(nb)]
    if model.m_sites.size:
        fields += [model.y_index(0, j) + nb * site for j in range(nb)]
    out = []
    for label, pats in fourier_patterns(n):
        rows, cols, vals = [], [], []
        r = 0
        for idx in fields:
            for pat in pats:
                rows += [r] * n
                cols += list(idx)
                vals += list(pat)
                r += 1
        out.append((label, sp.csr_matrix((vals, (rows, cols)), shape=(r, model.n_pairs))))
    return out


def _block_cholesky(T: sp.csr_matrix):
    """T = L L^T with L block diagonal over the connected blocks of T."""
    n = T.shape[0]
    ncomp, lab = connected_components(T != 0, directed=False)
    L = sp.lil_matrix((n, n))
    Li = sp.lil_matrix((n, n))
    order = np.argsort(lab, kind="stable")
    bounds = np.searchsorted(lab[order], np.arange(ncomp + 1))
    Td = T.tocsr()
    for c in range(ncomp):
        idx = order[bounds[c]:bounds[c + 1]]
        blk = Td[idx][:, idx].toarray()
        try:
            c_ = np.linalg.cholesky(blk)
        except np.linalg.LinAlgError as exc:
            raise DegenerateInputError("kinetic block is not positive definite") from exc
        ci = sla.solve_triangular(c_, np.eye(idx.size), lower=True)
        rr, cc = np.meshgrid(idx, idx, indexing="ij")
        L[rr, cc] = c_
        Li[rr, cc] = ci
    return L.tocsr(), Li.tocsr()


def _solve_sector(label, R, V, T) -> Sector:
    Vs = (R @ V @ R.T).tocsr()
    Ts = (R @ T @ R.T).tocsr()
    for mat in (Vs, Ts):
        if mat.nnz:
            big = float(np.abs(mat.data).max())
            mat.data[np.abs(mat.data) < 1e-14 * big] = 0
            mat.eliminate_zeros()
    L, Li = _block_cholesky(Ts)
    K = (L.T @ Vs @ L).toarray()
    K = 0.5 * (K + K.T)
    lam, U = np.linalg.eigh(K)
    scale = max(abs(lam).max(), 1e-300)
    if lam.min() < -1e-9 * scale:
        raise DegenerateInputError("Hamiltonian is not positive semidefinite")
    zero = lam < ZERO_MODE_RATIO * scale
    omega = np.sqrt(np.clip(lam, 0, None))
    omega[zero] = 0.0
    return Sector(label, R, omega, U, L, Li, zero)


def diagonalize(model: PhaseSpaceModel, use_sectors: bool | None = None) -> BogoliubovModes:
    """Normal modes of ``model``.

    ``use_sectors`` defaults to Fourier splitting for translation-invariant
    models with reservoirs and one global sector otherwise.
    """
    if use_sectors is None:
        use_sectors = model.uniform and model.n_bath > 0 and model.e_sites.size + model.m_sites.size > 0
    if use_sectors:
        parts = _fourier_rows(model)
    else:
        parts = [("all", sp.identity(model.n_pairs, format="csr"))]
    sectors = [_solve_sector(lbl, R, model.V, model.T) for lbl, R in parts]
    return BogoliubovModes(model, sectors, model.constants.hbar)


def williamson(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Dense symplectic normal form of a positive-definite M.

    Returns (omega, T) with T J T^T = J and T^{-T} M T^{-1} = diag(omega, omega),
    i.e. H = 1/2 sum w_m (Q_m^2 + P_m^2) for (Q, P) = T z.
    """
    M = np.asarray(M, float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] % 2:
        raise DomainError("M must be square with even dimension")
    M = 0.5 * (M + M.T)
    ev, W = np.linalg.eigh(M)
    if ev.min() <= 1e-12 * ev.max():
        raise DegenerateInputError("williamson() needs positive-definite M; zero modes "
                                   "are handled by the separable path")
    n = M.shape[0] // 2
    Mh = (W * np.sqrt(ev)) @ W.T
    J = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
    K = Mh @ J @ Mh
    S, O = sla.schur(K, output="real")
    omega = np.empty(n)
    qcols, pcols = [], []
    for m in range(n):
        a = S[2 * m, 2 * m + 1]
        c0, c1 = O[:, 2 * m], O[:, 2 * m + 1]
        if a < 0:
            c0, c1, a = c1, c0, -a
        omega[m] = a
        qcols.append(c0)
        pcols.append(c1)
    order = np.argsort(omega)
    omega = omega[order]
    Op = np.column_stack([np.array(qcols)[order].T, np.array(pcols)[order].T])
    scale = np.concatenate([omega, omega]) ** -0.5
    T = scale[:, None] * (Op.T @ Mh)
    return omega, T
