"""1D kernels and the completeness / commutator-spectrum checks.

With every constant divided out, the 1D completeness relation reads

    Im g(x, x') = (1/4k) sum_sigma F(x|s) F*(x'|s)
                  + k^2 int dz Im eps(z) g(x, z) g*(x', z)
                  + int dz Im(-1/mu(z)) dz g(x, z) [dz g(x', z)]*

where the z-integrals cover the lossy layers only. The medium integrals use
composite Gauss-Legendre panels aligned to interfaces and to x, x'.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError
from .layered import Green1D, Structure1D, green, refractive_index
from .quadrature import QuadraturePolicy, gauss_legendre_panels
from .report import CheckReport, compare
from .response import Constants, eval_response

__all__ = [
    "KernelSet1D", "kernels", "completeness_terms", "completeness_1d",
    "commutator_spectrum", "commutator_matrix", "unbounded_lnf_identity",
    "asymptotic_amplitude_check", "psd_report", "homogeneous_green",
    "completeness_refinement",
]

DEFAULT_ORDER = 16


@dataclass
class KernelSet1D:
    """Scattering, electric and magnetic kernels at one frequency.

    scattering(x, s) = sqrt(C_s) F(x|s), C_s = hbar k / (4 pi eps0);
    electric(x, z) = i sqrt(hbar k^4 Im eps(z) / (pi eps0)) g(x, z);
    magnetic(x, z) = -(1/k) sqrt(hbar k^4 Im(-1/mu(z)) / (pi eps0)) dz g(x, z).
    """

    omega: float
    constants: Constants
    structure: Structure1D
    green_fn: Green1D = field(repr=False)

    @property
    def k(self) -> float:
        return self.green_fn.k

    @property
    def c_s(self) -> float:
        return self.constants.hbar * self.k / (4 * math.pi * self.constants.eps0)

    def _losses(self, z):
        eps, mu = self.structure.material(self.omega, z)
        return np.maximum(eps.imag, 0.0), np.maximum((-1.0 / mu).imag, 0.0)

    def _pref(self):
        return self.constants.hbar * self.k**4 / (math.pi * self.constants.eps0)

    def scattering(self, x, sigma: int):
        mode = self.green_fn.psi_plus if sigma == 1 else self.green_fn.psi_minus
        return math.sqrt(self.c_s) * mode.field(x)

    def electric(self, x, z):
        im_e, _ = self._losses(np.asarray(z, float))
        return 1j * np.sqrt(self._pref() * im_e) * self.green_fn.eval(x, z)

    def magnetic(self, x, z):
        _, im_m = self._losses(np.asarray(z, float))
        return -(1.0 / self.k) * np.sqrt(self._pref() * im_m) * self.green_fn.eval_dz(x, z)


def kernels(structure: Structure1D, omega: float) -> KernelSet1D:
    return KernelSet1D(omega, structure.constants, structure, green(structure, omega))


def _panel_width(structure: Structure1D, omega: float, g: Green1D) -> float:
    qmax = g.k
    for lo, hi, eps, mu in structure.segments(omega):
        qmax = max(qmax, abs(g.k * refractive_index(eps, mu)))
    return min(0.5, math.pi / (2.0 * qmax))


def _z_nodes(structure: Structure1D, omega: float, extra: Sequence[float],
             order: int, width: float):
    """GL nodes restricted to lossy layers, with extra breakpoints."""
    nodes, weights = [], []
    for layer in structure.layers:
        eps, mu = eval_response(layer.response, omega)
        if eps.imag <= 0 and (-1.0 / mu).imag <= 0:
            continue
        edges = sorted({layer.x_min, layer.x_max,
                        *[p for p in extra if layer.x_min < p < layer.x_max]})
        z, w = gauss_legendre_panels(edges, order, width)
        nodes.append(z)
        weights.append(w)
    if not nodes:
        return np.empty(0), np.empty(0)
    return np.concatenate(nodes), np.concatenate(weights)


def _medium_sums(g: Green1D, structure, omega, x, xp, order, width):
    z, w = _z_nodes(structure, omega, (x, xp), order, width)
    if z.size == 0:
        return 0j, 0j, 0
    eps, mu = structure.material(omega, z)
    im_e = np.maximum(eps.imag, 0.0)
    im_m = np.maximum((-1.0 / mu).imag, 0.0)
    gx, gxp = g.eval(x, z), g.eval(xp, z)
    dgx, dgxp = g.eval_dz(x, z), g.eval_dz(xp, z)
    elec = g.k**2 * np.sum(w * im_e * gx * np.conj(gxp))
    magn = np.sum(w * im_m * dgx * np.conj(dgxp))
    return complex(elec), complex(magn), int(z.size)


def completeness_terms(structure: Structure1D, omega: float, x: float, x_prime: float,
                       order: int = DEFAULT_ORDER, panel_width: float | None = None,
                       g: Green1D | None = None) -> dict:
    """Both sides of the completeness relation, term by term."""
    g = g or green(structure, omega)
    width = panel_width or _panel_width(structure, omega, g)
    lhs = complex(g.eval(x, x_prime)).imag
    fp, fm = g.psi_plus, g.psi_minus
    scat = (fp.field(x) * np.conj(fp.field(x_prime))
            + fm.field(x) * np.conj(fm.field(x_prime))) / (4 * g.k)
    elec, magn, nz = _medium_sums(g, structure, omega, x, x_prime, order, width)
    return {"lhs": lhs, "scattering": complex(scat), "electric": elec,
            "magnetic": magn, "rhs": complex(scat) + elec + magn, "nodes": nz,
            "panel_width": width, "order": order}


def completeness_1d(structure: Structure1D, omega: float, x: float, x_prime: float,
                    policy: QuadraturePolicy | None = None, tol: float = 1e-6,
                    g: Green1D | None = None) -> CheckReport:
    """Check the 1D completeness relation at one (x, x') pair.

    The medium integrals are refined by halving the panel width until two
    successive values agree to ``policy.rel_tol`` (relative to |Im g| + the
    term sizes) or ten halvings have been tried.
    """
    policy = policy or QuadraturePolicy(rel_tol=1e-12)
    g = g or green(structure, omega)
    width = _panel_width(structure, omega, g)
    terms = completeness_terms(structure, omega, x, x_prime, DEFAULT_ORDER, width, g)
    est = math.inf
    for _ in range(10):
        width /= 2
        finer = completeness_terms(structure, omega, x, x_prime, DEFAULT_ORDER, width, g)
        est = abs(finer["rhs"] - terms["rhs"])
        terms = finer
        scale = abs(terms["lhs"]) + abs(terms["electric"]) + abs(terms["magnetic"])
        if est <= max(policy.abs_tol, policy.rel_tol * scale):
            break
    status = "ok" if est <= max(policy.abs_tol, tol * 1e-2 * abs(terms["lhs"])) else "quadrature_failure"
    return compare("completeness_1d", terms["rhs"], terms["lhs"], tol,
                   params={"omega": omega, "x": x, "x_prime": x_prime},
                   anchor="fundamental completeness relation (1D)",
                   metadata={"scattering": terms["scattering"], "electric": terms["electric"],
                             "magnetic": terms["magnetic"], "lhs": terms["lhs"],
                             "nodes": terms["nodes"], "error_estimate": est},
                   status=status)


def completeness_refinement(structure: Structure1D, omega: float, x: float, x_prime: float,
                            order: int = 2, halvings: int = 4, min_order: float = 2.0,
                            panel_width: float | None = None) -> CheckReport:
    """Observed convergence order of the medium quadrature under panel halving.

    A deliberately low Gauss-Legendre order (two nodes per panel, nominal
    order 4) keeps the error above round-off so the log-log slope of
    |rhs - lhs| against panel width can be measured. The slope is fitted on
    the three finest widths, past the pre-asymptotic first halving. The
    report passes when it is at least ``min_order``.
    """
    g = green(structure, omega)
    width = panel_width or _panel_width(structure, omega, g)
    widths, errs = [], []
    for i in range(halvings + 1):
        h = width / 2**i
        t = completeness_terms(structure, omega, x, x_prime, order, h, g)
        widths.append(h)
        errs.append(abs(t["rhs"] - t["lhs"]))
    if min(errs) <= 0:
        raise DomainError("quadrature error vanished; cannot estimate an order")
    slope = float(np.polyfit(np.log(widths[-3:]), np.log(errs[-3:]), 1)[0])
    short = max(0.0, min_order - slope)
    return CheckReport("completeness_refinement",
                       {"omega": omega, "x": x, "x_prime": x_prime, "gl_order": order},
                       short, short, 0.0, reference_is_zero=True,
                       anchor="fundamental completeness relation (1D), quadrature order",
                       metadata={"observed_order": slope, "widths": widths, "errors": errs})


def commutator_spectrum(structure: Structure1D, omega: float, x: float, x_prime: float,
                        tol: float = 1e-6, order: int = DEFAULT_ORDER):
    """Equal-frequency commutator density (hbar k^2 / pi eps0) Im g(x, x').

    The report compares it with the kernel-sum representation built from
    KernelSet1D, and also records the (x <-> x') symmetry defect.
    """
    ks = kernels(structure, omega)
    c = structure.constants
    k = ks.k
    pref = c.hbar * k**2 / (math.pi * c.eps0)
    g = ks.green_fn
    value = pref * complex(g.eval(x, x_prime)).imag
    swapped = pref * complex(g.eval(x_prime, x)).imag
    width = _panel_width(structure, omega, g) / 4
    z, w = _z_nodes(structure, omega, (x, x_prime), order, width)
    kernel_sum = sum(ks.scattering(x, s) * np.conj(ks.scattering(x_prime, s)) for s in (1, -1))
    if z.size:
        kernel_sum += np.sum(w * ks.electric(x, z) * np.conj(ks.electric(x_prime, z)))
        kernel_sum += np.sum(w * ks.magnetic(x, z) * np.conj(ks.magnetic(x_prime, z)))
    sym = abs(value - np.conj(swapped))
    rep = compare("commutator_spectrum", complex(kernel_sum), value, tol,
                  params={"omega": omega, "x": x, "x_prime": x_prime},
                  anchor="commutator spectrum from Im g",
                  metadata={"symmetry_defect": sym, "value": value},
                  status="ok" if sym <= 1e-12 * max(1.0, abs(value)) else "asymmetric")
    return value, rep


def commutator_matrix(structure: Structure1D, omega: float, xs: Sequence[float]) -> np.ndarray:
    """Sampled matrix (hbar k^2 / pi eps0) Im g(x_i, x_j)."""
    g = green(structure, omega)
    c = structure.constants
    xs = np.asarray(xs, float)
    pref = c.hbar * g.k**2 / (math.pi * c.eps0)
    return pref * np.imag(g.eval(xs[:, None], xs[None, :]))


def psd_report(structure: Structure1D, omega: float, xs: Sequence[float],
               tol: float = 1e-10) -> CheckReport:
    """Positive semidefiniteness of the sampled commutator matrix."""
    m = commutator_matrix(structure, omega, xs)
    sym = float(np.max(np.abs(m - m.T)))
    lam = np.linalg.eigvalsh(0.5 * (m + m.T))
    neg = max(0.0, -float(lam.min()))
    scale = float(lam.max()) if lam.size else 1.0
    return CheckReport("commutator_psd", {"omega": omega, "n_points": len(xs)},
                       abs_err=neg, rel_err=neg / scale if scale > 0 else neg,
                       tol=tol, anchor="commutator spectrum positivity",
                       metadata={"min_eig": float(lam.min()), "max_eig": scale,
                                 "symmetry_defect": sym},
                       status="ok" if sym <= 1e-12 * max(1.0, scale) else "asymmetric")


def homogeneous_green(omega: float, eps: complex, mu: complex, x, z, constants=None):
    """g = i mu exp(i k n |x - z|) / (2 k n) and its z-derivative."""
    constants = constants or Constants()
    k = omega / constants.c
    n = refractive_index(eps, mu)
    d = np.asarray(z, float) - np.asarray(x, float)
    ph = np.exp(1j * k * n * np.abs(d))
    g = 1j * mu * ph / (2 * k * n)
    dg = -mu * np.sign(d) * ph / 2
    return g, dg


def unbounded_lnf_identity(model, omega: float, x: float, x_prime: float,
                           truncation: float, policy: QuadraturePolicy | None = None,
                           tol: float = 1e-6, allow_lossless: bool = False,
                           constants: Constants | None = None,
                           order: int = DEFAULT_ORDER) -> CheckReport:
    """Medium-only completeness for a homogeneous absorber filling all space.

    The z-integrals run over [-truncation, truncation]; the neglected tail is
    bounded by exp(-2 Im(kn) truncation). ``allow_lossless`` lets a lossless
    "medium" through to exhibit the defect (the whole scattering term).
    """
    constants = constants or Constants()
    if not omega > 0 or not truncation > 0:
        raise DomainError("omega and truncation must be positive")
    eps, mu = eval_response(model, omega)
    im_e, im_m = eps.imag, (-1.0 / mu).imag
    if im_e <= 0 and im_m <= 0 and not allow_lossless:
        raise DomainError("unbounded-medium identity requires absorption at omega")
    k = omega / constants.c
    n = refractive_index(eps, mu)
    lhs = complex(homogeneous_green(omega, eps, mu, x, x_prime, constants)[0]).imag
    qi = (k * n).imag
    width = min(0.5, math.pi / (2 * abs(k * n)))
    if qi > 0:
        width = min(width, 2.0 / qi)
    edges = sorted({-truncation, truncation,
                    *[p for p in (x, x_prime) if -truncation < p < truncation]})
    z, w = gauss_legendre_panels(edges, order, width)
    gx, dgx = homogeneous_green(omega, eps, mu, x, z, constants)
    gxp, dgxp = homogeneous_green(omega, eps, mu, x_prime, z, constants)
    rhs = (k**2 * max(im_e, 0.0) * np.sum(w * gx * np.conj(gxp))
           + max(im_m, 0.0) * np.sum(w * dgx * np.conj(dgxp)))
    tail = math.exp(-2 * qi * truncation) if qi > 0 else 1.0
    return compare("unbounded_lnf_identity", complex(rhs), lhs, tol,
                   params={"omega": omega, "x": x, "x_prime": x_prime,
                           "truncation": truncation},
                   anchor="medium-only completeness for unbounded absorbers",
                   metadata={"tail_bound": tail, "im_kn": qi, "lhs": lhs, "rhs": rhs})


def asymptotic_amplitude_check(structure: Structure1D, omega: float, x_prime: float,
                               x_far: float, tol: float = 1e-8) -> CheckReport:
    """Far-zone amplitude of g against the opposite-side scattering mode.

    x_far to the right: g(x_far, x') exp(-ik x_far) = (i/2k) F(x'|-1);
    to the left: g(x_far, x') exp(ik x_far) = (i/2k) F(x'|+1).
    """
    xl, xr = structure.extent
    if structure.layers and xl <= x_far <= xr:
        raise DomainError("x_far must lie outside the structure extent")
    g = green(structure, omega)
    k = g.k
    if x_far > max(xr, x_prime):
        lhs = complex(g.eval(x_far, x_prime)) * np.exp(-1j * k * x_far)
        rhs = 0.5j / k * complex(g.psi_minus.field(x_prime))
        side = +1
    elif x_far < min(xl, x_prime):
        lhs = complex(g.eval(x_far, x_prime)) * np.exp(1j * k * x_far)
        rhs = 0.5j / k * complex(g.psi_plus.field(x_prime))
        side = -1
    else:
        raise DomainError("x_far must lie beyond both the structure and x_prime")
    wavelength = 2 * math.pi / k
    dist = (x_far - xr) if side > 0 else (xl - x_far)
    return compare("asymptotic_amplitude", lhs, rhs, tol,
                   params={"omega": omega, "x_prime": x_prime, "x_far": x_far,
                           "side": side},
                   anchor="far-zone Green amplitude vs scattering mode",
                   metadata={"wavelengths_beyond_extent": dist / wavelength})
