"""Causal Drude-Lorentz response models and dispersion-integral checks.

A model holds two pole sets. Each pole contributes

    chi(w) = strength / (resonance**2 - w**2 - 1j * damping * w)

to the electric susceptibility (eps = 1 + chi_e) or the magnetic one
(mu = 1 + chi_m). All eta -> 0+ prescriptions in the checks are handled by
Plemelj splitting; no finite eta is ever put into a quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateInputError, DomainError
from .quadrature import QuadraturePolicy, QuadStats, eta_kernel_integral
from .report import CheckReport, compare

__all__ = [
    "PoleTerm", "ResponseModel", "ConstantResponse", "Constants",
    "QuadraturePolicy", "eval_response", "coupling_coefficients",
    "kk_check", "dispersion_suite", "model_to_flat", "model_from_flat",
    "standard_electric_model", "standard_magnetic_model", "standard_magnetodielectric_model",
    "reality_defect", "cauchy_loop", "dumps_flat", "loads_flat",
]

CHANNELS = ("electric", "inverse_mu")


@dataclass(frozen=True)
class PoleTerm:
    """One Lorentz oscillator; ``resonance = 0`` gives a Drude term."""

    strength: float
    resonance: float
    damping: float

    def __post_init__(self):
        if not self.strength >= 0:
            raise DomainError(f"pole strength must be >= 0, got {self.strength}")
        if not self.resonance >= 0:
            raise DomainError(f"pole resonance must be >= 0, got {self.resonance}")
        if not self.damping > 0:
            raise DomainError(f"pole damping must be > 0, got {self.damping}")

    def chi(self, omega):
        return self.strength / (self.resonance**2 - omega**2 - 1j * self.damping * omega)


def _pole_sum(poles: Sequence[PoleTerm], omega):
    if isinstance(omega, (float, int, complex)):
        # scalar fast path; quadrature callbacks land here
        return sum((p.chi(omega) for p in poles), 0j)
    out = np.zeros_like(np.asarray(omega, dtype=complex))
    for p in poles:
        out = out + p.chi(omega)
    return out


@dataclass(frozen=True)
class ResponseModel:
    """Electric and magnetic pole sets defining eps(w) and mu(w)."""

    electric_poles: tuple[PoleTerm, ...] = ()
    magnetic_poles: tuple[PoleTerm, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "electric_poles", tuple(self.electric_poles))
        object.__setattr__(self, "magnetic_poles", tuple(self.magnetic_poles))

    @property
    def is_vacuum(self) -> bool:
        return not self.electric_poles and not self.magnetic_poles

    def evaluate(self, omega):
        eps = 1.0 + _pole_sum(self.electric_poles, omega)
        mu = 1.0 + _pole_sum(self.magnetic_poles, omega)
        if isinstance(omega, (float, int, complex)) or np.ndim(omega) == 0:
            return complex(eps), complex(mu)
        return eps, mu

    def breakpoints(self) -> list[float]:
        """Frequencies where Im eps or Im(1/mu) peak; used to seed quadrature."""
        pts = [p.resonance for p in self.electric_poles + self.magnetic_poles]
        # for a single magnetic pole 1/mu has its resonance at sqrt(w0^2 + s)
        pts += [math.sqrt(p.resonance**2 + p.strength) for p in self.magnetic_poles]
        if len(self.magnetic_poles) > 1:
            total = sum(p.strength for p in self.magnetic_poles)
            pts += [math.sqrt(p.resonance**2 + total) for p in self.magnetic_poles]
        return sorted({x for x in pts if x > 0})

    def widths(self) -> list[float]:
        return [p.damping for p in self.electric_poles + self.magnetic_poles]


@dataclass(frozen=True)
class ConstantResponse:
    """Frequency-independent (eps, mu), for fixed-frequency layered examples.

    Not causal as a function of frequency; the dispersion checks reject it.
    """

    eps: complex = 1.0
    mu: complex = 1.0

    @property
    def is_vacuum(self) -> bool:
        return self.eps == 1 and self.mu == 1

    def evaluate(self, omega):
        if np.ndim(omega) == 0:
            return complex(self.eps), complex(self.mu)
        shape = np.shape(omega)
        return (np.full(shape, complex(self.eps)), np.full(shape, complex(self.mu)))


VACUUM = ResponseModel()


@dataclass(frozen=True)
class Constants:
    """hbar, eps0 and c; mu0 follows as 1/(eps0 c^2)."""

    hbar: float = 1.0
    eps0: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "eps0", "c"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")

    @property
    def mu0(self) -> float:
        return 1.0 / (self.eps0 * self.c**2)

    def k(self, omega):
        return omega / self.c


def standard_electric_model() -> ResponseModel:
    return ResponseModel(electric_poles=(PoleTerm(1.0, 2.0, 0.1),))


def standard_magnetic_model() -> ResponseModel:
    return ResponseModel(magnetic_poles=(PoleTerm(0.5, 1.0, 0.05),))


def standard_magnetodielectric_model() -> ResponseModel:
    return ResponseModel(electric_poles=(PoleTerm(1.0, 2.0, 0.1),),
                         magnetic_poles=(PoleTerm(0.5, 1.0, 0.05),))


def eval_response(model, omega):
    """Return (eps, mu) at a frequency in the closed upper half-plane.

    Accepts scalars or arrays. Raises DomainError if Im(omega) < 0.
    """
    if np.any(np.imag(omega) < 0):
        raise DomainError("response is evaluated only for Im(omega) >= 0")
    return model.evaluate(omega)


def coupling_coefficients(model, constants: Constants, omega):
    """Real reservoir couplings (alpha, beta) at real omega > 0.

    alpha**2 = (2 eps0 / pi) omega Im eps and
    beta**2 = (2 / (pi mu0)) omega Im(-1/mu).
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise DomainError("coupling coefficients need omega > 0")
    eps, mu = eval_response(model, w)
    im_e = np.maximum(np.imag(eps), 0.0)
    im_m = np.maximum(np.imag(-1.0 / np.asarray(mu)), 0.0)
    alpha = np.sqrt(2.0 * constants.eps0 / math.pi * w * im_e)
    beta = np.sqrt(2.0 / (math.pi * constants.mu0) * w * im_m)
    if np.ndim(omega) == 0:
        return float(alpha), float(beta)
    return alpha, beta


def _phi(model: ResponseModel, channel: str):
    if channel not in CHANNELS:
        raise DomainError(f"unknown channel {channel!r}; expected one of {CHANNELS}")
    if channel == "electric":
        return lambda w: model.evaluate(w)[0]
    return lambda w: 1.0 / model.evaluate(w)[1]


def _require_causal(model):
    if not isinstance(model, ResponseModel):
        raise DomainError("dispersion checks need a pole-based ResponseModel")


def kk_check(model: ResponseModel, channel: str, omega: float,
             policy: QuadraturePolicy | None = None) -> CheckReport:
    """Single-pole dispersion identity for phi = eps or 1/mu.

    (2/pi) * integral_0^inf t Im phi(t) / (t^2 - (omega + i0)^2) dt = phi(omega) - 1
    """
    _require_causal(model)
    policy = policy or QuadraturePolicy()
    if not omega > 0:
        raise DomainError("kk_check needs omega > 0")
    phi = _phi(model, channel)
    stats = QuadStats()
    lhs = (2.0 / math.pi) * eta_kernel_integral(
        lambda t: t * phi(t).imag, [(omega, +1)], policy, stats,
        points=model.breakpoints())
    rhs = phi(omega) - 1.0
    return compare("kk_single_pole", lhs, rhs, 1e-8,
                   params={"channel": channel, "omega": omega},
                   anchor="dispersion: single-pole fundamental integral",
                   metadata={"lhs": lhs, "rhs": rhs, **stats.as_dict()},
                   status="ok" if stats.ok else "quadrature_failure")


def _double_pole_rhs(phi, n, sigma, omega, sigma_p, omega_p):
    def phi_signed(s, w):
        v = phi(w)
        return v if s > 0 else np.conj(v)

    num = (omega ** (2 * n) * (phi_signed(sigma, omega) - 1.0)
           - omega_p ** (2 * n) * (phi_signed(sigma_p, omega_p) - 1.0))
    return num / (omega**2 - omega_p**2)


def dispersion_suite(model: ResponseModel, constants: Constants, n: int,
                     sigma: int, sigma_prime: int, omega: float, omega_prime: float,
                     policy: QuadraturePolicy | None = None,
                     tol: float = 1e-7) -> list[CheckReport]:
    """Run the two-frequency dispersion identities, one report each.

    Reports (both channels where the identity exists for both):
    ``double_pole`` (eps, 1/mu), ``alpha_sq`` and ``beta_sq`` single-pole
    coupling integrals, ``mixed_conjugate`` (eps, 1/mu), and the weighted
    ``coupling_pair`` integrals for alpha and beta.

    Raises:
        DegenerateInputError: omega == omega_prime (for either sign pair the
            closed forms degenerate or the kernel is delta-singular).
    """
    _require_causal(model)
    policy = policy or QuadraturePolicy()
    if n not in (0, 1):
        raise DomainError("n must be 0 or 1")
    if sigma not in (1, -1) or sigma_prime not in (1, -1):
        raise DomainError("sigma values must be +1 or -1")
    if not (omega > 0 and omega_prime > 0):
        raise DomainError("frequencies must be positive")
    if omega == omega_prime:
        raise DegenerateInputError(
            "coincident frequencies: closed form degenerates (sigma == sigma') "
            "or the kernel is delta-singular (sigma != sigma')")

    eps0, mu0 = constants.eps0, constants.mu0
    pts = model.breakpoints()
    base = {"n": n, "sigma": sigma, "sigma_prime": sigma_prime,
            "omega": omega, "omega_prime": omega_prime}
    reports: list[CheckReport] = []

    def run(name, anchor, channel, numerator, poles, rhs, scale=1.0):
        # a channel without poles has an exactly vanishing closed form
        if not (model.electric_poles if channel == "electric" else model.magnetic_poles):
            rhs = 0.0
        stats = QuadStats()
        lhs = scale * eta_kernel_integral(numerator, poles, policy, stats, pts)
        params = dict(base, channel=channel)
        reports.append(compare(name, lhs, rhs, tol, params=params, anchor=anchor,
                               metadata={"lhs": lhs, "rhs": rhs, **stats.as_dict()},
                               status="ok" if stats.ok else "quadrature_failure"))

    for channel in CHANNELS:
        phi = _phi(model, channel)
        run("dispersion_double_pole", "dispersion: two-pole fundamental integral",
            channel, lambda t, phi=phi: t ** (2 * n + 1) * phi(t).imag,
            [(omega, sigma), (omega_prime, sigma_prime)],
            _double_pole_rhs(phi, n, sigma, omega, sigma_prime, omega_prime),
            scale=2.0 / math.pi)

    eps_w, mu_w = model.evaluate(omega)
    eps_wp, mu_wp = model.evaluate(omega_prime)

    def alpha_sq(t):
        return 2.0 * eps0 / math.pi * t * model.evaluate(t)[0].imag

    def beta_sq(t):
        return 2.0 / (math.pi * mu0) * t * (-1.0 / model.evaluate(t)[1]).imag

    run("dispersion_alpha_sq", "dispersion: electric coupling integral", "electric",
        alpha_sq, [(omega, 1)], eps0 * (eps_w - 1.0))
    run("dispersion_beta_sq", "dispersion: magnetic coupling integral", "inverse_mu",
        beta_sq, [(omega, 1)], (1.0 - 1.0 / mu_w) / mu0)

    # mixed kernel: first factor conjugated, second carries sigma'
    for channel in CHANNELS:
        phi = _phi(model, channel)
        pw, pwp = phi(omega), phi(omega_prime)
        if sigma_prime == -1:
            rhs = (np.conj(pw) - np.conj(pwp)) / (omega + omega_prime)
        else:
            rhs = (np.conj(pw) - pwp) / (omega - omega_prime)
        run("dispersion_mixed_conjugate", "dispersion: mixed conjugate integral",
            channel,
            lambda t, phi=phi: (omega + sigma_prime * omega_prime) * t * phi(t).imag,
            [(omega, -1), (omega_prime, sigma_prime)], rhs, scale=2.0 / math.pi)

    if sigma_prime == -1:
        rhs_e = eps0 * ((omega * eps_w - omega_prime * np.conj(eps_wp))
                        / (omega - omega_prime) - 1.0)
        rhs_m = ((-omega / mu_w + omega_prime * np.conj(1.0 / mu_wp))
                 / (omega - omega_prime) + 1.0) / mu0
    else:
        rhs_e = eps0 * ((omega * eps_w + omega_prime * eps_wp)
                        / (omega + omega_prime) - 1.0)
        rhs_m = ((-omega / mu_w - omega_prime / mu_wp)
                 / (omega + omega_prime) + 1.0) / mu0
    weight = lambda t: t * t - sigma_prime * omega * omega_prime  # noqa: E731
    run("dispersion_coupling_pair", "dispersion: weighted coupling pair integral",
        "electric", lambda t: weight(t) * alpha_sq(t),
        [(omega, 1), (omega_prime, sigma_prime)], rhs_e)
    run("dispersion_coupling_pair", "dispersion: weighted coupling pair integral",
        "inverse_mu", lambda t: weight(t) * beta_sq(t),
        [(omega, 1), (omega_prime, sigma_prime)], rhs_m)
    return reports


def reality_defect(model, omegas: Iterable[float]) -> float:
    """max |conj(phi(-w)) - phi(w)| over both channels at real w."""
    worst = 0.0
    for w in omegas:
        e1, m1 = model.evaluate(w)
        e2, m2 = model.evaluate(-w)
        worst = max(worst, abs(np.conj(e2) - e1), abs(np.conj(m2) - m1))
    return worst


def cauchy_loop(model, channel: str, corners: tuple[complex, complex],
                policy: QuadraturePolicy | None = None) -> complex:
    """Contour integral of phi - 1 around an upper half-plane rectangle."""
    from .quadrature import quad_complex

    policy = policy or QuadraturePolicy()
    lo, hi = corners
    if min(lo.imag, hi.imag) <= 0:
        raise DomainError("rectangle must lie in the open upper half-plane")
    phi = _phi(model, channel)
    verts = [lo, complex(hi.real, lo.imag), hi, complex(lo.real, hi.imag), lo]
    stats = QuadStats()
    total = 0.0 + 0.0j
    for a, b in zip(verts[:-1], verts[1:]):
        d = b - a
        total += d * quad_complex(lambda s: phi(a + s * d) - 1.0, 0.0, 1.0, policy, stats)
    return total


# flat key-value serialisation

def model_to_flat(model: ResponseModel) -> dict[str, str]:
    out: dict[str, str] = {}
    for kind, poles in (("electric", model.electric_poles),
                        ("magnetic", model.magnetic_poles)):
        for i, p in enumerate(poles):
            out[f"{kind}.pole.{i}.strength"] = repr(float(p.strength))
            out[f"{kind}.pole.{i}.resonance"] = repr(float(p.resonance))
            out[f"{kind}.pole.{i}.damping"] = repr(float(p.damping))
    return out


def model_from_flat(items: Mapping[str, str]):
    """Parse ``electric.pole.<i>.<field>`` / ``magnetic.pole.<i>.<field>`` keys.

    The keys ``eps`` and ``mu`` (complex literals) instead build a
    ConstantResponse. Unknown keys raise DomainError.
    """
    keys = set(items)
    if keys & {"eps", "mu"}:
        extra = keys - {"eps", "mu"}
        if extra:
            raise DomainError(f"constant response mixes pole keys: {sorted(extra)}")
        return ConstantResponse(complex(str(items.get("eps", "1")).replace(" ", "")),
                                complex(str(items.get("mu", "1")).replace(" ", "")))
    groups: dict[tuple[str, int], dict[str, float]] = {}
    for key, value in items.items():
        parts = key.split(".")
        if (len(parts) != 4 or parts[0] not in ("electric", "magnetic")
                or parts[1] != "pole" or not parts[2].isdigit()
                or parts[3] not in ("strength", "resonance", "damping")):
            raise DomainError(f"unrecognised response key {key!r}")
        groups.setdefault((parts[0], int(parts[2])), {})[parts[3]] = float(value)
    poles: dict[str, list[PoleTerm]] = {"electric": [], "magnetic": []}
    for (kind, idx) in sorted(groups):
        fields = groups[(kind, idx)]
        missing = {"strength", "resonance", "damping"} - set(fields)
        if missing:
            raise DomainError(f"{kind}.pole.{idx} missing {sorted(missing)}")
        poles[kind].append(PoleTerm(**fields))
    return ResponseModel(tuple(poles["electric"]), tuple(poles["magnetic"]))


def dumps_flat(items: Mapping[str, str]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in items.items())


def loads_flat(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"expected 'key = value', got {line!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out
