"""Physical configuration and the reduced radial problem.

Units are hbar = 2 m0 = 1 throughout.  The metric of the screw dislocation,

    ds^2 = dr^2 + r^2 dphi^2 + (dz + chi dphi)^2,    det g = r^2,

together with the ansatz psi = exp(i ell phi) exp(i k z) R(r) and the
substitution R = sqrt(f / r) U turns the position-dependent-mass problem with
f(r) = lam r^sigma into

    -U'' + W_E(r) U = tau U,

    W_E(r) = (s - 1/4) / r^2 + (q B0 / 2)^2 r^2 - lam r^sigma (E - V(r)),
    s      = ell_eff^2 + sigma^2 / 16,  ell_eff = ell - chi k - q Phi / (2 pi),
    tau    = q B0 ell_eff - k^2.

Because E multiplies f(r), W depends (affinely) on the energy and the
eigenvalue problem has to be solved self-consistently.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, DomainError, GridError

# Fixed geometric facts of the dislocation metric.
METRIC_DETERMINANT = "r**2"
TWO_PI = 2.0 * math.pi


class SolvableFamily(str, enum.Enum):
    CASE_A = "a"        # sigma = -1, free, uncharged
    CASE_B = "b"        # sigma = 2, free, uncharged
    CASE_C = "c"        # sigma = -2, uncharged, V = a + b r + c r^2
    CASE_D = "d"        # sigma = -2, magnetic field, free
    CASE_E = "e"        # sigma = -2, magnetic field and potential
    NUMERICAL_ONLY = "numerical"


@dataclass(frozen=True)
class PdmProfile:
    lam: float = 1.0
    sigma: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ConfigError(f"lambda must be positive and finite, got {self.lam!r}")
        if not math.isfinite(self.sigma):
            raise ConfigError("sigma must be finite")


@dataclass(frozen=True)
class DislocationConfig:
    chi: float = 0.0
    burgers: Optional[float] = None

    def __post_init__(self):
        if self.burgers is not None:
            expected = self.burgers / TWO_PI
            if abs(self.chi - expected) > 2 * np.spacing(max(abs(expected), 1e-300)):
                raise ConfigError("chi must equal burgers / (2 pi)")

    @classmethod
    def from_burgers(cls, burgers: float) -> "DislocationConfig":
        return cls(chi=burgers / TWO_PI, burgers=burgers)


@dataclass(frozen=True)
class GaugeConfig:
    q: float = 1.0
    B0: float = 0.0
    phi_AB: float = 0.0

    def __post_init__(self):
        for name in ("q", "B0", "phi_AB"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")

    @property
    def omega(self) -> float:
        return self.q * self.B0 / 2.0

    @property
    def ab_shift(self) -> float:
        return self.q * self.phi_AB / TWO_PI


@dataclass(frozen=True)
class PotentialConfig:
    """V(r) = a + b_lin r + c r^2 (b_lin is the linear coefficient, not Burgers)."""

    a: float = 0.0
    b_lin: float = 0.0
    c: float = 0.0

    def __post_init__(self):
        for name in ("a", "b_lin", "c"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")

    @property
    def is_zero(self) -> bool:
        return self.a == 0 and self.b_lin == 0 and self.c == 0


@dataclass(frozen=True)
class SystemConfig:
    pdm: PdmProfile = field(default_factory=PdmProfile)
    dislocation: DislocationConfig = field(default_factory=DislocationConfig)
    gauge: Optional[GaugeConfig] = None
    potential: Optional[PotentialConfig] = None
    k: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.k):
            raise ConfigError("k must be finite")

    @property
    def lam(self) -> float:
        return self.pdm.lam

    @property
    def sigma(self) -> float:
        return self.pdm.sigma

    @property
    def chi(self) -> float:
        return self.dislocation.chi

    @property
    def ab_shift(self) -> float:
        return self.gauge.ab_shift if self.gauge is not None else 0.0

    @property
    def qB0(self) -> float:
        return self.gauge.q * self.gauge.B0 if self.gauge is not None else 0.0

    @property
    def omega(self) -> float:
        return self.gauge.omega if self.gauge is not None else 0.0

    def ell_eff(self, ell: int) -> float:
        """The single combination ell - chi k - q Phi / (2 pi)."""
        return ell - self.chi * self.k - self.ab_shift

    def with_axis(self, axis: str, value: float) -> "SystemConfig":
        """Copy with one sweepable parameter replaced."""
        if axis == "chi":
            return replace(self, dislocation=DislocationConfig(chi=value))
        if axis in ("B0", "phi_AB"):
            if self.gauge is None:
                raise ConfigError(f"axis {axis} needs a [gauge] section")
            return replace(self, gauge=replace(self.gauge, **{axis: value}))
        if axis in ("a", "b_lin", "c"):
            if self.potential is None:
                raise ConfigError(f"axis {axis} needs a [potential] section")
            return replace(self, potential=replace(self.potential, **{axis: value}))
        if axis == "k":
            return replace(self, k=value)
        raise ConfigError(f"unknown axis {axis!r}")


def mass_multiplier(pdm: PdmProfile, r):
    """f(r) = lam r^sigma."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("r must be positive")
    out = pdm.lam * r**pdm.sigma
    return out[()] if out.ndim == 0 else out


def _log_derivatives(pdm: PdmProfile, r):
    # f'/f and f''/f for the power law
    s = pdm.sigma
    return s / r, s * (s - 1.0) / r**2


def mass_term(pdm: PdmProfile, r):
    """M(r) = 7/16 (f'/f)^2 - 1/4 (f''/f + f'/(r f)).

    Evaluated from the derivatives of f, not from the simplified power-law
    result 3 sigma^2 / (16 r^2), so the two can be checked against each other.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("r must be positive")
    d1, d2 = _log_derivatives(pdm, r)
    out = 7.0 / 16.0 * d1**2 - 0.25 * (d2 + d1 / r)
    return out[()] if out.ndim == 0 else out


def classify(config: SystemConfig) -> SolvableFamily:
    """Assign a configuration to one of the closed-form families.

    A gauge section with q B0 = 0 is not magnetic; a pure Aharonov-Bohm flux
    then only shifts ell_eff and the uncharged families still apply.  Magnetic
    configurations with q B0 < 0 are left to the numerical path.
    """
    sigma = config.sigma
    magnetic = config.qB0 != 0
    free = config.potential is None or config.potential.is_zero
    if sigma == -1.0 and not magnetic and free:
        return SolvableFamily.CASE_A
    if sigma == 2.0 and not magnetic and free:
        return SolvableFamily.CASE_B
    if sigma == -2.0:
        if not magnetic and config.potential is not None:
            return SolvableFamily.CASE_C
        if magnetic and config.qB0 > 0:
            return SolvableFamily.CASE_E if config.potential is not None else SolvableFamily.CASE_D
    return SolvableFamily.NUMERICAL_ONLY


def linear_sign(config: SystemConfig) -> float:
    """Sign with which b_lin enters the reduced equation.

    The sigma = -2 uncharged family is taken in its printed reduced form, in
    which the linear part of the potential produces an attractive -lam b / r
    Coulomb term (bound states need lam b > 0).  Everywhere else the linear
    term enters as written in V(r) = a + b r + c r^2.
    """
    return -1.0 if classify(config) is SolvableFamily.CASE_C else 1.0


def potential_value(config: SystemConfig, r):
    """V(r) as it enters the radial equation (see :func:`linear_sign`)."""
    r = np.asarray(r, dtype=float)
    p = config.potential
    if p is None:
        return np.zeros_like(r)
    return p.a + linear_sign(config) * p.b_lin * r + p.c * r**2


@dataclass(frozen=True)
class PowerTerm:
    """Term (c0 + cE * E) r^exponent of the effective potential."""

    c0: float
    cE: float
    exponent: float

    def coefficient(self, E: float) -> float:
        return self.c0 + self.cE * E

    def __call__(self, r, E: float):
        return self.coefficient(E) * np.asarray(r, dtype=float) ** self.exponent


@dataclass(frozen=True)
class EffectiveRadialProblem:
    """-U'' + W_E U = target with W_E = (s - 1/4)/r^2 + sum of power terms.

    E-independent constants of W are folded into ``target``, so for the
    closed-form families ``target`` is -k^2, -(lam c + k^2), the Landau
    constant lambda~ or Lambda~ = lambda~ - lam c.
    """

    centrifugal: float
    power_terms: tuple
    target: float
    energy_embedding: bool

    def angular_strength(self, E: float) -> float:
        """Total 1/r^2 strength L^2 such that W contains (L^2 - 1/4)/r^2."""
        total = self.centrifugal
        for t in self.power_terms:
            if t.exponent == -2:
                total = total + t.coefficient(E)
        return total

    def regular_terms(self):
        return tuple(t for t in self.power_terms if t.exponent != -2)

    def potential(self, r, E: float):
        r = np.asarray(r, dtype=float)
        out = (self.centrifugal - 0.25) / r**2
        for t in self.power_terms:
            out = out + t(r, E)
        return out

    def continuum_threshold(self, E: float) -> float:
        """lim W_E(r) for r -> infinity; bound states must lie below it."""
        best_exp = None
        best = 0.0
        const = 0.0
        for t in self.power_terms:
            c = t.coefficient(E)
            if c == 0:
                continue
            if t.exponent == 0:
                const += c
            elif t.exponent > 0 and (best_exp is None or t.exponent > best_exp):
                best_exp, best = t.exponent, c
        if best_exp is not None:
            return math.copysign(math.inf, best)
        return const


def build_effective_problem(config: SystemConfig, ell: int) -> EffectiveRadialProblem:
    """Collect the reduced radial operator for angular quantum number ``ell``."""
    lam, sigma = config.lam, config.sigma
    if lam <= 0:
        raise ConfigError("lambda must be positive")
    ell_eff = config.ell_eff(ell)
    s = ell_eff**2 + sigma**2 / 16.0
    # -lam r^sigma (E - V) = -lam E r^sigma + lam a r^sigma + lam b r^(sigma+1) + lam c r^(sigma+2)
    terms: dict = {}

    def add(exponent, c0, cE):
        old = terms.get(exponent, (0.0, 0.0))
        terms[exponent] = (old[0] + c0, old[1] + cE)

    add(sigma, 0.0, -lam)
    pot = config.potential
    if pot is not None:
        if pot.a != 0:
            add(sigma, lam * pot.a, 0.0)
        if pot.b_lin != 0:
            add(sigma + 1.0, linear_sign(config) * lam * pot.b_lin, 0.0)
        if pot.c != 0:
            add(sigma + 2.0, lam * pot.c, 0.0)
    omega = config.omega
    if omega != 0:
        add(2.0, omega**2, 0.0)

    landau = config.qB0 * ell_eff
    target = landau - config.k**2
    power_terms = []
    for exponent in sorted(terms):
        c0, cE = terms[exponent]
        if exponent == 0 and cE == 0:
            target = target - c0
            continue
        if c0 == 0 and cE == 0:
            continue
        power_terms.append(PowerTerm(c0, cE, float(exponent)))
    return EffectiveRadialProblem(s, tuple(power_terms), target,
                                  any(t.cE != 0 for t in power_terms))


@dataclass(frozen=True)
class CaseParameters:
    """Derived symbols of the closed-form families.

    Fields not used by a family are None.  ``*_sq`` hold the squared
    effective angular strengths and may be negative for unphysical E.
    """

    family: SolvableFamily
    ell_eff: float
    ell_tilde_sq: Optional[float] = None      # sigma = -1
    ell_bar_sq: Optional[float] = None        # sigma = 2
    cal_l_sq: Optional[float] = None          # sigma = -2, uncharged
    m_tilde_sq: Optional[float] = None        # sigma = -2, charged
    cal_l_tilde_sq: Optional[float] = None    # sigma = -2, charged with V
    a_tilde: Optional[float] = None
    b_tilde: Optional[float] = None
    omega: Optional[float] = None
    kappa: Optional[float] = None
    lambda_tilde: Optional[float] = None
    big_lambda_tilde: Optional[float] = None
    zeta: Optional[float] = None


def case_parameters(config: SystemConfig, ell: int, E: float) -> CaseParameters:
    fam = classify(config)
    if fam is SolvableFamily.NUMERICAL_ONLY:
        raise DomainError("no closed-form family for this configuration")
    lam, k = config.lam, config.k
    le = config.ell_eff(ell)
    if fam is SolvableFamily.CASE_A:
        return CaseParameters(fam, le, ell_tilde_sq=le**2 + 1.0 / 16.0)
    if fam is SolvableFamily.CASE_B:
        return CaseParameters(fam, le, ell_bar_sq=le**2 + 0.25)
    pot = config.potential or PotentialConfig()
    if fam is SolvableFamily.CASE_C:
        kk = lam * pot.c + k**2
        if kk < 0:
            raise DomainError("lam c + k^2 < 0: kappa is imaginary")
        return CaseParameters(
            fam, le,
            cal_l_sq=le**2 - lam * (E - pot.a) + 0.25,
            a_tilde=lam * pot.a, b_tilde=lam * pot.b_lin, kappa=math.sqrt(kk))
    omega = config.omega
    lambda_tilde = config.qB0 * le - k**2
    m_tilde_sq = le**2 - lam * E + 0.25
    if fam is SolvableFamily.CASE_D:
        return CaseParameters(fam, le, m_tilde_sq=m_tilde_sq, omega=omega,
                              lambda_tilde=lambda_tilde)
    a_t = lam * pot.a
    big_lambda = lambda_tilde - lam * pot.c
    l_sq = m_tilde_sq + a_t
    zeta = 2 * omega * (math.sqrt(l_sq) + 1) - big_lambda if l_sq >= 0 else None
    return CaseParameters(fam, le, m_tilde_sq=m_tilde_sq, cal_l_tilde_sq=l_sq,
                          a_tilde=a_t, b_tilde=lam * pot.b_lin, omega=omega,
                          lambda_tilde=lambda_tilde, big_lambda_tilde=big_lambda,
                          zeta=zeta)


# Centered 8th-order stencils (offsets -4..4).
_D1 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
_D2 = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])
_HALF = 4


@dataclass(frozen=True)
class RadialResidual:
    """Pointwise residual of the R-equation on the stencil-valid nodes.

    ``scale`` is |R''| + |P R'| + |Q R| at each node, the natural yardstick
    for a relative residual.
    """

    r: np.ndarray
    values: np.ndarray
    scale: np.ndarray

    def relative_sup(self, r_min: float = 0.0, floor: float = 1e-30) -> float:
        keep = (self.r >= r_min) & (self.scale > floor * self.scale.max())
        if not np.any(keep):
            raise GridError("empty residual window")
        return float(np.max(np.abs(self.values[keep]) / self.scale[keep]))


def apply_reduced_hamiltonian(config: SystemConfig, ell: int, r, R, E: float, *,
                              k2_sign: float = -1.0) -> RadialResidual:
    """Residual of the full radial equation in R (before R = sqrt(f/r) U).

        R'' + (1/r - f'/f) R' + Q R,
        Q = -ell_eff^2/r^2 + q B0 ell_eff - (q B0)^2 r^2 / 4 + M(r) - k^2 + f (E - V)

    Derivatives are taken with 8th-order centered differences, so the
    residual measures whether (E, R) solves the equation independently of the
    reduction to the U form.  ``k2_sign = +1`` replaces -k^2 by +k^2, the
    target under which the sigma = 2 spectrum is consistent.
    """
    r = np.asarray(r, dtype=float)
    R = np.asarray(R, dtype=float)
    if r.ndim != 1 or r.shape != R.shape:
        raise GridError("r and R must be 1-d arrays of equal length")
    if r.size < 64:
        raise GridError("at least 64 samples required")
    if np.any(r <= 0):
        raise GridError("grid must lie in r > 0")
    h = np.diff(r)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise GridError("grid must be uniform")
    h = float(h[0])
    n = r.size
    idx = np.arange(_HALF, n - _HALF)
    win = np.lib.stride_tricks.sliding_window_view(R, 2 * _HALF + 1)
    d1 = win @ _D1 / h
    d2 = win @ _D2 / h**2
    rr = r[idx]
    Rc = R[idx]
    fp_f, _ = _log_derivatives(config.pdm, rr)
    le = config.ell_eff(ell)
    qB0 = config.qB0
    f = mass_multiplier(config.pdm, rr)
    Q = (-le**2 / rr**2 + qB0 * le - qB0**2 * rr**2 / 4.0
         + mass_term(config.pdm, rr) + k2_sign * config.k**2
         + f * (E - potential_value(config, rr)))
    P = 1.0 / rr - fp_f
    t1, t2, t3 = d2, P * d1, Q * Rc
    return RadialResidual(rr, t1 + t2 + t3, np.abs(t1) + np.abs(t2) + np.abs(t3))
