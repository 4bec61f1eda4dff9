"""Closed-form energies and radial wavefunctions of the solvable families.

Family      mass       fields / potential        reduced problem
A           lam / r    none                      2D Coulomb, coupling lam E
B           lam r^2    none                      2D oscillator, frequency sqrt(-lam E)
C           lam / r^2  a + b r + c r^2           2D Coulomb, E inside the centrifugal term
D           lam / r^2  B0, Phi                   2D oscillator (Landau), E in centrifugal term
E           lam / r^2  B0, Phi, a + b r + c r^2  biconfluent Heun, truncated series

All wavefunctions are built in the U form, U = r^(L+1/2) x (decaying factor)
x (polynomial), and mapped to R = sqrt(f/r) U.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from . import specfun
from .errors import ConfigError, InvalidState
from .model import (CaseParameters, SolvableFamily, SystemConfig, case_parameters,
                    classify, mass_multiplier)

F = SolvableFamily


class Variant(str, enum.Enum):
    AS_PRINTED = "as_printed"
    REDERIVED = "rederived"


class Flag(str, enum.Enum):
    REGULAR_AT_ORIGIN = "regular_at_origin"
    SQUARE_INTEGRABLE = "square_integrable"
    QUANTIZATION_CONSISTENT = "quantization_consistent"


QUANTIZATION_TOL = 1e-10

# Lower bound on |L| under which the printed solutions are called regular.
_REGULAR_BOUND = {F.CASE_A: 0.5, F.CASE_B: 1.0, F.CASE_C: 1.0, F.CASE_D: 1.0, F.CASE_E: 1.0}


@dataclass(frozen=True)
class EnergyResult:
    value: float
    variant: Variant
    validity: frozenset
    case: SolvableFamily

    def to_dict(self) -> dict:
        return {
            "case": self.case.value,
            "value": self.value,
            "variant": self.variant.value,
            "validity": sorted(f.value for f in self.validity),
        }


def _require(config: SystemConfig, family: SolvableFamily) -> None:
    got = classify(config)
    if got is not family:
        raise ConfigError(f"configuration is {got.value}, not case {family.value}")


def _check_nr(n_r: int) -> None:
    if int(n_r) != n_r or n_r < 0:
        raise ConfigError(f"n_r must be a nonnegative integer, got {n_r!r}")


def _default_variant(family: SolvableFamily) -> Variant:
    return Variant.REDERIVED if family is F.CASE_C else Variant.AS_PRINTED


def formula_value(config: SystemConfig, n_r: int, ell: int,
                  variant: Optional[Variant] = None) -> float:
    """Closed-form energy without any admissibility checks.

    May return a value with no normalizable state behind it (or nan when the
    formula itself is undefined); :func:`energy` is the checked entry point.
    """
    fam = classify(config)
    variant = variant or _default_variant(fam)
    lam, k = config.lam, config.k
    le = config.ell_eff(ell)
    if fam is F.CASE_A:
        return (2 * k / lam) * (math.sqrt(le**2 + 1.0 / 16.0) + n_r + 0.5)
    if fam is F.CASE_B:
        return -(1.0 / lam) * (k**2 / (2 * (math.sqrt(le**2 + 0.25) + 2 * n_r + 1)))**2
    pot = config.potential
    if fam is F.CASE_C:
        kk = lam * pot.c + k**2
        if kk <= 0:
            return math.nan
        kappa = math.sqrt(kk)
        if variant is Variant.AS_PRINTED:
            return (1.0 / lam) * (le**2 + lam * pot.a + 0.25
                                  - (lam * pot.b_lin + kappa * (2 * n_r + 1)) / (4 * kk))
        return (1.0 / lam) * (le**2 + lam * pot.a + 0.25
                              - (lam * pot.b_lin / (2 * kappa) - n_r - 0.5)**2)
    if fam is F.CASE_D:
        qB0 = config.qB0
        return (1.0 / lam) * (le**2 - (le - k**2 / qB0 - 2 * n_r - 1)**2 + 0.25)
    if fam is F.CASE_E:
        qB0 = config.qB0
        return (1.0 / lam) * (le**2 - (le - (k**2 + lam * pot.c) / qB0 - 2 * n_r - 1)**2
                              + lam * pot.a + 0.25)
    raise ConfigError("no closed form for this configuration")


def angular_abs(config: SystemConfig, ell: int, E: float) -> Optional[float]:
    """|L| of the family (|l~|, |l-bar|, |cal L|, |m~| or |L~|) at energy E.

    None when the squared quantity is negative.
    """
    p = case_parameters(config, ell, E)
    sq = {F.CASE_A: p.ell_tilde_sq, F.CASE_B: p.ell_bar_sq, F.CASE_C: p.cal_l_sq,
          F.CASE_D: p.m_tilde_sq, F.CASE_E: p.cal_l_tilde_sq}[p.family]
    return math.sqrt(sq) if sq >= 0 else None


def implied_radial_number(config: SystemConfig, ell: int, E: float) -> Optional[float]:
    """Radial quantum number that E satisfies through the family's quantization.

    Case B is read with the oscillator eigenvalue +k^2, the only sign for
    which its printed spectrum describes a bound state.
    """
    fam = classify(config)
    lam, k = config.lam, config.k
    if not math.isfinite(E):
        return None
    L = angular_abs(config, ell, E)
    if L is None:
        return None
    p = case_parameters(config, ell, E)
    if fam is F.CASE_A:
        return lam * E / (2 * k) - L - 0.5 if k > 0 else None
    if fam is F.CASE_B:
        if E >= 0:
            return None
        big_omega = math.sqrt(-lam * E)
        return (k**2 / (2 * big_omega) - L - 1) / 2
    if fam is F.CASE_C:
        return p.b_tilde / (2 * p.kappa) - L - 0.5 if p.kappa > 0 else None
    if fam is F.CASE_D:
        return (p.lambda_tilde / (2 * p.omega) - L - 1) / 2
    return (p.big_lambda_tilde / (2 * p.omega) - L - 1) / 2


def quantization_consistent(config: SystemConfig, n_r: int, ell: int, E: float) -> bool:
    n_imp = implied_radial_number(config, ell, E)
    return n_imp is not None and abs(n_imp - n_r) <= QUANTIZATION_TOL * max(1.0, n_r)


def _result(config, n_r, ell, E, variant, family, flags=True) -> EnergyResult:
    if not flags:
        return EnergyResult(E, variant, frozenset(), family)
    flags = validity(config, n_r, ell, variant=variant, energy_value=E)
    return EnergyResult(E, variant, frozenset(f for f, ok in flags.items() if ok), family)


def energy_case_a(config: SystemConfig, n_r: int, ell: int, *, flags: bool = True) -> EnergyResult:
    """E = (2k/lam) [sqrt((ell - chi k)^2 + 1/16) + n_r + 1/2]."""
    _require(config, F.CASE_A)
    _check_nr(n_r)
    if config.k <= 0:
        raise InvalidState("case A needs k > 0 for a bound Coulomb-like state")
    E = formula_value(config, n_r, ell)
    return _result(config, n_r, ell, E, Variant.AS_PRINTED, F.CASE_A, flags)


def energy_case_b(config: SystemConfig, n_r: int, ell: int, *, flags: bool = True) -> EnergyResult:
    """E = -(1/lam) [k^2 / (2 (sqrt((ell - chi k)^2 + 1/4) + 2 n_r + 1))]^2."""
    _require(config, F.CASE_B)
    _check_nr(n_r)
    if config.k == 0:
        raise InvalidState("case B spectrum collapses to zero for k = 0")
    E = formula_value(config, n_r, ell)
    return _result(config, n_r, ell, E, Variant.AS_PRINTED, F.CASE_B, flags)


def energy_case_c(config: SystemConfig, n_r: int, ell: int,
                  variant: Variant = Variant.REDERIVED, *, flags: bool = True) -> EnergyResult:
    """Coulomb-like family with E inside the centrifugal strength.

    The re-derived energy comes from quantizing |cal L| = lam b / (2 kappa)
    - n_r - 1/2; the printed variant is returned verbatim for auditing.
    """
    _require(config, F.CASE_C)
    _check_nr(n_r)
    variant = Variant(variant)
    if config.lam * config.potential.c + config.k**2 <= 0:
        raise InvalidState("lam c + k^2 must be positive")
    E = formula_value(config, n_r, ell, variant)
    if variant is Variant.REDERIVED:
        kappa = math.sqrt(config.lam * config.potential.c + config.k**2)
        if config.lam * config.potential.b_lin / (2 * kappa) - n_r - 0.5 <= 0:
            raise InvalidState(f"no bound state with n_r={n_r} (|cal L| <= 0)")
    return _result(config, n_r, ell, E, variant, F.CASE_C, flags)


def _landau_like(config, n_r, ell, family, flags=True) -> EnergyResult:
    _require(config, family)
    _check_nr(n_r)
    E = formula_value(config, n_r, ell)
    if not quantization_consistent(config, n_r, ell, E):
        raise InvalidState(
            f"state (n_r={n_r}, ell={ell}) has a negative effective |m|; "
            "the printed energy has no normalizable state behind it")
    return _result(config, n_r, ell, E, Variant.AS_PRINTED, family, flags)


def energy_case_d(config: SystemConfig, n_r: int, ell: int, *, flags: bool = True) -> EnergyResult:
    """Landau-type levels, valid only when ell_eff - k^2/(q B0) - 2 n_r - 1 >= 0."""
    return _landau_like(config, n_r, ell, F.CASE_D, flags)


def energy_case_e(config: SystemConfig, n_r: int, ell: int, *, flags: bool = True) -> EnergyResult:
    """Truncated-Heun levels; independent of the linear coefficient b_lin."""
    return _landau_like(config, n_r, ell, F.CASE_E, flags)


_DISPATCH = {F.CASE_A: energy_case_a, F.CASE_B: energy_case_b,
             F.CASE_D: energy_case_d, F.CASE_E: energy_case_e}


def energy(config: SystemConfig, n_r: int, ell: int,
           variant: Optional[Variant] = None, *, flags: bool = True) -> EnergyResult:
    """Checked closed-form energy of (n_r, ell).

    With ``flags=False`` the (numeric) validity flags are skipped and the
    result carries an empty flag set; the admissibility checks still run.
    """
    fam = classify(config)
    if fam is F.CASE_C:
        return energy_case_c(config, n_r, ell, variant or Variant.REDERIVED, flags=flags)
    if fam is F.NUMERICAL_ONLY:
        raise ConfigError("no closed form for this configuration; use the oracle")
    return _DISPATCH[fam](config, n_r, ell, flags=flags)


def decay(config: SystemConfig, n_r: int, ell: int, E: Optional[float] = None):
    """('exp', rate) or ('gauss', frequency) describing the large-r tail of U."""
    fam = classify(config)
    if E is None:
        E = formula_value(config, n_r, ell)
    if fam is F.CASE_A:
        return "exp", config.k
    if fam is F.CASE_B:
        return "gauss", math.sqrt(-config.lam * E) if E < 0 else 0.0
    if fam is F.CASE_C:
        return "exp", math.sqrt(max(config.lam * config.potential.c + config.k**2, 0.0))
    if fam in (F.CASE_D, F.CASE_E):
        return "gauss", config.omega
    raise ConfigError("no closed-form tail for this configuration")


def default_r_max(config: SystemConfig, n_r: int, ell: int, E: Optional[float] = None,
                  exp_tail: float = 30.0, gauss_tail: float = 30.0) -> float:
    kind, rate = decay(config, n_r, ell, E)
    if rate <= 0:
        raise InvalidState("state does not decay at large r")
    return exp_tail / rate if kind == "exp" else gauss_tail / math.sqrt(rate)


@dataclass(frozen=True)
class RadialWavefunction:
    """Analytic radial eigenfunction with numeric L^2(dr) normalization of U.

    ``L`` is the indicial exponent (U ~ r^(L + 1/2) at the origin).
    """

    case: SolvableFamily
    n_r: int
    ell: int
    energy: float
    params: CaseParameters
    L: float
    config: SystemConfig = field(repr=False)
    _shape: Callable = field(repr=False, compare=False)
    norm: float = 1.0

    def U(self, r):
        r = np.asarray(r, dtype=float)
        out = self.norm * self._shape(r)
        return out[()] if out.ndim == 0 else out

    def R(self, r):
        r = np.asarray(r, dtype=float)
        out = np.sqrt(mass_multiplier(self.config.pdm, r) / r) * self.U(r)
        return out[()] if out.ndim == 0 else out


def _shape_function(config: SystemConfig, n_r: int, ell: int, E: float, L: float,
                    params: CaseParameters) -> Callable:
    fam = params.family
    k = config.k
    if fam is F.CASE_A:
        return lambda r: r**(L + 0.5) * np.exp(-k * r) * specfun.laguerre(n_r, 2 * L, 2 * k * r)
    if fam is F.CASE_C:
        kap = params.kappa
        return lambda r: r**(L + 0.5) * np.exp(-kap * r) * specfun.laguerre(n_r, 2 * L, 2 * kap * r)
    if fam is F.CASE_B:
        big = math.sqrt(-config.lam * E)
        return lambda r: (r**(L + 0.5) * np.exp(-big * r**2 / 2)
                          * specfun.kummer_poly(n_r, L + 1, big * r**2))
    w = params.omega
    if fam is F.CASE_D:
        return lambda r: (r**(L + 0.5) * np.exp(-w * r**2 / 2)
                          * specfun.kummer_poly(n_r, L + 1, w * r**2))
    poly = heun_polynomial(config, n_r, ell, E)
    return lambda r: r**(L + 0.5) * np.exp(-w * r**2 / 2) * specfun.heun_eval(poly, r)


def heun_polynomial(config: SystemConfig, n_r: int, ell: int, E: float,
                    order: Optional[int] = None, exact: bool = False):
    """Heun polynomial of case E truncated at degree n = 2 n_r.

    zeta is set by the truncation condition itself; with b_lin != 0 the
    series does not actually terminate there (see heun_ode_residual).
    """
    _require(config, F.CASE_E)
    p = case_parameters(config, ell, E)
    if p.cal_l_tilde_sq < 0:
        raise InvalidState("|L~|^2 < 0")
    n = 2 * n_r
    params = specfun.HeunParams.truncated(2 * math.sqrt(p.cal_l_tilde_sq), p.b_tilde,
                                          p.omega, n)
    return specfun.heun_coefficients(params, n if order is None else order, exact=exact,
                                     truncation_degree=n)


def _normalize(shape: Callable, r_end: float) -> float:
    val, _ = integrate.quad(lambda r: shape(r)**2, 0.0, r_end, limit=400)
    if not (val > 0 and math.isfinite(val)):
        raise InvalidState("wavefunction is not normalizable")
    return 1.0 / math.sqrt(val)


def wavefunction(config: SystemConfig, n_r: int, ell: int,
                 variant: Optional[Variant] = None, *, checked: bool = True) -> RadialWavefunction:
    """Radial eigenfunction of the state (n_r, ell).

    With ``checked`` (the default) the energy goes through :func:`energy`,
    so InvalidState propagates.
    """
    fam = classify(config)
    variant = variant or _default_variant(fam)
    E = energy(config, n_r, ell, variant, flags=False).value if checked else formula_value(config, n_r, ell, variant)
    params = case_parameters(config, ell, E)
    L = angular_abs(config, ell, E)
    if L is None:
        raise InvalidState("negative squared effective angular momentum")
    shape = _shape_function(config, n_r, ell, E, L, params)
    r_end = 2.0 * default_r_max(config, n_r, ell, E)
    return RadialWavefunction(fam, n_r, ell, E, params, L, config, shape,
                              _normalize(shape, r_end))


def _decade_integral(R, lo: float) -> float:
    t = np.linspace(math.log(lo), math.log(10 * lo), 201)
    r = np.exp(t)
    g = np.asarray(R(r))**2 * r * r
    return float(np.sum((g[1:] + g[:-1]) * np.diff(t)) / 2)


def square_integrable(wf: RadialWavefunction) -> bool:
    """Numeric finiteness of the norm of R with weight r dr.

    Near the origin the integrand behaves like a power of r; the integral is
    finite when successive decades shrink towards r = 0.  The tail decays
    exponentially or like a Gaussian for every closed-form family.
    """
    kind, rate = decay(wf.config, wf.n_r, wf.ell, wf.energy)
    if rate <= 0:
        return False
    inner = _decade_integral(wf.R, 1e-10)
    outer = _decade_integral(wf.R, 1e-9)
    if not (math.isfinite(inner) and math.isfinite(outer)):
        return False
    if outer == 0:
        return inner == 0
    return inner / outer < 0.999


def validity(config: SystemConfig, n_r: int, ell: int, variant: Optional[Variant] = None,
             energy_value: Optional[float] = None) -> dict:
    """Flag -> bool for the state, without raising for invalid states."""
    fam = classify(config)
    out = {f: False for f in Flag}
    if fam is F.NUMERICAL_ONLY:
        return out
    variant = variant or _default_variant(fam)
    E = formula_value(config, n_r, ell, variant) if energy_value is None else energy_value
    if not math.isfinite(E):
        return out
    try:
        L = angular_abs(config, ell, E)
    except Exception:
        return out
    out[Flag.QUANTIZATION_CONSISTENT] = quantization_consistent(config, n_r, ell, E)
    if L is None:
        return out
    out[Flag.REGULAR_AT_ORIGIN] = L >= _REGULAR_BOUND[fam]
    try:
        wf = wavefunction(config, n_r, ell, variant, checked=False)
        out[Flag.SQUARE_INTEGRABLE] = square_integrable(wf)
    except (InvalidState, ValueError, ZeroDivisionError, OverflowError):
        out[Flag.SQUARE_INTEGRABLE] = False
    return out
