"""Independent numerical checks of the closed-form results.

Two discretizations live here.  ``fd_spectrum`` is the plain three-point
scheme on an open grid, used for textbook operators given as samples.  The
self-consistent solver works on the structured operator instead: it factors
out the indicial behaviour U = r^(L+1/2) y and discretizes the remaining
Sturm-Liouville problem with a cell-centred finite-volume scheme whose cell
integrals are exact.  That keeps second-order convergence even when L is
small or fractional, where the plain scheme degrades to O(h^(2L)).

Both reduce to a symmetric tridiagonal matrix whose eigenvalues are located
by Sturm-sequence bisection (LAPACK stebz through scipy).
"""
from __future__ import annotations

import enum
import json
import math
import threading
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import spectra
from .specfun import heun_ode_residual
from .errors import ConfigError, ConvergenceError, GridError, InvalidState, NoRootError
from .model import (EffectiveRadialProblem, SolvableFamily, SystemConfig,
                    apply_reduced_hamiltonian, build_effective_problem, case_parameters,
                    classify)

F = SolvableFamily


@dataclass(frozen=True)
class OracleSettings:
    """Every tolerance and resolution used by the oracle, in one place."""

    n_points: int = 16000
    bracket_rel: float = 0.2
    expansions: int = 3            # half-width doubled up to 2**3 = 8 times
    scan_points: int = 64
    f_tol: float = 1e-10
    max_bisections: int = 200
    verdict_rel: float = 1e-3
    exp_tail: float = 30.0         # r_max = exp_tail / decay rate
    gauss_tail: float = 8.0        # r_max = gauss_tail / sqrt(omega)
    r_max: Optional[float] = None  # fixed r_max overrides the tail policy
    residual_points: int = 4096
    residual_tail: float = 30.0
    residual_window: float = 1.0 / 50.0

    def __post_init__(self):
        if self.n_points < 256:
            raise ConfigError("n_points must be at least 256")
        if self.scan_points < 2 or self.expansions < 0:
            raise ConfigError("scan_points >= 2 and expansions >= 0 required")
        if self.r_max is not None and not self.r_max > 0:
            raise ConfigError("r_max must be positive")


DEFAULT_SETTINGS = OracleSettings()


class TargetConvention(str, enum.Enum):
    PRINTED_TARGET = "printed"     # tau = q B0 ell_eff - k^2
    POSITIVE_TARGET = "positive"   # tau = q B0 ell_eff + k^2


# ---------------------------------------------------------------------------
# plain three-point scheme


@dataclass(frozen=True)
class FdGrid:
    r_max: float
    n_points: int

    def __post_init__(self):
        if not (self.r_max > 0 and math.isfinite(self.r_max)):
            raise GridError("r_max must be positive")
        if int(self.n_points) != self.n_points or self.n_points < 256:
            raise GridError("n_points must be an integer >= 256")

    @property
    def h(self) -> float:
        return self.r_max / (self.n_points + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.h * np.arange(1, self.n_points + 1)


def _lowest(d, e, n_levels: int, vectors: bool):
    try:
        out = eigh_tridiagonal(d, e, eigvals_only=not vectors, select="i",
                               select_range=(0, n_levels - 1), lapack_driver="stebz")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"Sturm bisection failed: {exc}") from exc
    vals = out[0] if vectors else out
    if len(vals) != n_levels or not np.all(np.isfinite(vals)):
        raise ConvergenceError(f"isolated {len(vals)} of {n_levels} eigenvalues")
    return out


def fd_spectrum(W: Union[Callable, np.ndarray], grid: FdGrid, n_levels: int = 1, *,
                vectors: bool = False):
    """Lowest eigenvalues of -U'' + W U on (0, r_max) with Dirichlet ends.

    ``W`` is a callable of r or an array of samples on ``grid.nodes``.  With
    ``vectors=True`` the eigenvectors (columns) are returned as well.
    """
    if int(n_levels) != n_levels or not 1 <= n_levels <= grid.n_points:
        raise GridError("n_levels out of range")
    r = grid.nodes
    w = np.asarray(W(r) if callable(W) else W, dtype=float)
    if w.shape != r.shape:
        raise GridError("W must be sampled on the grid nodes")
    if not np.all(np.isfinite(w)):
        raise GridError("W must be finite on all nodes")
    h2 = grid.h**2
    d = 2.0 / h2 + w
    e = np.full(grid.n_points - 1, -1.0 / h2)
    return _lowest(d, e, int(n_levels), vectors)


def sign_changes(v) -> int:
    """Number of sign changes along a sampled function, ignoring exact zeros."""
    v = np.asarray(v, dtype=float)
    s = np.sign(v[v != 0])
    return int(np.count_nonzero(s[1:] != s[:-1]))


# ---------------------------------------------------------------------------
# indicial finite-volume scheme for the structured operator


def _moment(a: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Integral of r**a over [lo, hi], cellwise; midpoint rule if it diverges."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if abs(a + 1) < 1e-14:
            out = np.log(hi / lo)
        else:
            out = (hi**(a + 1) - lo**(a + 1)) / (a + 1)
        mid = 0.5 * (lo + hi)
        fallback = mid**a * (hi - lo)
    ok = np.isfinite(out) & ((lo > 0) | (a > -1))
    return np.where(ok, out, fallback)


def structured_eigenvalue(problem: EffectiveRadialProblem, E: float, r_max: float,
                          n_points: int, level: int) -> float:
    """Eigenvalue number ``level`` of -U'' + W_E U on (0, r_max), U(r_max) = 0.

    With L^2 the total 1/r^2 strength of W_E and L = sqrt(max(L^2, 0)), the
    factorization U = r^(L+1/2) y gives -(r^p y')' + r^p (W - centrifugal) y
    = eps r^p y with p = 2L + 1.  Cells are [(i-1)h, ih], h = r_max/(n+1/2);
    a negative L^2 is kept as an ordinary L^2/r^2 term with p = 1.
    """
    L2 = problem.angular_strength(E)
    L = math.sqrt(max(L2, 0.0))
    p = 2.0 * L + 1.0
    h = r_max / (n_points + 0.5)
    i = np.arange(1, n_points + 1, dtype=float)
    lo = (i - 1) * h
    hi = i * h
    w_face = hi**p
    mass = _moment(p, lo, hi)
    pot = np.zeros(n_points)
    for t in problem.regular_terms():
        c = t.coefficient(E)
        if c != 0:
            pot = pot + c * _moment(p + t.exponent, lo, hi)
    if L2 < 0:
        pot = pot + L2 * _moment(p - 2.0, lo, hi)
    d = ((w_face + np.concatenate(([0.0], w_face[:-1]))) / h + pot) / mass
    e = -(w_face[:-1] / h) / np.sqrt(mass[:-1] * mass[1:])
    return float(_lowest(d, e, level + 1, False)[level])


# ---------------------------------------------------------------------------
# self-consistent energies


def _target(problem: EffectiveRadialProblem, config: SystemConfig,
            convention: TargetConvention) -> float:
    if convention is TargetConvention.POSITIVE_TARGET:
        return problem.target + 2.0 * config.k**2
    return problem.target


def center_energy(config: SystemConfig, n_r: int, ell: int) -> float:
    """Closed-form value used to centre the search bracket."""
    return spectra.formula_value(config, n_r, ell)


def oracle_r_max(config: SystemConfig, n_r: int, ell: int, E0: Optional[float],
                 settings: OracleSettings = DEFAULT_SETTINGS) -> float:
    if settings.r_max is not None:
        return settings.r_max
    fam = classify(config)
    if fam is not F.NUMERICAL_ONLY:
        kind, rate = spectra.decay(config, n_r, ell, E0)
    elif config.omega > 0:
        kind, rate = "gauss", config.omega
    elif config.k != 0:
        kind, rate = "exp", abs(config.k)
    else:
        raise ConfigError("no tail scale for this configuration; set oracle r_max")
    if not rate > 0:
        raise NoRootError("state has no decaying tail at the reference energy")
    return settings.exp_tail / rate if kind == "exp" else settings.gauss_tail / math.sqrt(rate)


@dataclass(frozen=True)
class _Residual:
    problem: EffectiveRadialProblem
    target: float
    r_max: float
    n_points: int
    level: int

    def __call__(self, E: float) -> Optional[float]:
        """F(E) = eps_level(W_E) - tau, or None if the level is not bound."""
        if not math.isfinite(E):
            return None
        eps = structured_eigenvalue(self.problem, E, self.r_max, self.n_points, self.level)
        if not eps < self.problem.continuum_threshold(E):
            return None
        return eps - self.target


def _bisect(fun: _Residual, lo: float, f_lo: float, hi: float, f_hi: float,
            settings: OracleSettings) -> float:
    for _ in range(settings.max_bisections):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        f_mid = fun(mid)
        if f_mid is None:
            raise ConvergenceError(f"level left the bound spectrum at E={mid!r}")
        if abs(f_mid) < settings.f_tol:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    raise ConvergenceError("bisection did not reach the F tolerance")


def _scan(fun: _Residual, lo: float, hi: float, settings: OracleSettings):
    grid = np.linspace(lo, hi, settings.scan_points)
    prev = None
    for E in grid:
        val = fun(float(E))
        if val is not None and prev is not None and (val > 0) != (prev[1] > 0):
            return prev, (float(E), val)
        if val is not None and val == 0:
            return (float(E), val), (float(E), val)
        prev = (float(E), val) if val is not None else None
    return None


_MEMO: dict = {}
_MEMO_LOCK = threading.Lock()


def self_consistent_energy(config: SystemConfig, n_r: int, ell: int,
                           convention: TargetConvention = TargetConvention.PRINTED_TARGET,
                           *, bracket: Optional[tuple] = None,
                           settings: OracleSettings = DEFAULT_SETTINGS) -> float:
    """Root of F(E) = eps_{n_r}(W_E) - tau.

    The bracket defaults to the closed-form value +- ``bracket_rel``; it is
    scanned at ``scan_points`` points, widened by doubling when no sign change
    is seen, and the first sign change is refined by bisection.  Results
    (and NoRootError outcomes) are memoized on the frozen inputs.
    """
    convention = TargetConvention(convention)
    key = (config, int(n_r), int(ell), convention, bracket, settings)
    with _MEMO_LOCK:
        hit = _MEMO.get(key)
    if hit is None:
        try:
            hit = ("ok", _solve(config, int(n_r), int(ell), convention, bracket, settings))
        except (NoRootError, ConvergenceError) as exc:
            hit = ("err", exc)
        with _MEMO_LOCK:
            _MEMO[key] = hit
    if hit[0] == "err":
        raise hit[1]
    return hit[1]


def _solve(config, n_r, ell, convention, bracket, settings) -> float:
    if n_r < 0:
        raise ConfigError("n_r must be nonnegative")
    problem = build_effective_problem(config, ell)
    if bracket is None:
        if classify(config) is F.NUMERICAL_ONLY:
            raise ConfigError("a search bracket is required for numerical-only configurations")
        E0 = center_energy(config, n_r, ell)
        if not math.isfinite(E0):
            raise NoRootError("closed form undefined; no bracket centre")
        half = settings.bracket_rel * abs(E0) if E0 != 0 else settings.bracket_rel
    else:
        lo, hi = (float(v) for v in bracket)
        if not lo < hi:
            raise ConfigError("bracket must satisfy lo < hi")
        E0, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    r_max = oracle_r_max(config, n_r, ell, E0, settings)
    fun = _Residual(problem, _target(problem, config, convention), r_max,
                    settings.n_points, n_r)
    for m in range(settings.expansions + 1):
        width = half * 2**m
        found = _scan(fun, E0 - width, E0 + width, settings)
        if found is not None:
            (a, fa), (b, fb) = found
            if a == b:
                return a
            return _bisect(fun, a, fa, b, fb, settings)
    raise NoRootError(
        f"F(E) has no sign change in [{E0 - half * 2**settings.expansions!r}, "
        f"{E0 + half * 2**settings.expansions!r}] under the {convention.value} target")


def clear_cache(settings: Optional[OracleSettings] = None) -> None:
    """Forget memoized energies (only those computed with ``settings`` if given)."""
    with _MEMO_LOCK:
        if settings is None:
            _MEMO.clear()
        else:
            for key in [k for k in _MEMO if k[-1] == settings]:
                del _MEMO[key]


# ---------------------------------------------------------------------------
# residuals of the analytic pairs


def k2_sign_for(config: SystemConfig) -> float:
    """Sign of k^2 in the radial equation under which the closed form holds."""
    return 1.0 if classify(config) is F.CASE_B else -1.0


def residual_grid(config: SystemConfig, n_r: int, ell: int, E: float,
                  settings: OracleSettings = DEFAULT_SETTINGS) -> np.ndarray:
    kind, rate = spectra.decay(config, n_r, ell, E)
    if not rate > 0:
        raise InvalidState("state does not decay")
    r_max = settings.residual_tail / (rate if kind == "exp" else math.sqrt(rate))
    n = settings.residual_points
    return r_max * np.arange(1, n + 1) / n


def residual_norm(config: SystemConfig, n_r: int, ell: int, E: float,
                  variant: Optional[spectra.Variant] = None,
                  settings: OracleSettings = DEFAULT_SETTINGS) -> float:
    """Relative interior sup-norm of the radial-equation residual.

    The analytic wavefunction of (n_r, ell) is held fixed while the equation
    is evaluated at E, so a wrong E shows up directly.  Case B is checked
    with +k^2, the only sign for which its closed form solves the equation.
    """
    wf = spectra.wavefunction(config, n_r, ell, variant, checked=False)
    r = residual_grid(config, n_r, ell, wf.energy, settings)
    res = apply_reduced_hamiltonian(config, ell, r, wf.R(r), E, k2_sign=k2_sign_for(config))
    return res.relative_sup(r_min=r[-1] * settings.residual_window)


# ---------------------------------------------------------------------------
# audits


class Verdict(str, enum.Enum):
    AGREES = "agrees"
    PRINTED_DEVIATES = "printed_deviates"
    NO_BOUND_STATE = "no_bound_state"


@dataclass(frozen=True)
class Convergence:
    n_coarse: int
    n_fine: int
    e_coarse: Optional[float]
    e_fine: Optional[float]


@dataclass(frozen=True)
class AuditReport:
    """Comparison of printed, re-derived and oracle energies for one state.

    ``oracle_error`` is |E(2N) - E(N)| / 3, the Richardson estimate for a
    second-order scheme.  ``target_sign`` (case B) records whether the
    printed target -k^2 admits the state at all; ``heun`` (case E) collects
    the series-truncation facts.
    """

    case_id: str
    n_r: int
    ell: int
    as_printed: Optional[float]
    rederived: Optional[float]
    oracle_value: Optional[float]
    oracle_error: Optional[float]
    verdict: Verdict
    convergence: Convergence
    target_sign: Optional[Verdict] = None
    heun: Optional[dict] = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["verdict"] = self.verdict.value
        out["target_sign"] = self.target_sign.value if self.target_sign else None
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _finite_or_none(x) -> Optional[float]:
    return float(x) if x is not None and math.isfinite(x) else None


def heun_facts(config: SystemConfig, n_r: int, ell: int) -> dict:
    """Series facts behind the truncation of case E at n = 2 n_r.

    * ``c_next``: C_{n+1} of the series with zeta = -2 w n (nonzero unless b~ = 0)
    * ``b_tilde_sq`` against ``b_tilde_sq_required`` = 2 w (2|L~| + 1), what the
      extra condition C_{n+1} = 0 would impose for n = 1; with b~ = 0 it can
      only hold for |L~| = -1/2
    * ``c2_series`` against ``c2_closed``: C_2 from the recurrence and the
      closed expression b~^2 / (2 (2 + 2|L~|)(1 + 2|L~|)), which omits zeta C_0
    """
    E = spectra.formula_value(config, n_r, ell)
    p = case_parameters(config, ell, E)
    if p.cal_l_tilde_sq < 0:
        return {"energy": E, "valid": False}
    L = math.sqrt(p.cal_l_tilde_sq)
    n = 2 * n_r
    poly = spectra.heun_polynomial(config, n_r, ell, E, order=max(n + 1, 2))
    b, w = p.b_tilde, p.omega
    zeta = -2.0 * w * n
    c2_closed = b**2 / (2 * (2 + 2 * L) * (1 + 2 * L))
    r = residual_grid(config, n_r, ell, E)
    trunc = spectra.heun_polynomial(config, n_r, ell, E)
    ode = None
    if trunc.order >= 2:
        ode = float(np.max(heun_ode_residual(trunc, r[r > r[-1] / 50], relative=True)))
    return {
        "energy": E,
        "valid": True,
        "truncation_degree": n,
        "two_l_abs": 2 * L,
        "b_tilde": b,
        "omega": w,
        "zeta": zeta,
        "coefficients": [float(c) for c in poly.coeffs],
        "c_next": float(poly.coeffs[n + 1]),
        "c_next_nonzero": poly.coeffs[n + 1] != 0,
        "b_tilde_sq": b**2,
        "b_tilde_sq_required": 2 * w * (2 * L + 1),
        "l_abs_forced_when_b_zero": -0.5,
        "c2_series": float(poly.coeffs[2]),
        "c2_closed": c2_closed,
        "ode_relative_residual": ode,
    }


def audit(case_id: str, config: SystemConfig, n_r: int, ell: int,
          settings: OracleSettings = DEFAULT_SETTINGS) -> AuditReport:
    fam = classify(config)
    case_id = str(case_id).lower()
    if fam is F.NUMERICAL_ONLY or fam.value != case_id:
        raise ConfigError(f"configuration is {fam.value}, audit asked for case {case_id!r}")
    printed = _finite_or_none(spectra.formula_value(config, n_r, ell, spectra.Variant.AS_PRINTED))
    rederived = _finite_or_none(spectra.formula_value(config, n_r, ell, spectra.Variant.REDERIVED))
    convention = (TargetConvention.POSITIVE_TARGET if fam is F.CASE_B
                  else TargetConvention.PRINTED_TARGET)
    coarse = OracleSettings(**{**asdict(settings), "n_points": settings.n_points // 2})
    try:
        e_fine = self_consistent_energy(config, n_r, ell, convention, settings=settings)
        e_coarse = self_consistent_energy(config, n_r, ell, convention, settings=coarse)
    except NoRootError:
        e_fine = e_coarse = None
    conv = Convergence(coarse.n_points, settings.n_points, e_coarse, e_fine)
    if e_fine is None:
        verdict, err = Verdict.NO_BOUND_STATE, None
    else:
        err = abs(e_fine - e_coarse) / 3.0
        ok = printed is not None and abs(printed - e_fine) <= settings.verdict_rel * abs(e_fine)
        verdict = Verdict.AGREES if ok else Verdict.PRINTED_DEVIATES
    target_sign = None
    if fam is F.CASE_B:
        try:
            self_consistent_energy(config, n_r, ell, TargetConvention.PRINTED_TARGET,
                                   settings=settings)
            target_sign = Verdict.AGREES
        except NoRootError:
            target_sign = Verdict.PRINTED_DEVIATES
    heun = heun_facts(config, n_r, ell) if fam is F.CASE_E else None
    return AuditReport(case_id, int(n_r), int(ell), printed, rederived, e_fine, err,
                       verdict, conv, target_sign, heun)
