"""Polynomial special functions used by the closed-form radial solutions.

Associated Laguerre polynomials, terminating Kummer series 1F1(-n; beta; x)
and the polynomial (truncated) solutions of the biconfluent Heun equation

    r H'' + [(2|L| + 1) - 2 w r^2] H' - [zeta r + b] H = 0

built from its three-term recurrence.  Everything here is a pure function of
its arguments.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DomainError

MAX_DEGREE = 200

Number = Union[float, Fraction]


def _check_degree(n: int) -> None:
    if int(n) != n or n < 0:
        raise DomainError(f"degree must be a nonnegative integer, got {n!r}")
    if n > MAX_DEGREE:
        raise DomainError(f"degree {n} exceeds recurrence cap {MAX_DEGREE}")


def laguerre(n: int, alpha: float, x):
    """Associated Laguerre polynomial L_n^alpha(x).

    Uses the ascending three-term recurrence

        k L_k = (2k - 1 + alpha - x) L_{k-1} - (k - 1 + alpha) L_{k-2}

    which is stable for the moderate degrees needed here.  ``x`` may be a
    scalar or an array; the return type follows it.
    """
    _check_degree(n)
    if alpha <= -1:
        raise DomainError(f"alpha must exceed -1, got {alpha!r}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev[()] if prev.ndim == 0 else prev
    cur = 1.0 + alpha - x
    for k in range(2, n + 1):
        prev, cur = cur, ((2 * k - 1 + alpha - x) * cur - (k - 1 + alpha) * prev) / k
    return cur[()] if cur.ndim == 0 else cur


def kummer_poly(n: int, beta: float, x):
    """Terminating confluent hypergeometric series 1F1(-n; beta; x).

    Summed term by term; the ratio of consecutive terms is
    (j - n) x / ((beta + j)(j + 1)).
    """
    _check_degree(n)
    if beta == 0 or (float(beta).is_integer() and -n <= beta < 0):
        raise DomainError(f"1F1(-{n}; {beta}; x) is undefined")
    x = np.asarray(x, dtype=float)
    term = np.ones_like(x)
    total = term.copy()
    for j in range(n):
        term = term * (j - n) * x / ((beta + j) * (j + 1))
        total = total + term
    return total[()] if total.ndim == 0 else total


def heun_truncation_zeta(n: int, omega: float) -> float:
    """Value of zeta that kills the (2 w j + zeta) factor at j = n."""
    if omega <= 0:
        raise DomainError("omega must be positive")
    return -2.0 * omega * n


@dataclass(frozen=True)
class HeunParams:
    """Parameters of the biconfluent Heun equation in the form above.

    ``two_L_abs`` is 2|L|, ``b_tilde`` the Coulomb-like coupling, ``omega``
    the oscillator frequency and ``zeta`` the energy-dependent parameter.
    Fractions are accepted so coefficient generation can run exactly.
    """

    two_L_abs: Number
    b_tilde: Number
    omega: Number
    zeta: Number

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainError(f"omega must be positive, got {self.omega!r}")
        if self.two_L_abs < 0:
            raise DomainError(f"2|L| must be nonnegative, got {self.two_L_abs!r}")
        for name in ("two_L_abs", "b_tilde", "omega", "zeta"):
            if not np.isfinite(float(getattr(self, name))):
                raise DomainError(f"{name} must be finite")

    @classmethod
    def truncated(cls, two_L_abs, b_tilde, omega, n: int) -> "HeunParams":
        """Parameters with zeta fixed by the degree-n truncation condition."""
        if all(isinstance(v, Rational) for v in (two_L_abs, b_tilde, omega)):
            zeta = -2 * Fraction(omega) * n
        else:
            zeta = heun_truncation_zeta(n, float(omega))
        return cls(two_L_abs, b_tilde, omega, zeta)


@dataclass(frozen=True)
class HeunPolynomial:
    params: HeunParams
    coeffs: tuple
    truncation_degree: Optional[int] = None
    exact: bool = field(default=False)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1


def _as_exact(v) -> Fraction:
    # Fraction(float) is the exact binary value, so this never rounds.
    return Fraction(v)


def heun_coefficients(params: HeunParams, order: int, *, exact: bool = False,
                      truncation_degree: Optional[int] = None) -> HeunPolynomial:
    """Power-series coefficients C_0..C_order of the Heun solution regular at 0.

    Seeds are C_0 = 1 and C_1 = b / (1 + 2|L|); every further coefficient comes
    from

        C_{j+2} (j + 2)(j + 2|L| + 2) = b C_{j+1} + (2 w j + zeta) C_j.

    Nothing is forced to zero: if zeta = -2 w n but b != 0, C_{n+1} is in
    general nonzero and shows up here.  With ``exact=True`` the arithmetic is
    carried out in ``fractions.Fraction``.
    """
    _check_degree(order)
    conv = _as_exact if exact else float
    two_l = conv(params.two_L_abs)
    b = conv(params.b_tilde)
    w = conv(params.omega)
    zeta = conv(params.zeta)
    one = conv(1)
    if 1 + two_l == 0:
        raise DomainError("seed C_1 divides by 1 + 2|L| = 0")
    coeffs = [one]
    if order >= 1:
        coeffs.append(b / (1 + two_l))
    for j in range(0, order - 1):
        rhs = b * coeffs[j + 1] + (2 * w * j + zeta) * coeffs[j]
        coeffs.append(rhs / ((j + 2) * (j + two_l + 2)))
    return HeunPolynomial(params, tuple(coeffs), truncation_degree, exact)


def recurrence_residuals(poly: HeunPolynomial) -> list:
    """Residual of the recurrence for each stored triple, j = -1 .. order-2.

    For an exact polynomial every entry is ``Fraction(0)``.
    """
    p = poly.params
    conv = _as_exact if poly.exact else float
    two_l, b, w, zeta = (conv(v) for v in (p.two_L_abs, p.b_tilde, p.omega, p.zeta))
    c = list(poly.coeffs)
    out = []
    if len(c) >= 2:
        out.append(c[1] * (1 + two_l) - b * c[0])
    for j in range(0, len(c) - 2):
        lhs = c[j + 2] * (j + 2) * (j + two_l + 2)
        out.append(lhs - b * c[j + 1] - (2 * w * j + zeta) * c[j])
    return out


def _poly_derivs(coeffs: Sequence[float], r):
    r = np.asarray(r, dtype=float)
    h = np.zeros_like(r)
    dh = np.zeros_like(r)
    d2h = np.zeros_like(r)
    # Horner on value and both derivatives together
    for c in reversed([float(v) for v in coeffs]):
        d2h = d2h * r + 2 * dh
        dh = dh * r + h
        h = h * r + c
    return h, dh, d2h


def heun_eval(poly: HeunPolynomial, r):
    """Sum C_j r^j over the stored coefficients."""
    h, _, _ = _poly_derivs(poly.coeffs, r)
    return h[()] if h.ndim == 0 else h


def heun_ode_residual(poly: HeunPolynomial, r, *, relative: bool = False):
    """Left-hand side of the Heun equation evaluated on the stored polynomial.

    Derivatives are exact (term by term).  With ``relative=True`` the residual
    is divided by the sum of the magnitudes of the individual terms.
    """
    if len(poly.coeffs) < 3:
        raise DomainError("need at least three coefficients")
    p = poly.params
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("r must be positive")
    h, dh, d2h = _poly_derivs(poly.coeffs, r)
    two_l, b, w, zeta = (float(v) for v in (p.two_L_abs, p.b_tilde, p.omega, p.zeta))
    t1 = r * d2h
    t2 = (two_l + 1 - 2 * w * r**2) * dh
    t3 = -(zeta * r + b) * h
    res = t1 + t2 + t3
    if relative:
        scale = np.abs(t1) + np.abs(t2) + np.abs(t3)
        res = np.abs(res) / np.where(scale > 0, scale, 1.0)
    return res[()] if res.ndim == 0 else res
