"""
Special functions with a configurable-precision contract.

Two evaluation paths exist for every function:

* hardware double (``working_digits == 16``), vectorised over numpy arrays
  where the pipeline needs it, with a running rounding-error estimate;
* software extended precision through :mod:`mpmath` when more digits are
  requested.  Results on that path are ``mpmath.mpf``.

The exponential integral is computed here from its power series and a
continued fraction.  Gamma and modified Bessel K delegate to scipy/mpmath.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import special

from .errors import ConvergenceError, DomainError

EULER_GAMMA = 0.57721566490153286060651209008240243
SIGMA = math.exp(EULER_GAMMA)

_EPS = np.finfo(float).eps
_SERIES_MAX_TERMS = 2000
_CF_MAX_ITER = 5000


@dataclass(frozen=True)
class Precision:
    """Working precision and the accuracy a result must certify.

    Parameters
    ----------
    working_digits : int
        Decimal digits of working precision.  16 selects hardware doubles;
        anything larger switches to mpmath.
    abs_tol, rel_tol : float
        A returned value ``v`` carries an error estimate no larger than
        ``rel_tol * |v| + abs_tol``; otherwise :class:`ConvergenceError`.
    """

    working_digits: int = 16
    abs_tol: float = 0.0
    rel_tol: float = 1e-12

    def __post_init__(self):
        if int(self.working_digits) != self.working_digits or self.working_digits < 16:
            raise DomainError(f"working_digits must be an integer >= 16, got {self.working_digits}")
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise DomainError("tolerances must be nonnegative")

    @property
    def extended(self) -> bool:
        return self.working_digits > 16

    def bound(self, value) -> float:
        return self.rel_tol * abs(float(value)) + self.abs_tol

    def check(self, name: str, value, err):
        """Raise if ``err`` is not certified by the tolerance contract."""
        if self.rel_tol == 0 and self.abs_tol == 0:
            return value
        if float(err) > self.bound(value):
            raise ConvergenceError(
                f"{name}: error estimate {float(err):.3e} exceeds tolerance "
                f"{self.bound(value):.3e}; increase working_digits",
                partial=value,
                estimate=float(err),
            )
        return value


DOUBLE = Precision()


# ---------------------------------------------------------------------------
# exponential integral

def _ei_series_double(y: float):
    # Ei(y) = gamma + ln|y| + sum y^n / (n n!)
    term = 1.0
    total = 0.0
    mag = 0.0
    for n in range(1, _SERIES_MAX_TERMS):
        term *= y / n
        contrib = term / n
        total += contrib
        mag += abs(contrib)
        if abs(contrib) <= _EPS * abs(total) * 1e-2:
            break
    else:
        raise ConvergenceError("Ei series did not converge", partial=total)
    value = EULER_GAMMA + math.log(abs(y)) + total
    err = 4 * _EPS * (mag + EULER_GAMMA + abs(math.log(abs(y))))
    return value, err


def _e1_cf_double(z: float):
    # modified Lentz on E1(z) = e^-z / (z+1- 1/(z+3- 4/(z+5- ...)))
    tiny = 1e-300
    b = z + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAX_ITER):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) <= _EPS:
            value = h * math.exp(-z)
            return value, 4 * i * _EPS * abs(value)
    raise ConvergenceError("E1 continued fraction did not converge", partial=h * math.exp(-z))


def _ei_series_mp(y):
    term = mpmath.mpf(1)
    total = mpmath.mpf(0)
    eps = mpmath.eps
    for n in range(1, 20 * _SERIES_MAX_TERMS):
        term *= y / n
        contrib = term / n
        total += contrib
        if abs(contrib) <= eps * abs(total):
            return mpmath.euler + mpmath.log(abs(y)) + total
    raise ConvergenceError("Ei series did not converge", partial=total)


def _e1_cf_mp(z):
    tiny = mpmath.mpf(10) ** (-(mpmath.mp.dps + 50))
    b = z + 1
    c = 1 / tiny
    d = 1 / b
    h = d
    for i in range(1, 50 * _CF_MAX_ITER):
        an = -mpmath.mpf(i * i)
        b += 2
        d = 1 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1) <= mpmath.eps:
            return h * mpmath.exp(-z)
    raise ConvergenceError("E1 continued fraction did not converge", partial=h * mpmath.exp(-z))


def exp_integral_Ei(y, p: Precision = DOUBLE):
    """Exponential integral ``Ei(y) = -int_{-y}^inf e^{-t}/t dt``.

    In double precision the power series is used for ``|y| <= 1`` (and all
    positive ``y``); for ``y < -1`` the continued fraction of ``E1(-y)``
    avoids the cancellation the series suffers there.  With extended
    precision the series is used up to ``|y| = 20`` with enough guard digits
    to absorb the cancellation, and the continued fraction beyond.
    """
    if y == 0:
        raise DomainError("Ei has a logarithmic singularity at y = 0")
    if p.extended:
        y_mp = mpmath.mpf(y)
        guard = int(abs(float(y)) / math.log(10)) + 10 if abs(y) <= 20 else 10
        with mpmath.workdps(p.working_digits + guard):
            if y_mp > 0 or abs(y_mp) <= 20:
                value = _ei_series_mp(y_mp)
            else:
                value = -_e1_cf_mp(-y_mp)
        value = +value
        return p.check("Ei", value, abs(value) * mpmath.mpf(10) ** (-p.working_digits + 1))
    y = float(y)
    if y > 0 or abs(y) <= 1.0:
        value, err = _ei_series_double(y)
    else:
        e1, err = _e1_cf_double(-y)
        value = -e1
    return p.check("Ei", value, err)


def ei_series_terms(y: float, n_terms: int) -> float:
    """Plain partial sum of the power series, for use as a reference."""
    total = 0.0
    term = 1.0
    for n in range(1, n_terms + 1):
        term *= y / n
        total += term / n
    return EULER_GAMMA + math.log(abs(y)) + total


def ein(z):
    """Entire exponential integral ``Ein(z) = int_0^z (1 - e^-t)/t dt``.

    Vectorised, for real ``z >= 0``.  ``Ei(-z) = gamma + ln z - Ein(z)``;
    the constraint profile depends on ``Ein`` only, which keeps small
    momenta free of the ``ln z`` cancellation.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise DomainError("ein is implemented for z >= 0 only")
    out = np.empty_like(z)
    small = z < 2.0
    if np.any(small):
        zs = z[small]
        term = zs.copy()
        acc = zs.copy()
        for n in range(1, 80):
            term = -term * zs * n / ((n + 1) ** 2)
            acc = acc + term
            if np.all(np.abs(term) <= 1e-18 * np.maximum(np.abs(acc), 1e-300)):
                break
        out[small] = acc
    large = ~small
    if np.any(large):
        zl = z[large]
        out[large] = np.log(zl) + EULER_GAMMA + _e1_cf_vec(zl)
    return out


def _e1_cf_vec(z: np.ndarray) -> np.ndarray:
    # vectorised Lentz; all z >= 2 here so ~60 iterations suffice
    tiny = 1e-300
    b = z + 1.0
    c = np.full_like(z, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    live = np.ones(z.shape, dtype=bool)
    for i in range(1, 400):
        an = -float(i * i)
        b = b + 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        # elements freeze once converged so rounding jitter elsewhere cannot stall the loop
        h = np.where(live, h * delta, h)
        live &= np.abs(delta - 1.0) > _EPS
        if not live.any():
            break
    else:
        raise ConvergenceError("vectorised E1 continued fraction did not converge")
    return h * np.exp(-z)


def ein_mp(z):
    """Extended-precision ``Ein(z)`` at the current mpmath precision."""
    z = mpmath.mpf(z)
    if z < 0:
        raise DomainError("ein_mp is implemented for z >= 0 only")
    if z == 0:
        return mpmath.mpf(0)
    if z <= 20:
        guard = int(float(z) / math.log(10)) + 10
        with mpmath.workdps(mpmath.mp.dps + guard):
            term = z
            acc = z
            n = 1
            while True:
                term = -term * z * n / ((n + 1) ** 2)
                acc += term
                n += 1
                if abs(term) <= mpmath.eps * abs(acc):
                    break
        return +acc
    return mpmath.log(z) + mpmath.euler + _e1_cf_mp(z)


# ---------------------------------------------------------------------------
# gamma and modified Bessel K

def _is_pole(x) -> bool:
    return float(x) <= 0 and float(x) == math.floor(float(x))


def gamma_fn(x, p: Precision = DOUBLE):
    """Euler gamma function."""
    if _is_pole(x):
        raise DomainError(f"gamma has a pole at {x}")
    if p.extended:
        with mpmath.workdps(p.working_digits + 5):
            value = mpmath.gamma(mpmath.mpf(x))
        return +value
    value = float(special.gamma(float(x)))
    return p.check("gamma", value, 8 * _EPS * abs(value))


def bessel_K(nu, x, p: Precision = DOUBLE):
    """Modified Bessel function of the second kind ``K_nu(x)`` for ``x > 0``."""
    if x <= 0:
        raise DomainError("bessel_K requires x > 0")
    if p.extended:
        with mpmath.workdps(p.working_digits + 5):
            value = mpmath.besselk(mpmath.mpf(nu), mpmath.mpf(x))
        return +value
    value = float(special.kv(float(nu), float(x)))
    return p.check("bessel_K", value, 32 * _EPS * abs(value))


def bessel_K_vec(nu: float, x) -> np.ndarray:
    """Vectorised double-precision ``K_nu(x)``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("bessel_K requires x > 0")
    return special.kv(nu, x)


def euler_gamma_and_sigma(p: Precision = DOUBLE):
    """Return Euler's constant and ``sigma = exp(gamma)``."""
    if p.extended:
        with mpmath.workdps(p.working_digits + 5):
            g = +mpmath.euler
            s = mpmath.exp(g)
        return +g, +s
    return EULER_GAMMA, SIGMA
