"""
Real-space smearing kernels of the quasi-local map ``V``.

In momentum space ``V`` multiplies ``phi(k)`` by ``S(k) = sqrt(alpha/|k|)``
and ``pi(k)`` by ``1/S(k)``.  The kernels are their Fourier transforms

    mu(x) = (2 pi)^(-1/2) int dk e^{ikx} S(k).

Neither transform converges, since ``S ~ sqrt(L/|k|)`` at large ``|k|``.
The symbol is therefore split as ``S = s(k) + r(k)``, where the subtractor
``s = (1 + k^2/L^2)^(-1/4)`` (``^(+1/4)`` for ``pi``) has a closed-form
transform in terms of ``K_{1/4}`` (``K_{3/4}``).  The remainder ``r``
decays like ``|k|^(-5/2)`` (``|k|^(-3/2)``) and is transformed numerically.
Panel Gauss-Legendre quadrature covers ``[0, K]`` and the part beyond ``K``
is summed in closed form from the asymptotic series of ``r``.

Kernels scale as ``mu_L(x) = L mu_1(L x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import mpmath
import numpy as np
from scipy import special

from .errors import AccuracyError, ConvergenceError, DomainError, ExtrapolationError, ResolutionError
from .profiles import ConstraintProfile
from .quadrature import QuadConfig, geometric_edges, panel_rule, power_tail_at_zero, power_tail_vec
from .specfun import DOUBLE, SIGMA, Precision, bessel_K, bessel_K_vec, gamma_fn

SQRT_2PI = math.sqrt(2.0 * math.pi)
_EPS = np.finfo(float).eps


class KernelKind(str, Enum):
    MU_PHI = "mu_phi"
    MU_PI = "mu_pi"


def _kind(kind) -> KernelKind:
    if isinstance(kind, KernelKind):
        return kind
    aliases = {"phi": "mu_phi", "pi": "mu_pi", "phi_symbol": "mu_phi", "pi_symbol": "mu_pi"}
    return KernelKind(aliases.get(kind, kind))


# ---------------------------------------------------------------------------
# momentum symbols

@dataclass(frozen=True)
class MomentumSymbol:
    """``phi`` or ``pi`` symbol of ``V`` with its subtractor and remainder."""

    kind: KernelKind
    profile: ConstraintProfile

    def __post_init__(self):
        object.__setattr__(self, "kind", _kind(self.kind))

    @property
    def lam(self) -> float:
        return self.profile.lam

    @property
    def _sign(self) -> int:
        return 1 if self.kind is KernelKind.MU_PHI else -1

    def value(self, k):
        r = np.asarray(self.profile.ratio(k), dtype=float)
        return np.sqrt(r) if self._sign > 0 else 1.0 / np.sqrt(r)

    def subtractor(self, k):
        q = np.asarray(k, dtype=float) / self.lam
        return (1.0 + q * q) ** (-0.25 * self._sign)

    def remainder(self, k):
        return self.value(k) - self.subtractor(k)

    def tail_series(self, n_terms: int):
        """``r(L q) ~ sum_n c_n q^(-p_n)`` for product-class profiles."""
        b = 0.25 * self._sign
        coeffs, powers = [], []
        for n in range(1, n_terms + 1):
            coeffs.append(-float(special.binom(-b, n)))
            powers.append(2 * n + 0.5 * self._sign)
        return coeffs, powers

    def remainder_mp(self, k):
        """Extended-precision remainder at the current mpmath precision."""
        if self.profile.alpha_mp is None:
            raise DomainError("profile has no extended-precision evaluation")
        k = mpmath.mpf(k)
        ratio = self.profile.alpha_mp(k) / abs(k)
        q = k / self.lam
        if self._sign > 0:
            return mpmath.sqrt(ratio) - (1 + q * q) ** mpmath.mpf(-0.25)
        return 1 / mpmath.sqrt(ratio) - (1 + q * q) ** mpmath.mpf(0.25)


def symbol(kind, profile: ConstraintProfile) -> MomentumSymbol:
    return MomentumSymbol(_kind(kind), profile)


# ---------------------------------------------------------------------------
# singular (closed-form) part

_C_PHI = 2.0 ** 0.75 / special.gamma(0.25)
_C_PI = 2.0 ** 1.25 / special.gamma(-0.25)


def singular_kernel(kind, x: float, lam: float = 1.0, p: Precision = DOUBLE):
    """Closed-form transform of the subtractor at a nonzero ``x``.

    ``mu_phi^(1) = L 2^(3/4) K_{1/4}(|Lx|) / (Gamma(1/4) |Lx|^(1/4))`` and
    ``mu_pi^(1) = L 2^(5/4) K_{3/4}(|Lx|) / (Gamma(-1/4) |Lx|^(3/4))``.
    """
    kind = _kind(kind)
    if x == 0:
        raise DomainError("singular kernel diverges at x = 0; use a pairing instead")
    if not lam > 0:
        raise DomainError("lambda must be positive")
    if p.extended:
        with mpmath.workdps(p.working_digits + 5):
            xi = abs(mpmath.mpf(x)) * lam
            if kind is KernelKind.MU_PHI:
                v = 2 ** mpmath.mpf(0.75) * bessel_K(0.25, xi, p) / (gamma_fn(0.25, p) * xi ** mpmath.mpf(0.25))
            else:
                v = 2 ** mpmath.mpf(1.25) * bessel_K(0.75, xi, p) / (gamma_fn(-0.25, p) * xi ** mpmath.mpf(0.75))
            return +(lam * v)
    xi = abs(float(x)) * lam
    if kind is KernelKind.MU_PHI:
        return lam * 2.0 ** 0.75 * bessel_K(0.25, xi, p) / (gamma_fn(0.25, p) * xi ** 0.25)
    return lam * 2.0 ** 1.25 * bessel_K(0.75, xi, p) / (gamma_fn(-0.25, p) * xi ** 0.75)


def singular_values(kind, x, lam: float = 1.0) -> np.ndarray:
    """Vectorised double-precision :func:`singular_kernel`."""
    kind = _kind(kind)
    xi = np.abs(np.asarray(x, dtype=float)) * lam
    if np.any(xi == 0):
        raise DomainError("singular kernel diverges at x = 0")
    if kind is KernelKind.MU_PHI:
        return lam * _C_PHI * bessel_K_vec(0.25, xi) / xi ** 0.25
    return lam * _C_PI * bessel_K_vec(0.75, xi) / xi ** 0.75


def singular_derivative(kind, x, lam: float = 1.0) -> np.ndarray:
    """``d mu^(1)/dx``, odd in ``x``; uses ``(z^-nu K_nu)' = -z^-nu K_{nu+1}``."""
    kind = _kind(kind)
    x = np.asarray(x, dtype=float)
    xi = np.abs(x) * lam
    if np.any(xi == 0):
        raise DomainError("singular kernel diverges at x = 0")
    if kind is KernelKind.MU_PHI:
        d = -lam * lam * _C_PHI * special.kv(1.25, xi) / xi ** 0.25
    else:
        d = -lam * lam * _C_PI * special.kv(1.75, xi) / xi ** 0.75
    return np.sign(x) * d


# ---------------------------------------------------------------------------
# regular (numerical) part

@dataclass(frozen=True)
class RegularPart:
    x: np.ndarray
    values: np.ndarray
    errors: np.ndarray


def _check_decay(sym: MomentumSymbol, cfg: QuadConfig):
    if sym.profile.is_cft:
        return
    K = cfg.k_max_mult * sym.lam
    coeffs, powers = sym.tail_series(cfg.tail_terms)
    q = cfg.k_max_mult
    asym = sum(c * q ** (-p) for c, p in zip(coeffs, powers))
    r = float(sym.remainder(K))
    if not abs(r - asym) <= 1e-6 * abs(asym) + 1e-15:
        raise DomainError(
            f"remainder at k = {K} does not follow the product-state asymptotics "
            f"(r = {r:.3e}, expected {asym:.3e}); the numerical transform would not converge"
        )


def _k_rule(sym: MomentumSymbol, cfg: QuadConfig, nodes: int):
    q_edges = np.linspace(0.0, cfg.k_max_mult, cfg.panels + 1)
    q_edges = np.union1d(q_edges, [1.0])
    return panel_rule(q_edges, nodes)


def _cos_sum(xi, q, wr, chunk=4_000_000):
    out = np.empty(xi.shape)
    step = max(1, chunk // q.size)
    for i in range(0, xi.size, step):
        out[i:i + step] = np.cos(np.outer(xi[i:i + step], q)) @ wr
    return out


def _sin_sum(xi, q, wr, chunk=4_000_000):
    out = np.empty(xi.shape)
    step = max(1, chunk // q.size)
    for i in range(0, xi.size, step):
        out[i:i + step] = np.sin(np.outer(xi[i:i + step], q)) @ wr
    return out


def remainder_ft(kind, x_grid, profile: ConstraintProfile, quad_cfg: QuadConfig | None = None,
                 p: Precision = DOUBLE, check: bool = True, estimate: bool = True) -> RegularPart:
    """Regular part ``mu^(2)(x) = (2 pi)^(-1/2) int dk e^{ikx} r(k)``.

    The even cosine transform is taken over ``q = k/L`` in ``[0, K/L]`` with
    panel Gauss-Legendre; the rest of the half line comes from the
    asymptotic series via :func:`power_tail`.  The error bar combines the
    difference to a half-order rule on the same panels, a rounding bound,
    and the first omitted tail term; ``estimate=False`` skips it (errors
    are then NaN).

    For the CFT profile (``alpha = |k|``) the remainder tends to 1 and its
    transform is ``sqrt(2 pi) delta(x) - mu^(1)(x)``; at ``x != 0`` the
    regular part is then exactly ``-mu^(1)(x)``.

    Raises
    ------
    AccuracyError
        If any error bar exceeds ``rel_tol |mu^(2)| + abs_tol`` (only when
        ``check`` is true).
    """
    cfg = quad_cfg or QuadConfig()
    sym = symbol(kind, profile)
    x = np.abs(np.asarray(x_grid, dtype=float))
    lam = profile.lam
    if profile.is_cft:
        if np.any(x == 0):
            raise DomainError("CFT regular part contains delta(x); x = 0 not allowed")
        vals = -singular_values(sym.kind, x, lam)
        return RegularPart(np.asarray(x_grid, dtype=float), vals, 8 * _EPS * np.abs(vals))
    _check_decay(sym, cfg)
    if p.extended:
        vals, errs = _remainder_ft_mp(sym, x, cfg, p)
    else:
        vals, errs = _remainder_ft_double(sym, x, cfg, estimate)
    part = RegularPart(np.asarray(x_grid, dtype=float), vals, errs)
    if check and estimate:
        bound = cfg.rel_tol * np.abs(vals) + cfg.abs_tol * lam
        bad = errs > bound
        if np.any(bad):
            i = int(np.argmax(errs - bound))
            raise AccuracyError(
                f"regular part error {errs[i]:.3e} exceeds tolerance at x = {x[i]}", worst=float(x[i])
            )
    return part


def _tail(xi, K, coeffs, powers):
    tail = np.empty_like(xi)
    err = np.empty_like(xi)
    zero = xi == 0
    if np.any(zero):
        tail[zero], err[zero] = power_tail_at_zero(K, coeffs, powers)
    if np.any(~zero):
        t, e = power_tail_vec(xi[~zero], K, coeffs, powers)
        tail[~zero], err[~zero] = t.real, e
    return tail, err


def _remainder_ft_double(sym: MomentumSymbol, x: np.ndarray, cfg: QuadConfig, estimate: bool = True):
    lam = sym.lam
    K = cfg.k_max_mult
    q, w = _k_rule(sym, cfg, cfg.nodes)
    r = sym.remainder(q * lam)
    xi = x * lam
    fine = _cos_sum(xi, q, w * r)
    coeffs, powers = sym.tail_series(cfg.tail_terms)
    scale = lam * math.sqrt(2.0 / math.pi)
    tail, tail_err = _tail(xi, K, coeffs, powers)
    if not estimate:
        return scale * (fine + tail), np.full_like(xi, np.nan)
    qc, wc = _k_rule(sym, cfg, max(4, cfg.nodes // 2))
    rc = sym.remainder(qc * lam)
    coarse = _cos_sum(xi, qc, wc * rc)
    # rounding: spread between two summation orders plus a unit-roundoff floor
    rounding = np.abs(fine - _cos_sum(xi, q[::-1], (w * r)[::-1])) + 4 * _EPS * np.sum(np.abs(w * r))
    vals = scale * (fine + tail)
    errs = scale * (np.abs(fine - coarse) + rounding + tail_err)
    return vals, errs


def _remainder_ft_mp(sym: MomentumSymbol, x: np.ndarray, cfg: QuadConfig, p: Precision):
    lam = sym.lam
    K = cfg.k_max_mult
    coeffs, powers = sym.tail_series(cfg.tail_terms)
    vals = np.empty(x.size, dtype=object)
    errs = np.empty(x.size)
    with mpmath.workdps(p.working_digits + 10):
        scale = lam * mpmath.sqrt(2 / mpmath.pi)
        for i, xv in enumerate(x):
            xi = mpmath.mpf(xv) * lam
            n_pts = max(64, int(K * float(xi) / math.pi) + 32)
            pts = mpmath.linspace(0, K, n_pts)

            def f(q):
                return mpmath.cos(q * xi) * sym.remainder_mp(q * lam)

            body, err = mpmath.quad(f, pts, error=True, maxdegree=8)
            if xi == 0:
                t, last = power_tail_at_zero(K, coeffs, powers)
            else:
                t = mpmath.re(sum(mpmath.mpf(c) * mpmath.mpf(K) ** (1 - mpmath.mpf(pw))
                                  * mpmath.expint(mpmath.mpf(pw), -1j * mpmath.mpf(K) * xi)
                                  for c, pw in zip(coeffs, powers)))
                last = abs(float(coeffs[-1]) * K ** (1 - powers[-1]) / (K * float(xi)))
            vals[i] = scale * (body + t)
            errs[i] = float(scale * (err + last))
    out = np.array([float(v) for v in vals])
    return out, errs


def remainder_ft_derivative(kind, x_grid, profile: ConstraintProfile,
                            quad_cfg: QuadConfig | None = None) -> RegularPart:
    """``d mu^(2)/dx`` through the sine transform of ``k r(k)``; odd in ``x``."""
    cfg = quad_cfg or QuadConfig()
    sym = symbol(kind, profile)
    x = np.asarray(x_grid, dtype=float)
    if np.any(x == 0):
        raise DomainError("derivative is sampled at x != 0 only")
    lam = profile.lam
    if profile.is_cft:
        d = -singular_derivative(sym.kind, x, lam)
        return RegularPart(x, d, 8 * _EPS * np.abs(d))
    _check_decay(sym, cfg)
    K = cfg.k_max_mult
    q, w = _k_rule(sym, cfg, cfg.nodes)
    qc, wc = _k_rule(sym, cfg, max(4, cfg.nodes // 2))
    r = sym.remainder(q * lam)
    rc = sym.remainder(qc * lam)
    xi = np.abs(x) * lam
    fine = _sin_sum(xi, q, w * q * r)
    coarse = _sin_sum(xi, qc, wc * qc * rc)
    coeffs, powers = sym.tail_series(cfg.tail_terms)
    powers_d = [pw - 1 for pw in powers]
    tail_c, tail_err = power_tail_vec(xi, K, coeffs, powers_d)
    tail = tail_c.imag
    scale = -lam * lam * math.sqrt(2.0 / math.pi)
    rounding = np.abs(fine - _sin_sum(xi, q[::-1], (w * q * r)[::-1])) + 4 * _EPS * np.sum(np.abs(w * q * r))
    vals = np.sign(x) * scale * (fine + tail)
    errs = abs(scale) * (np.abs(fine - coarse) + rounding + tail_err)
    return RegularPart(x, vals, errs)


# ---------------------------------------------------------------------------
# full kernel

@dataclass(frozen=True, eq=False)
class SmearingKernel:
    """Sampled kernel ``mu = mu^(1) + mu^(2)`` on ``x``.

    ``delta_weight`` is the coefficient of ``delta(x)`` carried by the
    kernel, nonzero only when the remainder does not decay (CFT profile).
    """

    kind: KernelKind
    lam: float
    x: np.ndarray
    singular: np.ndarray
    regular: np.ndarray
    errors: np.ndarray
    profile: ConstraintProfile
    quad_cfg: QuadConfig
    delta_weight: float = 0.0
    precision: Precision = field(default=DOUBLE)

    @property
    def total(self) -> np.ndarray:
        return self.singular + self.regular

    @property
    def sign(self) -> np.ndarray:
        return np.sign(self.total).astype(int)

    @property
    def sign_changes(self) -> int:
        """Sign flips of the total along increasing ``|x|``."""
        order = np.argsort(np.abs(self.x))
        s = self.sign[order]
        s = s[s != 0]
        return int(np.count_nonzero(s[1:] != s[:-1]))

    def value(self, x) -> np.ndarray:
        """Re-evaluate ``mu`` at arbitrary nonzero points (no tolerance check)."""
        x = np.asarray(x, dtype=float)
        reg = remainder_ft(self.kind, x, self.profile, self.quad_cfg, check=False, estimate=False).values
        return singular_values(self.kind, x, self.lam) + reg

    def derivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        reg = remainder_ft_derivative(self.kind, x, self.profile, self.quad_cfg).values
        return singular_derivative(self.kind, x, self.lam) + reg

    def rows(self):
        """CSV rows: x, lambda_x, mu_singular, mu_regular, mu_total, err, sign."""
        for i in range(self.x.size):
            yield (self.x[i], self.lam * self.x[i], self.singular[i], self.regular[i],
                   self.total[i], self.errors[i], int(self.sign[i]))


KERNEL_COLUMNS = ("x", "lambda_x", "mu_singular", "mu_regular", "mu_total", "err", "sign")


def total_kernel(kind, x_grid, profile: ConstraintProfile, p: Precision = DOUBLE,
                 quad_cfg: QuadConfig | None = None) -> SmearingKernel:
    """Sum of the closed-form and numerical parts on ``x_grid`` (``0`` excluded)."""
    kind = _kind(kind)
    cfg = quad_cfg or QuadConfig()
    x = np.asarray(x_grid, dtype=float)
    if np.any(x == 0):
        raise DomainError("x_grid must exclude 0")
    if p.extended:
        sing = np.array([float(singular_kernel(kind, xv, profile.lam, p)) for xv in x])
    else:
        sing = singular_values(kind, x, profile.lam)
    reg = remainder_ft(kind, np.abs(x), profile, cfg, p)
    dw = SQRT_2PI if profile.is_cft else 0.0
    return SmearingKernel(kind, profile.lam, x, sing, reg.values, reg.errors, profile, cfg, dw, p)


# ---------------------------------------------------------------------------
# pairings with test functions

def _even_part(f, x):
    return f(x) + f(-x)


def _sqrt_sub_rule(a: float, b: float, panels: int = 8, nodes: int = 24):
    """Nodes/weights for ``int_a^b dx`` with ``x = t^2`` (``0 <= a < b``)."""
    t, w = panel_rule(np.linspace(math.sqrt(a), math.sqrt(b), panels + 1), nodes)
    return t * t, 2 * t * w


def _outer_rule(a: float, b: float, width: float = 0.25, nodes: int = 24):
    n = max(1, int(math.ceil((b - a) / width)))
    return panel_rule(np.linspace(a, b, n + 1), nodes)


def hadamard_pairing(f: Callable, lam: float = 1.0, p: Precision = DOUBLE, x_max: float = 40.0,
                     j_range=(4, 20), tol: float = 1e-9, return_sequence: bool = False):
    """Finite-part pairing of ``mu_pi^(1)`` with a test function ``f``.

    Evaluates ``I(eps) = int_{|x|>eps} mu_pi^(1) f dx + 2 L^(-1/2) eps^(-1/2) f(0)``
    on ``eps_j = 2^-j`` and extrapolates to ``eps -> 0``.  With ``h = sqrt(eps)``
    the error of ``I`` is a series in ``h^2, h^3, h^6, h^7, ...`` (the
    ``x^(1/2)`` branch of ``K_{3/4}`` and the regular branch paired with the
    even part of ``f``), which fixes the Richardson exponents.

    Returns
    -------
    value, error : float
    """
    if not lam > 0:
        raise DomainError("lambda must be positive")
    j0, j1 = j_range
    if j1 - j0 < 6:
        raise DomainError("need at least seven eps values")
    eps = 2.0 ** -np.arange(j0, j1 + 1, dtype=float)
    f0 = float(f(np.array([0.0]))[0])

    def seg(a, b):
        t, w = panel_rule(geometric_edges(a, b, 2.0), 30)
        return float(np.sum(w * singular_values(KernelKind.MU_PI, t, lam) * _even_part(f, t)))

    # outer part from eps_0 to x_max
    t, w = panel_rule(geometric_edges(eps[0], 1.0, 2.0), 30)
    outer = float(np.sum(w * singular_values(KernelKind.MU_PI, t, lam) * _even_part(f, t)))
    if x_max > 1.0:
        t, w = _outer_rule(1.0, x_max, 0.25, 30)
        outer += float(np.sum(w * singular_values(KernelKind.MU_PI, t, lam) * _even_part(f, t)))
    seq = np.empty(eps.size)
    acc = outer
    for j, e in enumerate(eps):
        if j > 0:
            acc += seg(e, eps[j - 1])
        seq[j] = acc + 2.0 * f0 / math.sqrt(lam * e)
    value, err = richardson(np.sqrt(eps), seq, [2, 3, 6, 7, 10, 11])
    if not err <= tol * max(1.0, abs(value)):
        raise ExtrapolationError(f"eps sequence did not settle: estimate {err:.3e}")
    if return_sequence:
        return value, err, eps, seq
    return value, err


def richardson(h, values, exponents, levels: int | None = None):
    """Richardson table for a geometric ``h`` sequence with known exponents.

    Returns the most extrapolated entry and the larger of its distances to
    the previous level and to the previous row.
    """
    h = np.asarray(h, dtype=float)
    T = [np.asarray(values, dtype=float)]
    r = h[:-1] / h[1:]
    if np.ptp(r) > 1e-12 * r.mean():
        raise DomainError("richardson expects a geometric h sequence")
    ratio = float(r.mean())
    m = min(levels or len(exponents), len(exponents), len(values) - 2)
    for e in exponents[:m]:
        prev = T[-1]
        fac = ratio ** e - 1.0
        T.append(prev[1:] + (prev[1:] - prev[:-1]) / fac)
    best = T[-1][-1]
    err = max(abs(best - T[-2][-1]), abs(best - T[-1][-2]))
    return float(best), float(err)


def singular_pairing(kind, f: Callable, lam: float = 1.0, x_max: float = 40.0, **kw):
    """``int mu^(1) f dx``; ordinary integral for ``mu_phi``, finite part for ``mu_pi``."""
    kind = _kind(kind)
    if kind is KernelKind.MU_PI:
        return hadamard_pairing(f, lam, x_max=x_max, **kw)
    a = min(1.0, x_max)
    t, w = _sqrt_sub_rule(0.0, a, 8, 30)
    t = t[t > 0] if np.any(t == 0) else t
    val = float(np.sum(w * singular_values(kind, t, lam) * _even_part(f, t)))
    if x_max > a:
        t, w = _outer_rule(a, x_max, 0.25, 30)
        val += float(np.sum(w * singular_values(kind, t, lam) * _even_part(f, t)))
    return val, 1e-13 * max(1.0, abs(val))


def pair_kernel(kind, f: Callable, profile: ConstraintProfile, quad_cfg: QuadConfig | None = None,
                regular: str = "real", f_hat: Callable | None = None, x_max: float = 12.0):
    """``int mu(x) f(x) dx`` for a smooth rapidly decaying ``f``.

    The singular part is paired in real space.  The regular part is either
    integrated in real space against samples of ``mu^(2)`` (``"real"``) or in
    momentum space as ``int r(k) fhat(-k) dk`` with the unitary transform
    ``fhat(k) = (2 pi)^(-1/2) int e^{-ikx} f dx`` (``"momentum"``).  A delta
    component (CFT profile) contributes ``sqrt(2 pi) f(0)``.
    """
    kind = _kind(kind)
    cfg = quad_cfg or QuadConfig()
    lam = profile.lam
    sing, sing_err = singular_pairing(kind, f, lam, x_max=x_max)
    if regular == "momentum":
        if f_hat is None:
            raise DomainError("momentum-space pairing needs f_hat")
        sym = symbol(kind, profile)
        edges = np.union1d(np.linspace(0.0, cfg.k_max_mult * lam, cfg.panels // 4 + 1), [lam])
        k, w = panel_rule(edges, cfg.nodes)
        reg = float(np.sum(w * sym.remainder(k) * (f_hat(-k) + f_hat(k))))
        reg_err = 1e-12 * max(1.0, abs(reg))
        # for the CFT profile r -> 1 and this term already carries the delta part
        return sing + reg, sing_err + reg_err
    if regular != "real":
        raise DomainError("regular must be 'real' or 'momentum'")
    if profile.is_cft:
        f0 = float(f(np.array([0.0]))[0])
        return SQRT_2PI * f0, 1e-14
    a = min(1.0, x_max)
    t1, w1 = _sqrt_sub_rule(0.0, a, 6, 24)
    t2, w2 = _outer_rule(a, x_max, 0.25, 24)
    t = np.concatenate([t1, t2])
    w = np.concatenate([w1, w2])
    keep = t > 0
    part = remainder_ft(kind, t[keep], profile, cfg, check=False)
    reg = float(np.sum(w[keep] * part.values * _even_part(f, t[keep])))
    reg_err = float(np.sum(np.abs(w[keep]) * part.errors * np.abs(_even_part(f, t[keep]))))
    return sing + reg, sing_err + reg_err


# ---------------------------------------------------------------------------
# integral equation

@dataclass(frozen=True)
class IntegralEquationResidual:
    x: np.ndarray
    residual: np.ndarray
    scale: np.ndarray
    terms: dict

    @property
    def relative(self) -> np.ndarray:
        return np.abs(self.residual) / self.scale

    @property
    def max_relative(self) -> float:
        return float(np.max(self.relative))


def _conv_rule(x: float, half_width: float, panels: int, nodes: int):
    """Nodes/weights in ``y`` on ``[x-W, x+W]`` with ``y = +-t^2`` near 0."""
    lo, hi = x - half_width, x + half_width
    ys, ws = [], []
    if lo < 0 < hi:
        for a, sgn in ((-lo, -1.0), (hi, 1.0)):
            t, w = panel_rule(np.linspace(0.0, math.sqrt(a), panels + 1), nodes)
            ys.append(sgn * t * t)
            ws.append(2 * t * w)
    else:
        t, w = panel_rule(np.linspace(lo, hi, 2 * panels + 1), nodes)
        ys.append(t)
        ws.append(w)
    y = np.concatenate(ys)
    w = np.concatenate(ws)
    keep = y != 0
    return y[keep], w[keep]


def integral_equation_residual(kernel, x_grid, sigma: float = SIGMA, entangler: bool = True,
                               panels: int = 16, nodes: int = 20):
    """Residual of ``(x d/dx + 1/2) mu + (2 pi)^(-1/2) int G(x-y) mu(y) dy``.

    ``G(x) = sqrt(sigma L^2/8) exp(-sigma L^2 x^2/4)`` is the real-space
    form of the Gaussian entangler.  ``kernel`` needs ``lam``, ``value`` and
    ``derivative``; with ``entangler=False`` the convolution is dropped
    (``g = 0``).  Both pieces of ``mu_phi`` become smooth under ``y = t^2``,
    which is how the convolution is discretised near the origin.

    Returns
    -------
    IntegralEquationResidual
        ``relative`` is the residual over ``|x mu'| + |mu/2| + |conv|``.
    """
    x = np.asarray(x_grid, dtype=float)
    if np.any(x == 0):
        raise DomainError("x_grid must exclude 0")
    lam = kernel.lam
    mu = np.asarray(kernel.value(x), dtype=float)
    dmu = np.asarray(kernel.derivative(x), dtype=float)
    conv = np.zeros_like(x)
    if entangler:
        a = math.sqrt(sigma * lam * lam / 8.0)
        b = sigma * lam * lam / 4.0
        W = math.sqrt(44.0 / b)
        rules = [_conv_rule(xv, W, panels, nodes) for xv in x]
        y_all = np.concatenate([r[0] for r in rules])
        mu_all = np.asarray(kernel.value(y_all), dtype=float)
        pos = 0
        for i, (y, w) in enumerate(rules):
            m = mu_all[pos:pos + y.size]
            pos += y.size
            conv[i] = np.sum(w * a * np.exp(-b * (x[i] - y) ** 2) * m) / SQRT_2PI
    lhs = x * dmu
    half = 0.5 * mu
    res = lhs + half + conv
    scale = np.abs(lhs) + np.abs(half) + np.abs(conv)
    errs = getattr(kernel, "errors", None)
    if errs is not None and np.shape(errs) == x.shape:
        if np.any(np.asarray(errs) > 1e-2 * scale):
            raise ResolutionError("kernel error bars dominate the residual; refine the quadrature")
    return IntegralEquationResidual(x, res, scale, {"x_dmu": lhs, "half_mu": half, "conv": conv})


@dataclass(frozen=True)
class PowerLawKernel:
    """``mu = c |x|^(-1/2)``: the exact solution when the entangler vanishes."""

    c: float = 1.0
    lam: float = 1.0

    def value(self, x):
        return self.c * np.abs(np.asarray(x, dtype=float)) ** -0.5

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * self.c * np.sign(x) * np.abs(x) ** -1.5


# ---------------------------------------------------------------------------
# decay law

@dataclass(frozen=True)
class DecayFit:
    applicable: bool
    lam_x: np.ndarray
    u_hat: np.ndarray
    ratio: np.ndarray
    in_band: bool
    trending: bool
    exp_rate: float
    log_const: float
    ratio_with_const: np.ndarray
    note: str = ""

    def as_dict(self) -> dict:
        return {
            "applicable": self.applicable,
            "lambda_x": self.lam_x.tolist(),
            "u_hat": self.u_hat.tolist(),
            "ratio": self.ratio.tolist(),
            "in_band": self.in_band,
            "trending_to_one": self.trending,
            "exp_rate": self.exp_rate,
            "log_const": self.log_const,
            "ratio_with_const": self.ratio_with_const.tolist(),
            "note": self.note,
        }


def decay_law_fit(kernel: SmearingKernel, fit_window=(5.0, 12.0), band=(0.8, 1.2),
                  sigma: float = SIGMA) -> DecayFit:
    """Compare ``-log|mu|`` with ``L x sqrt(sigma log L x)`` over a window.

    ``ratio`` is the literal comparison.  ``exp_rate`` is the least-squares
    slope of ``-log|mu|`` against ``L x`` (values above 1 mean faster than the
    subtractor's ``e^{-Lx}``).  ``log_const`` fits an additive constant,
    ``-log|mu| = u(x) - log C``, and ``ratio_with_const`` is the comparison
    after removing it.
    """
    lo, hi = fit_window
    lx = np.abs(kernel.x) * kernel.lam
    sel = (lx >= lo) & (lx <= hi)
    if kernel.profile.is_cft:
        empty = np.array([])
        return DecayFit(False, empty, empty, empty, False, False, float("nan"), float("nan"), empty,
                        "CFT profile: kernel is a delta function, no decay law")
    if np.count_nonzero(sel) < 3:
        raise DomainError("fit window holds fewer than three samples")
    order = np.argsort(lx[sel])
    lx = lx[sel][order]
    mu = kernel.total[sel][order]
    err = kernel.errors[sel][order]
    if np.any(np.abs(mu) <= 10 * err):
        i = int(np.argmax(err / np.abs(mu)))
        raise ConvergenceError(
            f"|mu| below ten error bars at Lx = {lx[i]}; raise working_digits",
            partial=float(mu[i]), estimate=float(err[i]))
    u_hat = -np.log(np.abs(mu))
    law = lx * np.sqrt(sigma * np.log(lx))
    ratio = u_hat / law
    in_band = bool(np.all((ratio >= band[0]) & (ratio <= band[1])))
    dev = np.abs(ratio - 1.0)
    trending = bool(np.all(np.diff(dev) <= 1e-12) and dev[-1] < dev[0])
    slope = float(np.polyfit(lx, u_hat, 1)[0])
    log_const = float(np.mean(law - u_hat))
    return DecayFit(True, lx, u_hat, ratio, in_band, trending, slope, log_const,
                    (u_hat + log_const) / law)
