"""
One-particle symbols of the global conformal generators.

A generator ``G = int a^dag(k) (A a)(k) dk`` is stored as the differential
operator ``A`` on each half line, with Laurent-polynomial coefficients::

    H : |k|                     P : k
    D : i (k d + 1/2)           B : i sgn(k) (k d + 1/2)
    K1: -sgn(k) (k d^2 + d - 1/(4k))
    K2: -(k d^2 + d - 1/(4k))

Test functions live on ``[-k_max, -k_min] U [k_min, k_max]`` as Chebyshev
series per half.  Differentiation, multiplication by ``k`` and hence every
positive-power coefficient act exactly on the series, so commutators of the
symbols are computed with no discretisation error beyond rounding.

For a linear field operator ``O = int (u phi + v pi) dk`` the adjoint action
``O -> -i[G, O]`` is, in terms of ``c`` (coefficient of ``a``) and ``d``
(coefficient of ``a^dag``), ``c -> i A^T c`` and ``d -> -i A d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, ResolutionError
from .profiles import ConstraintProfile, EntanglerProfile, Provenance, entangler_g, smooth_profile

SQRT_2PI = math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# symbols

Laurent = dict  # power -> complex coefficient


def _lclean(p: Laurent) -> Laurent:
    return {m: c for m, c in p.items() if c != 0}


def _ladd(p: Laurent, q: Laurent, b: complex = 1.0) -> Laurent:
    out = dict(p)
    for m, c in q.items():
        out[m] = out.get(m, 0) + b * c
    return _lclean(out)


def _lscale(p: Laurent, a: complex) -> Laurent:
    return _lclean({m: a * c for m, c in p.items()})


def _lder(p: Laurent) -> Laurent:
    return _lclean({m - 1: m * c for m, c in p.items() if m != 0})


@dataclass(frozen=True)
class GeneratorSymbol:
    """``sum_j a_j(k) d^j`` on each half line.

    ``pos`` and ``neg`` map derivative order to a Laurent polynomial in ``k``
    for ``k > 0`` and ``k < 0``; sign factors such as ``sgn(k)`` are folded
    into the per-half coefficients.  ``cutoff`` marks the ``^Lambda``
    version, whose symbol in the ``a^Lambda`` basis is the same.
    """

    name: str
    pos: dict
    neg: dict
    cutoff: ConstraintProfile | None = None

    @property
    def order(self) -> int:
        orders = [j for half in (self.pos, self.neg) for j, p in half.items() if p]
        return max(orders, default=0)

    @property
    def sign_structure(self) -> bool:
        """True when the two halves differ by more than the parity of ``k``."""
        return self.pos != self.neg

    def __add__(self, other: "GeneratorSymbol") -> "GeneratorSymbol":
        return GeneratorSymbol(f"({self.name}+{other.name})", _hadd(self.pos, other.pos),
                               _hadd(self.neg, other.neg), self.cutoff)

    def __sub__(self, other: "GeneratorSymbol") -> "GeneratorSymbol":
        return self + (-1) * other

    def __rmul__(self, a: complex) -> "GeneratorSymbol":
        return GeneratorSymbol(f"{a}*{self.name}", _hscale(self.pos, a), _hscale(self.neg, a), self.cutoff)

    def __neg__(self):
        return (-1) * self

    def half(self, sign: int) -> dict:
        return self.pos if sign > 0 else self.neg

    def transpose(self) -> "GeneratorSymbol":
        """Formal transpose w.r.t. ``int f g dk`` (coefficients constant in sign per half)."""
        return GeneratorSymbol(self.name + "^T", _htranspose(self.pos), _htranspose(self.neg), self.cutoff)

    def with_cutoff(self, profile: ConstraintProfile) -> "GeneratorSymbol":
        return GeneratorSymbol(self.name + "^L", self.pos, self.neg, profile)


def _hadd(a: dict, b: dict, s: complex = 1.0) -> dict:
    out = {j: dict(p) for j, p in a.items()}
    for j, p in b.items():
        out[j] = _ladd(out.get(j, {}), p, s)
    return {j: p for j, p in out.items() if p}


def _hscale(a: dict, s: complex) -> dict:
    return {j: _lscale(p, s) for j, p in a.items() if _lscale(p, s)}


def _htranspose(h: dict) -> dict:
    if max(h, default=0) > 2:
        raise DomainError("transpose implemented up to second order")
    a0, a1, a2 = h.get(0, {}), h.get(1, {}), h.get(2, {})
    # (a2 d^2 + a1 d + a0)^T = a2 d^2 + (2 a2' - a1) d + (a2'' - a1' + a0)
    t2 = dict(a2)
    t1 = _ladd(_lscale(_lder(a2), 2.0), a1, -1.0)
    t0 = _ladd(_ladd(_lder(_lder(a2)), _lder(a1), -1.0), a0)
    return {j: p for j, p in ((2, t2), (1, t1), (0, t0)) if p}


def _sym(name, pos, neg=None):
    return GeneratorSymbol(name, pos, pos if neg is None else neg)


H = _sym("H", {0: {1: 1.0}}, {0: {1: -1.0}})
P = _sym("P", {0: {1: 1.0}})
D = _sym("D", {1: {1: 1j}, 0: {0: 0.5j}})
B = _sym("B", {1: {1: 1j}, 0: {0: 0.5j}}, {1: {1: -1j}, 0: {0: -0.5j}})
K1 = _sym("K1", {2: {1: -1.0}, 1: {0: -1.0}, 0: {-1: 0.25}}, {2: {1: 1.0}, 1: {0: 1.0}, 0: {-1: -0.25}})
K2 = _sym("K2", {2: {1: -1.0}, 1: {0: -1.0}, 0: {-1: 0.25}})
ZERO = _sym("0", {})

SYMBOLS = {"H": H, "P": P, "D": D, "B": B, "K1": K1, "K2": K2}

# the six relations of the real-line algebra: [g1, g2] = expected
RELATIONS = (
    ("[H,P]=0", H, P, ZERO),
    ("[B,D]=0", B, D, ZERO),
    ("[B,H]=iP", B, H, 1j * P),
    ("[B,P]=iH", B, P, 1j * H),
    ("[D,H]=iH", D, H, 1j * H),
    ("[D,P]=iP", D, P, 1j * P),
)


# ---------------------------------------------------------------------------
# split Chebyshev functions

@dataclass(frozen=True)
class SplitFunction:
    """Function on ``[-b, -a] U [a, b]`` as one Chebyshev series per half.

    On the positive half ``k = m + h t``; on the negative half ``k = -(m + h t)``
    with ``m = (a+b)/2``, ``h = (b-a)/2``, ``t`` in ``[-1, 1]``.  Reflection
    ``k -> -k`` therefore just swaps the two series.
    """

    k_min: float
    k_max: float
    pos: np.ndarray
    neg: np.ndarray

    @property
    def mid(self) -> float:
        return 0.5 * (self.k_min + self.k_max)

    @property
    def hw(self) -> float:
        return 0.5 * (self.k_max - self.k_min)

    def series(self, sign: int) -> np.ndarray:
        return self.pos if sign > 0 else self.neg

    def replace(self, pos=None, neg=None) -> "SplitFunction":
        return SplitFunction(self.k_min, self.k_max,
                             self.pos if pos is None else pos, self.neg if neg is None else neg)

    def reflect(self) -> "SplitFunction":
        return SplitFunction(self.k_min, self.k_max, self.neg, self.pos)

    def __add__(self, other):
        return self.replace(_padd(self.pos, other.pos), _padd(self.neg, other.neg))

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, a):
        return self.replace(a * self.pos, a * self.neg)

    def t_of(self, k, sign):
        return (sign * np.asarray(k, dtype=float) - self.mid) / self.hw

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        out = np.zeros(k.shape, dtype=complex)
        inside = (np.abs(k) >= self.k_min * (1 - 1e-14)) & (np.abs(k) <= self.k_max * (1 + 1e-14))
        for sign in (1, -1):
            sel = inside & (np.sign(k) == sign)
            out[sel] = C.chebval(self.t_of(k[sel], sign), self.series(sign))
        return out

    def sample_grid(self, n: int = 400):
        kp = self.mid + self.hw * np.cos(np.linspace(0, np.pi, n))
        return np.concatenate([-kp[::-1], kp])

    def max_norm(self, n: int = 400) -> float:
        return float(np.max(np.abs(self(self.sample_grid(n)))))

    @classmethod
    def from_callable(cls, fun: Callable, k_min: float, k_max: float, deg: int | None = None):
        """Interpolate ``fun`` on both halves.

        With ``deg=None`` the degree doubles from 16 until the trailing
        coefficients reach rounding level; high fixed degrees only add noise.
        """
        if not 0 < k_min < k_max:
            raise DomainError("need 0 < k_min < k_max")
        m, h = 0.5 * (k_min + k_max), 0.5 * (k_max - k_min)
        halves = []
        for sign in (1, -1):
            def on_t(t, sign=sign):
                return np.asarray(fun(sign * (m + h * t)), dtype=complex)
            if deg is not None:
                halves.append(chop(C.chebinterpolate(on_t, deg)))
                continue
            n = 16
            while True:
                c = C.chebinterpolate(on_t, n)
                tail = np.max(np.abs(c[-max(3, n // 8):])) / max(np.max(np.abs(c)), 1e-300)
                if tail < 1e-14:
                    halves.append(chop(c))
                    break
                if n >= 1024:
                    raise ResolutionError("function not resolved by a degree-1024 Chebyshev series")
                n *= 2
        return cls(k_min, k_max, halves[0], halves[1])


def chop(c: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Drop trailing coefficients at rounding level; differentiation would amplify them."""
    c = np.asarray(c, dtype=complex)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0:
        return np.zeros(1, dtype=complex)
    big = np.flatnonzero(np.abs(c) > tol * scale)
    return c[:big[-1] + 1]


def _padd(a, b):
    n = max(a.size, b.size)
    out = np.zeros(n, dtype=complex)
    out[:a.size] += a
    out[:b.size] += b
    return out


def _mul_k(c: np.ndarray, sign: int, m: float, h: float) -> np.ndarray:
    # k = sign (m + h t)
    return sign * (h * C.chebmulx(c) + m * _padd(c, np.zeros(c.size + 1)))


def _deriv(c: np.ndarray, sign: int, h: float) -> np.ndarray:
    if c.size < 2:
        return np.zeros(1, dtype=complex)
    return C.chebder(c) / (sign * h)


def _mul_fun(c: np.ndarray, fun: Callable, sign: int, m: float, h: float, pad: int = 16,
             scale: float = 0.0) -> np.ndarray:
    # value-space product, degree doubled until the trailing coefficients reach rounding level;
    # ``scale`` keeps a half that is zero up to rounding from chasing its own noise
    n = c.size - 1 + pad
    while True:
        out = C.chebinterpolate(lambda t: fun(sign * (m + h * t)) * C.chebval(t, c), n)
        ref = max(np.max(np.abs(out)), scale, 1e-300)
        tail = np.max(np.abs(out[-max(3, n // 8):])) / ref
        if tail < 1e-14:
            return chop(out, 1e-14 * ref / max(np.max(np.abs(out)), 1e-300))
        if n >= 1024:
            raise ResolutionError("product not resolved by a degree-1024 Chebyshev series")
        n *= 2


def _mul_laurent(c: np.ndarray, poly: Laurent, sign: int, m: float, h: float) -> np.ndarray:
    out = np.zeros(1, dtype=complex)
    for power, coef in poly.items():
        if power >= 0:
            term = c.astype(complex)
            for _ in range(power):
                term = _mul_k(term, sign, m, h)
        else:
            term = _mul_fun(c, lambda k, p=power: k ** float(p), sign, m, h)
        out = _padd(out, coef * term)
    return out


def _apply_half(g: GeneratorSymbol, c: np.ndarray, sign: int, m: float, h: float) -> np.ndarray:
    out = np.zeros(1, dtype=complex)
    deriv = c.astype(complex)
    for j in range(g.order + 1):
        poly = g.half(sign).get(j)
        if poly:
            out = _padd(out, _mul_laurent(deriv, poly, sign, m, h))
        deriv = _deriv(deriv, sign, h)
    return out


# ---------------------------------------------------------------------------
# test functions

def gaussian_bump_test_function(k_max: float = 1.0, k_min: float | None = None, shift: float = 0.0,
                                phase: float = 0.0, neg_weight: complex = 0.7, deg: int | None = None) -> SplitFunction:
    """Normalised Gaussian bumps, one per half, at least eight widths from both edges.

    ``shift`` in ``[-1, 1]`` moves the centres within the allowed band;
    ``phase`` multiplies by ``exp(i phase k/k_max)``.
    """
    k_min = 0.05 * k_max if k_min is None else k_min
    L = k_max - k_min
    width = L / 24.0
    room = 0.5 * L - 8.0 * width
    centre = 0.5 * (k_min + k_max) + shift * room

    def f(k):
        ka = np.abs(k)
        bump = np.exp(-((ka - centre) / width) ** 2) * np.exp(1j * phase * k / k_max)
        return np.where(k > 0, bump, neg_weight * bump)

    fn = SplitFunction.from_callable(f, k_min, k_max, deg)
    norm = fn.max_norm(2000)
    return (1.0 / norm) * fn


def check_support(f: SplitFunction, tol: float = 1e-12):
    """Raise :class:`DomainError` if ``f`` does not vanish at the band edges."""
    if f.k_min <= 0:
        raise DomainError("test functions must avoid k = 0")
    edges = np.array([f.k_min, f.k_max, -f.k_min, -f.k_max])
    scale = max(f.max_norm(), 1e-300)
    if np.max(np.abs(f(edges))) > tol * scale:
        raise DomainError("test function does not vanish at the edges of its support")


def apply_symbol(g: GeneratorSymbol, f: SplitFunction, check: bool = True) -> SplitFunction:
    """``(A f)(k)`` with exact series arithmetic for positive powers of ``k``."""
    if check:
        check_support(f)
    m, h = f.mid, f.hw
    return f.replace(_apply_half(g, f.pos, 1, m, h), _apply_half(g, f.neg, -1, m, h))


def commutator_residual(g1: GeneratorSymbol, g2: GeneratorSymbol, expected: GeneratorSymbol,
                        f: SplitFunction, noise_tol: float = 1e-6) -> float:
    """``max|([g1,g2] - E) f|``, relative to ``max|E f|`` unless ``E f = 0``.

    Raises
    ------
    ResolutionError
        If the Chebyshev tail of ``f`` shows it is under-resolved.
    """
    check_support(f)
    for c in (f.pos, f.neg):
        tail = np.max(np.abs(c[-4:])) / np.max(np.abs(c))
        if tail > noise_tol * 1e-7:
            raise ResolutionError(f"test function under-resolved (Chebyshev tail {tail:.1e}); raise deg")
    a = apply_symbol(g1, apply_symbol(g2, f, False), False)
    b = apply_symbol(g2, apply_symbol(g1, f, False), False)
    e = apply_symbol(expected, f, False)
    diff = (a - b) - e
    num = diff.max_norm()
    den = e.max_norm()
    return num / den if den > 0 else num


def algebra_report(test_functions=None) -> list[dict]:
    """Residuals of the six relations on each test function."""
    fs = test_functions or default_test_functions()
    out = []
    for label, g1, g2, e in RELATIONS:
        res = [commutator_residual(g1, g2, e, f) for f in fs]
        out.append({"relation": label, "residual": float(max(res)), "per_function": [float(r) for r in res],
                    "k_min": fs[0].k_min, "k_max": fs[0].k_max, "grid": int(fs[0].pos.size)})
    return out


def default_test_functions(k_max: float = 1.0):
    return [
        gaussian_bump_test_function(k_max, shift=0.0),
        gaussian_bump_test_function(k_max, shift=-0.6, phase=3.0, neg_weight=-0.4 + 0.3j),
        gaussian_bump_test_function(k_max, shift=0.7, phase=-5.0, neg_weight=1.0),
    ]


# ---------------------------------------------------------------------------
# field basis

@dataclass(frozen=True)
class FieldSymbol:
    """Adjoint action ``O -> -i[G, O]`` on ``O = int (u phi + v pi) dk``."""

    name: str
    action: Callable[[SplitFunction, SplitFunction], tuple]
    a_basis: GeneratorSymbol | None = None

    def apply(self, u: SplitFunction, v: SplitFunction):
        return self.action(u, v)


def _valmul(f: SplitFunction, fun: Callable, pad: int = 16) -> SplitFunction:
    m, h = f.mid, f.hw
    grid = f.sample_grid(64)
    scale = float(np.max(np.abs(f(grid) * fun(grid))))
    return f.replace(_mul_fun(f.pos, fun, 1, m, h, pad, scale), _mul_fun(f.neg, fun, -1, m, h, pad, scale))


def smooth_alpha(profile: ConstraintProfile) -> Callable:
    """Vectorised ``alpha`` free of rounding-level noise, for spectral differentiation.

    Double-precision special-function routes switch algorithms across the
    band and leave noise near 1e-16 that differentiation amplifies; the
    extended route is smooth to far beyond double precision.
    """
    if profile.alpha_mp is None:
        return lambda k: np.asarray(profile.alpha(k), dtype=float)

    def alpha(k):
        k = np.asarray(k, dtype=float)
        with mpmath.workdps(30):
            return np.array([float(profile.alpha_mp(mpmath.mpf(float(q)))) for q in k.ravel()]).reshape(k.shape)

    return alpha


def symbol_conjugate(g: GeneratorSymbol, profile: ConstraintProfile) -> FieldSymbol:
    """Field-basis form of the ``^Lambda`` generator built from ``g``.

    In the ``a^Lambda`` basis the symbol is ``g`` itself; the field-basis
    action follows from ``a^Lambda = sqrt(alpha/2) phi + i pi/sqrt(2 alpha)``.
    """
    gt = g.transpose()
    alpha = smooth_alpha(profile)

    def action(u: SplitFunction, v: SplitFunction):
        inv = _valmul(u, lambda k: 1 / np.sqrt(2 * alpha(k)))
        pv = _valmul(v, lambda k: np.sqrt(alpha(k) / 2))
        c = inv - 1j * pv
        d_ref = inv + 1j * pv                    # d(-k)
        d = d_ref.reflect()
        c2 = 1j * apply_symbol(gt, c, False)
        d2 = -1j * apply_symbol(g, d, False)
        d2_ref = d2.reflect()
        u2 = _valmul(c2 + d2_ref, lambda k: np.sqrt(alpha(k) / 2))
        v2 = _valmul(c2 - d2_ref, lambda k: 1j / np.sqrt(2 * alpha(k)))
        return u2, v2

    return FieldSymbol(g.name + "^L", action, g.with_cutoff(profile))


def field_action_L_plus_K(g_fn: Callable) -> FieldSymbol:
    """``L + K`` in the field basis.

    ``L`` dilates both ``phi`` and ``pi`` coefficients with weight 1/2,
    ``u -> (k d + 1/2) u`` and ``v -> (k d + 1/2) v``; the entangler
    ``K = (1/2) int g (phi(k) pi(-k) + pi(k) phi(-k))`` adds ``-g u`` and
    ``+g v``.
    """
    L = GeneratorSymbol("L", {1: {1: 1.0}, 0: {0: 0.5}}, {1: {1: 1.0}, 0: {0: 0.5}})

    def action(u, v):
        lu = apply_symbol(L, u, False)
        lv = apply_symbol(L, v, False)
        gu = _valmul(u, lambda k: np.asarray(g_fn(k), dtype=float))
        gv = _valmul(v, lambda k: np.asarray(g_fn(k), dtype=float))
        return lu - gu, lv + gv

    return FieldSymbol("L+K", action)


def dphi_coefficients(profile: ConstraintProfile, op: str = "dphi", k_min: float = 0.05,
                      k_max: float = 4.0, deg: int | None = None):
    """``(u, v)`` of ``dphi^Lambda(0)`` (or ``dbar``) over ``(phi(k), pi(k))``.

    ``dphi = (d_x phi - pi)/2`` smeared by ``V``: ``u = i k S/(2 sqrt(2 pi))``,
    ``v = -+ 1/(2 sqrt(2 pi) S)`` with ``S = sqrt(alpha/|k|)``.
    """
    if op not in ("dphi", "dbar_phi"):
        raise DomainError("op must be 'dphi' or 'dbar_phi'")
    sgn = -1.0 if op == "dphi" else 1.0
    lam = profile.lam
    alpha = smooth_alpha(profile)

    def S(k):
        return np.sqrt(alpha(k) / np.abs(k))

    u = SplitFunction.from_callable(lambda k: 1j * k * S(k) / (2 * SQRT_2PI), k_min * lam, k_max * lam, deg)
    v = SplitFunction.from_callable(lambda k: sgn / (2 * SQRT_2PI * S(k)) + 0j, k_min * lam, k_max * lam, deg)
    return u, v


def _eigen(u, v, u2, v2):
    grid = u.sample_grid(300)
    w = np.concatenate([u(grid), v(grid)])
    w2 = np.concatenate([u2(grid), v2(grid)])
    lam = np.vdot(w, w2) / np.vdot(w, w)
    res = np.max(np.abs(w2 - lam * w)) / np.max(np.abs(w))
    return lam, float(res)


def scaling_covariance_check(op: str = "dphi", which: str = "D", profile: ConstraintProfile | None = None,
                             entangler: EntanglerProfile | Callable | None = None):
    """Eigenvalue of ``-i[G^Lambda, .]`` on ``dphi^Lambda(0)`` or ``dbar phi^Lambda(0)``.

    ``which = "D"`` uses the field action of ``L + K`` with the entangler
    ``g``; ``which = "B"`` conjugates the boost symbol through the profile.
    Returns ``(eigenvalue, residual)``; the eigenvalue is the scaling
    dimension for ``D`` and the conformal spin for ``B``.
    """
    prof = profile or smooth_profile()
    u, v = dphi_coefficients(prof, op)
    if which == "D":
        ent = entangler if entangler is not None else EntanglerProfile(lam=prof.lam)
        g_fn = (lambda k: entangler_g(ent, k)) if isinstance(ent, EntanglerProfile) else ent
        act = field_action_L_plus_K(g_fn)
    elif which == "B":
        act = symbol_conjugate(B, prof)
    else:
        raise DomainError("which must be 'D' or 'B'")
    u2, v2 = act.apply(u, v)
    lam, res = _eigen(u, v, u2, v2)
    if abs(lam.imag) > 1e-8:
        raise DomainError(f"complex eigenvalue {lam}")
    return float(lam.real), res


# ---------------------------------------------------------------------------
# D^Lambda = L + K obstruction

def alpha_derivative(profile: ConstraintProfile, k) -> np.ndarray:
    """``d alpha/dk`` by the most accurate route the profile offers.

    Extended-precision profiles are differentiated numerically with mpmath
    at 30 digits; the sharp fixed point uses its piecewise-exact slope; any
    other profile gets a fourth-order central difference.
    """
    k = np.asarray(k, dtype=float)
    if profile.provenance is Provenance.SHARP_FIXED_POINT:
        return np.where(np.abs(k) < profile.lam, np.sign(k), 0.0)
    if profile.alpha_mp is not None:
        with mpmath.workdps(30):
            return np.array([float(mpmath.diff(profile.alpha_mp, mpmath.mpf(kv))) for kv in np.ravel(k)]
                            ).reshape(k.shape)
    h = 1e-3 * np.abs(k)
    f = profile.alpha
    return (f(k - 2 * h) - 8 * f(k - h) + 8 * f(k + h) - f(k + 2 * h)) / (12 * h)


def dlambda_covariance_residual(profile: ConstraintProfile, g_fn, k_grid, exclude: float = 0.0,
                                return_values: bool = False):
    """``max |k alpha'/(2 alpha) - g|`` on ``k_grid``.

    This is the coefficient of ``a^Lambda(-k)^dag`` left over in
    ``-i[L+K, a^Lambda(k)]``; it vanishes exactly when the profile and
    entangler satisfy ``d alpha/dk = 2 g alpha/k``.  Points with
    ``| |k| - L | < exclude L`` are skipped (use for discontinuous ``g``).
    """
    k = np.asarray(k_grid, dtype=float)
    if np.any(k == 0):
        raise DomainError("k_grid must exclude 0")
    if exclude > 0:
        k = k[np.abs(np.abs(k) - profile.lam) >= exclude * profile.lam]
    g = (lambda q: entangler_g(g_fn, q)) if isinstance(g_fn, EntanglerProfile) else g_fn
    a = np.asarray(profile.alpha(k), dtype=float)
    obstruction = k * alpha_derivative(profile, k) / (2 * a) - np.asarray(g(k), dtype=float)
    worst = float(np.max(np.abs(obstruction)))
    if return_values:
        return worst, k, obstruction
    return worst


# ---------------------------------------------------------------------------
# NS spectrum

@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    raw: dict = field(default_factory=dict)
    drift: float = 0.0


def _ns_levels(n_levels: int, n: int, u_lo: float, u_hi: float):
    # (H + K1)/2 on k > 0 with k = e^u and f = e^{-u/2} g is symmetric in L^2(du):
    # g -> (-(e^{-u} g')' + e^u g)/2
    u = np.linspace(u_lo, u_hi, n + 2)
    h = u[1] - u[0]
    p_half = np.exp(-(u[:-1] + 0.5 * h))
    diag = 0.5 * ((p_half[:-1] + p_half[1:]) / h ** 2 + np.exp(u[1:-1]))
    off = -0.5 * p_half[1:-1] / h ** 2
    # bisection keeps relative accuracy on this strongly graded matrix
    return eigh_tridiagonal(diag, off, select="i", select_range=(0, n_levels - 1), eigvals_only=True,
                            lapack_driver="stebz", tol=1e-300)


def _ns_refined(n_levels, n, lo, hi):
    e1 = _ns_levels(n_levels, n, lo, hi)
    e2 = _ns_levels(n_levels, 2 * n, lo, hi)
    return (4 * e2 - e1) / 3


def ns_spectrum(profile: ConstraintProfile | None = None, n_levels: int = 5, n: int = 8000,
                u_range=(-36.0, 4.5), tol: float = 1e-6) -> Spectrum:
    """Lowest eigenvalues of ``(H + K1)/2`` in the one-particle right-mover sector.

    The ``a^Lambda``-basis symbol is profile independent, so ``profile`` only
    labels the result.  Second-order differences on a uniform grid in
    ``u = log k`` with Dirichlet ends deep in the decaying regions; two
    resolutions are combined by Richardson.  Doubling the grid and doubling
    the domain (at fixed spacing) bound the remaining error.

    Raises
    ------
    ResolutionError
        If the refined eigenvalues move by more than ``tol``.
    """
    lo, hi = u_range
    width = hi - lo
    base = _ns_refined(n_levels, n, lo, hi)
    fine = _ns_refined(n_levels, 2 * n, lo, hi)
    wide = _ns_refined(n_levels, 2 * n, lo - 0.5 * width, hi + 0.5 * width)
    drift = float(max(np.max(np.abs(fine - base)), np.max(np.abs(wide - base))))
    if drift > tol:
        raise ResolutionError(f"NS eigenvalues not converged (drift {drift:.2e})")
    return Spectrum(fine, {"n": [n, 2 * n], "u_range": [lo, hi]}, drift)
