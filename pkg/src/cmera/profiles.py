"""
Entangler profiles ``g(k)`` and constraint profiles ``alpha(k)``.

The two are tied by ``d alpha/dk = 2 g alpha / k``.  For the Gaussian
entangler ``g = exp(-(k/L)^2/sigma)/2`` with ``sigma = e^gamma`` the solution is
``alpha = L exp(Ei(-(k/L)^2/sigma)/2)``.  Because ``ln sigma = gamma`` this is the
same as ``alpha = |k| exp(-Ein(k^2/(sigma L^2))/2)``, which is how it is
evaluated: ``alpha/|k|`` is then an entire function of ``k`` and the small-k
limit carries no cancellation.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import mpmath
import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConsistencyError, DomainError, IntegrationError
from .specfun import DOUBLE, SIGMA, Precision, _e1_cf_vec, ein, ein_mp, exp_integral_Ei


class Variant(str, Enum):
    SMOOTH = "smooth_gaussian"
    SHARP = "sharp"


class Provenance(str, Enum):
    ANALYTIC_EI = "analytic_Ei"
    ODE_SOLVED = "ode_solved"
    SHARP_FIXED_POINT = "sharp_fixed_point"
    FLOW_SNAPSHOT = "flow_snapshot"
    CFT = "cft"


@dataclass(frozen=True)
class EntanglerProfile:
    """Momentum profile of the entangler.

    ``lam`` is the UV cutoff (momentum units); ``sigma`` the Gaussian width
    factor, ``e^gamma`` for the optimised state.
    """

    lam: float = 1.0
    sigma: float = SIGMA
    variant: Variant = Variant.SMOOTH

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError("lambda must be positive")
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        object.__setattr__(self, "variant", Variant(self.variant))

    def __call__(self, k):
        return entangler_g(self, k)


def entangler_g(profile: EntanglerProfile, k):
    """Evaluate ``g(k)``; scalar in, scalar out, arrays vectorised."""
    q = np.abs(np.asarray(k, dtype=float)) / profile.lam
    if profile.variant is Variant.SMOOTH:
        out = 0.5 * np.exp(-(q * q) / profile.sigma)
    else:
        out = np.where(q <= 1.0, 0.5, 0.0)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True, eq=False)
class ConstraintProfile:
    """A Gaussian state's constraint function ``alpha(k)``.

    ``ratio`` evaluates ``alpha(k)/|k|`` directly when an accurate route
    exists.  ``uv`` says how ``alpha`` behaves at large ``|k|``: ``"product"``
    (saturates at ``lam``) or ``"cft"`` (``alpha = |k|``).  ``samples`` holds
    the ``(k, alpha, local_error)`` table for profiles built on a grid.
    """

    alpha_fn: Callable[[np.ndarray], np.ndarray]
    lam: float
    provenance: Provenance
    ratio_fn: Callable[[np.ndarray], np.ndarray] | None = None
    alpha_mp: Callable | None = None
    uv: str = "product"
    s_ir: float | None = None
    samples: np.ndarray | None = None
    k_range: tuple[float, float] | None = None
    params: dict = field(default_factory=dict)

    def __call__(self, k):
        return self.alpha(k)

    def alpha(self, k):
        ka = np.abs(np.asarray(k, dtype=float))
        self._check_range(ka)
        out = self.alpha_fn(ka)
        return out if np.ndim(out) else float(out)

    def ratio(self, k):
        """``alpha(k)/|k|``; finite limit at ``k -> 0`` when ``ratio_fn`` is set."""
        ka = np.abs(np.asarray(k, dtype=float))
        self._check_range(ka)
        if self.ratio_fn is not None:
            out = self.ratio_fn(ka)
        else:
            out = self.alpha_fn(ka) / ka
        return out if np.ndim(out) else float(out)

    def _check_range(self, ka):
        if self.k_range is None:
            return
        lo, hi = self.k_range
        if np.any((ka < lo * (1 - 1e-12)) | (ka > hi * (1 + 1e-12))):
            raise DomainError(f"profile only defined on |k| in [{lo}, {hi}]")

    @property
    def is_cft(self) -> bool:
        return self.uv == "cft"

    def key(self) -> dict:
        """Hashable description used for cache keys and manifests."""
        d = {"provenance": self.provenance.value, "lambda": self.lam, "uv": self.uv}
        if self.s_ir is not None:
            d["s_ir"] = self.s_ir
        d.update(self.params)
        if self.samples is not None:
            d["samples_digest"] = float(np.sum(self.samples[:, 1] * np.arange(1, len(self.samples) + 1)))
        return d


# ---------------------------------------------------------------------------
# analytic smooth profile

def alpha_analytic(profile: EntanglerProfile, k, p: Precision = DOUBLE):
    """``alpha(k) = L exp(Ei(-(k/L)^2/sigma)/2)`` through :func:`exp_integral_Ei`."""
    if profile.variant is not Variant.SMOOTH:
        raise DomainError("alpha_analytic applies to the smooth Gaussian entangler")
    if k == 0:
        raise DomainError("alpha_analytic: k = 0 is the limit alpha -> 0, evaluate ratio instead")
    if p.extended:
        with mpmath.workdps(p.working_digits + 5):
            lam = mpmath.mpf(profile.lam)
            y = -((mpmath.mpf(k) / lam) ** 2) / mpmath.mpf(profile.sigma)
            val = lam * mpmath.exp(exp_integral_Ei(y, Precision(p.working_digits + 5, 0.0, 0.0)) / 2)
        return +val
    y = -((k / profile.lam) ** 2) / profile.sigma
    return profile.lam * math.exp(0.5 * exp_integral_Ei(y, p))


def smooth_profile(entangler: EntanglerProfile | None = None) -> ConstraintProfile:
    """Vectorised analytic constraint profile for the Gaussian entangler."""
    ent = entangler or EntanglerProfile()
    if ent.variant is not Variant.SMOOTH:
        raise DomainError("smooth_profile needs the smooth entangler")
    lam, sig = ent.lam, ent.sigma
    # with sigma != e^gamma the ln term no longer cancels: alpha/|k| = (e^gamma/sigma)^(1/2) exp(-Ein/2)
    shift = math.exp(0.5 * (math.log(SIGMA) - math.log(sig)))

    def ratio(ka):
        return shift * np.exp(-0.5 * ein((ka / lam) ** 2 / sig))

    def alpha(ka):
        # past the series range alpha = L exp(-E1(z)/2) <= L exactly
        z = (ka / lam) ** 2 / sig
        out = ka * ratio(ka)
        big = z >= 2.0
        if np.any(big):
            out = np.where(big, lam * np.exp(-0.5 * _e1_cf_vec(np.where(big, z, 2.0))), out)
        return out

    def alpha_mp(k):
        k = mpmath.mpf(k)
        sh = mpmath.sqrt(mpmath.exp(mpmath.euler) / mpmath.mpf(sig))
        return abs(k) * sh * mpmath.exp(-ein_mp((k / lam) ** 2 / mpmath.mpf(sig)) / 2)

    return ConstraintProfile(
        alpha_fn=alpha,
        lam=lam,
        provenance=Provenance.ANALYTIC_EI,
        ratio_fn=ratio,
        alpha_mp=alpha_mp,
        uv="product",
        params={"sigma": sig},
    )


def cft_profile(lam: float = 1.0) -> ConstraintProfile:
    """``alpha(k) = |k|``: the CFT ground state."""
    if not lam > 0:
        raise DomainError("lambda must be positive")
    return ConstraintProfile(
        alpha_fn=lambda ka: ka * 1.0,
        lam=lam,
        provenance=Provenance.CFT,
        ratio_fn=lambda ka: np.ones_like(ka),
        alpha_mp=lambda k: abs(mpmath.mpf(k)),
        uv="cft",
    )


def sharp_profile(lam: float = 1.0) -> ConstraintProfile:
    """Fixed point of the sharp-cutoff flow: ``min(|k|, L)``."""
    if not lam > 0:
        raise DomainError("lambda must be positive")
    return ConstraintProfile(
        alpha_fn=lambda ka: np.minimum(ka, lam),
        lam=lam,
        provenance=Provenance.SHARP_FIXED_POINT,
        ratio_fn=lambda ka: np.where(ka <= lam, 1.0, lam / np.where(ka > 0, ka, 1.0)),
        uv="product",
    )


# ---------------------------------------------------------------------------
# ODE route

def _solve_segment(g, u0, y0, u_eval, rtol, atol):
    # y = ln alpha, u = ln k:  dy/du = 2 g(e^u)
    def rhs(u, y):
        return [2.0 * float(g(math.exp(u)))]

    sol = solve_ivp(rhs, (u0, u_eval[-1]), [y0], method="DOP853", t_eval=u_eval,
                    rtol=rtol, atol=atol, dense_output=True)
    if not sol.success:
        raise IntegrationError(f"ODE integration failed: {sol.message}")
    return sol


def alpha_ode_solve(profile, k_grid, anchor, rtol: float = 1e-12) -> ConstraintProfile:
    """Integrate ``d alpha/dk = 2 g(k) alpha/k`` across ``k_grid`` from ``anchor``.

    The equation is solved for ``ln alpha`` against ``ln k`` with an adaptive
    8th-order Dormand-Prince scheme.  A second solve at a hundredfold tighter
    tolerance supplies the per-point local error estimate.  For the sharp
    entangler each side of ``|k| = L`` is integrated separately and matched.

    Parameters
    ----------
    profile : EntanglerProfile or callable
        ``g``.  Any callable ``g(k)`` is accepted (e.g. ``lambda k: 0``).
    k_grid : array_like
        Strictly increasing positive momenta.
    anchor : (k0, alpha0)
        Initial condition with ``0 < k0 <= k_grid[0]``.
    """
    k_grid = np.asarray(k_grid, dtype=float)
    if k_grid.ndim != 1 or k_grid.size < 2:
        raise DomainError("k_grid must be a 1-d array with at least two points")
    if np.any(k_grid <= 0) or np.any(np.diff(k_grid) <= 0):
        raise DomainError("k_grid must be strictly positive and increasing")
    k0, a0 = float(anchor[0]), float(anchor[1])
    if not (k0 > 0 and a0 > 0):
        raise DomainError("anchor must have k0 > 0 and alpha0 > 0")
    if k0 > k_grid[0] * (1 + 1e-14):
        raise DomainError("anchor must lie at or below the first grid point")

    lam = getattr(profile, "lam", 1.0)
    sharp = isinstance(profile, EntanglerProfile) and profile.variant is Variant.SHARP
    g = profile if callable(profile) else None
    if g is None:
        raise DomainError("profile must be callable")

    def run(tol):
        u_eval = np.log(k_grid)
        u0, y0 = math.log(k0), math.log(a0)
        if not sharp:
            sol = _solve_segment(g, u0, y0, u_eval, tol, tol * 1e-3)
            return sol.y[0], [(u0, sol)]
        # g is piecewise constant: integrate [k0, L] with g = 1/2 and (L, inf) with g = 0
        uL = math.log(lam)
        inner = u_eval[u_eval <= uL]
        outer = u_eval[u_eval > uL]
        ys = []
        segs = []
        if u0 < uL:
            u_stop = np.append(inner, uL) if inner.size == 0 or inner[-1] < uL else inner
            sol_in = _solve_segment(lambda k: 0.5, u0, y0, u_stop, tol, tol * 1e-3)
            y_in = sol_in.y[0]
            ys.append(y_in[: inner.size])
            yL = float(sol_in.sol(uL)[0])
            segs.append((u0, sol_in))
        else:
            yL = y0
        if outer.size:
            sol_out = _solve_segment(lambda k: 0.0, uL, yL, outer, tol, tol * 1e-3)
            ys.append(sol_out.y[0])
            segs.append((uL, sol_out))
        return np.concatenate(ys), segs

    y_coarse, _ = run(rtol)
    y_fine, segs = run(max(rtol * 1e-2, 3e-14))
    alpha = np.exp(y_fine)
    if np.any(~np.isfinite(alpha)):
        raise IntegrationError("non-finite alpha encountered")
    if np.any(alpha <= 0):
        raise ConsistencyError("non-positive alpha encountered")
    local_error = np.abs(np.exp(y_coarse) - alpha)
    samples = np.column_stack([k_grid, alpha, local_error])

    def alpha_fn(ka):
        ka = np.asarray(ka, dtype=float)
        u = np.log(ka)
        flat = np.atleast_1d(u)
        res = np.empty_like(flat)
        for i, ui in enumerate(flat):
            sol = segs[0][1]
            for s0, s in segs:
                if ui >= s0:
                    sol = s
            res[i] = math.exp(float(sol.sol(ui)[0]))
        return res.reshape(np.shape(u))

    return ConstraintProfile(
        alpha_fn=alpha_fn,
        lam=lam,
        provenance=Provenance.ODE_SOLVED,
        uv="product",
        samples=samples,
        k_range=(k0, float(k_grid[-1])),
        params={"anchor": [k0, a0], "rtol": rtol},
    )


# ---------------------------------------------------------------------------
# serialisation

def profile_table(profile: ConstraintProfile, k) -> np.ndarray:
    """``(k, alpha, local_error)`` rows; error 0 for closed-form profiles."""
    k = np.asarray(k, dtype=float)
    if profile.samples is not None and np.array_equal(profile.samples[:, 0], k):
        return profile.samples.copy()
    return np.column_stack([k, profile.alpha(k), np.zeros_like(k)])


def format_float(v) -> str:
    """Locale-independent shortest round-trip representation."""
    return repr(float(v))


def profile_to_csv(profile: ConstraintProfile, k) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "alpha", "local_error"])
    for row in profile_table(profile, k):
        w.writerow([format_float(v) for v in row])
    return buf.getvalue()


def profile_to_json(profile: ConstraintProfile, k) -> str:
    table = profile_table(profile, k)
    doc = {
        "parameters": profile.key(),
        "columns": ["k", "alpha", "local_error"],
        "rows": [[float(v) for v in row] for row in table],
    }
    return json.dumps(doc, indent=2, sort_keys=True)
