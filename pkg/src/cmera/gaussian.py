"""
Two-point functions of the Gaussian state fixed by a constraint profile.

The state has ``<phi(k) phi(k')> = delta(k+k')/(2 alpha)``,
``<pi(k) pi(k')> = delta(k+k') alpha/2`` and ``<phi(k) pi(k')> = (i/2) delta(k+k')``.
With ``dphi = (phi' - pi)/2`` and ``dbar = (phi' + pi)/2`` the momentum
integrands of the chiral correlators are

    <dphi dphi> : (k + alpha)^2 / (8 alpha)
    <dphi dbar> : (k^2 - alpha^2) / (8 alpha)

At ``x != 0`` the polynomial parts of these integrands transform to contact
terms and drop out.  What remains is an even function of ``k`` that decays
like a Gaussian for the cMERA profile, and whose kink at ``k = 0`` fixes the
long-distance power law.  All transforms below are written in terms of
``rho = alpha/|k|``, so no ``0/0`` appears near ``k = 0``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import special

from .errors import AccuracyError, DomainError, FitError, WindowError
from .profiles import ConstraintProfile, format_float
from .quadrature import geometric_edges, panel_rule

_EPS = np.finfo(float).eps


class CorrelatorKind(str, Enum):
    PHI_PHI_SUBTRACTED = "phi_phi_subtracted"
    DPHI_DPHI = "dphi_dphi"
    DBAR_DBAR = "dbar_dbar"
    MIXED = "mixed_dphi_dbar"
    TT = "TT"
    VERTEX = "vertex"


@dataclass(frozen=True)
class GaussianState:
    """Gaussian state defined by ``profile``; ``ir_cutoff`` removes ``|k| < k_IR``."""

    profile: ConstraintProfile
    ir_cutoff: float = 0.0

    def __post_init__(self):
        if self.ir_cutoff < 0:
            raise DomainError("ir_cutoff must be nonnegative")

    @property
    def lam(self) -> float:
        return self.profile.lam

    def cov_phiphi(self, k):
        return 0.5 / np.asarray(self.profile.alpha(k), dtype=float)

    def cov_pipi(self, k):
        return 0.5 * np.asarray(self.profile.alpha(k), dtype=float)

    def cov_phipi(self, k):
        return 0.5j * np.ones_like(np.asarray(k, dtype=float))


@dataclass(frozen=True)
class QuadSettings:
    """Momentum quadrature for the correlator transforms."""

    k_max_mult: float = 10.0
    nodes: int = 24
    max_width: float = 0.25
    per_wavelength: float = 2.0
    rel_tol: float = 1e-8


# ---------------------------------------------------------------------------
# integrands (even parts after contact subtraction)

def _rho(state: GaussianState, k):
    return np.asarray(state.profile.ratio(k), dtype=float)


def dphi_remainder(state: GaussianState, k):
    """``(k+alpha)^2/(8 alpha)`` minus ``k/4 + (k^2 + L^2)/(8 L)``, for ``k >= 0``."""
    lam = state.lam
    k = np.asarray(k, dtype=float)
    rho = _rho(state, k)
    return (k * rho - lam) * (rho * lam - k) / (8.0 * rho * lam)


def mixed_remainder(state: GaussianState, k):
    """``(k^2 - alpha^2)/(8 alpha)`` minus ``(k^2/L - L)/8``, for ``k >= 0``."""
    lam = state.lam
    k = np.asarray(k, dtype=float)
    rho = _rho(state, k)
    return (lam - k * rho) * (k + rho * lam) / (8.0 * rho * lam)


def phiphi_remainder(state: GaussianState, k):
    """``1/(2 alpha) - 1/(2 L)``; behaves like ``1/(2k)`` at small ``k``."""
    lam = state.lam
    k = np.asarray(k, dtype=float)
    rho = _rho(state, k)
    return (lam - k * rho) / (2.0 * k * rho * lam)


def dphi_even_full(state: GaussianState, k):
    """Even part of the full ``<dphi dphi>`` integrand, ``k^2/(8 alpha) + alpha/8``."""
    k = np.asarray(k, dtype=float)
    rho = _rho(state, k)
    return k * (1.0 / rho + rho) / 8.0


def mixed_full(state: GaussianState, k):
    k = np.asarray(k, dtype=float)
    rho = _rho(state, k)
    return k * (1.0 / rho - rho) / 8.0


# ---------------------------------------------------------------------------
# cosine transforms

def _edges(state: GaussianState, x: float, lo: float, settings: QuadSettings, log_singular: bool):
    lam = state.lam
    K = settings.k_max_mult * lam
    width = min(settings.max_width * lam, 2 * math.pi / (settings.per_wavelength * max(x, 1e-300)))
    parts = []
    start = lo
    if log_singular:
        stop = min(lam, 1.0 / x) if x > 0 else lam
        stop = max(stop, 2 * lo)
        parts.append(geometric_edges(lo, stop, 2.0))
        start = stop
    n = max(1, int(math.ceil((K - start) / width)))
    parts.append(np.linspace(start, K, n + 1))
    edges = np.unique(np.concatenate(parts + [[lam]] if lo < lam < K else parts))
    return edges[(edges >= lo) & (edges <= K)]


def _cos_transform(fun, state: GaussianState, x: float, settings: QuadSettings, lo: float = 0.0,
                   log_singular: bool = False):
    """``(1/pi) int_lo^K cos(kx) fun(k) dk`` with an error estimate."""
    edges = _edges(state, x, lo, settings, log_singular)
    k, w = panel_rule(edges, settings.nodes)
    kc, wc = panel_rule(edges, max(4, settings.nodes // 2))
    fk = fun(k)
    fine = float(np.sum(w * np.cos(k * x) * fk))
    coarse = float(np.sum(wc * np.cos(kc * x) * fun(kc)))
    rounding = 4 * _EPS * float(np.sum(np.abs(w * fk))) * math.sqrt(k.size)
    return fine / math.pi, (abs(fine - coarse) + rounding) / math.pi


def _ir_piece(fun, state: GaussianState, x: float, settings: QuadSettings):
    """``(1/pi) int_0^{k_IR} cos(kx) fun(k) dk`` over the excluded shell."""
    kir = state.ir_cutoff
    if kir == 0:
        return 0.0
    k, w = panel_rule(np.linspace(0.0, kir, 9), settings.nodes)
    return float(np.sum(w * np.cos(k * x) * fun(k))) / math.pi


def _positive(x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0):
        raise DomainError("separations must be positive")
    return x


# ---------------------------------------------------------------------------
# correlators

@dataclass(frozen=True)
class CorrelatorTable:
    kind: CorrelatorKind
    separations: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    lam: float = 1.0
    params: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["separation", "value", "error"])
        for s, v, e in zip(self.separations, self.values, self.errors):
            w.writerow([format_float(s), format_float(v), format_float(e)])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "kind": self.kind.value,
            "lambda": self.lam,
            "params": self.params,
            "columns": ["separation", "value", "error"],
            "rows": [[float(s), float(v), float(e)]
                     for s, v, e in zip(self.separations, self.values, self.errors)],
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def corr_dphi_dphi(state: GaussianState, x, settings: QuadSettings | None = None,
                   with_error: bool = False):
    """``<dphi(x) dphi(0)>`` at ``x > 0``; real.

    CFT profile: ``-1/(4 pi x^2)`` in closed form.  Otherwise the cosine
    transform of :func:`dphi_remainder`.  An IR cutoff removes the
    ``|k| < k_IR`` shell of the full integrand.
    """
    st = settings or QuadSettings()
    xs = _positive(x)
    vals = np.empty(xs.size)
    errs = np.empty(xs.size)
    kir = state.ir_cutoff
    for i, xv in enumerate(xs):
        if state.profile.is_cft:
            v, e = -1.0 / (4 * math.pi * xv * xv), 0.0
            if kir > 0:
                z = kir * xv
                v -= (z * math.sin(z) + math.cos(z) - 1.0) / (4 * math.pi * xv * xv)
        else:
            v, e = _cos_transform(lambda k: dphi_remainder(state, k), state, xv, st)
            v -= _ir_piece(lambda k: dphi_even_full(state, k), state, xv, st)
        vals[i], errs[i] = v, e
    return _ret(vals, errs, x, with_error)


def corr_dbar_dbar(state: GaussianState, x, settings: QuadSettings | None = None,
                   with_error: bool = False):
    """``<dbar(x) dbar(0)>``; equal to the right-mover correlator by parity."""
    return corr_dphi_dphi(state, x, settings, with_error)


def corr_mixed(state: GaussianState, x, settings: QuadSettings | None = None, with_error: bool = False):
    """``<dphi(x) dbar(0)>``; vanishes identically when ``alpha = |k|``."""
    st = settings or QuadSettings()
    xs = np.abs(np.atleast_1d(np.asarray(x, dtype=float)))
    if np.any(xs == 0):
        raise DomainError("separations must be nonzero")
    vals = np.zeros(xs.size)
    errs = np.zeros(xs.size)
    if not state.profile.is_cft:
        for i, xv in enumerate(xs):
            v, e = _cos_transform(lambda k: mixed_remainder(state, k), state, xv, st)
            v -= _ir_piece(lambda k: mixed_full(state, k), state, xv, st)
            vals[i], errs[i] = v, e
    return _ret(vals, errs, x, with_error)


def corr_TT(state: GaussianState, x, settings: QuadSettings | None = None, with_error: bool = False):
    """``<T(x) T(0)> = 8 pi^2 <dphi(x) dphi(0)>^2`` (Wick, ``T = -2 pi :dphi dphi:``)."""
    v, e = corr_dphi_dphi(state, x, settings, with_error=True)
    tt = 8 * math.pi ** 2 * np.asarray(v) ** 2
    err = 16 * math.pi ** 2 * np.abs(v) * np.asarray(e)
    return _ret(np.atleast_1d(tt), np.atleast_1d(err), x, with_error)


def corr_phi_phi_subtracted(state: GaussianState, x, x0: float | None = None,
                            settings: QuadSettings | None = None, with_error: bool = False):
    """``<phi(x) phi(0)> - <phi(x0) phi(0)>`` with ``x0 = 1/L`` by default.

    The difference is IR finite, so no cutoff is required.
    """
    st = settings or QuadSettings()
    xs = _positive(x)
    x0 = 1.0 / state.lam if x0 is None else float(x0)
    kir = state.ir_cutoff
    vals = np.empty(xs.size)
    errs = np.empty(xs.size)
    for i, xv in enumerate(xs):
        if state.profile.is_cft:
            if kir > 0:
                ci = special.sici([kir * x0, kir * xv])[1]
                vals[i] = (ci[0] - ci[1]) / (2 * math.pi)
            else:
                vals[i] = -math.log(xv / x0) / (2 * math.pi)
            errs[i] = 0.0
            continue
        lo = kir if kir > 0 else 0.0

        def fun(k, xv=xv):
            # (cos kx - cos kx0)(1/(2 alpha) - 1/(2L)), finite at k = 0
            diff = -2 * np.sin(0.5 * k * (xv + x0)) * np.sin(0.5 * k * (xv - x0))
            return diff * phiphi_remainder(state, k)

        edges = _edges(state, max(xv, x0), lo, st, log_singular=lo > 0)
        k, w = panel_rule(edges, st.nodes)
        kc, wc = panel_rule(edges, max(4, st.nodes // 2))
        fk = fun(k)
        fine = float(np.sum(w * fk))
        coarse = float(np.sum(wc * fun(kc)))
        # the constant 1/(2L) over k > lo contributes only through the lower limit
        const = (math.sin(lo * x0) / x0 - math.sin(lo * xv) / xv) / (2 * math.pi * state.lam)
        vals[i] = fine / math.pi + const
        errs[i] = (abs(fine - coarse) + 4 * _EPS * float(np.sum(np.abs(w * fk)))) / math.pi
    return _ret(vals, errs, x, with_error)


def phi_phi_regulated(state: GaussianState, x, k_ir: float, settings: QuadSettings | None = None,
                      with_error: bool = False):
    """``G(x) = (1/2 pi) int_{|k| > k_IR} e^{ikx} dk / (2 alpha)`` at ``x > 0``."""
    if not k_ir > 0:
        raise DomainError("k_IR must be positive")
    st = settings or QuadSettings()
    xs = _positive(x)
    lam = state.lam
    vals = np.empty(xs.size)
    errs = np.empty(xs.size)
    for i, xv in enumerate(xs):
        if state.profile.is_cft:
            vals[i] = -special.sici(k_ir * xv)[1] / (2 * math.pi)
            errs[i] = 0.0
            continue
        v, e = _cos_transform(lambda k: phiphi_remainder(state, k), state, xv, st, lo=k_ir,
                              log_singular=True)
        # the 1/(2L) part from k_IR to infinity, at x != 0
        v -= math.sin(k_ir * xv) / (2 * math.pi * lam * xv)
        vals[i], errs[i] = v, e
    return _ret(vals, errs, x, with_error)


def vertex_correlator(state: GaussianState, nu: float, x, k_ir: float,
                      settings: QuadSettings | None = None, with_error: bool = False,
                      max_window: float = 0.05):
    """``exp(nu^2 G(x))`` with the IR-regulated ``<phi phi>``.

    Raises
    ------
    WindowError
        If some ``x k_IR`` exceeds ``max_window``.
    """
    xs = _positive(x)
    if np.any(xs * k_ir > max_window):
        raise WindowError(f"x k_IR must stay below {max_window}; got max {np.max(xs) * k_ir:.3g}")
    if nu == 0:
        return _ret(np.ones(xs.size), np.zeros(xs.size), x, with_error)
    g, ge = phi_phi_regulated(state, xs, k_ir, settings, with_error=True)
    v = np.exp(nu * nu * g)
    return _ret(v, v * nu * nu * ge, x, with_error)


def _ret(vals, errs, x, with_error):
    if np.ndim(x) == 0:
        vals, errs = float(vals[0]), float(errs[0])
    if with_error:
        return vals, errs
    return vals


def correlator_table(kind, state: GaussianState, x, nu: float | None = None, k_ir: float | None = None,
                     settings: QuadSettings | None = None, check: bool = True) -> CorrelatorTable:
    """Tabulate one correlator; raises :class:`AccuracyError` on loose error bars."""
    kind = CorrelatorKind(kind)
    xs = np.asarray(x, dtype=float)
    params = {"ir_cutoff": state.ir_cutoff, "profile": state.profile.provenance.value}
    if kind in (CorrelatorKind.DPHI_DPHI, CorrelatorKind.DBAR_DBAR):
        v, e = corr_dphi_dphi(state, xs, settings, with_error=True)
    elif kind is CorrelatorKind.MIXED:
        v, e = corr_mixed(state, xs, settings, with_error=True)
    elif kind is CorrelatorKind.TT:
        v, e = corr_TT(state, xs, settings, with_error=True)
    elif kind is CorrelatorKind.PHI_PHI_SUBTRACTED:
        v, e = corr_phi_phi_subtracted(state, xs, settings=settings, with_error=True)
    else:
        if nu is None or k_ir is None:
            raise DomainError("vertex table needs nu and k_ir")
        v, e = vertex_correlator(state, nu, xs, k_ir, settings, with_error=True)
        params.update({"nu": nu, "k_ir": k_ir})
    tol = (settings or QuadSettings()).rel_tol
    if check and kind is not CorrelatorKind.MIXED:
        bad = np.asarray(e) > tol * np.abs(v) + 1e-300
        if np.any(bad):
            i = int(np.argmax(np.asarray(e) / (np.abs(v) + 1e-300)))
            raise AccuracyError(f"{kind.value}: quadrature error {e[i]:.3e} at x = {xs[i]}",
                                worst=float(xs[i]))
    return CorrelatorTable(kind, xs, np.asarray(v), np.asarray(e), state.lam, params)


# ---------------------------------------------------------------------------
# conformal data

@dataclass(frozen=True)
class PowerLawFit:
    delta: float
    amplitude: float
    r2: float
    window: tuple


def _weights(values, errors):
    rel = np.asarray(errors) / np.abs(values)
    rel = np.maximum(rel, 1e-15)
    return 1.0 / rel ** 2


def dimension_fit(table: CorrelatorTable, window=None, r2_min: float = 0.999) -> PowerLawFit:
    """Fit ``value = -A / x^(2 Delta)`` by weighted least squares in log-log.

    Weights are inverse variances of ``log|value|`` from the quadrature errors.
    """
    x = table.separations
    v = table.values
    sel = np.ones(x.size, bool) if window is None else (x * table.lam >= window[0]) & (x * table.lam <= window[1])
    x, v, e = x[sel], v[sel], table.errors[sel]
    if x.size < 3:
        raise FitError("need at least three samples")
    if np.log10(x.max() / x.min()) < 1.0 - 1e-9:
        raise FitError("fit table must span at least one decade")
    if np.any(np.sign(v) != np.sign(v[0])):
        raise FitError("values change sign inside the fit window")
    lx, ly = np.log(x), np.log(np.abs(v))
    w = _weights(v, e)
    W = np.sqrt(w / w.max())
    A = np.column_stack([np.ones_like(lx), lx])
    coef, *_ = np.linalg.lstsq(A * W[:, None], ly * W, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum(w * (ly - pred) ** 2))
    ss_tot = float(np.sum(w * (ly - np.average(ly, weights=w)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    if r2 < r2_min:
        raise FitError(f"poor log-log linearity (R^2 = {r2:.6f})")
    delta = -coef[1] / 2.0
    amp = float(np.exp(coef[0]))
    return PowerLawFit(float(delta), amp, r2, (float(x.min()), float(x.max())))


def ope_amplitude(table: CorrelatorTable, window=(20.0, 100.0)) -> np.ndarray:
    """Pointwise ``-4 pi x^2 <dphi dphi>`` on the window."""
    x = table.separations
    sel = (x * table.lam >= window[0]) & (x * table.lam <= window[1])
    return -4 * math.pi * x[sel] ** 2 * table.values[sel]


def central_charge_fit(table: CorrelatorTable, window=(20.0, 100.0), plateau_tol: float = 0.05):
    """``c = 2 x^4 <TT>`` averaged over the window.

    Returns ``(c, samples)``; raises :class:`FitError` if the samples spread
    by more than ``plateau_tol`` relative.
    """
    if table.kind is not CorrelatorKind.TT:
        raise FitError("central_charge_fit needs a TT table")
    x = table.separations
    sel = (x * table.lam >= window[0]) & (x * table.lam <= window[1])
    if np.count_nonzero(sel) < 2:
        raise FitError("fewer than two samples in the window")
    cs = 2.0 * x[sel] ** 4 * table.values[sel]
    c = float(np.mean(cs))
    if np.ptp(cs) > plateau_tol * abs(c):
        raise FitError(f"no plateau: c ranges over [{cs.min():.4f}, {cs.max():.4f}]")
    return c, cs


def vertex_dimension_fit(nu: float, table: CorrelatorTable, window=None) -> float:
    """``Delta`` from the slope of ``-log(correlator)`` against ``log x`` (``= 2 Delta``)."""
    x = table.separations
    v = table.values
    if window is not None:
        sel = (x * table.lam >= window[0]) & (x * table.lam <= window[1])
        x, v = x[sel], v[sel]
    if x.size < 3:
        raise FitError("need at least three samples")
    if np.any(v <= 0):
        raise FitError("vertex correlator must be positive")
    slope = np.polyfit(np.log(x), -np.log(v), 1)[0]
    return float(slope / 2.0)


def vertex_dimension_sweep(state: GaussianState, nu: float, x, k_irs=(1e-4, 1e-5),
                           settings: QuadSettings | None = None) -> dict:
    """Fit ``Delta_nu`` for each ``k_IR``; report the spread across regulators."""
    deltas = {}
    for kir in k_irs:
        tab = correlator_table("vertex", state, x, nu=nu, k_ir=kir * state.lam, settings=settings)
        deltas[kir] = vertex_dimension_fit(nu, tab)
    vals = np.array(list(deltas.values()))
    return {
        "nu_squared": nu * nu,
        "expected": nu * nu / (4 * math.pi),
        "delta": {repr(k): float(d) for k, d in deltas.items()},
        "relative_shift": float(np.ptp(vals) / abs(vals.mean())),
    }


def kernel_phi_phi_subtracted(profile: ConstraintProfile, x, x0: float | None = None,
                              settings: QuadSettings | None = None) -> np.ndarray:
    """The subtracted ``<phi phi>`` assembled from smeared CFT fields.

    The cMERA field is the CFT field smeared with the kernel whose symbol is
    ``sqrt(|k|/alpha)`` (the ``pi``-type symbol, split into subtractor plus
    remainder as in :mod:`cmera.kernels`), so the correlator is the CFT
    covariance ``1/(2|k|)`` times that symbol squared.
    """
    from .kernels import symbol

    st = settings or QuadSettings()
    sym = symbol("mu_pi", profile)
    lam = profile.lam
    x0 = 1.0 / lam if x0 is None else float(x0)
    xs = _positive(x)
    out = np.empty(xs.size)
    K = st.k_max_mult * lam
    for i, xv in enumerate(xs):
        edges = np.union1d(np.linspace(0, K, int(K * max(xv, x0) / 0.5) + 2), [lam])
        k, w = panel_rule(edges, st.nodes)
        smeared = (sym.subtractor(k) + sym.remainder(k)) ** 2
        diff = -2 * np.sin(0.5 * k * (xv + x0)) * np.sin(0.5 * k * (xv - x0))
        # smeared CFT covariance minus its large-k value 1/(2L); the constant integrates to 0
        out[i] = float(np.sum(w * diff * (smeared / (2 * k) - 0.5 / lam))) / math.pi
    return out
