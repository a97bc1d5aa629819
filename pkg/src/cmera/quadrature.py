"""Composite Gauss-Legendre rules and closed-form oscillatory power tails."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .errors import DomainError


@lru_cache(maxsize=32)
def _gl(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def panel_rule(edges, n: int = 32):
    """Nodes and weights of an ``n``-point Gauss-Legendre rule on every panel."""
    edges = np.asarray(edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise DomainError("panel edges must be strictly increasing")
    t, w = _gl(n)
    a = edges[:-1, None]
    b = edges[1:, None]
    half = 0.5 * (b - a)
    nodes = (half * t + 0.5 * (a + b)).ravel()
    weights = (half * w).ravel()
    return nodes, weights


def geometric_edges(a: float, b: float, ratio: float = 2.0):
    """Panel edges ``a, a r, a r^2, ..., b`` for integrands singular at 0."""
    if not 0 < a < b:
        raise DomainError("geometric_edges needs 0 < a < b")
    n = max(1, int(np.ceil(np.log(b / a) / np.log(ratio))))
    return np.geomspace(a, b, n + 1)


@dataclass(frozen=True)
class QuadConfig:
    """Momentum quadrature for cosine transforms of decaying symbols.

    ``k_max_mult`` sets the truncation ``K = k_max_mult * lambda``; the
    integral beyond ``K`` comes from the asymptotic series in closed form.
    """

    k_max_mult: float = 40.0
    panels: int = 800
    nodes: int = 24
    tail_terms: int = 6
    rel_tol: float = 1e-8
    abs_tol: float = 1e-13

    def __post_init__(self):
        if not self.k_max_mult > 1:
            raise DomainError("k_max_mult must exceed 1")
        if self.panels < 1 or self.nodes < 4 or self.tail_terms < 1:
            raise DomainError("panels >= 1, nodes >= 4, tail_terms >= 1 required")

    def as_dict(self) -> dict:
        return {
            "k_max_mult": self.k_max_mult,
            "panels": self.panels,
            "nodes": self.nodes,
            "tail_terms": self.tail_terms,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
        }


def power_tail(xi: float, K: float, coeffs, powers, dps: int = 20):
    """``sum_n c_n int_K^inf e^{i q xi} q^{-p_n} dq`` as a complex number.

    Uses ``int_K^inf e^{i q xi} q^{-p} dq = K^{1-p} E_p(-i K xi)``.  Each
    term converges for ``xi > 0`` and any real ``p``.  Returns the sum and
    the magnitude of the last term kept, which bounds the truncation error
    once the series is in its asymptotic regime.
    """
    if xi <= 0:
        raise DomainError("power_tail requires xi > 0")
    with mpmath.workdps(dps):
        K_mp = mpmath.mpf(K)
        z = -1j * K_mp * mpmath.mpf(xi)
        total = mpmath.mpc(0)
        last = mpmath.mpf(0)
        for c, p in zip(coeffs, powers):
            p = mpmath.mpf(p)
            term = mpmath.mpf(c) * K_mp ** (1 - p) * mpmath.expint(p, z)
            total += term
            last = abs(term)
    return complex(total), float(last)


def power_tail_at_zero(K: float, coeffs, powers):
    """Non-oscillatory tail ``sum_n c_n int_K^inf q^{-p_n} dq`` (needs ``p_n > 1``)."""
    total = 0.0
    last = 0.0
    for c, p in zip(coeffs, powers):
        if p <= 1:
            raise DomainError("tail diverges at xi = 0 for p <= 1")
        term = c * K ** (1 - p) / (p - 1)
        total += term
        last = abs(term)
    return total, last


_LAG_T, _LAG_W = np.polynomial.laguerre.laggauss(60)


def power_tail_vec(xi, K: float, coeffs, powers, switch: float = 8.0):
    """Vectorised :func:`power_tail`.

    For ``K xi >= switch`` the contour is turned to ``q = K + i t/xi`` and the
    resulting ``e^-t`` integral is done by 60-point Gauss-Laguerre; below
    that the mpmath route is used point by point.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(xi <= 0):
        raise DomainError("power_tail requires xi > 0")
    out = np.empty(xi.shape, dtype=complex)
    last = np.empty(xi.shape)
    far = K * xi >= switch
    if np.any(far):
        z = xi[far]
        base = K + 1j * _LAG_T[None, :] / z[:, None]
        acc = np.zeros(base.shape, dtype=complex)
        for c, p in zip(coeffs, powers):
            acc += c * base ** (-p)
        out[far] = np.exp(1j * K * z) * (1j / z) * (acc @ _LAG_W)
        last[far] = abs(coeffs[-1]) * K ** (-powers[-1]) / z
    for i in np.flatnonzero(~far):
        out[i], last[i] = power_tail(float(xi[i]), K, coeffs, powers)
    return out, last
