"""
Flow of linear constraints under ``L + K~`` with the sharp entangler.

A Gaussian state annihilated by ``sqrt(beta/2) phi(k) + i pi(k)/sqrt(2 beta)``
is labelled by ``(k, beta)``.  One step of length ``eps`` relabels
``k -> k e^{-eps}`` and rescales ``beta -> e^{-eps} beta`` when the pre-step
``|k| <= L``; above the cutoff ``beta`` is unchanged.  Starting from the
product state ``beta = L`` the profile after a total scale ``s < 0`` has two
plateaus joined by the conformal line ``beta = |k|``, and tends to the sharp
fixed point ``min(|k|, L)`` as ``s -> -inf``.

Profiles live on the log grid ``k_i = L e^{i h}`` (``k > 0`` only, ``beta``
is even) with ``L`` itself on the grid.  Steps are whole multiples of ``h``
applied one index shift at a time, so no step straddles ``|k| = L`` and the
semigroup property holds without interpolation.  The entangler ``K~`` is not
quasi-local; this module is diagnostic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .profiles import ConstraintProfile, Provenance, format_float

DEFAULT_H = 1e-3


@dataclass(frozen=True)
class FlowState:
    """Sampled constraint profile at accumulated scale ``s``.

    ``beta[j]`` is the value at ``k_j = lam * exp((i_lo + j) h)``.  Beyond
    the top of the grid ``beta`` is taken equal to its last sample, which is
    exact for every state reachable from the product state when the grid
    extends above ``lam``.
    """

    beta: np.ndarray
    s: float
    lam: float
    h: float = DEFAULT_H
    i_lo: int = -32000

    def __post_init__(self):
        if not (self.lam > 0 and self.h > 0):
            raise DomainError("lambda and h must be positive")
        if self.s > 0:
            raise DomainError("accumulated scale s must be nonpositive")
        b = np.asarray(self.beta, dtype=float)
        if b.ndim != 1 or b.size < 2 or not np.all(b > 0):
            raise DomainError("beta must be a positive 1-d sample array")
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)

    @property
    def index(self) -> np.ndarray:
        return self.i_lo + np.arange(self.beta.size)

    @property
    def k(self) -> np.ndarray:
        return self.lam * np.exp(self.index * self.h)

    def __call__(self, k):
        """``beta(|k|)`` by linear interpolation in ``log k`` (exact at grid points)."""
        ka = np.abs(np.asarray(k, dtype=float))
        if np.any(ka == 0):
            raise DomainError("beta is sampled for k != 0 only")
        u = np.log(ka / self.lam) / self.h
        return np.interp(u, self.index.astype(float), self.beta)

    def to_profile(self) -> ConstraintProfile:
        return ConstraintProfile(
            alpha_fn=lambda ka: self(ka),
            lam=self.lam,
            provenance=Provenance.FLOW_SNAPSHOT,
            s_ir=self.s,
            samples=np.column_stack([self.k, self.beta]),
            k_range=(float(self.k[0]), float(self.k[-1])),
            params={"h": self.h, "i_lo": self.i_lo},
        )


def log_grid(lam: float = 1.0, h: float = DEFAULT_H, u_min: float = -32.0, u_max: float = 2.0):
    """Index range ``[i_lo, i_hi]`` covering ``log(k/lam)`` in ``[u_min, u_max]``."""
    if not (u_min < 0 < u_max):
        raise DomainError("grid must straddle k = lambda")
    return int(math.floor(u_min / h)), int(math.ceil(u_max / h))


def product_state(lam: float = 1.0, h: float = DEFAULT_H, u_min: float = -32.0, u_max: float = 2.0) -> FlowState:
    """``s = 0``: ``beta = lam`` everywhere."""
    i_lo, i_hi = log_grid(lam, h, u_min, u_max)
    return FlowState(np.full(i_hi - i_lo + 1, float(lam)), 0.0, lam, h, i_lo)


def from_function(beta_fn, s: float = 0.0, lam: float = 1.0, h: float = DEFAULT_H,
                  u_min: float = -32.0, u_max: float = 2.0) -> FlowState:
    i_lo, i_hi = log_grid(lam, h, u_min, u_max)
    k = lam * np.exp(np.arange(i_lo, i_hi + 1) * h)
    return FlowState(np.asarray(beta_fn(k), dtype=float), s, lam, h, i_lo)


def _unit_step(beta: np.ndarray, inside: np.ndarray, shrink: float) -> np.ndarray:
    # value at k_j comes from the pre-image k_{j+1}; the regime test uses the pre-step k
    pre = np.empty_like(beta)
    pre[:-1] = beta[1:]
    pre[-1] = beta[-1]
    return np.where(inside, shrink * pre, pre)


def steps_for(eps: float, h: float) -> int:
    m = eps / h
    n = int(round(m))
    if eps < 0 or abs(m - n) > 1e-9 * max(1.0, m):
        raise DomainError(f"eps = {eps} must be a nonnegative integer multiple of the grid spacing h = {h}")
    return n


def flow_step(state: FlowState, eps: float) -> FlowState:
    """Flow by ``eps`` (a whole number of grid spacings) as successive unit shifts."""
    n = steps_for(eps, state.h)
    if n == 0:
        return state
    # pre-image of k_j is k_{j+1}: inside the cutoff when its index is <= 0
    inside = np.append(state.index[1:], state.index[-1] + 1) <= 0
    shrink = math.exp(-state.h)
    beta = np.array(state.beta)
    for _ in range(n):
        beta = _unit_step(beta, inside, shrink)
    return FlowState(beta, state.s - n * state.h, state.lam, state.h, state.i_lo)


def closed_form(s_ir: float, lam: float, k):
    """``lam e^s`` below ``lam e^s``, ``|k|`` up to ``lam``, then ``lam``."""
    if s_ir > 0:
        raise DomainError("s_IR must be nonpositive")
    ka = np.abs(np.asarray(k, dtype=float))
    return np.clip(ka, lam * math.exp(s_ir), lam)


def flow_profile(s_ir: float, lam: float = 1.0, method: str = "closed", h: float = DEFAULT_H,
                 u_min: float | None = None, u_max: float = 2.0) -> FlowState:
    """Profile after flowing the product state by ``s_ir``.

    ``method="closed"`` samples the three-regime closed form;
    ``method="iterate"`` applies ``|s_ir|/h`` unit steps from ``s = 0``.
    """
    if s_ir > 0:
        raise DomainError("s_IR must be nonpositive")
    u_min = min(-32.0, s_ir - 2.0) if u_min is None else u_min
    if method == "closed":
        n = steps_for(-s_ir, h)
        st = from_function(lambda k: closed_form(-n * h, lam, k), -n * h, lam, h, u_min, u_max)
        return st
    if method == "iterate":
        return flow_step(product_state(lam, h, u_min, u_max), -s_ir)
    raise DomainError("method must be 'closed' or 'iterate'")


def fixed_point_residual(lam: float = 1.0, eps: float | None = None, start: str = "sharp",
                         h: float = DEFAULT_H, region: float | None = None) -> float:
    """``max |beta' - beta|`` after one flow step, on the common grid.

    ``start`` is ``"sharp"`` (``min(|k|, lam)``), ``"constant"`` (``lam``)
    or ``"cft"`` (``|k|``, compared on ``|k| <= lam e^{-eps}`` only, where
    the line is invariant).  ``region`` restricts the comparison to
    ``|k| <= region``.
    """
    eps = h if eps is None else eps
    starts = {
        "sharp": lambda k: np.minimum(k, lam),
        "constant": lambda k: np.full_like(k, lam),
        "cft": lambda k: np.array(k, dtype=float),
    }
    if start not in starts:
        raise DomainError(f"unknown start {start!r}")
    st = from_function(starts[start], 0.0, lam, h)
    new = flow_step(st, eps)
    k = st.k
    mask = np.ones(k.size, dtype=bool)
    if start == "cft":
        mask &= k <= lam * math.exp(-eps) * (1 + 1e-12)
    if region is not None:
        mask &= k <= region * (1 + 1e-12)
    return float(np.max(np.abs(new.beta[mask] - st.beta[mask])))


def trajectory(s_values, lam: float = 1.0, h: float = DEFAULT_H, stride: int = 100,
               u_min: float = -32.0, u_max: float = 2.0) -> list[FlowState]:
    """States at each ``s`` in ``s_values`` (nonincreasing) by iterating from the product state."""
    s_values = [float(s) for s in s_values]
    if any(b > a for a, b in zip(s_values, s_values[1:])) or (s_values and s_values[0] > 0):
        raise DomainError("s_values must be nonpositive and nonincreasing")
    state = product_state(lam, h, u_min, u_max)
    out = []
    for s in s_values:
        state = flow_step(state, state.s - s if state.s > s else 0.0)
        out.append(state)
    return out


def trajectory_csv(states, stride: int = 100) -> str:
    """Rows ``s, k, beta`` for every ``stride``-th grid point."""
    lines = ["s,k,beta"]
    for st in states:
        k = st.k[::stride]
        b = st.beta[::stride]
        lines.extend(f"{format_float(st.s)},{format_float(ki)},{format_float(bi)}" for ki, bi in zip(k, b))
    return "\n".join(lines) + "\n"


def state_to_json(state: FlowState, stride: int = 100) -> str:
    return json.dumps({
        "s": state.s, "lambda": state.lam, "h": state.h, "i_lo": state.i_lo,
        "k": [float(v) for v in state.k[::stride]],
        "beta": [float(v) for v in state.beta[::stride]],
    }, indent=2, sort_keys=True)
