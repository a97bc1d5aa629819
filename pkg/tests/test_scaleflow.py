import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmera.errors import DomainError
from cmera.scaleflow import (
    FlowState,
    closed_form,
    fixed_point_residual,
    flow_profile,
    flow_step,
    from_function,
    product_state,
    state_to_json,
    trajectory,
    trajectory_csv,
)

H = 1e-3


@pytest.fixture(scope="module")
def small_state():
    return product_state(1.0, H, u_min=-3.0, u_max=1.0)


def test_zero_step_is_identity(small_state):
    assert flow_step(small_state, 0.0) is small_state


def test_one_step_from_product(small_state):
    new = flow_step(small_state, H)
    inside = new.k <= 1.0 * math.exp(-H) * (1 + 1e-12)
    assert np.allclose(new.beta[inside], math.exp(-H), rtol=1e-15)
    assert np.all(new.beta[~inside] == 1.0)
    assert new.s == -H


def test_cft_line_invariant():
    st_ = from_function(lambda k: np.array(k), 0.0, 1.0, H, -3.0, 1.0)
    new = flow_step(st_, 5 * H)
    sel = st_.k <= math.exp(-5 * H) * (1 + 1e-12)
    assert np.allclose(new.beta[sel], st_.beta[sel], rtol=1e-13)


def test_profile_at_zero_scale():
    p = flow_profile(0.0, 2.0, u_min=-3.0)
    assert np.all(p.beta == 2.0)


def test_profile_s_minus_one_routes_agree():
    a = flow_profile(-1.0, method="closed", u_min=-4.0)
    b = flow_profile(-1.0, method="iterate", u_min=-4.0)
    assert np.max(np.abs(a.beta - b.beta) / a.beta) < 1e-6
    k = np.array([0.1, 0.5, 2.0])
    # log-linear interpolation of |k| between grid points: relative error h^2/8
    assert np.allclose(a(k), [math.exp(-1), 0.5, 1.0], rtol=H * H)


def test_deep_flow_reaches_fixed_point():
    p = flow_profile(-30.0, method="iterate")
    sel = p.k >= math.exp(-29)
    assert np.max(np.abs(p.beta[sel] - np.minimum(p.k[sel], 1.0))) < 1e-12


def test_fixed_point_residuals():
    assert fixed_point_residual(1.0) < 1e-10
    assert fixed_point_residual(1.0, start="constant", region=1.0) == pytest.approx(1 - math.exp(-H), rel=1e-12)
    assert fixed_point_residual(1.0, start="cft") < 1e-12
    with pytest.raises(DomainError):
        fixed_point_residual(1.0, start="nope")


def test_semigroup(small_state):
    a = flow_step(flow_step(small_state, 0.3), 0.2)
    b = flow_step(small_state, 0.5)
    assert np.array_equal(a.beta, b.beta)
    assert a.s == pytest.approx(b.s)


def test_non_multiple_step_rejected(small_state):
    with pytest.raises(DomainError):
        flow_step(small_state, 1.5e-3)
    with pytest.raises(DomainError):
        flow_step(small_state, -1e-3)


def test_state_validation():
    with pytest.raises(DomainError):
        FlowState(np.array([1.0, 1.0]), 0.5, 1.0)
    with pytest.raises(DomainError):
        FlowState(np.array([1.0, 0.0]), 0.0, 1.0)
    with pytest.raises(DomainError):
        closed_form(0.1, 1.0, 1.0)


def test_monotone_approach():
    k = np.array([1e-3, 0.05, 0.5, 3.0])
    target = np.minimum(k, 1.0)
    prev = np.full(k.size, np.inf)
    for s in (0.0, -0.5, -2.0, -5.0, -8.0):
        dev = np.abs(closed_form(s, 1.0, k) - target)
        assert np.all(dev <= prev)
        prev = dev


@settings(max_examples=15, deadline=None)
@given(c=st.floats(0.1, 0.9), steps=st.integers(1, 400))
def test_ordering_preserved(c, steps):
    lo = from_function(lambda k: c * np.minimum(k, 1.0) + 1e-3, 0.0, 1.0, H, -2.0, 1.0)
    hi = from_function(lambda k: np.full_like(k, 1.0), 0.0, 1.0, H, -2.0, 1.0)
    a = flow_step(lo, steps * H)
    b = flow_step(hi, steps * H)
    assert np.all(a.beta <= b.beta)


@settings(max_examples=15, deadline=None)
@given(n1=st.integers(0, 300), n2=st.integers(0, 300))
def test_semigroup_property(n1, n2):
    s0 = product_state(1.0, H, -1.0, 0.5)
    assert np.array_equal(flow_step(flow_step(s0, n1 * H), n2 * H).beta, flow_step(s0, (n1 + n2) * H).beta)


def test_trajectory_and_exports():
    states = trajectory([0.0, -0.5, -1.0], 1.0, H, u_min=-2.0)
    assert [s.s for s in states] == pytest.approx([0.0, -0.5, -1.0])
    text = trajectory_csv(states, stride=500)
    assert text.splitlines()[0] == "s,k,beta"
    doc = json.loads(state_to_json(states[-1], stride=500))
    assert doc["s"] == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        trajectory([-1.0, 0.0])


def test_to_profile():
    p = flow_profile(-1.0, u_min=-3.0).to_profile()
    assert p.alpha(0.5) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        p.alpha(1e-5)
