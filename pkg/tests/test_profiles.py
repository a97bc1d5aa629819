import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmera.errors import DomainError
from cmera.profiles import (
    EntanglerProfile,
    Variant,
    alpha_analytic,
    alpha_ode_solve,
    cft_profile,
    entangler_g,
    profile_to_csv,
    profile_to_json,
    sharp_profile,
    smooth_profile,
)
from cmera.specfun import Precision

# frozen 30-digit mpmath values
ALPHA_AT_LAM = 0.782104323581145362761042819756
G_AT_LAM = 0.285188000837511518478776212024


def test_entangler_values():
    ent = EntanglerProfile()
    assert entangler_g(ent, 0.0) == 0.5
    assert entangler_g(ent, 1.0) == pytest.approx(G_AT_LAM, rel=1e-15)
    sharp = EntanglerProfile(variant=Variant.SHARP)
    assert entangler_g(sharp, 1.0) == 0.5
    assert entangler_g(sharp, 1.0001) == 0.0
    assert entangler_g(ent, -0.7) == entangler_g(ent, 0.7)


@pytest.mark.parametrize("bad", [dict(lam=0.0), dict(lam=-1.0), dict(sigma=0.0)])
def test_entangler_rejects_bad_parameters(bad):
    with pytest.raises(DomainError):
        EntanglerProfile(**bad)


def test_alpha_at_cutoff(smooth):
    assert smooth.alpha(1.0) == pytest.approx(ALPHA_AT_LAM, rel=1e-14)
    assert alpha_analytic(EntanglerProfile(), 1.0) == pytest.approx(ALPHA_AT_LAM, rel=1e-14)
    ext = alpha_analytic(EntanglerProfile(), 1.0, Precision(30, 0.0, 0.0))
    assert abs(float(ext) - ALPHA_AT_LAM) < 1e-16


def test_alpha_limits(smooth):
    # IR: alpha ~ |k|; UV: alpha -> lam
    assert smooth.ratio(1e-8) == pytest.approx(1.0, abs=1e-12)
    assert smooth.ratio(0.0) == pytest.approx(1.0)
    assert smooth.alpha(50.0) == pytest.approx(1.0, rel=1e-12)
    assert smooth.alpha(-0.3) == smooth.alpha(0.3)


def test_alpha_analytic_rejects_zero():
    with pytest.raises(DomainError):
        alpha_analytic(EntanglerProfile(), 0.0)


def test_alpha_monotone_and_bounded(smooth):
    k = np.geomspace(1e-4, 30, 400)
    a = smooth.alpha(k)
    assert np.all(np.diff(a) >= 0)
    assert np.all(a <= 1.0 + 1e-15)
    assert np.all(a <= k * (1 + 1e-15))


def test_ode_matches_analytic(smooth):
    k = np.geomspace(1e-3, 10, 60)
    ode = alpha_ode_solve(EntanglerProfile(), k, anchor=(1e-3, smooth.alpha(1e-3)))
    dev = np.max(np.abs(ode.samples[:, 1] - smooth.alpha(k)) / smooth.alpha(k))
    assert dev < 1e-8
    assert np.all(ode.samples[:, 2] < 1e-8)
    assert ode.alpha(0.5) == pytest.approx(smooth.alpha(0.5), rel=1e-8)


def test_ode_sharp_matches_fixed_point(sharp):
    k = np.geomspace(1e-2, 5, 40)
    ode = alpha_ode_solve(EntanglerProfile(variant=Variant.SHARP), k, anchor=(1e-2, 1e-2))
    assert np.max(np.abs(ode.samples[:, 1] - sharp.alpha(k))) < 1e-10


def test_ode_zero_entangler_is_constant():
    k = np.linspace(0.1, 3, 20)
    ode = alpha_ode_solve(lambda q: 0.0, k, anchor=(0.1, 0.7))
    assert np.allclose(ode.samples[:, 1], 0.7, rtol=1e-13)


@pytest.mark.parametrize("grid", [[1.0], [1.0, 0.5], [-1.0, 1.0]])
def test_ode_rejects_bad_grid(grid):
    with pytest.raises(DomainError):
        alpha_ode_solve(EntanglerProfile(), grid, anchor=(0.1, 0.1))


def test_ode_profile_range_checked(smooth):
    ode = alpha_ode_solve(EntanglerProfile(), [0.1, 1.0], anchor=(0.1, smooth.alpha(0.1)))
    with pytest.raises(DomainError):
        ode.alpha(5.0)


def test_cft_profile(cft):
    assert cft.alpha(3.0) == 3.0
    assert cft.alpha(-3.0) == 3.0
    assert cft.is_cft


def test_sharp_profile(sharp):
    assert sharp.alpha(0.4) == 0.4
    assert sharp.alpha(7.0) == 1.0


@settings(max_examples=40, deadline=None)
@given(lam=st.floats(0.1, 10.0), q=st.floats(1e-3, 20.0))
def test_scale_covariance(lam, q):
    # alpha_L(k) = L alpha_1(k/L)
    a1 = smooth_profile(EntanglerProfile(lam=1.0))
    al = smooth_profile(EntanglerProfile(lam=lam))
    assert al.alpha(lam * q) == pytest.approx(lam * a1.alpha(q), rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(k1=st.floats(1e-4, 40.0), k2=st.floats(1e-4, 40.0))
def test_monotone_property(k1, k2):
    p = smooth_profile()
    lo, hi = sorted((k1, k2))
    assert p.alpha(lo) <= p.alpha(hi)


def test_serialisation(smooth):
    k = np.array([0.1, 1.0, 2.0])
    text = profile_to_csv(smooth, k)
    lines = text.strip().split("\n")
    assert lines[0] == "k,alpha,local_error"
    assert float(lines[2].split(",")[1]) == smooth.alpha(1.0)
    doc = json.loads(profile_to_json(smooth, k))
    assert doc["columns"] == ["k", "alpha", "local_error"]
    assert doc["rows"][1][1] == pytest.approx(ALPHA_AT_LAM, rel=1e-14)
    assert profile_to_csv(smooth, k) == text


def test_sigma_variant_shift():
    # other sigma: alpha/|k| -> sqrt(e^gamma/sigma) as k -> 0
    p = smooth_profile(EntanglerProfile(sigma=2.0))
    assert p.ratio(1e-9) == pytest.approx(math.sqrt(math.exp(np.euler_gamma) / 2.0), rel=1e-9)
