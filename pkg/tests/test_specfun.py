import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from cmera.errors import ConvergenceError, DomainError
from cmera.specfun import (DOUBLE, Precision, bessel_K, ei_series_terms, ein, ein_mp, euler_gamma_and_sigma,
                           exp_integral_Ei, gamma_fn)

# frozen from 30-digit mpmath evaluations of the defining series / integrals
EI_M1 = -0.21938393439552027367716377546
EI_M10 = -4.15696892968532427740285981028e-06
GAMMA_QUARTER = 3.62560990822190831193068515587
K_QUARTER_1 = 0.43073977444858552465694688454
K_3QUARTER_1 = 0.515775300695918628577944413186

EXT = Precision(working_digits=30, rel_tol=1e-25)


def ei_quad(y):
    val, _ = integrate.quad(lambda t: math.exp(-t) / t, -y, np.inf, epsabs=0, epsrel=1e-13, limit=200)
    return -val


class TestPrecision:
    def test_rejects_low_digits(self):
        with pytest.raises(DomainError):
            Precision(working_digits=10)

    def test_rejects_negative_tolerance(self):
        with pytest.raises(DomainError):
            Precision(rel_tol=-1)

    def test_extended_flag(self):
        assert not DOUBLE.extended
        assert EXT.extended

    def test_check_raises_with_partial(self):
        p = Precision(rel_tol=1e-10)
        with pytest.raises(ConvergenceError) as info:
            p.check("x", 1.0, 1e-3)
        assert info.value.partial == 1.0
        assert info.value.estimate == 1e-3


class TestEi:
    def test_minus_one_matches_series(self):
        assert exp_integral_Ei(-1.0) == pytest.approx(EI_M1, rel=1e-12)
        assert ei_series_terms(-1.0, 40) == pytest.approx(EI_M1, rel=1e-12)

    def test_small_argument_limit(self):
        y = -1e-8
        assert abs(exp_integral_Ei(y) - math.log(abs(y)) - 0.5772156649015329) < 1e-7

    def test_minus_ten_matches_quadrature(self):
        assert exp_integral_Ei(-10.0) == pytest.approx(EI_M10, rel=1e-10)
        assert exp_integral_Ei(-10.0) == pytest.approx(ei_quad(-10.0), rel=1e-10)

    def test_zero_is_domain_error(self):
        with pytest.raises(DomainError):
            exp_integral_Ei(0.0)

    def test_extended_precision(self):
        v = exp_integral_Ei(-1, EXT)
        assert abs(v - mpmath.mpf("-0.21938393439552027367716377546")) < 1e-27
        v = exp_integral_Ei(-25, EXT)
        assert abs(v / mpmath.ei(-25) - 1) < 1e-25

    @settings(max_examples=60, deadline=None)
    @given(st.floats(min_value=-20.0, max_value=-0.01))
    def test_series_vs_quadrature(self, y):
        assert exp_integral_Ei(y) == pytest.approx(ei_quad(y), rel=1e-11, abs=1e-300)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(min_value=0.0, max_value=60.0))
    def test_ein_matches_extended(self, z):
        with mpmath.workdps(30):
            ref = float(ein_mp(z))
        assert float(ein(np.array([z]))[0]) == pytest.approx(ref, rel=1e-14, abs=1e-300)

    def test_ein_rejects_negative(self):
        with pytest.raises(DomainError):
            ein(np.array([-1.0]))


class TestGamma:
    def test_unit(self):
        assert gamma_fn(1.0) == pytest.approx(1.0, rel=1e-15)

    def test_half(self):
        assert gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-15)

    def test_quarter_matches_quadrature(self):
        assert gamma_fn(0.25) == pytest.approx(GAMMA_QUARTER, rel=1e-14)
        q, _ = integrate.quad(lambda u: 4 * math.exp(-u ** 4), 0, np.inf, epsrel=1e-14)
        assert gamma_fn(0.25) == pytest.approx(q, rel=1e-12)

    @pytest.mark.parametrize("x", [0.0, -1.0, -3.0])
    def test_poles(self, x):
        with pytest.raises(DomainError):
            gamma_fn(x)

    @pytest.mark.parametrize("x", [0.25, 0.5, 0.75, 1.5])
    def test_recursion(self, x):
        assert gamma_fn(x + 1) == pytest.approx(x * gamma_fn(x), rel=1e-14)

    def test_extended(self):
        assert abs(gamma_fn(0.25, EXT) - mpmath.mpf("3.62560990822190831193068515587")) < 1e-27


def k_integral(nu, x):
    # the integrand is below 1e-300 once x cosh t > 700
    top = math.acosh(700.0 / x)
    val, _ = integrate.quad(lambda t: math.exp(-x * math.cosh(t)) * math.cosh(nu * t), 0, top,
                            epsabs=0, epsrel=1e-13, limit=200)
    return val


class TestBesselK:
    @pytest.mark.parametrize("x", [1.0, 5.0, 10.0])
    def test_half_order_closed_form(self, x):
        assert bessel_K(0.5, x) == pytest.approx(math.sqrt(math.pi / (2 * x)) * math.exp(-x), rel=1e-12)

    def test_quarter_at_one(self):
        assert bessel_K(0.25, 1.0) == pytest.approx(K_QUARTER_1, rel=1e-13)
        assert bessel_K(0.75, 1.0) == pytest.approx(K_3QUARTER_1, rel=1e-13)

    def test_large_x_ratio(self):
        r = bessel_K(0.25, 50.0) / (math.sqrt(math.pi / 100.0) * math.exp(-50.0))
        assert abs(r - 1) < 0.01

    @pytest.mark.parametrize("x", [0.0, -1.0])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            bessel_K(0.25, x)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(min_value=0.1, max_value=30.0), st.sampled_from([0.25, 0.75]))
    def test_integral_representation(self, x, nu):
        assert bessel_K(nu, x) == pytest.approx(k_integral(nu, x), rel=1e-10)

    def test_extended(self):
        v = bessel_K(0.25, 1.0, EXT)
        assert abs(v - mpmath.mpf("0.43073977444858552465694688454")) < 1e-27


class TestEuler:
    def test_values(self):
        g, s = euler_gamma_and_sigma()
        assert round(g, 5) == 0.57722
        assert round(s, 5) == 1.78107
        assert math.log(s) - g == pytest.approx(0.0, abs=1e-15)

    def test_extended(self):
        g, s = euler_gamma_and_sigma(EXT)
        assert abs(mpmath.log(s) - g) < 1e-28
