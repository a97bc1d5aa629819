import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cmera.errors import DomainError, FitError, WindowError
from cmera.gaussian import (
    CorrelatorTable,
    GaussianState,
    central_charge_fit,
    corr_dphi_dphi,
    corr_mixed,
    corr_phi_phi_subtracted,
    corr_TT,
    correlator_table,
    dimension_fit,
    kernel_phi_phi_subtracted,
    ope_amplitude,
    vertex_correlator,
    vertex_dimension_sweep,
)
from cmera.specfun import SIGMA

X_FAR = np.geomspace(20, 100, 9)


def test_cft_dphi_closed_form(cft_state):
    x = np.array([0.5, 2.0, 30.0])
    assert np.allclose(corr_dphi_dphi(cft_state, x), -1 / (4 * math.pi * x * x), rtol=1e-3)


def test_cmera_dphi_approaches_cft(state):
    v = corr_dphi_dphi(state, X_FAR)
    assert np.allclose(v * -4 * math.pi * X_FAR ** 2, 1.0, rtol=1e-2)


def test_ope_amplitude(state):
    tab = correlator_table("dphi_dphi", state, X_FAR)
    amp = ope_amplitude(tab)
    assert amp.size == X_FAR.size
    assert np.all(np.abs(amp - 1) < 0.01)


def test_finite_at_short_distance(state):
    v = corr_dphi_dphi(state, np.array([1e-3, 1e-2]))
    assert np.all(np.isfinite(v))
    assert abs(v[0] - v[1]) < 1e-5


def test_cft_mixed_vanishes(cft_state):
    assert np.all(np.abs(corr_mixed(cft_state, np.array([0.3, 5.0, 50.0]))) < 1e-10)


def test_mixed_ratio_decays_as_inverse_square(state):
    # mixed / dphi -> -3/(sigma x^2) at large x
    x = np.array([20.0, 40.0, 80.0])
    r = corr_mixed(state, x) / corr_dphi_dphi(state, x)
    assert np.all(np.abs(np.diff(np.abs(r))) > 0) and np.all(np.diff(np.abs(r)) < 0)
    assert np.allclose(r * x * x, -3 / SIGMA, rtol=0.02)


def test_wick_identity(state):
    x = np.array([1.0, 10.0])
    assert np.allclose(corr_TT(state, x), 8 * math.pi ** 2 * corr_dphi_dphi(state, x) ** 2, rtol=1e-14)


def test_central_charge(state):
    c, cs = central_charge_fit(correlator_table("TT", state, X_FAR))
    assert abs(c - 1) < 0.02
    with pytest.raises(FitError):
        central_charge_fit(correlator_table("dphi_dphi", state, X_FAR))


def test_dimension_fit(state):
    fit = dimension_fit(correlator_table("dphi_dphi", state, np.geomspace(10, 100, 11)), (10, 100))
    assert abs(fit.delta - 1) < 0.02
    assert fit.r2 > 0.999


def test_dimension_fit_needs_decade(state):
    tab = correlator_table("dphi_dphi", state, np.geomspace(20, 100, 5))
    with pytest.raises(FitError):
        dimension_fit(tab)


def test_vertex_free_charge(state):
    assert np.all(vertex_correlator(state, 0.0, np.array([1.0, 10.0]), 1e-4) == 1.0)


@pytest.mark.parametrize("nu2", [2 * math.pi, 4 * math.pi])
def test_vertex_dimensions(state, nu2):
    sweep = vertex_dimension_sweep(state, math.sqrt(nu2), np.geomspace(20, 100, 9))
    for d in sweep["delta"].values():
        assert d == pytest.approx(nu2 / (4 * math.pi), rel=0.02)
    assert sweep["relative_shift"] < 0.005


def test_vertex_window(state):
    with pytest.raises(WindowError):
        vertex_correlator(state, 1.0, np.array([100.0]), 1e-2)


def test_uncertainty_floor(state):
    k = np.geomspace(1e-3, 50, 100)
    assert np.allclose(state.cov_phiphi(k) * state.cov_pipi(k), 0.25, rtol=1e-15)


def test_ir_insensitivity(smooth, state):
    cut = GaussianState(smooth, ir_cutoff=1e-6)
    x = np.array([20.0, 80.0])
    assert np.allclose(corr_dphi_dphi(cut, x), corr_dphi_dphi(state, x), rtol=1e-8)


def test_phi_phi_kernel_cross_check(smooth, state):
    # direct covariance against smeared CFT fields
    x = np.array([0.5, 3.0, 10.0])
    a = corr_phi_phi_subtracted(state, x)
    b = kernel_phi_phi_subtracted(smooth, x)
    assert np.allclose(a, b, rtol=1e-8, atol=1e-12)


def test_phi_phi_subtracted_reference_point(state, cft_state):
    assert abs(corr_phi_phi_subtracted(state, 1.0)) < 1e-12
    assert corr_phi_phi_subtracted(cft_state, math.e) == pytest.approx(-1 / (2 * math.pi))


def test_rejects_bad_separation(state):
    with pytest.raises(DomainError):
        corr_dphi_dphi(state, np.array([0.0]))
    with pytest.raises(DomainError):
        GaussianState(state.profile, ir_cutoff=-1.0)


def test_table_serialisation(state):
    tab = correlator_table("mixed_dphi_dbar", state, np.array([1.0, 2.0]))
    assert isinstance(tab, CorrelatorTable)
    assert tab.to_csv().startswith("separation,value,error\n")
    assert '"kind": "mixed_dphi_dbar"' in tab.to_json()


@settings(max_examples=15, deadline=None)
@given(x=st.floats(0.2, 50.0))
def test_dphi_negative(x):
    from cmera.profiles import smooth_profile

    assert corr_dphi_dphi(GaussianState(smooth_profile()), x) < 0
