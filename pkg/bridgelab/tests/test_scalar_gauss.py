"""
Tests for the scalar Gaussian utilities and the numerical helpers they share.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from bridgelab.logic.contracts import GaussianMoment
from bridgelab.logic.errors import DomainError, NumericalError
from bridgelab.logic.numerics import (
    adaptive_quad,
    conditional_factor,
    log_sinh_ratio,
    psd_factor,
    sinh_minus_x,
    sinh_ratio,
)
from bridgelab.logic.scalar_gauss import (
    condition_on_linear,
    folded_mean,
    folded_mean_sigma_derivative,
    gaussian_abs_moment,
    second_moment,
    std_normal_cdf,
    tail,
)


def test_std_normal_cdf_values():
    assert std_normal_cdf(0.0) == 0.5
    assert std_normal_cdf(1.959963984540054) == pytest.approx(0.975, abs=1e-12)
    # deep lower tail keeps relative precision
    assert std_normal_cdf(-30.0) > 0.0


def test_std_normal_cdf_rejects_nan():
    with pytest.raises(DomainError):
        std_normal_cdf(float("nan"))


def test_folded_mean_standard():
    assert folded_mean(GaussianMoment(mean=0.0, variance=1.0)) == pytest.approx(math.sqrt(2.0 / math.pi), abs=1e-15)


def test_folded_mean_zero_variance_is_an_error():
    with pytest.raises(DomainError):
        folded_mean(GaussianMoment(mean=1.0, variance=0.0))
    assert gaussian_abs_moment(GaussianMoment(mean=-1.5, variance=0.0)) == 1.5


@given(st.floats(-5.0, 5.0), st.floats(0.01, 4.0))
@settings(max_examples=200, deadline=None)
def test_folded_mean_bounds(mu, sigma):
    m = GaussianMoment(mean=mu, variance=sigma * sigma)
    value = folded_mean(m)
    assert value >= abs(mu) - 1e-12
    assert value <= math.sqrt(second_moment(m)) + 1e-12


@given(st.floats(-3.0, 3.0), st.floats(0.1, 3.0))
@settings(max_examples=100, deadline=None)
def test_folded_mean_sigma_derivative_matches_finite_difference(mu, sigma):
    h = 1e-5 * sigma
    up = folded_mean(GaussianMoment(mean=mu, variance=(sigma + h) ** 2))
    down = folded_mean(GaussianMoment(mean=mu, variance=(sigma - h) ** 2))
    analytic = folded_mean_sigma_derivative(GaussianMoment(mean=mu, variance=sigma * sigma))
    assert (up - down) / (2.0 * h) == pytest.approx(analytic, rel=1e-6, abs=1e-9)


@pytest.mark.parametrize("mu,sigma", [(0.0, 1.0), (1.3, 0.4), (-2.0, 1.7), (0.25, 3.0)])
def test_folded_mean_matches_quadrature(mu, sigma):
    def integrand(y):
        return abs(y) * math.exp(-0.5 * ((y - mu) / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))

    lower, _ = integrate.quad(integrand, -np.inf, 0.0, epsabs=1e-13, epsrel=1e-13)
    upper, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-13, epsrel=1e-13)
    assert abs(folded_mean(GaussianMoment(mean=mu, variance=sigma * sigma)) - (lower + upper)) <= 1e-10


def test_centred_tail_increases_with_sigma():
    sigmas = np.linspace(0.1, 5.0, 50)
    values = np.array([tail(GaussianMoment(mean=0.0, variance=s * s), 1.0) for s in sigmas])
    assert np.all(np.diff(values) > 0.0)


def test_shifted_tail_is_not_monotone_in_sigma():
    def at(sigma):
        return tail(GaussianMoment(mean=2.0, variance=sigma * sigma), 1.0)

    assert at(0.1) > at(1.0)
    assert at(1.0) < at(10.0)


def test_tail_symmetric_value():
    assert tail(GaussianMoment(mean=0.0, variance=1.0), 1.959963984540054) == pytest.approx(0.05, abs=1e-12)


def test_tail_rejects_nonpositive_threshold():
    with pytest.raises(DomainError):
        tail(GaussianMoment(mean=0.0, variance=1.0), 0.0)


def test_condition_on_linear_bivariate():
    law = condition_on_linear(0.0, 0.0, 1.0, 2.0, 1.0, 1.0)
    assert law.mean == pytest.approx(0.5)
    assert law.variance == pytest.approx(0.5)


def test_condition_on_linear_rejects_cauchy_schwarz_violation():
    with pytest.raises(DomainError):
        condition_on_linear(0.0, 0.0, 1.0, 1.0, 1.5, 0.0)


# =============================================================================
# NUMERICAL HELPERS
# =============================================================================

@given(st.floats(-40.0, 40.0), st.floats(0.01, 40.0))
@settings(max_examples=200, deadline=None)
def test_sinh_ratio_matches_direct_evaluation(x, y):
    assert sinh_ratio(x, y) == pytest.approx(math.sinh(x) / math.sinh(y), rel=1e-12, abs=1e-300)


def test_sinh_ratio_large_arguments_do_not_overflow():
    assert sinh_ratio(799.0, 800.0) == pytest.approx(math.exp(-1.0), rel=1e-14)
    assert log_sinh_ratio(800.0, 799.0) == pytest.approx(1.0, abs=1e-12)


def test_sinh_minus_x_series_and_direct_agree_at_switch():
    assert sinh_minus_x(0.0999999) == pytest.approx(math.sinh(0.0999999) - 0.0999999, rel=1e-10)
    assert sinh_minus_x(1e-5) == pytest.approx(1e-15 / 6.0, rel=1e-9)


def test_adaptive_quad_log_endpoint():
    value = adaptive_quad(lambda x: -math.log(x) if x > 0 else 0.0, 0.0, 1.0)
    assert value == pytest.approx(1.0, abs=1e-10)


def test_adaptive_quad_reports_divergence():
    with pytest.raises(NumericalError) as info:
        adaptive_quad(lambda x: 1.0 / x if x > 0 else 0.0, 0.0, 1.0, label="divergent")
    assert "divergent" in str(info.value)


def test_psd_factor_reproduces_matrix():
    cov = np.array([[[2.0, 0.5], [0.5, 1.0]], [[1.0, 1.0], [1.0, 1.0]]])
    a = psd_factor(cov)
    np.testing.assert_allclose(a @ np.swapaxes(a, -1, -2), cov, atol=1e-12)


def test_psd_factor_rejects_indefinite():
    with pytest.raises(NumericalError):
        psd_factor(np.array([[[1.0, 2.0], [2.0, 1.0]]]))


def test_psd_factor_tolerance_is_relative_to_scale():
    cov = np.array([[[1e-20, 0.0], [0.0, -1e-25]]])
    with pytest.raises(NumericalError):
        psd_factor(cov)
    a = psd_factor(cov, scale=np.array([1.0]))
    assert np.all(np.isfinite(a))
    np.testing.assert_allclose(a @ np.swapaxes(a, -1, -2), np.array([[[1e-20, 0.0], [0.0, 0.0]]]), atol=1e-30)


def test_conditional_factor_regression():
    cov = np.array([[[1.0, 0.5, 0.2], [0.5, 1.0, 0.1], [0.2, 0.1, 2.0]]])
    beta, factor = conditional_factor(cov)
    np.testing.assert_allclose(beta, [[0.5, 0.2]])
    schur = cov[0, 1:, 1:] - np.outer(cov[0, 0, 1:], cov[0, 0, 1:])
    np.testing.assert_allclose(factor[0] @ factor[0].T, schur, atol=1e-12)

