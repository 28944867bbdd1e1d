"""
Tests for the Ornstein-Uhlenbeck bridge oracle.
"""

import math

import pytest
from hypothesis import given, settings, strategies as st
from pydantic import ValidationError

from bridgelab.logic import ou_oracle as oo, wiener_oracle
from bridgelab.logic.constants import ALL_KINDS, BridgeKind
from bridgelab.logic.contracts import BridgeSpec, ProcessParams, TimeChange
from bridgelab.logic.errors import DomainError
from bridgelab.logic.numerics import adaptive_quad
from bridgelab.logic.scalar_gauss import second_moment


def _tc(q: float, T: float = 1.0, sigma: float = 1.0) -> TimeChange:
    return TimeChange(params=ProcessParams(q=q, sigma=sigma), T=T)


# =============================================================================
# TIME CHANGE
# =============================================================================

def test_kappa_values():
    assert oo.kappa(0.0, 3.0) == 0.0
    assert oo.kappa(1.0, 1.0) == pytest.approx((1 - math.exp(-2)) / 2, rel=1e-15)
    assert oo.kappa(1.0, 1e-8) == pytest.approx(1.0, abs=1e-6)


def test_kappa_rejects_zero_rate():
    with pytest.raises(DomainError):
        oo.kappa(1.0, 0.0)
    with pytest.raises(ValidationError):
        ProcessParams(q=0.0)


def test_kappa_star_start_and_derivative():
    tc = _tc(1.0)
    assert oo.kappa_star(0.0, tc) == 0.0
    h = 1e-7
    assert oo.kappa_star(h, tc) / h == pytest.approx(1.0, abs=1e-6)
    assert oo.kappa_star_derivative(0.0, tc) == pytest.approx(1.0, rel=1e-14)


def test_kappa_star_small_rate_limit():
    assert oo.kappa_star(1.0, _tc(1e-8, T=2.0)) == pytest.approx(2.0, abs=1e-5)


def test_kappa_star_domain():
    with pytest.raises(DomainError):
        oo.kappa_star(1.0, _tc(1.0))


@given(q=st.sampled_from([-3.0, -1.0, 0.5, 2.0]), u=st.floats(0.0, 0.99))
@settings(max_examples=100, deadline=None)
def test_kappa_star_dominates_identity(q, u):
    tc = _tc(q)
    assert oo.kappa_star(u, tc) >= u * (1 - 1e-14)
    assert oo.kappa_star_derivative(u, tc) >= 1.0 - 1e-12


@pytest.mark.parametrize("q", [1.0, -1.0, 2.0, -2.0, 10.0])
def test_t_star_hits_horizon(q):
    tc = _tc(q)
    value = oo.t_star(tc)
    assert 0.0 < value < 1.0
    assert oo.kappa_star(value, tc) == pytest.approx(1.0, abs=1e-10)


def test_t_star_depends_on_sign_and_limit():
    assert oo.t_star(_tc(2.0)) != oo.t_star(_tc(-2.0))
    assert oo.t_star(_tc(1e-8)) == pytest.approx(0.5, abs=1e-6)


# =============================================================================
# MOMENTS
# =============================================================================

def test_bridge_mean_endpoints():
    tc = _tc(1.5, T=2.0)
    assert oo.ou_bridge_mean(0.0, 1.0, 3.0, tc) == pytest.approx(1.0)
    assert oo.ou_bridge_mean(2.0, 1.0, 3.0, tc) == pytest.approx(3.0)
    assert oo.ou_bridge_mean(0.5, 1.0, 3.0, _tc(1e-8)) == pytest.approx(2.0, abs=1e-6)


def test_bridge_cov_example():
    expected = math.sinh(0.5) ** 2 / math.sinh(1.0)
    assert oo.ou_bridge_cov(0.5, 0.5, _tc(1.0)) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.231059, abs=1e-6)
    assert oo.ou_bridge_cov(0.0, 0.7, _tc(1.0)) == 0.0
    assert oo.ou_bridge_cov(0.3, 0.6, _tc(1e-8)) == pytest.approx(0.3 * 0.4, abs=1e-6)


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("q", [1.0, -1.0, 3.0])
def test_bridge_cov_constructions_agree(kind, q):
    tc = _tc(q, sigma=1.3)
    for s in (0.1, 0.3, 0.5):
        for t in (0.3, 0.6, 0.9):
            assert oo.ou_bridge_cov_by_construction(kind, s, t, tc) == \
                pytest.approx(oo.ou_bridge_cov(s, t, tc), rel=1e-11, abs=1e-14)


def test_cov_with_process_examples():
    tc = _tc(1.0)
    expected = math.expm1(0.5) * math.sinh(0.5) / math.sinh(1.0)
    assert oo.ou_cov_with_process(BridgeKind.ST, 0.5, tc) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.2876491, abs=1e-6)
    assert oo.ou_cov_with_process(BridgeKind.AV, 1e-9, tc) == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_cov_with_process_small_rate(kind):
    value = oo.ou_cov_with_process(kind, 0.4, _tc(1e-8))
    assert value == pytest.approx(wiener_oracle.process_bridge_cov(kind, 0.4, 1.0), abs=1e-5)


def test_correlation_is_a_correlation():
    for kind in ALL_KINDS:
        for q in (2.0, -2.0):
            assert 0.0 < oo.ou_corr_with_process(kind, 0.5, _tc(q)) <= 1.0


def test_bridge_variance_decays_to_zero():
    tc = _tc(1.0)
    values = [oo.ou_bridge_cov(t, t, tc) for t in (0.9, 0.95, 0.99, 0.999, 1.0)]
    assert all(a > b for a, b in zip(values, values[1:]))
    assert values[-1] == 0.0


# =============================================================================
# DEVIATION LAWS
# =============================================================================

def test_deviation_law_at_start():
    m = oo.ou_deviation_law(BridgeKind.AV, 0.0, 1.0, _tc(1.0))
    assert (m.mean, m.variance) == (0.0, 0.0)


@pytest.mark.parametrize("q,ordering", [
    (2.0, (BridgeKind.IR, BridgeKind.ST, BridgeKind.AV)),
    (-2.0, (BridgeKind.IR, BridgeKind.AV, BridgeKind.ST)),
])
def test_deviation_variance_orderings(q, ordering):
    tc = _tc(q)
    variances = [oo.ou_deviation_law(kind, 0.5, 0.0, tc).variance for kind in ordering]
    assert variances[0] < variances[1] < variances[2]


@pytest.mark.parametrize("kind", [BridgeKind.IR, BridgeKind.ST])
@pytest.mark.parametrize("q", [2.0, -2.0, 0.3])
def test_expanded_and_rearranged_variances_agree(kind, q):
    tc = _tc(q)
    for t in (0.1, 0.5, 0.9):
        expanded = oo.ou_deviation_law(kind, t, 0.0, tc).variance
        assert oo.ou_rearranged_deviation_var(kind, t, tc) == pytest.approx(expanded, rel=1e-11)


def test_st_deviation_gap_sign():
    assert oo.st_deviation_gap(0.5, _tc(2.0)) < 0.0
    assert oo.st_deviation_gap(0.5, _tc(-2.0)) > 0.0


def test_st_deviation_gap_matches_cosh_form():
    tc = _tc(1.0)
    direct = 2.0 * math.sinh(0.7) * (1.0 - math.cosh(0.3)) / math.sinh(1.0)
    assert oo.st_deviation_gap(0.3, tc) == pytest.approx(direct, rel=1e-12)


@pytest.mark.parametrize("q", [1e-5, 1e-7, -1e-7])
def test_st_deviation_gap_small_rate(q):
    # leading order: -q t^2 (T - t) / T
    assert oo.st_deviation_gap(0.5, _tc(q)) == pytest.approx(-q * 0.125, rel=1e-4)


@pytest.mark.parametrize("q", [1e-4, 1e-5, -1e-5])
@pytest.mark.parametrize("kind,t", [(BridgeKind.ST, 0.1), (BridgeKind.IR, 0.6), (BridgeKind.ST, 0.9)])
def test_deviation_law_near_the_wiener_limit(q, kind, t):
    law = oo.ou_deviation_law(kind, t, 0.0, _tc(q))
    limit = wiener_oracle.deviation_law(kind, t, BridgeSpec(T=1.0))
    assert law.variance == pytest.approx(limit.variance, abs=10.0 * abs(q))


def test_wiener_l2_gap_branches_join():
    below = oo.ou_wiener_l2_gap(0.4999999, 1.0)
    above = oo.ou_wiener_l2_gap(0.5000001, 1.0)
    assert below == pytest.approx(above, rel=1e-5)
    assert oo.ou_wiener_l2_gap(1.0, 1e-6) == pytest.approx(0.0, abs=1e-6)
    assert oo.ou_wiener_l2_gap(1.0, 0.0) == 0.0


# =============================================================================
# EXPECTED QUADRATIC DEVIATIONS
# =============================================================================

def test_av_expected_quad_dev_example():
    expected = math.e / 4.0 * (math.sinh(2.0) - 2.0) / math.sinh(1.0)
    assert oo.ou_expected_quad_dev(BridgeKind.AV, 0.0, _tc(1.0)) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.9407464, abs=1e-6)


def test_integrated_ordering_positive_rate():
    tc = _tc(1.0)
    av, ir, st_ = (oo.ou_expected_quad_dev(k, 0.0, tc) for k in (BridgeKind.AV, BridgeKind.IR, BridgeKind.ST))
    assert ir < st_ < av


@pytest.mark.parametrize("kind,limit", [(BridgeKind.AV, 1 / 3), (BridgeKind.IR, 1 / 6), (BridgeKind.ST, 1 / 3)])
@pytest.mark.parametrize("q", [1e-4, -1e-4])
def test_small_rate_limits(kind, limit, q):
    assert oo.ou_expected_quad_dev(kind, 0.0, _tc(q)) == pytest.approx(limit, abs=1e-4)


@pytest.mark.parametrize("kind", ALL_KINDS)
@pytest.mark.parametrize("q", [1.0, -1.0, 3.0, -0.5])
@pytest.mark.parametrize("b", [0.0, 1.0])
def test_expected_quad_dev_matches_quadrature(kind, q, b):
    tc = _tc(q, sigma=1.5)
    integral = adaptive_quad(lambda t: second_moment(oo.ou_deviation_law(kind, t, b, tc)), 0.0, 1.0)
    assert oo.ou_expected_quad_dev(kind, b, tc) == pytest.approx(integral, rel=1e-8)


@pytest.mark.parametrize("x", [1.0, -1.0, 3.0, -2.5])
def test_j_integral_by_parts(x):
    assert oo.j_integral(x) == pytest.approx(oo.j_integral_by_parts(x), rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("x", [1.0, -1.0])
def test_j_integral_midpoint_sum(x):
    assert oo.j_integral_midpoint(x, panels=10 ** 5, chunk=10 ** 4) == pytest.approx(oo.j_integral(x), abs=1e-8)


@pytest.mark.parametrize("q", [1.0, -1.0, 2.0])
def test_expanded_forms(q):
    tc = _tc(q)
    b = 2.0
    assert oo.ou_expected_quad_dev_expanded(BridgeKind.IR, b, tc) == \
        pytest.approx(oo.ou_expected_quad_dev(BridgeKind.IR, b, tc), rel=1e-9)
    assert oo.ou_expected_quad_dev_expanded(BridgeKind.ST, b, tc) == \
        pytest.approx(oo.ou_expected_quad_dev(BridgeKind.ST, b, tc) - oo.st_mean_term(b, tc), rel=1e-12)


def test_st_mean_term_quadrature_and_limit():
    tc = _tc(2.0)
    direct = adaptive_quad(lambda t: (math.sinh(2.0 * t) / math.sinh(2.0)) ** 2, 0.0, 1.0)
    assert oo.st_mean_term(1.0, tc) == pytest.approx(direct, rel=1e-10)
    assert oo.st_mean_term(3.0, _tc(1e-4)) == pytest.approx(3.0, rel=1e-6)


def test_integrated_abs_dev_is_below_root_quad():
    tc = _tc(1.0)
    for kind in ALL_KINDS:
        abs_dev = oo.ou_expected_integrated_abs_dev(kind, 0.5, tc)
        assert 0.0 < abs_dev <= math.sqrt(oo.ou_expected_quad_dev(kind, 0.5, tc))
