"""
Tests for the replicate aggregator.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bridgelab.logic import aggregator as agg


def _chunk(name: str, start: int, values) -> agg.ReplicateAccumulator:
    acc = agg.ReplicateAccumulator()
    acc.add(name, np.arange(start, start + len(values)), np.asarray(values, dtype=float))
    return acc


def test_merge_is_associative_and_order_free():
    a, b, c = _chunk("x", 0, [1.0, 2.0]), _chunk("x", 2, [3.0]), _chunk("x", 3, [4.0, 5.0])
    left = a.merge(b).merge(c).finalize()["x"]
    right = a.merge(b.merge(c)).finalize()["x"]
    shuffled = c.merge(a).merge(b).finalize()["x"]
    assert np.array_equal(left, right)
    assert np.array_equal(left, shuffled)
    assert list(left) == [1.0, 2.0, 3.0, 4.0, 5.0]


def test_vector_values_keep_rows():
    acc = agg.ReplicateAccumulator()
    acc.add("v", [1, 0], np.array([[3.0, 4.0], [1.0, 2.0]]))
    assert acc.finalize()["v"].tolist() == [[1.0, 2.0], [3.0, 4.0]]
    assert acc.count("v") == 2


def test_duplicate_indices_are_rejected():
    acc = _chunk("x", 0, [1.0, 2.0]).merge(_chunk("x", 1, [3.0]))
    with pytest.raises(ValueError):
        acc.finalize()


def test_add_shape_mismatch():
    with pytest.raises(ValueError):
        agg.ReplicateAccumulator().add("x", [0, 1, 2], [1.0, 2.0])


def test_block_ranges():
    assert agg.block_ranges(7, 3) == [(0, 3), (3, 3), (6, 1)]
    with pytest.raises(ValueError):
        agg.block_ranges(0, 3)


def _kernel(start: int, count: int) -> agg.ReplicateAccumulator:
    rng = np.random.default_rng(1000 + start)
    return _chunk("x", start, rng.standard_normal(count))


def test_threads_do_not_change_the_result():
    serial = agg.accumulate(_kernel, 1000, 100, threads=1)["x"]
    pooled = agg.accumulate(_kernel, 1000, 100, threads=4)["x"]
    assert np.array_equal(serial, pooled)


def test_standard_error_halves_with_four_times_the_replicates():
    rng = np.random.default_rng(2024)
    x = rng.standard_normal(40000)
    _, se_small = agg.mean_se(x[:10000])
    _, se_large = agg.mean_se(x)
    assert se_small / se_large == pytest.approx(2.0, rel=0.05)


def test_moment_estimators():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    mean, se = agg.mean_se(x)
    assert mean == 2.5
    assert se == pytest.approx(math.sqrt(5.0 / 3.0) / 2.0)
    var, _ = agg.variance_se(x)
    assert var == pytest.approx(5.0 / 3.0)
    cov, _ = agg.cov_se(x, 2.0 * x)
    assert cov == pytest.approx(10.0 / 3.0)
    r, r_se = agg.corr_se(x, -x)
    assert r == pytest.approx(-1.0)
    assert r_se == pytest.approx(0.0, abs=1e-15)


def test_correlation_of_constant_is_zero():
    assert agg.corr_se(np.ones(5), np.arange(5.0)) == (0.0, 0.0)


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=50))
@settings(max_examples=100, deadline=None)
def test_correlation_gap_with_itself_is_zero(values):
    x = np.asarray(values)
    if np.ptp(x) < 1e-6:
        return
    z = x ** 2 + np.arange(x.size)
    if np.ptp(z) < 1e-6:
        return
    gap, se = agg.corr_gap_se(x, x, z)
    assert gap == 0.0
    assert se == 0.0


def test_correlation_gap_matches_difference_of_correlations():
    rng = np.random.default_rng(8)
    z = rng.standard_normal(5000)
    x = z + rng.standard_normal(5000)
    y = z + 2.0 * rng.standard_normal(5000)
    gap, se = agg.corr_gap_se(x, y, z)
    assert gap == pytest.approx(agg.corr_se(x, z)[0] - agg.corr_se(y, z)[0], abs=1e-10)
    assert 0.0 < se < 0.05
