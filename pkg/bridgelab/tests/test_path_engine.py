"""
Tests for the path engine: pinning, reproducibility, conditioning, zero-noise paths and moments.
"""

import numpy as np
import pytest

from bridgelab.logic import ou_oracle, path_engine as pe, wiener_oracle
from bridgelab.logic.aggregator import cov_se, variance_se
from bridgelab.logic.constants import ALL_KINDS, BridgeKind
from bridgelab.logic.contracts import BridgeSpec, ProcessParams, SeedSpec, TimeChange, TimeGrid
from bridgelab.logic.errors import DomainError, UnsupportedOperationError

GRID = TimeGrid.uniform(1.0, 16)
SPEC = BridgeSpec(a=0.5, b=-1.0, T=1.0)
OU = ProcessParams(q=1.0, sigma=1.0)


def _zero_bundle(grid: TimeGrid, params=None):
    ext = pe.st_times(grid, params)
    times, _ = pe.merge_times(grid, ext)
    normals = np.zeros((1, times.size - 1, pe.NORMALS_PER_INTERVAL))
    return pe.bundle_from_normals(grid, ext, normals)


# =============================================================================
# TIME SETS
# =============================================================================

def test_merge_times_keeps_grid_points():
    times, index = pe.merge_times(GRID, [0.5 + 1e-14, 1.5, 3.0, 3.0])
    assert np.array_equal(times[index], GRID.array)
    assert times.size == GRID.array.size + 2


def test_merge_times_rejects_negative_times():
    with pytest.raises(DomainError):
        pe.merge_times(GRID, [-0.1, 0.5])


def test_st_times_wiener_transform():
    t = GRID.array[1:-1]
    assert np.allclose(pe.st_times(GRID), t / (1.0 - t), rtol=1e-15)
    assert pe.st_times(GRID, OU)[7] == pytest.approx(ou_oracle.kappa_star(0.5, TimeChange(params=OU, T=1.0)))


# =============================================================================
# PINNING AND REPRODUCIBILITY
# =============================================================================

@pytest.mark.parametrize("params", [None, OU, ProcessParams(q=-2.0, sigma=0.5)])
def test_bridges_are_pinned(params):
    bundle = pe.simulate_bundle(GRID, SPEC, SeedSpec(master_seed=7), 5, params=params)
    for kind in ALL_KINDS:
        path = bundle.bridge(kind)
        assert np.all(path[:, 0] == SPEC.a)
        assert np.all(path[:, -1] == SPEC.b)
    assert np.allclose(bundle.process[:, 0], SPEC.a)


def test_same_seed_same_paths():
    first = pe.simulate_bundle(GRID, SPEC, SeedSpec(master_seed=3), 3)
    second = pe.simulate_bundle(GRID, SPEC, SeedSpec(master_seed=3), 3)
    assert list(pe.bundle_rows(first)) == list(pe.bundle_rows(second))


@pytest.mark.parametrize("params", [None, OU])
def test_blocks_do_not_change_replicates(params):
    whole = pe.simulate_bundle(GRID, SPEC, SeedSpec(master_seed=11), 4, params=params)
    tail = pe.simulate_bundle(GRID, SPEC, SeedSpec(master_seed=11, replicate_index=2), 2, params=params)
    for kind in ALL_KINDS:
        assert np.array_equal(whole.bridge(kind)[2:], tail.bridge(kind))
    assert list(tail.replicates) == [2, 3]


def test_wiener_and_ou_share_a_driver():
    ext = np.concatenate((pe.st_times(GRID), pe.st_times(GRID, OU)))
    driver = pe.gen_wiener(GRID, ext, SeedSpec(master_seed=5), 2)
    wiener = pe.build_wiener_bridges(driver, BridgeSpec(T=1.0))
    ou = pe.build_ou_paths(driver, OU, BridgeSpec(T=1.0))
    assert np.array_equal(wiener.w, ou.w)


def test_horizon_mismatch():
    driver = pe.gen_wiener(GRID, pe.st_times(GRID), SeedSpec(master_seed=5), 1)
    with pytest.raises(DomainError):
        pe.build_wiener_bridges(driver, BridgeSpec(T=2.0))


def test_st_bridge_reads_driver_at_transformed_times():
    bundle = pe.simulate_bundle(GRID, BridgeSpec(T=1.0), SeedSpec(master_seed=9), 2)
    t = GRID.array[1:-1]
    idx = pe.lookup_times(bundle.times, t / (1.0 - t), 1.0)
    assert np.allclose(bundle.bridge(BridgeKind.ST)[:, 1:-1], (1.0 - t) * bundle.w_ext[:, idx], rtol=1e-14)


def test_bundle_rows_layout():
    bundle = pe.simulate_bundle(GRID, SPEC, SeedSpec(master_seed=1), 2, params=OU)
    rows = list(pe.bundle_rows(bundle))
    assert pe.bundle_header(bundle) == ["replicate", "t", "U", "U_av", "U_ir", "U_st"]
    assert len(rows) == 2 * (GRID.n_steps + 1)
    assert rows[0][:2] == (0, 0.0)
    assert rows[-1][:2] == (1, 1.0)


# =============================================================================
# ZERO NOISE
# =============================================================================

def test_zero_noise_wiener_bridges_are_the_line():
    bundle = pe.build_wiener_bridges(_zero_bundle(GRID), SPEC)
    line = SPEC.a + (SPEC.b - SPEC.a) * GRID.array
    for kind in ALL_KINDS:
        assert np.allclose(bundle.bridge(kind)[0], line, atol=1e-15)
    assert np.allclose(pe.euler_bridge(bundle, SPEC)[0], line, atol=1e-13)


def test_zero_noise_ou_bridges_are_the_mean():
    bundle = pe.build_ou_paths(_zero_bundle(GRID, OU), OU, SPEC)
    tc = TimeChange(params=OU, T=1.0)
    mean = np.array([ou_oracle.ou_bridge_mean(float(t), SPEC.a, SPEC.b, tc) for t in GRID.array])
    for kind in ALL_KINDS:
        assert np.allclose(bundle.bridge(kind)[0], mean, atol=1e-13)
    assert np.allclose(bundle.process[0], SPEC.a * np.exp(GRID.array), rtol=1e-14)


# =============================================================================
# ENDPOINT CONDITIONING
# =============================================================================

def test_conditioning_pins_the_driver():
    bundle = pe.simulate_bundle(GRID, SPEC, SeedSpec(master_seed=2), 6, d=1.25)
    assert np.all(bundle.w_terminal == 1.25)
    assert bundle.conditioned_on == 1.25
    assert np.allclose(bundle.w[:, -1], 1.25)


def test_conditioning_on_the_bridge_end_zeroes_the_av_deviation():
    spec = BridgeSpec(a=0.0, b=0.8, T=1.0)
    bundle = pe.simulate_bundle(GRID, spec, SeedSpec(master_seed=4), 5, d=0.8)
    assert np.all(pe.deviation(bundle, BridgeKind.AV) == 0.0)


def test_conditioning_is_idempotent_and_composes():
    bundle = pe.simulate_bundle(GRID, SPEC, SeedSpec(master_seed=6), 4)
    once = pe.condition_on_endpoint(bundle, 0.3)
    assert pe.condition_on_endpoint(once, 0.3) is once
    twice = pe.condition_on_endpoint(pe.condition_on_endpoint(bundle, -2.0), 0.3)
    for kind in ALL_KINDS:
        assert np.allclose(twice.bridge(kind), once.bridge(kind), atol=1e-12)


def test_ou_conditioning_is_unsupported():
    with pytest.raises(UnsupportedOperationError):
        pe.simulate_bundle(GRID, SPEC, SeedSpec(master_seed=1), 1, params=OU, d=0.0)
    bundle = pe.simulate_bundle(GRID, SPEC, SeedSpec(master_seed=1), 1, params=OU)
    with pytest.raises(UnsupportedOperationError):
        pe.condition_on_endpoint(bundle, 0.0)


# =============================================================================
# INTERVAL COVARIANCES
# =============================================================================

def test_wiener_interval_covariances_are_psd():
    times, _ = pe.merge_times(GRID, pe.st_times(GRID))
    eig = np.linalg.eigvalsh(pe.wiener_interval_cov(times, 1.0))
    assert np.all(eig >= -1e-15)


@pytest.mark.parametrize("q", [1.0, -1.0, 3.0, -3.0])
def test_ou_interval_covariances_are_psd(q):
    params = ProcessParams(q=q)
    times, _ = pe.merge_times(GRID, pe.st_times(GRID, params))
    cov = pe.ou_interval_cov(times, 1.0, q)
    assert np.all(np.isfinite(cov))
    for block in cov:
        eig = np.linalg.eigvalsh(block)
        assert eig.min() >= -1e-12 * max(1.0, eig.max())


@pytest.mark.parametrize("q", [0.1, -0.1, 1.0, -1.0, 5.0, -5.0, 1e-3, -1e-4, 1e-5])
@pytest.mark.parametrize("steps", [2 ** k for k in range(6, 13)])
def test_ou_interval_factors_are_finite_on_fine_grids(q, steps):
    grid = TimeGrid.uniform(1.0, steps)
    times, _ = pe.merge_times(grid, pe.st_times(grid, ProcessParams(q=q)))
    beta, factor = pe.ou_interval_factor(times, 1.0, q)
    assert np.all(np.isfinite(beta))
    assert np.all(np.isfinite(factor))


@pytest.mark.parametrize("q", [1.0, -2.0])
def test_ou_interval_factor_matches_closed_form_on_coarse_grid(q):
    times, _ = pe.merge_times(GRID, pe.st_times(GRID, ProcessParams(q=q)))
    cov = pe.ou_interval_cov(times, 1.0, q)
    beta, factor = pe.ou_interval_factor(times, 1.0, q)
    h = np.diff(times)
    assert np.allclose(beta * h[:, None], cov[:, 0, 1:], rtol=1e-12, atol=0.0)
    schur = cov[:, 1:, 1:] - h[:, None, None] * beta[:, :, None] * beta[:, None, :]
    rebuilt = factor @ np.swapaxes(factor, -1, -2)
    scale = np.max(np.abs(np.diagonal(cov, axis1=-2, axis2=-1)), axis=-1)
    assert np.all(np.abs(rebuilt - schur) <= 1e-8 * scale[:, None, None])


@pytest.mark.parametrize("q", [1.0, -1.0, -2.0])
def test_ou_paths_on_the_default_grid(q):
    grid = TimeGrid.uniform(1.0, 1024)
    bundle = pe.simulate_bundle(grid, SPEC, SeedSpec(master_seed=5), 10, params=ProcessParams(q=q))
    for kind in ALL_KINDS:
        path = bundle.bridge(kind)
        assert np.all(np.isfinite(path))
        assert np.all(path[:, -1] == SPEC.b)


# =============================================================================
# MOMENTS
# =============================================================================

@pytest.mark.parametrize("kind", ALL_KINDS)
def test_wiener_bridge_variance_at_midpoint(kind):
    bundle = pe.simulate_bundle(GRID, BridgeSpec(T=1.0), SeedSpec(master_seed=123), 4000)
    k = GRID.index_of(0.5)
    var, se = variance_se(bundle.bridge(kind)[:, k])
    assert abs(var - wiener_oracle.bridge_var(0.5, 1.0)) <= 5.0 * se


def test_wiener_ir_covariance_with_process():
    bundle = pe.simulate_bundle(GRID, BridgeSpec(T=1.0), SeedSpec(master_seed=321), 4000)
    k = GRID.index_of(0.5)
    cov, se = cov_se(bundle.process[:, k], bundle.bridge(BridgeKind.IR)[:, k])
    assert abs(cov - wiener_oracle.process_bridge_cov(BridgeKind.IR, 0.5, 1.0)) <= 5.0 * se


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_ou_bridge_variance_at_midpoint(kind):
    bundle = pe.simulate_bundle(GRID, BridgeSpec(T=1.0), SeedSpec(master_seed=77), 4000, params=OU)
    k = GRID.index_of(0.5)
    var, se = variance_se(bundle.bridge(kind)[:, k])
    assert abs(var - ou_oracle.ou_bridge_cov(0.5, 0.5, TimeChange(params=OU, T=1.0))) <= 5.0 * se
