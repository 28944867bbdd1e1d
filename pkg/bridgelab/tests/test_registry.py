"""
Tests for the statistic registry behind the `oracle` command.
"""

import math

import pytest

from bridgelab.logic import registry
from bridgelab.logic.errors import DomainError, RegistryError


def test_every_id_is_namespaced_and_listed_once():
    ids = [name for name, _, _ in registry.listing()]
    assert ids == sorted(set(ids))
    assert all(name.split(".")[0] in {"scalar", "wiener", "ou"} for name in ids)


def test_evaluate_closed_forms():
    assert registry.evaluate("wiener.expected_quad_dev", {"kind": "ir", "b": 0.0, "T": 1.0}) == pytest.approx(1 / 6)
    assert registry.evaluate("wiener.region", {"b_tilde": 0.0, "d_tilde": 0.0}) == "A"
    assert registry.evaluate("scalar.std_normal_cdf", {"x": 0.0}) == 0.5
    assert registry.evaluate("ou.kappa", {"t": 1.0, "q": 1.0}) == pytest.approx((1 - math.exp(-2)) / 2)


def test_defaults_and_ignored_values():
    with_defaults = registry.evaluate("wiener.bridge_mean", {"t": 0.5, "b": 2.0, "q": None})
    assert with_defaults == pytest.approx(1.0)


def test_general_start_is_reduced():
    shifted = registry.evaluate("wiener.expected_quad_dev", {"kind": "av", "a": 1.0, "b": 3.0, "T": 3.0})
    assert shifted == pytest.approx(7.0)
    ou_start = registry.evaluate("ou.deviation_mean", {"kind": "av", "t": 0.5, "a": 1.0, "b": math.e, "q": 1.0})
    assert ou_start == pytest.approx(0.0, abs=1e-14)


def test_unknown_and_incomplete_requests():
    with pytest.raises(RegistryError):
        registry.lookup("wiener.nothing")
    with pytest.raises(RegistryError, match="--kind"):
        registry.evaluate("wiener.expected_quad_dev", {"b": 0.0})


def test_domain_errors_pass_through():
    with pytest.raises(DomainError):
        registry.evaluate("wiener.bridge_cov", {"s": -0.1, "t": 0.5, "T": 1.0})
    with pytest.raises(ValueError):
        registry.evaluate("wiener.expected_quad_dev", {"kind": "xx", "b": 0.0})
