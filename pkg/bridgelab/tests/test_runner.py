"""
Tests for suite assembly and the deterministic oracle checks inside the suites.
"""

import pytest

from bridgelab.logic import mc_lab, runner
from bridgelab.logic.constants import Suite
from bridgelab.logic.contracts import SimulationOptions, SuiteReport

OPTS = SimulationOptions(reps=1000, seed=1, steps=256)


@pytest.mark.parametrize("checks", [
    runner._wiener_exact_values,
    runner._wiener_quadrature_consistency,
    runner._ou_quadrature_consistency,
    runner._ou_small_q_limits,
])
def test_deterministic_checks_pass(checks):
    results = checks()
    assert results
    assert [c.name for c in results if not c.passed] == []


def test_expanded_form_difference_is_relative():
    by_name = {c.name: c for c in runner._ou_quadrature_consistency()}
    check = by_name["ou.st.expanded_form_difference"]
    assert check.passed
    assert check.values["max_relative_error"] <= 1e-12


def test_conditional_exact_values():
    assert runner._conditional_exact_values().passed


def test_regions_suite_sweep_checks(monkeypatch):
    monkeypatch.setattr(mc_lab, "region_map_mc", lambda points, opts: [])
    report = runner.regions_suite(OPTS, grid=41)
    assert report.passed
    assert {c.name for c in report.checks} == {
        "wiener.region.classify_matches_direct",
        "wiener.region.all_letters_present",
        "wiener.region.d_threshold",
    }


def test_all_expands_to_every_suite(monkeypatch):
    seen = []

    def fake(suite, opts, grid):
        seen.append(suite)
        return SuiteReport(suite=suite.value, seed=opts.seed, reps=opts.reps, steps=opts.steps,
                           gate=opts.gate, passed=True)

    monkeypatch.setattr(runner, "run_suite", fake)
    report = runner.run_verification(Suite.ALL, OPTS)
    assert report.passed
    assert seen == [s for s in Suite if s != Suite.ALL]


def test_all_is_not_a_single_suite():
    with pytest.raises(ValueError):
        runner.run_suite(Suite.ALL, OPTS)
