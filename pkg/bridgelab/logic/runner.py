"""
Verification Runner

Orchestrates the verification suites:
1. Builds the bridge specs and parameter sets each suite covers
2. Runs the Monte Carlo estimators of mc_lab on them
3. Adds the deterministic oracle checks (exact values, quadrature consistency, limits)
4. Returns one SuiteReport per suite

This is a pure orchestration layer: estimators live in mc_lab, closed forms in
the oracle modules.
"""

import logging
from typing import Callable, Dict, List, Sequence

import numpy as np

from . import mc_lab, ou_oracle, path_engine, wiener_oracle
from .constants import (
    ALL_KINDS,
    CORRELATION_GAP_FLOOR,
    DEFAULT_REGION_GRID,
    POINTWISE_TIMES,
    BridgeKind,
    Suite,
)
from .aggregator import corr_gap_se
from .contracts import (
    BridgeSpec,
    CheckResult,
    EstimateReport,
    ProcessParams,
    RegionPoint,
    SeedSpec,
    SimulationOptions,
    SuiteReport,
    TimeChange,
    TimeGrid,
    VerificationReport,
)
from .numerics import adaptive_quad
from .scalar_gauss import second_moment

logger = logging.getLogger(__name__)

# Replicate cap for the Euler crosscheck (the error study needs far fewer paths)
BACKEND_MAX_REPS = 10_000

# Monte Carlo spot points of the region map: at least one per region plus two near boundaries
REGION_SPOT_POINTS = ((6.0, 5.0), (10.0, 14.4), (0.0, 3.0), (6.0, 2.25), (0.0, 1.5), (6.0, 4.0))

# Region D needs b_tilde^2 >= 224/9
REGION_D_THRESHOLD = 224.0 / 9.0


def _check(name: str, passed: bool, detail: str = "", **values) -> CheckResult:
    if passed:
        logger.info(f"✅ {name}")
    else:
        logger.warning(f"❌ {name}: {detail}")
    return CheckResult(name=name, passed=bool(passed), detail=detail, values=values)


def _relative_gap(value: float, reference: float) -> float:
    return abs(value - reference) / max(abs(reference), 1e-300)


# =============================================================================
# WIENER, UNCONDITIONAL
# =============================================================================

def _wiener_exact_values() -> List[CheckResult]:
    checks = []
    for b, T, expected in ((0.0, 1.0, {"av": 1 / 3, "ir": 1 / 6, "st": 1 / 3}),
                           (2.0, 3.0, {"av": 7.0, "ir": 5.5, "st": 7.0})):
        for kind in ALL_KINDS:
            value = wiener_oracle.expected_quad_dev(kind, b, T)
            err = abs(value - expected[kind.value])
            checks.append(_check(f"wiener.{kind.value}.expected_quad_dev.exact(b={b:g},T={T:g})",
                                 err <= 1e-14 * max(1.0, expected[kind.value]),
                                 f"abs error {err:.3e}", value=value, expected=expected[kind.value]))
    return checks


def _wiener_quadrature_consistency() -> List[CheckResult]:
    checks = []
    for kind in ALL_KINDS:
        worst = 0.0
        for b in (0.0, 1.0, 2.0):
            for T in (1.0, 3.0):
                integral = adaptive_quad(lambda t: wiener_oracle.pointwise_quad_dev(kind, t, b, T), 0.0, T,
                                         label=f"wiener {kind.value} quadratic deviation")
                worst = max(worst, _relative_gap(integral, wiener_oracle.expected_quad_dev(kind, b, T)))
        checks.append(_check(f"wiener.{kind.value}.quadrature_consistency", worst <= 1e-9,
                             f"max relative error {worst:.3e}", max_relative_error=worst))
    av = wiener_oracle.expected_integrated_abs_dev(BridgeKind.AV, 1.0, 1.0)
    st = wiener_oracle.expected_integrated_abs_dev(BridgeKind.ST, 1.0, 1.0)
    ir = wiener_oracle.expected_integrated_abs_dev(BridgeKind.IR, 1.0, 1.0)
    checks.append(_check("wiener.expected_integrated_abs_dev.ordering", abs(av - st) <= 1e-10 and ir < av,
                         f"av={av:.6g} st={st:.6g} ir={ir:.6g}", av=av, ir=ir, st=st))
    return checks


def _variance_decay(name: str, variance: Callable[[float], float], T: float) -> CheckResult:
    """Monotone decay of the bridge variance to 0 on [T - 0.1, T)."""
    ts = np.linspace(T - 0.1, T, 21)[:-1]
    values = [variance(float(t)) for t in ts]
    near_end = variance(T * (1.0 - 1e-12))
    passed = all(b < a for a, b in zip(values, values[1:])) and near_end < 1e-10
    return _check(name, passed, f"values {values[0]:.3g} .. {values[-1]:.3g}, at T^- {near_end:.3g}",
                  last=values[-1], near_end=near_end)


def wiener_unconditional(opts: SimulationOptions) -> SuiteReport:
    spec = BridgeSpec(a=0.0, b=0.0, T=1.0)
    estimates: List[EstimateReport] = []
    checks: List[CheckResult] = []

    logger.info("📐 Integrated deviations (b=0, T=1)")
    samples = mc_lab.sample_integrated(spec, opts=opts)
    for functional in mc_lab.FUNCTIONALS:
        for kind in ALL_KINDS:
            estimates.append(mc_lab.integrated_report(kind, samples, spec, functional=functional, opts=opts))
    for larger, smaller in ((BridgeKind.AV, BridgeKind.IR), (BridgeKind.ST, BridgeKind.IR)):
        gap = mc_lab.integrated_gap(larger, smaller, samples, spec, opts=opts)
        estimates.append(gap)
        checks.append(_check(f"{gap.statistic}.significant", mc_lab.gap_significance(gap, opts.gate),
                             f"gap {gap.estimate:.6g} with SE {gap.std_error:.3g}"))
    estimates.append(mc_lab.integrated_gap(BridgeKind.AV, BridgeKind.ST, samples, spec, opts=opts))

    logger.info("📈 Pointwise laws and correlations")
    t_last = mc_lab.last_interior_time(spec, opts)
    times = sorted(set(POINTWISE_TIMES) | {0.25, 0.75, t_last})
    col = {t: k for k, t in enumerate(times)}
    points = mc_lab.sample_pointwise(times, spec, opts=opts)
    for t in POINTWISE_TIMES:
        for kind in ALL_KINDS:
            reports = mc_lab.pointwise_reports(kind, t, col[t], points, spec, opts=opts)
            if t == 0.5:
                estimates.extend(reports)
            else:
                estimates.extend(r for r in reports if r.statistic.endswith(("corr_with_process", "cov_with_process")))
        analytic = (wiener_oracle.corr_with_process(BridgeKind.IR, t, spec.T)
                    - wiener_oracle.corr_with_process(BridgeKind.AV, t, spec.T))
        if analytic > CORRELATION_GAP_FLOOR:
            est, se = corr_gap_se(points["ir.bridge"][:, col[t]], points["av.bridge"][:, col[t]],
                                  points["process"][:, col[t]])
            checks.append(_check(f"wiener.ir-av.corr_gap(t={t:g})", est > opts.gate * se,
                                 f"gap {est:.4g} with SE {se:.3g}", estimate=est, se=se, analytic=analytic))
    for kind in ALL_KINDS:
        estimates.append(mc_lab.estimate_bridge_cov(kind, col[0.25], col[0.75], times, points, spec, opts=opts))
    concentrated, values = mc_lab.endpoint_concentration(points, col[t_last], t_last, spec)
    checks.append(_check("wiener.ir.endpoint_concentration", concentrated,
                         f"sd {values['sample_sd']:.4g} vs limit {values['limit']:.4g}", **values))

    logger.info("🧮 Deterministic oracle checks")
    checks.extend(_wiener_exact_values())
    checks.extend(_wiener_quadrature_consistency())
    checks.append(_variance_decay("wiener.bridge_var.decay", lambda t: wiener_oracle.bridge_var(t, 1.0), 1.0))
    return _suite_report(Suite.WIENER_UNCONDITIONAL, opts, estimates, checks)


# =============================================================================
# WIENER, CONDITIONAL
# =============================================================================

def _conditional_exact_values() -> CheckResult:
    worst = 0.0
    for d in np.linspace(-2.0, 2.0, 5):
        for T in np.linspace(0.5, 2.5, 5):
            d, T = float(d), float(T)
            expected = {"av": 0.0,
                        "ir": (2.0 / 27.0) * d * d * T + T * T / 27.0,
                        "st": d * d * T / 12.0 + T * T / 6.0}
            for kind in ALL_KINDS:
                value = wiener_oracle.expected_cond_quad_dev(kind, d, d, T)
                worst = max(worst, abs(value - expected[kind.value]) / max(1.0, expected[kind.value]))
    return _check("wiener.expected_cond_quad_dev.exact(d=b)", worst <= 1e-14, f"max error {worst:.3e}",
                  max_error=worst)


def _conditioning_exactness(opts: SimulationOptions, d: float) -> List[CheckResult]:
    spec = BridgeSpec(a=0.0, b=0.0, T=1.0)
    grid = TimeGrid.uniform(spec.T, opts.steps)
    count = min(opts.block_size, opts.reps)
    bundle = path_engine.simulate_bundle(grid, spec, SeedSpec(master_seed=opts.seed), count, d=d)
    again = path_engine.condition_on_endpoint(bundle, d)
    return [
        _check(f"wiener.conditioned_endpoint(d={d:g})", bool(np.all(bundle.w_terminal == d)),
               "W_T differs from d", replicates=count),
        _check(f"wiener.conditioning_idempotent(d={d:g})",
               bool(np.array_equal(again.w_ext, bundle.w_ext) and np.array_equal(again.m, bundle.m)),
               "second projection changed the driver"),
    ]


def wiener_conditional(opts: SimulationOptions) -> SuiteReport:
    spec = BridgeSpec(a=0.0, b=0.0, T=1.0)
    estimates: List[EstimateReport] = []
    checks: List[CheckResult] = []

    for d in (0.0, 1.0, 2.0):
        logger.info(f"📐 Conditional integrated deviations (b=0, d={d:g}, T=1)")
        samples = mc_lab.sample_integrated(spec, d=d, opts=opts)
        for kind in ALL_KINDS:
            estimates.append(mc_lab.integrated_report(kind, samples, spec, d=d, opts=opts))
        if d == 1.0:
            for kind in ALL_KINDS:
                estimates.append(mc_lab.integrated_report(kind, samples, spec, d=d, functional="abs", opts=opts))
        if d == spec.b:
            worst = float(np.max(samples["av.max_abs_dev"]))
            checks.append(_check("wiener.av.cond_deviation_zero(d=b)", worst == 0.0,
                                 f"largest |deviation| {worst:.3e}", max_abs_deviation=worst))

    logger.info("📈 Conditional pointwise law (t=1/2, d=1)")
    points = mc_lab.sample_pointwise((0.5,), spec, d=1.0, opts=opts)
    for kind in ALL_KINDS:
        estimates.extend(mc_lab.pointwise_reports(kind, 0.5, 0, points, spec, d=1.0, opts=opts))

    checks.append(_conditional_exact_values())
    for d in (0.0, 1.0):
        checks.extend(_conditioning_exactness(opts, d))
    return _suite_report(Suite.WIENER_CONDITIONAL, opts, estimates, checks)


# =============================================================================
# ORNSTEIN-UHLENBECK
# =============================================================================

# Expected orderings of the integrated squared deviations, smallest first
OU_ORDERINGS: Dict[float, Sequence[BridgeKind]] = {
    2.0: (BridgeKind.IR, BridgeKind.ST, BridgeKind.AV),
    -2.0: (BridgeKind.IR, BridgeKind.AV, BridgeKind.ST),
}


def _ou_quadrature_consistency() -> List[CheckResult]:
    checks = []
    worst = {kind.value: 0.0 for kind in ALL_KINDS}
    worst_mean_term = 0.0
    for q in (0.5, -0.5, 1.0, -1.0, 5.0, -5.0):
        for b in (0.0, 1.0):
            for sigma in (1.0, 2.0):
                for T in (1.0, 2.0):
                    tc = TimeChange(params=ProcessParams(q=q, sigma=sigma), T=T)
                    for kind in ALL_KINDS:
                        integral = adaptive_quad(
                            lambda t: second_moment(ou_oracle.ou_deviation_law(kind, t, b, tc)), 0.0, T,
                            label=f"ou {kind.value} quadratic deviation",
                        )
                        closed = ou_oracle.ou_expected_quad_dev(kind, b, tc)
                        worst[kind.value] = max(worst[kind.value], _relative_gap(integral, closed))
                    expanded = ou_oracle.ou_expected_quad_dev_expanded(BridgeKind.ST, b, tc)
                    full = ou_oracle.ou_expected_quad_dev(BridgeKind.ST, b, tc)
                    term = ou_oracle.st_mean_term(b, tc)
                    magnitude = max(1.0, abs(full), abs(expanded), abs(term))
                    worst_mean_term = max(worst_mean_term, abs(full - expanded - term) / magnitude)
    for kind in ALL_KINDS:
        checks.append(_check(f"ou.{kind.value}.quadrature_consistency", worst[kind.value] <= 1e-8,
                             f"max relative error {worst[kind.value]:.3e}", max_relative_error=worst[kind.value]))
    checks.append(_check("ou.st.expanded_form_difference", worst_mean_term <= 1e-12,
                         f"relative difference from the squared-mean term {worst_mean_term:.3e}",
                         max_relative_error=worst_mean_term))
    return checks


def _ou_small_q_limits() -> List[CheckResult]:
    """Every OU quantity at sigma = 1 against its Wiener counterpart, with O(q) decay."""
    checks = []
    T, s, t = 1.0, 0.3, 0.6
    for q, tol in ((1e-4, 1e-3), (1e-5, 1e-4)):
        tc = TimeChange(params=ProcessParams(q=q, sigma=1.0), T=T)
        pairs = {
            "kappa_star": (ou_oracle.kappa_star(0.5, tc), 1.0),
            "t_star": (ou_oracle.t_star(tc), 0.5),
            "bridge_mean": (ou_oracle.ou_bridge_mean(t, 0.0, 1.0, tc), wiener_oracle.bridge_mean(t, BridgeSpec(b=1.0))),
            "bridge_cov": (ou_oracle.ou_bridge_cov(s, t, tc), wiener_oracle.bridge_cov(s, t, T)),
        }
        for kind in ALL_KINDS:
            pairs[f"{kind.value}.cov_with_process"] = (ou_oracle.ou_cov_with_process(kind, t, tc),
                                                       wiener_oracle.process_bridge_cov(kind, t, T))
            pairs[f"{kind.value}.deviation_var"] = (
                ou_oracle.ou_deviation_law(kind, t, 0.0, tc).variance,
                wiener_oracle.deviation_law(kind, t, BridgeSpec(T=T)).variance,
            )
            pairs[f"{kind.value}.expected_quad_dev"] = (ou_oracle.ou_expected_quad_dev(kind, 0.0, tc),
                                                        wiener_oracle.expected_quad_dev(kind, 0.0, T))
        gaps = {name: _relative_gap(ou, w) for name, (ou, w) in pairs.items()}
        worst = max(gaps, key=gaps.get)
        checks.append(_check(f"ou.small_q_limit(q={q:g})", gaps[worst] <= tol,
                             f"largest relative gap {gaps[worst]:.3e} ({worst})", **gaps))
    return checks


def _j_midpoint_checks() -> List[CheckResult]:
    checks = []
    for x_end in (1.0, -1.0):
        quad = ou_oracle.j_integral(x_end)
        brute = ou_oracle.j_integral_midpoint(x_end)
        checks.append(_check(f"ou.j_integral.midpoint(x={x_end:g})", abs(quad - brute) <= 1e-8,
                             f"quadrature {quad:.12g} vs midpoint {brute:.12g}", quadrature=quad, midpoint=brute))
    return checks


def ou_suite(opts: SimulationOptions) -> SuiteReport:
    spec = BridgeSpec(a=0.0, b=0.0, T=1.0)
    estimates: List[EstimateReport] = []
    checks: List[CheckResult] = []

    for q, ordering in OU_ORDERINGS.items():
        logger.info(f"📐 OU ordering at q={q:g}")
        params = ProcessParams(q=q, sigma=1.0)
        reports, samples = mc_lab.estimate_integrated_all(spec, params, opts=opts)
        estimates.extend(reports.values())
        for smaller, larger in zip(ordering, ordering[1:]):
            gap = mc_lab.integrated_gap(larger, smaller, samples, spec, params, opts=opts)
            estimates.append(gap)
            checks.append(_check(f"{gap.statistic}(q={q:g}).significant", mc_lab.gap_significance(gap, opts.gate),
                                 f"gap {gap.estimate:.6g} with SE {gap.std_error:.3g}"))

    for q in (1.0, -1.0):
        logger.info(f"📐 OU closed forms at q={q:g}")
        reports, _ = mc_lab.estimate_integrated_all(spec, ProcessParams(q=q, sigma=1.0), opts=opts)
        estimates.extend(reports.values())

    logger.info("📐 OU ST with a nonzero endpoint (b=2, q=1)")
    estimates.append(mc_lab.estimate_integrated(BridgeKind.ST, BridgeSpec(b=2.0, T=1.0),
                                                ProcessParams(q=1.0, sigma=1.0), opts=opts))

    logger.info("🔗 OU against Wiener on a shared driver (q=1e-4)")
    estimates.extend(mc_lab.small_q_coupling(1e-4, spec, opts))

    logger.info("📈 OU pointwise laws (t=1/2, b=1, q=1)")
    pointwise_spec = BridgeSpec(a=0.0, b=1.0, T=1.0)
    params = ProcessParams(q=1.0, sigma=1.0)
    t_last = mc_lab.last_interior_time(pointwise_spec, opts)
    points = mc_lab.sample_pointwise((0.5, t_last), pointwise_spec, params, opts=opts)
    for kind in ALL_KINDS:
        estimates.extend(mc_lab.pointwise_reports(kind, 0.5, 0, points, pointwise_spec, params, opts=opts))
    concentrated, values = mc_lab.endpoint_concentration(points, 1, t_last, pointwise_spec, params)
    checks.append(_check("ou.ir.endpoint_concentration", concentrated,
                         f"sd {values['sample_sd']:.4g} vs limit {values['limit']:.4g}", **values))

    logger.info("🧮 Deterministic oracle checks")
    checks.extend(_j_midpoint_checks())
    checks.extend(_ou_small_q_limits())
    checks.extend(_ou_quadrature_consistency())
    tc = TimeChange(params=params, T=1.0)
    checks.append(_variance_decay("ou.bridge_var.decay", lambda t: ou_oracle.ou_bridge_cov(t, t, tc), 1.0))
    return _suite_report(Suite.OU, opts, estimates, checks)


# =============================================================================
# REGION MAP
# =============================================================================

def regions_suite(opts: SimulationOptions, grid: int = DEFAULT_REGION_GRID) -> SuiteReport:
    checks: List[CheckResult] = []

    logger.info(f"🗺️ Region sweep on a {grid}x{grid} grid")
    sweep = wiener_oracle.region_sweep(grid)
    mismatches = [
        (p.b_tilde, p.d_tilde) for p, label in sweep
        if not label.boundary and wiener_oracle.region_direct(p).tag != label.tag
    ]
    tags = {label.tag for _, label in sweep}
    misplaced_d = [(p.b_tilde, p.d_tilde) for p, label in sweep
                   if label.tag == "D" and p.b_tilde ** 2 < REGION_D_THRESHOLD]
    boundary = sum(1 for _, label in sweep if label.boundary)
    checks.append(_check("wiener.region.classify_matches_direct", not mismatches,
                         f"{len(mismatches)} mismatching points", mismatches=mismatches[:20], boundary_points=boundary))
    checks.append(_check("wiener.region.all_letters_present", {"A", "B", "C", "D"} <= tags,
                         f"labels found: {sorted(tags)}", labels=sorted(tags)))
    checks.append(_check("wiener.region.d_threshold", not misplaced_d,
                         f"{len(misplaced_d)} D points with b~^2 < 224/9", misplaced=misplaced_d[:20]))

    logger.info("🎯 Region spot checks by Monte Carlo")
    points = [RegionPoint(b_tilde=b, d_tilde=d) for b, d in REGION_SPOT_POINTS]
    regions = mc_lab.region_map_mc(points, opts)
    return _suite_report(Suite.REGIONS, opts, [], checks, regions=regions)


# =============================================================================
# BACKENDS
# =============================================================================

def backends_suite(opts: SimulationOptions) -> SuiteReport:
    capped = opts.model_copy(update={"reps": min(opts.reps, BACKEND_MAX_REPS)})
    notes = []
    if capped.reps < opts.reps:
        notes.append(f"Euler crosscheck uses {capped.reps} replicates")
    backends = [mc_lab.backend_crosscheck(BridgeSpec(b=0.0, T=1.0), None, capped, case="wiener ir b=0")]
    for q in (1.0, -1.0):
        backends.append(mc_lab.backend_crosscheck(BridgeSpec(b=1.0, T=1.0), ProcessParams(q=q, sigma=1.0), capped))
    zero = BridgeSpec(a=0.0, b=0.0, T=1.0)
    backends.append(mc_lab.backend_zero_noise(zero))
    backends.append(mc_lab.backend_zero_noise(zero, ProcessParams(q=1.0, sigma=1.0)))
    estimates = [
        mc_lab.euler_marginal_variance(0.5, BridgeSpec(b=0.0, T=1.0), None, capped),
        mc_lab.euler_marginal_variance(0.5, BridgeSpec(b=0.0, T=1.0), ProcessParams(q=1.0, sigma=1.0), capped),
    ]
    return _suite_report(Suite.BACKENDS, opts, estimates, [], backends=backends, notes=notes)


# =============================================================================
# ENTRY POINTS
# =============================================================================

def _suite_report(suite: Suite, opts: SimulationOptions, estimates, checks, **extra) -> SuiteReport:
    report = SuiteReport(
        suite=suite.value, seed=opts.seed, reps=opts.reps, steps=opts.steps, gate=opts.gate,
        passed=True, estimates=estimates, checks=checks, **extra,
    )
    failing = report.failures()
    report.passed = not failing
    if failing:
        logger.warning(f"⚠️ Suite {suite.value}: {len(failing)} failing gates")
    else:
        logger.info(f"✨ Suite {suite.value} passed")
    return report


def run_suite(suite: Suite, opts: SimulationOptions, grid: int = DEFAULT_REGION_GRID) -> SuiteReport:
    """Run one verification suite (not `all`)."""
    suite = Suite(suite)
    logger.info(f"🚀 Starting suite {suite.value} (reps={opts.reps}, steps={opts.steps}, seed={opts.seed})")
    if suite == Suite.WIENER_UNCONDITIONAL:
        return wiener_unconditional(opts)
    if suite == Suite.WIENER_CONDITIONAL:
        return wiener_conditional(opts)
    if suite == Suite.OU:
        return ou_suite(opts)
    if suite == Suite.REGIONS:
        return regions_suite(opts, grid)
    if suite == Suite.BACKENDS:
        return backends_suite(opts)
    raise ValueError(f"'{suite.value}' is not a single suite")


def run_verification(suite: Suite, opts: SimulationOptions, grid: int = DEFAULT_REGION_GRID) -> VerificationReport:
    """Run a suite, or every suite for `all`, and collect the failing gates."""
    suite = Suite(suite)
    selected = [s for s in Suite if s != Suite.ALL] if suite == Suite.ALL else [suite]
    reports = [run_suite(s, opts, grid) for s in selected]
    failing = [f"{r.suite}:{name}" for r in reports for name in r.failures()]
    return VerificationReport(suites=reports, passed=not failing, failing=failing)
