"""
Path Engine

Generates driving Wiener paths on a merged time set (grid points plus the
transformed ST evaluation times), builds the Wiener and OU process and all
three bridges on the same driver by exact Gaussian recursion, runs the
Euler-Maruyama bridge SDE on the same increments, and conditions Wiener
bundles on the driver endpoint W_T = d by exact linear-Gaussian projection.

Per merged interval [s_j, s_{j+1}] the engine draws three standard normals
(z0, z1, z2). z0 always gives the driver increment, so Wiener and OU bundles
built from the same seed and time set share one driving path.
"""

import logging
import math
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from . import ou_oracle
from .constants import COV_QUAD_NODES, TIME_MERGE_TOL, BridgeKind
from .contracts import BridgeSpec, PathBundle, ProcessParams, SeedSpec, TimeChange, TimeGrid
from .errors import DomainError, UnsupportedOperationError
from .numerics import conditional_factor, log_tanh_half, psd_factor, sinh_ratio
from .rng import replicate_normals, replicate_range

logger = logging.getLogger(__name__)

NORMALS_PER_INTERVAL = 3


# =============================================================================
# TIME SETS
# =============================================================================

def st_times(grid: TimeGrid, params: Optional[ProcessParams] = None) -> np.ndarray:
    """
    Transformed evaluation times of the ST construction at interior grid points:
    tT/(T - t) for the Wiener bridge, kappa*_T(t) for the OU bridge.
    """
    T = grid.T
    interior = grid.array[1:-1]
    if params is None:
        return interior * T / (T - interior)
    tc = TimeChange(params=params, T=T)
    return np.array([ou_oracle.kappa_star(float(t), tc) for t in interior], dtype=float)


def merge_times(grid: TimeGrid, extended_times: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sorted union of grid points and extended times.

    Extended times within TIME_MERGE_TOL * T of a kept point collapse onto it;
    grid points are always kept exactly. Returns (times, grid_index).
    """
    base = grid.array
    tol = TIME_MERGE_TOL * grid.T
    ext = np.sort(np.asarray(extended_times, dtype=float).ravel())
    if ext.size and ext[0] < 0.0:
        raise DomainError("extended times must be nonnegative")
    if ext.size:
        pos = np.searchsorted(base, ext)
        left = base[np.clip(pos - 1, 0, base.size - 1)]
        right = base[np.clip(pos, 0, base.size - 1)]
        near = np.minimum(np.abs(ext - left), np.abs(ext - right)) <= tol
        ext = ext[~near]
    if ext.size:
        keep = np.concatenate(([True], np.diff(ext) > tol))
        ext = ext[keep]
    times = np.union1d(base, ext)
    return times, np.searchsorted(times, base)


def lookup_times(times: np.ndarray, query: np.ndarray, T: float) -> np.ndarray:
    """Indices of query times in the merged set; every query must be present."""
    query = np.asarray(query, dtype=float)
    pos = np.clip(np.searchsorted(times, query), 1, times.size - 1)
    left, right = times[pos - 1], times[pos]
    idx = np.where(np.abs(query - left) <= np.abs(right - query), pos - 1, pos)
    if np.any(np.abs(times[idx] - query) > TIME_MERGE_TOL * T):
        raise DomainError("driver was not generated at the required transformed times")
    return idx


# =============================================================================
# PER-INTERVAL COVARIANCES
# =============================================================================

def wiener_interval_cov(times: np.ndarray, T: float) -> np.ndarray:
    """
    Covariances of (dW, dM) per interval, M_t = int_0^t dW_s/(T - s).

    Var dM = 1/(T - s_{j+1}) - 1/(T - s_j), Cov = log((T - s_j)/(T - s_{j+1})).
    dM is absent (zero) on intervals reaching T or beyond.
    """
    s0, s1 = times[:-1], times[1:]
    h = s1 - s0
    inside = s1 < T
    u0 = np.where(inside, T - s0, 1.0)
    u1 = np.where(inside, T - s1, 1.0)
    cov = np.zeros((h.size, 2, 2))
    cov[:, 0, 0] = h
    cov[:, 1, 1] = np.where(inside, h / (u0 * u1), 0.0)
    cross = np.where(inside, np.log1p(h / u1), 0.0)
    cov[:, 0, 1] = cross
    cov[:, 1, 0] = cross
    return cov


def ou_interval_cov(times: np.ndarray, T: float, q: float) -> np.ndarray:
    """
    Covariances of (dW, X2, X3) per interval with
    X2 = int e^{q(s_{j+1} - s)} dW_s (exact U^0 recursion) and
    X3 = int dW_s / sinh(q(T - s)) (IR accumulator).

    X2 is kept on intervals up to T, X3 on intervals strictly before T.
    """
    s0, s1 = times[:-1], times[1:]
    h = s1 - s0
    upto = s1 <= T
    before = s1 < T
    qa = abs(q)
    x0 = np.where(before, qa * (T - s0), 1.0)
    x1 = np.where(before, qa * (T - s1), 1.0)
    sign = 1.0 if q > 0.0 else -1.0

    h_in = np.where(upto, h, 0.0)
    cov = np.zeros((h.size, 3, 3))
    cov[:, 0, 0] = h
    c02 = np.where(upto, np.expm1(q * h_in) / q, 0.0)
    c22 = np.where(upto, np.expm1(2.0 * q * h_in) / (2.0 * q), 0.0)
    # sinh(qh) / (q sinh(x1) sinh(x0)), written with |q| since csch^2 is even
    c33 = np.where(
        before,
        2.0 * np.exp(-2.0 * x1) * -np.expm1(-2.0 * qa * h)
        / (qa * np.expm1(-2.0 * x1) * np.expm1(-2.0 * x0)),
        0.0,
    )
    c03 = np.where(before, sign * (log_tanh_half(x0) - log_tanh_half(x1)) / qa, 0.0)
    if q > 0.0:
        log_ratio = 2.0 * qa * h + np.log(-np.expm1(-2.0 * x0)) - np.log(-np.expm1(-2.0 * x1))
        c23 = np.exp(-x1) * log_ratio / q
    else:
        log_ratio = np.log(-np.expm1(-2.0 * x0)) - np.log(-np.expm1(-2.0 * x1))
        c23 = np.exp(x1) * log_ratio / q
    c23 = np.where(before, c23, 0.0)

    cov[:, 0, 1] = cov[:, 1, 0] = c02
    cov[:, 1, 1] = c22
    cov[:, 0, 2] = cov[:, 2, 0] = c03
    cov[:, 2, 2] = c33
    cov[:, 1, 2] = cov[:, 2, 1] = c23
    return cov


def ou_interval_factor(times: np.ndarray, T: float, q: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Regression of (X2, X3) on dW per interval and a factor of their
    conditional covariance given dW.

    Both are stochastic integrals of f(s) against dW, so given dW the residual
    covariance is the Gram matrix of the centred integrands f - beta over the
    interval. It is integrated by Gauss-Legendre in v = -log(T - s) on
    intervals before T and in s on the interval ending at T, which keeps it
    positive semidefinite at any step size and rate.
    """
    cov = ou_interval_cov(times, T, q)
    s0, s1 = times[:-1], times[1:]
    h = s1 - s0
    upto = s1 <= T
    before = s1 < T
    beta = cov[:, 0, 1:] / h[:, None]

    nodes, weights = np.polynomial.legendre.leggauss(COV_QUAD_NODES)
    u0 = np.where(upto, T - s0, 1.0)
    u1 = np.where(before, T - s1, 0.0)

    v0 = -np.log(u0)
    v1 = -np.log(np.where(before, u1, 1.0))
    half_v = 0.5 * (v1 - v0)[:, None]
    rem_log = np.exp(-(0.5 * (v0 + v1)[:, None] + half_v * nodes))
    half_s = 0.5 * (u0 - u1)[:, None]
    rem_lin = 0.5 * (u0 + u1)[:, None] - half_s * nodes

    rem = np.where(before[:, None], rem_log, rem_lin)
    omega = np.where(before[:, None], half_v * weights * rem_log, half_s * weights)
    omega = np.where(upto[:, None], omega, 0.0)

    f2 = np.exp(q * (rem - u1[:, None]))
    x = abs(q) * np.where(before[:, None], rem, 1.0)
    f3 = np.where(before[:, None], math.copysign(2.0, q) * np.exp(-x) / -np.expm1(-2.0 * x), 0.0)
    g = np.stack([f2 - beta[:, 0:1], f3 - beta[:, 1:2]], axis=-1)
    g = np.where(upto[:, None, None], g, 0.0)
    gram = np.einsum("mk,mki,mkj->mij", omega, g, g)
    return beta, psd_factor(gram)


# =============================================================================
# DRIVER GENERATION
# =============================================================================

def bundle_from_normals(
    grid: TimeGrid,
    extended_times: Sequence[float],
    normals: np.ndarray,
    master_seed: int = 0,
    replicates: Optional[np.ndarray] = None,
) -> PathBundle:
    """
    Driver bundle from given standard normals of shape (reps, intervals, 3).

    Zero normals give the zero-noise driver.
    """
    times, grid_index = merge_times(grid, extended_times)
    n_int = times.size - 1
    normals = np.asarray(normals, dtype=float)
    if normals.shape[1:] != (n_int, NORMALS_PER_INTERVAL):
        raise DomainError(f"normals must have shape (reps, {n_int}, {NORMALS_PER_INTERVAL})")
    if replicates is None:
        replicates = np.arange(normals.shape[0], dtype=np.int64)

    T = grid.T
    h = np.diff(times)
    dw = normals[:, :, 0] * np.sqrt(h)
    beta, factor = conditional_factor(wiener_interval_cov(times, T))
    dm = dw * beta[:, 0] + normals[:, :, 1] * factor[:, 0, 0]

    w_ext = np.zeros((normals.shape[0], times.size))
    np.cumsum(dw, axis=1, out=w_ext[:, 1:])
    return PathBundle(
        grid=grid,
        times=times,
        grid_index=grid_index,
        end_index=int(grid_index[-1]),
        replicates=np.asarray(replicates, dtype=np.int64),
        master_seed=int(master_seed),
        normals=normals,
        dw=dw,
        dm=dm,
        w_ext=w_ext,
    )


def gen_wiener(
    grid: TimeGrid,
    extended_times: Sequence[float],
    seed: SeedSpec,
    n_reps: int = 1,
) -> PathBundle:
    """
    Driving Wiener path on the merged set of grid points and extended times,
    for replicates seed.replicate_index .. seed.replicate_index + n_reps - 1.
    """
    times, _ = merge_times(grid, extended_times)
    replicates = replicate_range(seed, n_reps)
    normals = replicate_normals(seed.master_seed, replicates, (times.size - 1, NORMALS_PER_INTERVAL))
    return bundle_from_normals(grid, extended_times, normals, seed.master_seed, replicates)


# =============================================================================
# WIENER BRIDGES
# =============================================================================

def build_wiener_bridges(bundle: PathBundle, spec: BridgeSpec) -> PathBundle:
    """Process a + W and the AV, IR and ST bridges from a to b on the bundle's driver."""
    grid = bundle.grid
    T = grid.T
    if abs(T - spec.T) > TIME_MERGE_TOL * T:
        raise DomainError("bridge horizon does not match the grid")
    t = grid.array
    a, b = spec.a, spec.b
    line = a + (b - a) * t / T

    w = bundle.w
    w_end = bundle.w_terminal[:, None]

    av = line + w - (t / T) * w_end

    m_ext = np.zeros_like(bundle.w_ext)
    np.cumsum(bundle.dm, axis=1, out=m_ext[:, 1:])
    m_grid = m_ext[:, bundle.grid_index]
    ir = line + (T - t) * m_grid

    st = np.empty_like(av)
    st[:, 0] = a
    if t.size > 2:
        idx = lookup_times(bundle.times, st_times(grid), T)
        interior = t[1:-1]
        st[:, 1:-1] = line[1:-1] + ((T - interior) / T) * bundle.w_ext[:, idx]

    for path in (av, ir, st):
        path[:, -1] = b
    return bundle.model_copy(update={
        "spec": spec,
        "params": None,
        "process": a + w,
        "terminal": bundle.w_terminal.copy(),
        "m": m_grid,
        "derived": {BridgeKind.AV.value: av, BridgeKind.IR.value: ir, BridgeKind.ST.value: st},
    })


# =============================================================================
# OU PROCESS AND BRIDGES
# =============================================================================

def build_ou_paths(bundle: PathBundle, params: ProcessParams, spec: BridgeSpec) -> PathBundle:
    """
    U^a = a e^{qt} + U^0 and the AV, IR and ST OU bridges on the bundle's driver.

    U^0 follows the exact recursion U^0_{s+h} = e^{qh} U^0_s + sigma X2; the IR
    bridge uses sinh(q(T - t)) times the accumulated X3.
    """
    if bundle.conditioned_on is not None or bundle.normals is None:
        raise UnsupportedOperationError("OU paths cannot be built on an endpoint-conditioned driver")
    grid = bundle.grid
    T = grid.T
    if abs(T - spec.T) > TIME_MERGE_TOL * T:
        raise DomainError("bridge horizon does not match the grid")
    q, sigma = params.q, params.sigma
    tc = TimeChange(params=params, T=T)
    times = bundle.times
    end = bundle.end_index
    t = grid.array
    a, b = spec.a, spec.b

    beta, factor = ou_interval_factor(times, T, q)
    z = bundle.normals[:, :, 1:]
    aux = bundle.dw[:, :, None] * beta[None, :, :] + np.einsum("mij,rmj->rmi", factor, z)
    x2, x3 = aux[:, :, 0], aux[:, :, 1]

    n_reps = bundle.n_reps
    u0 = np.zeros((n_reps, end + 1))
    growth = np.exp(q * np.diff(times[: end + 1]))
    for j in range(end):
        u0[:, j + 1] = growth[j] * u0[:, j] + sigma * x2[:, j]
    n_acc = np.zeros((n_reps, end + 1))
    np.cumsum(x3[:, :end], axis=1, out=n_acc[:, 1:])

    u_grid = u0[:, bundle.grid_index]
    u_end = u0[:, end][:, None]
    n_grid = n_acc[:, bundle.grid_index]

    weight = sinh_ratio(q * t, q * T)
    weight_rest = sinh_ratio(q * (T - t), q * T)
    mean = a * weight_rest + b * weight

    av = mean + u_grid - weight * u_end
    ir = mean + sigma * np.sinh(q * (T - t)) * n_grid

    st = np.empty_like(av)
    st[:, 0] = a
    if t.size > 2:
        idx = lookup_times(times, st_times(grid, params), T)
        interior = t[1:-1]
        k_T = ou_oracle.kappa(T, q)
        scale = np.array([math.exp(q * s) * ou_oracle.kappa_gap(float(s), tc) / k_T for s in interior])
        st[:, 1:-1] = mean[1:-1] + sigma * scale * bundle.w_ext[:, idx]

    for path in (av, ir, st):
        path[:, -1] = b
    return bundle.model_copy(update={
        "spec": spec,
        "params": params,
        "process": a * np.exp(q * t) + u_grid,
        "terminal": u0[:, end].copy(),
        "m": n_grid,
        "derived": {BridgeKind.AV.value: av, BridgeKind.IR.value: ir, BridgeKind.ST.value: st},
    })


# =============================================================================
# DEVIATIONS
# =============================================================================

def deviation(bundle: PathBundle, kind: BridgeKind) -> np.ndarray:
    """
    Process minus bridge at grid points, with the continuous extension at T.

    The AV deviation comes from its closed representation,
    (t/T)(a - b + W_T) for Wiener and sinh(qt)/sinh(qT) (a e^{qT} - b + U^0_T)
    for OU, so a conditioned run with d = b - a gives exactly zero.
    """
    if bundle.spec is None or bundle.process is None:
        raise DomainError("bridges have not been built on this bundle")
    kind = BridgeKind(kind)
    spec = bundle.spec
    t = bundle.grid.array
    T = spec.T
    if kind == BridgeKind.AV:
        if bundle.params is None:
            return (t / T) * (spec.a - spec.b + bundle.terminal[:, None])
        q = bundle.params.q
        shift = spec.a * math.exp(q * T) - spec.b
        return sinh_ratio(q * t, q * T) * (shift + bundle.terminal[:, None])
    return bundle.process - bundle.bridge(kind)


# =============================================================================
# EULER-MARUYAMA BACKEND
# =============================================================================

def euler_path(t: np.ndarray, w: np.ndarray, spec: BridgeSpec, params: Optional[ProcessParams] = None) -> np.ndarray:
    """
    Euler-Maruyama solution of the bridge SDE at times t, driven by the
    increments of the driver values w (replicates x points).

    Wiener: dX = (b - X)/(T - t) dt + dW.
    OU:     dX = q(-coth(q(T - t)) X + b / sinh(q(T - t))) dt + sigma dW.
    The drift is singular at T, so the final value is set to b.
    """
    T = spec.T
    if abs(t[-1] - T) > TIME_MERGE_TOL * T:
        raise DomainError("Euler grid must end at the bridge horizon")
    dw = np.diff(w, axis=1)
    n = t.size - 1
    x = np.empty((w.shape[0], n + 1))
    x[:, 0] = spec.a
    sigma = 1.0 if params is None else params.sigma
    for k in range(n - 1):
        h = t[k + 1] - t[k]
        rest = T - t[k]
        if params is None:
            drift = (spec.b - x[:, k]) / rest
        else:
            arg = params.q * rest
            drift = params.q * (-x[:, k] / math.tanh(arg) + spec.b / math.sinh(arg))
        x[:, k + 1] = x[:, k] + drift * h + sigma * dw[:, k]
    x[:, n] = spec.b
    return x


def euler_bridge(bundle: PathBundle, spec: BridgeSpec, params: Optional[ProcessParams] = None) -> np.ndarray:
    """Euler-Maruyama bridge on the bundle's grid, sharing its driver increments."""
    return euler_path(bundle.grid.array, bundle.w, spec, params)


# =============================================================================
# ENDPOINT CONDITIONING
# =============================================================================

def condition_on_endpoint(bundle: PathBundle, d: float) -> PathBundle:
    """
    Condition a Wiener bundle on the driver endpoint W_T = d.

    Every Gaussian coordinate X is moved to X + (d - W_T) Cov(X, W_T) / T:
    driver increments inside [0, T] by their length, dM by
    log((T - s_j)/(T - s_{j+1})), increments beyond T not at all. W_T is then
    set to d exactly and the bridges are rebuilt.
    """
    if bundle.params is not None:
        raise UnsupportedOperationError("conditioning OU paths on U_T is not provided")
    if bundle.conditioned_on is not None and bundle.conditioned_on == d:
        return bundle
    T = bundle.grid.T
    end = bundle.end_index
    h = np.diff(bundle.times)
    cov = wiener_interval_cov(bundle.times, T)

    shift = (d - bundle.w_terminal) / T
    dw = bundle.dw.copy()
    dw[:, :end] += shift[:, None] * h[None, :end]
    dm = bundle.dm + shift[:, None] * cov[None, :, 0, 1]

    w_ext = np.zeros_like(bundle.w_ext)
    np.cumsum(dw[:, :end], axis=1, out=w_ext[:, 1:end + 1])
    w_ext[:, end] = d
    if end < w_ext.shape[1] - 1:
        w_ext[:, end + 1:] = d + np.cumsum(dw[:, end:], axis=1)

    conditioned = bundle.model_copy(update={
        "dw": dw,
        "dm": dm,
        "w_ext": w_ext,
        "normals": None,
        "conditioned_on": float(d),
    })
    if bundle.spec is not None:
        conditioned = build_wiener_bridges(conditioned, bundle.spec)
    return conditioned


# =============================================================================
# CONVENIENCE
# =============================================================================

def simulate_bundle(
    grid: TimeGrid,
    spec: BridgeSpec,
    seed: SeedSpec,
    n_reps: int,
    params: Optional[ProcessParams] = None,
    d: Optional[float] = None,
) -> PathBundle:
    """Driver plus process and bridges (Wiener or OU), optionally conditioned on W_T = d."""
    bundle = gen_wiener(grid, st_times(grid, params), seed, n_reps)
    if params is None:
        bundle = build_wiener_bridges(bundle, spec)
        if d is not None:
            bundle = condition_on_endpoint(bundle, d)
        return bundle
    if d is not None:
        raise UnsupportedOperationError("conditioning OU paths on U_T is not provided")
    return build_ou_paths(bundle, params, spec)


def bundle_header(bundle: PathBundle) -> List[str]:
    name = "W" if bundle.params is None else "U"
    return ["replicate", "t", name, f"{name}_av", f"{name}_ir", f"{name}_st"]


def bundle_rows(bundle: PathBundle) -> Iterator[Tuple]:
    """Rows (replicate, t, process, av, ir, st), by replicate then time."""
    t = bundle.grid.array
    av, ir, st = (bundle.bridge(k) for k in (BridgeKind.AV, BridgeKind.IR, BridgeKind.ST))
    for row, rep in enumerate(bundle.replicates):
        for k in range(t.size):
            yield (int(rep), float(t[k]), float(bundle.process[row, k]),
                   float(av[row, k]), float(ir[row, k]), float(st[row, k]))
