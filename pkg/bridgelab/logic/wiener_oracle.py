"""
Wiener Bridge Oracle

Closed-form statistics of the three Wiener bridge constructions (anticipative,
integral representation, space-time transform): bridge mean and covariance,
correlation with the driving process, unconditional and endpoint-conditioned
deviation laws, expected absolute / quadratic / conditional quadratic path
deviations, and the region classifier for the conditional ordering.

Deviation operations work with start 0; a general start a enters only through
the shifted end b - a.
"""

import math
from typing import List, Tuple

import numpy as np

from .constants import REGION_BOUNDARY_TOL, BridgeKind
from .contracts import BridgeSpec, GaussianMoment, RegionLabel, RegionPoint
from .errors import DomainError
from .numerics import adaptive_quad
from .scalar_gauss import gaussian_abs_moment


# =============================================================================
# ARGUMENT CHECKS
# =============================================================================

def _check_horizon(T: float) -> None:
    if not (T > 0.0 and np.isfinite(T)):
        raise DomainError(f"horizon T must be positive and finite, got {T}")


def _check_closed(t: float, T: float, name: str = "t") -> None:
    _check_horizon(T)
    if not (0.0 <= t <= T):
        raise DomainError(f"{name}={t} outside [0, {T}]")


def _check_half_open(t: float, T: float) -> None:
    _check_horizon(T)
    if not (0.0 <= t < T):
        raise DomainError(f"t={t} outside [0, {T})")


def _check_open(t: float, T: float) -> None:
    _check_horizon(T)
    if not (0.0 < t < T):
        raise DomainError(f"t={t} outside (0, {T})")


def shift_endpoint(a: float, b: float) -> float:
    """Reduce a bridge from a to b to one from 0 to b - a."""
    return b - a


def log_remaining(t: float, T: float) -> float:
    """log((T - t)/T), accurate near both ends of [0, T)."""
    if t < 0.5 * T:
        return math.log1p(-t / T)
    return math.log((T - t) / T)


# =============================================================================
# BRIDGE MOMENTS
# =============================================================================

def bridge_mean(t: float, spec: BridgeSpec) -> float:
    """E(W_t^br) = a + (b - a) t / T for every construction."""
    _check_closed(t, spec.T)
    return spec.a + (spec.b - spec.a) * t / spec.T


def bridge_cov(s: float, t: float, T: float) -> float:
    """Cov(W_s^br, W_t^br) = min(s,t) (T - max(s,t)) / T for every construction."""
    _check_closed(s, T, "s")
    _check_closed(t, T)
    lo, hi = min(s, t), max(s, t)
    return lo * (T - hi) / T


def bridge_var(t: float, T: float) -> float:
    """Var(W_t^br) = t (T - t) / T."""
    return bridge_cov(t, t, T)


def process_bridge_cov(kind: BridgeKind, t: float, T: float) -> float:
    """Cov(W_t^br, W_t): t(T-t)/T for AV and ST, (T-t) log(T/(T-t)) for IR."""
    _check_half_open(t, T)
    kind = BridgeKind(kind)
    if kind == BridgeKind.IR:
        return -(T - t) * log_remaining(t, T)
    return t * (T - t) / T


def corr_with_process(kind: BridgeKind, t: float, T: float) -> float:
    """
    Correlation of the bridge with the driving process at time t.

    AV, ST: sqrt((T - t)/T). IR: sqrt(T (T - t)) / t * log(T / (T - t)).
    """
    _check_open(t, T)
    kind = BridgeKind(kind)
    if kind == BridgeKind.IR:
        return -math.sqrt(T * (T - t)) / t * log_remaining(t, T)
    return math.sqrt((T - t) / T)


# =============================================================================
# DEVIATION LAWS
# =============================================================================

def ir_deviation_var(t: float, T: float) -> float:
    """
    sigma^2(t) = 2t - t^2/T + 2 (T - t) log((T - t)/T).

    Near t = 0 the three terms cancel to third order; the series
    T * sum_{n>=3} 2 u^n / (n (n - 1)), u = t/T, is used there.
    """
    u = t / T
    if u < 0.05:
        total, power = 0.0, u ** 3
        for n in range(3, 40):
            piece = 2.0 * power / (n * (n - 1))
            total += piece
            if piece <= 1e-17 * total:
                break
            power *= u
        return T * total
    return max(0.0, 2.0 * t - t * t / T + 2.0 * (T - t) * log_remaining(t, T))


def deviation_law(kind: BridgeKind, t: float, spec: BridgeSpec) -> GaussianMoment:
    """
    Law of W_t - W_t^br for a start-0 bridge to b = spec.b - spec.a.

    Mean -b t/T for every kind; variance t^2/T (AV, ST) or sigma^2(t) (IR).
    """
    _check_half_open(t, spec.T)
    T, b = spec.T, spec.shifted_end
    kind = BridgeKind(kind)
    if kind == BridgeKind.IR:
        variance = ir_deviation_var(t, T)
    else:
        variance = t * t / T
    return GaussianMoment(mean=-b * t / T, variance=variance)


def cond_deviation_law(kind: BridgeKind, t: float, b: float, d: float, T: float) -> GaussianMoment:
    """Law of W_t - W_t^br given the driver endpoint W_T = d."""
    _check_half_open(t, T)
    kind = BridgeKind(kind)
    if kind == BridgeKind.AV:
        return GaussianMoment(mean=(d - b) * t / T, variance=0.0)
    if kind == BridgeKind.IR:
        r = T - t
        lg = log_remaining(t, T)
        mean = (d - b) * t / T + d * (r / T) * lg
        variance = 2.0 * t * r / T + 2.0 * (r * r / T) * lg - (r * r / T) * lg * lg
        return GaussianMoment(mean=mean, variance=max(0.0, variance))
    late = t >= 0.5 * T
    mean = -b * t / T + ((d / T) * (2.0 * t - T) if late else 0.0)
    variance = t * t / T - ((2.0 * t - T) ** 2 / T if late else 0.0)
    return GaussianMoment(mean=mean, variance=max(0.0, variance))


def pointwise_quad_dev(kind: BridgeKind, t: float, b: float, T: float) -> float:
    """E(W_t - W_t^br)^2 for a start-0 bridge."""
    m = deviation_law(kind, t, BridgeSpec(b=b, T=T))
    return m.variance + m.mean * m.mean


def pointwise_cond_quad_dev(kind: BridgeKind, t: float, b: float, d: float, T: float) -> float:
    """E((W_t - W_t^br)^2 | W_T = d)."""
    m = cond_deviation_law(kind, t, b, d, T)
    return m.variance + m.mean * m.mean


# =============================================================================
# PATH DEVIATIONS
# =============================================================================

def expected_abs_dev(kind: BridgeKind, t: float, b: float, T: float) -> float:
    """E|W_t - W_t^br|; equal for AV and ST, strictly smaller for IR."""
    _check_open(t, T)
    return gaussian_abs_moment(deviation_law(kind, t, BridgeSpec(b=b, T=T)))


def expected_integrated_abs_dev(kind: BridgeKind, b: float, T: float) -> float:
    """E int_0^T |W_t - W_t^br| dt, by adaptive quadrature."""
    _check_horizon(T)
    return adaptive_quad(
        lambda t: expected_abs_dev(kind, t, b, T), 0.0, T,
        label=f"integrated abs deviation ({BridgeKind(kind).value})",
    )


def expected_cond_integrated_abs_dev(kind: BridgeKind, b: float, d: float, T: float) -> float:
    """E(int_0^T |W_t - W_t^br| dt | W_T = d), by adaptive quadrature."""
    _check_horizon(T)
    return adaptive_quad(
        lambda t: gaussian_abs_moment(cond_deviation_law(kind, t, b, d, T)), 0.0, T,
        points=(0.5 * T,),
        label=f"conditional integrated abs deviation ({BridgeKind(kind).value})",
    )


def expected_quad_dev(kind: BridgeKind, b: float, T: float) -> float:
    """E int_0^T (W_t - W_t^br)^2 dt: (T/3)(T + b^2) for AV, ST; (T/3)(T/2 + b^2) for IR."""
    _check_horizon(T)
    if BridgeKind(kind) == BridgeKind.IR:
        return (T / 3.0) * (0.5 * T + b * b)
    return (T / 3.0) * (T + b * b)


def expected_cond_quad_dev(kind: BridgeKind, b: float, d: float, T: float) -> float:
    """E(int_0^T (W_t - W_t^br)^2 dt | W_T = d)."""
    _check_horizon(T)
    kind = BridgeKind(kind)
    if kind == BridgeKind.AV:
        return (d - b) ** 2 * T / 3.0
    if kind == BridgeKind.IR:
        return (7.0 / 54.0) * (b - d) ** 2 * T + (11.0 / 54.0) * b * b * T \
            - (7.0 / 54.0) * d * b * T + T * T / 27.0
    return (d - b) ** 2 * T / 6.0 + b * b * T / 6.0 - d * b * T / 12.0 + T * T / 6.0


# =============================================================================
# REGION MAP
# =============================================================================

def region_residuals(p: RegionPoint) -> Tuple[float, float, float]:
    """
    Signed, rescaled differences (e_av - e_ir, e_av - e_st, e_st - e_ir) at T = 1.

    e_av - e_ir = (11/54) [(d - 15/22 b)^2 - (15/22)^2 b^2 - 2/11]
    e_av - e_st = (1/6)  [(d - 3/4 b)^2 - 9/16 b^2 - 1]
    e_st - e_ir = (1/27) [(d - 3/8 b)^2 - 9/64 b^2 + 7/2]
    The bracketed quantities are returned.
    """
    b, d = p.b_tilde, p.d_tilde
    av_ir = (d - 15.0 / 22.0 * b) ** 2 - (15.0 / 22.0) ** 2 * b * b - 2.0 / 11.0
    av_st = (d - 0.75 * b) ** 2 - 9.0 / 16.0 * b * b - 1.0
    st_ir = (d - 0.375 * b) ** 2 - 9.0 / 64.0 * b * b + 3.5
    return av_ir, av_st, st_ir


def region_classify(p: RegionPoint) -> RegionLabel:
    """Ordering of (e_av, e_ir, e_st) at (b_tilde, d_tilde), or a boundary marker."""
    av_ir, av_st, st_ir = region_residuals(p)
    if min(abs(av_ir), abs(av_st), abs(st_ir)) <= REGION_BOUNDARY_TOL:
        return RegionLabel(ordering=None, boundary=True)
    above = {
        "av": int(av_ir > 0) + int(av_st > 0),
        "ir": int(av_ir < 0) + int(st_ir < 0),
        "st": int(av_st < 0) + int(st_ir > 0),
    }
    ordering = tuple(sorted(above, key=above.get))
    return RegionLabel(ordering=ordering, boundary=False)


def boundary_distance(p: RegionPoint) -> float:
    """Distance along d_tilde from p to the nearest boundary curve."""
    b, d = p.b_tilde, p.d_tilde
    curves = (
        (15.0 / 22.0, 2.0 / 11.0 + (15.0 / 22.0) ** 2 * b * b),
        (0.75, 1.0 + 9.0 / 16.0 * b * b),
        (0.375, 9.0 / 64.0 * b * b - 3.5),
    )
    best = math.inf
    for slope, disc in curves:
        if disc < 0.0:
            continue
        radius = math.sqrt(disc)
        centre = slope * b
        best = min(best, abs(d - (centre + radius)), abs(d - (centre - radius)))
    return best


def region_direct(p: RegionPoint) -> RegionLabel:
    """Ordering from the three conditional closed forms at T = 1, without the residual polynomials."""
    values = {
        kind.value: expected_cond_quad_dev(kind, p.b_tilde, p.d_tilde, 1.0)
        for kind in (BridgeKind.AV, BridgeKind.IR, BridgeKind.ST)
    }
    ordering = tuple(sorted(values, key=values.get))
    return RegionLabel(ordering=ordering, boundary=False)


def region_sweep(resolution: int, extent: float = 10.0) -> List[Tuple[RegionPoint, RegionLabel]]:
    """region_classify over a resolution x resolution grid on [-extent, extent]^2, b_tilde outermost."""
    if resolution < 2:
        raise DomainError("region grid needs at least two points per axis")
    axis = np.linspace(-extent, extent, resolution)
    out = []
    for b in axis:
        for d in axis:
            p = RegionPoint(b_tilde=float(b), d_tilde=float(d))
            out.append((p, region_classify(p)))
    return out
