"""
Ornstein-Uhlenbeck Bridge Oracle

Closed-form statistics of the OU process dU = qU dt + sigma dW and its three
bridge constructions: the time change kappa and kappa*_T, the crossing time t*,
bridge mean and covariance, covariance and correlation of each bridge with the
process, deviation laws (expanded and rearranged forms, cross-checked), and the
expected quadratic path deviations including the integral J evaluated by
adaptive quadrature.

Below |q| T < SMALL_Q_THRESHOLD every quantity switches to its Wiener limit
(scaled by sigma^2 where it is a second moment).
"""

import math

import numpy as np
from scipy import special

from . import wiener_oracle
from .constants import DUAL_FORM_TOL, SMALL_Q_THRESHOLD, BridgeKind
from .contracts import BridgeSpec, GaussianMoment, TimeChange
from .errors import DomainError, NumericalError
from .numerics import adaptive_quad, exp_series_tail, log_sinh_ratio, sinh_minus_x, sinh_ratio
from .scalar_gauss import gaussian_abs_moment


def _small_q(tc: TimeChange) -> bool:
    return abs(tc.q) * tc.T < SMALL_Q_THRESHOLD


def _check_closed(t: float, T: float, name: str = "t") -> None:
    if not (0.0 <= t <= T):
        raise DomainError(f"{name}={t} outside [0, {T}]")


def _check_half_open(t: float, T: float) -> None:
    if not (0.0 <= t < T):
        raise DomainError(f"t={t} outside [0, {T})")


def _check_open(t: float, T: float) -> None:
    if not (0.0 < t < T):
        raise DomainError(f"t={t} outside (0, {T})")


# =============================================================================
# TIME CHANGE
# =============================================================================

def kappa(t: float, q: float) -> float:
    """kappa(t) = (1 - e^{-2qt}) / (2q)."""
    if q == 0.0:
        raise DomainError("kappa is defined for q != 0; the Wiener case uses t itself")
    return -math.expm1(-2.0 * q * t) / (2.0 * q)


def kappa_gap(t: float, tc: TimeChange) -> float:
    """kappa(T) - kappa(t) = e^{-2qt} (1 - e^{-2q(T-t)}) / (2q)."""
    q = tc.q
    return math.exp(-2.0 * q * t) * -math.expm1(-2.0 * q * (tc.T - t)) / (2.0 * q)


def kappa_star(t: float, tc: TimeChange) -> float:
    """kappa*_T(t) = kappa(t) kappa(T) / (kappa(T) - kappa(t)) on [0, T)."""
    _check_half_open(t, tc.T)
    if _small_q(tc):
        return t * tc.T / (tc.T - t)
    return kappa(t, tc.q) * kappa(tc.T, tc.q) / kappa_gap(t, tc)


def kappa_star_derivative(t: float, tc: TimeChange) -> float:
    """(kappa*_T)'(t) = e^{-2qt} kappa(T)^2 / (kappa(T) - kappa(t))^2, at least 1."""
    _check_half_open(t, tc.T)
    if _small_q(tc):
        return (tc.T / (tc.T - t)) ** 2
    kT = kappa(tc.T, tc.q)
    return math.exp(-2.0 * tc.q * t) * kT * kT / kappa_gap(t, tc) ** 2


def t_star(tc: TimeChange) -> float:
    """
    Unique t* in (0, T) with kappa*_T(t*) = T.

    Solves kappa(t*) = T kappa(T) / (T + kappa(T)) in closed form.
    """
    if _small_q(tc):
        return 0.5 * tc.T
    q, T = tc.q, tc.T
    kT = kappa(T, q)
    target = T * kT / (T + kT)
    value = -math.log1p(-2.0 * q * target) / (2.0 * q)
    check = kappa_star(value, tc)
    if abs(check - T) > 1e-10 * max(1.0, T):
        raise NumericalError("t_star failed its consistency check",
                             diagnostics={"t_star": value, "kappa_star": check, "T": T})
    return value


# =============================================================================
# PROCESS AND BRIDGE MOMENTS
# =============================================================================

def ou_process_cov(s: float, t: float, tc: TimeChange) -> float:
    """Cov(U_s, U_t) = sigma^2 e^{q max} sinh(q min) / q."""
    lo, hi = min(s, t), max(s, t)
    if lo < 0.0:
        raise DomainError("times must be nonnegative")
    q, sig2 = tc.q, tc.sigma ** 2
    if abs(q) * hi < SMALL_Q_THRESHOLD:
        return sig2 * lo
    return sig2 * math.exp(q * hi) * math.sinh(q * lo) / q


def ou_process_var(t: float, tc: TimeChange) -> float:
    """Var(U_t) = sigma^2 e^{qt} sinh(qt) / q."""
    return ou_process_cov(t, t, tc)


def ou_effective_endpoint(a: float, b: float, tc: TimeChange) -> float:
    """End level of the equivalent start-0 bridge: b - a e^{qT}."""
    return b - a * math.exp(tc.q * tc.T)


def _weight(t: float, tc: TimeChange) -> float:
    """sinh(qt) / sinh(qT)."""
    if t == 0.0:
        return 0.0
    return sinh_ratio(tc.q * t, tc.q * tc.T)


def _ir_log_term(t: float, tc: TimeChange) -> float:
    """qt + log(sinh(qT)/sinh(q(T-t))), split by the sign of q to avoid cancellation."""
    q, T = tc.q, tc.T
    x = q * (T - t)
    if q > 0.0:
        return 2.0 * q * t + math.log(-math.expm1(-2.0 * q * T)) - math.log(-math.expm1(-2.0 * x))
    return math.log(-math.expm1(2.0 * q * T)) - math.log(-math.expm1(2.0 * x))


def ou_bridge_mean(t: float, a: float, b: float, tc: TimeChange) -> float:
    """a sinh(q(T-t))/sinh(qT) + b sinh(qt)/sinh(qT)."""
    _check_closed(t, tc.T)
    if _small_q(tc):
        return wiener_oracle.bridge_mean(t, BridgeSpec(a=a, b=b, T=tc.T))
    return a * _weight(tc.T - t, tc) + b * _weight(t, tc)


def ou_bridge_cov(s: float, t: float, tc: TimeChange) -> float:
    """(sigma^2/q) sinh(q min) sinh(q(T - max)) / sinh(qT), for every kind."""
    _check_closed(s, tc.T, "s")
    _check_closed(t, tc.T)
    lo, hi = min(s, t), max(s, t)
    sig2, q, T = tc.sigma ** 2, tc.q, tc.T
    if _small_q(tc):
        return sig2 * wiener_oracle.bridge_cov(lo, hi, T)
    if lo == 0.0 or hi == T:
        return 0.0
    return (sig2 / q) * math.sinh(q * lo) * _weight(T - hi, tc)


def ou_bridge_cov_by_construction(kind: BridgeKind, s: float, t: float, tc: TimeChange) -> float:
    """
    Bridge covariance derived from each construction separately.

    AV: covariance of U_s - r_s U_T and U_t - r_t U_T.
    IR: sigma^2 sinh(q(T-s)) sinh(q(T-t)) int_0^s ds'/sinh^2(q(T-s')).
    ST: sigma^2 e^{q(s+t)} (kT - ks)(kT - kt) / kT^2 * kappa*_T(s).
    """
    lo, hi = min(s, t), max(s, t)
    _check_half_open(hi, tc.T)
    _check_closed(lo, tc.T, "s")
    q, T, sig2 = tc.q, tc.T, tc.sigma ** 2
    kind = BridgeKind(kind)
    if kind == BridgeKind.AV:
        r_lo, r_hi = _weight(lo, tc), _weight(hi, tc)
        return (ou_process_cov(lo, hi, tc) - r_hi * ou_process_cov(lo, T, tc)
                - r_lo * ou_process_cov(hi, T, tc) + r_lo * r_hi * ou_process_var(T, tc))
    if kind == BridgeKind.IR:
        if lo == 0.0:
            return 0.0
        # int_0^lo csch^2(q(T-u)) du = sinh(q lo) / (q sinh(q(T-lo)) sinh(qT))
        integral = math.sinh(q * lo) / (q * math.sinh(q * (T - lo)) * math.sinh(q * T))
        return sig2 * math.sinh(q * (T - lo)) * math.sinh(q * (T - hi)) * integral
    kT = kappa(T, q)
    return (sig2 * math.exp(q * (lo + hi)) * kappa_gap(lo, tc) * kappa_gap(hi, tc)
            / (kT * kT) * kappa_star(lo, tc))


def ou_cov_with_process(kind: BridgeKind, t: float, tc: TimeChange) -> float:
    """
    Cov(U_t^br, U_t^a); deterministic levels a and b do not enter.

    AV: (sigma^2/q) sinh(q(T-t)) sinh(qt) / sinh(qT)
    IR: (sigma^2/q) e^{-q(T-t)} sinh(q(T-t)) (qt + log(sinh(qT)/sinh(q(T-t))))
    ST: (sigma^2/q) (e^{qt} - 1) sinh(q(T-t)) / sinh(qT)
    """
    _check_open(t, tc.T)
    kind = BridgeKind(kind)
    q, T, sig2 = tc.q, tc.T, tc.sigma ** 2
    if _small_q(tc):
        return sig2 * wiener_oracle.process_bridge_cov(kind, t, T)
    if kind == BridgeKind.AV:
        return (sig2 / q) * math.sinh(q * t) * _weight(T - t, tc)
    if kind == BridgeKind.IR:
        x = q * (T - t)
        return (sig2 / q) * (-math.expm1(-2.0 * x) / 2.0) * _ir_log_term(t, tc)
    return (sig2 / q) * math.expm1(q * t) * _weight(T - t, tc)


def ou_corr_with_process(kind: BridgeKind, t: float, tc: TimeChange) -> float:
    """Correlation of U_t^br with U_t^a."""
    cov = ou_cov_with_process(kind, t, tc)
    return cov / math.sqrt(ou_bridge_cov(t, t, tc) * ou_process_var(t, tc))


# =============================================================================
# DEVIATION LAWS
# =============================================================================

def _av_deviation_var(t: float, tc: TimeChange) -> float:
    """sigma^2 e^{qT} sinh^2(qt) / (q sinh(qT))."""
    q, T = tc.q, tc.T
    return tc.sigma ** 2 * math.sinh(q * t) * math.exp(q * T) * _weight(t, tc) / q


def _expanded_deviation_var(kind: BridgeKind, t: float, tc: TimeChange):
    """IR and ST deviation variances in their expanded arrangement."""
    q, T, sig2 = tc.q, tc.T, tc.sigma ** 2
    s_rest = _weight(T - t, tc)
    head = math.sinh(q * t) * (math.exp(q * t) + s_rest)
    if kind == BridgeKind.IR:
        x = q * (T - t)
        tail = -math.expm1(-2.0 * x) * _ir_log_term(t, tc)
        return (sig2 / q) * (head - tail), (sig2 / abs(q)) * (abs(head) + abs(tail))
    tail = 2.0 * -math.expm1(q * t) * s_rest
    return (sig2 / q) * (head + tail), (sig2 / abs(q)) * (abs(head) + abs(tail))


def _rearranged_deviation_var(kind: BridgeKind, t: float, tc: TimeChange) -> float:
    """IR and ST deviation variances written as the AV variance plus a correction."""
    q, T, sig2 = tc.q, tc.T, tc.sigma ** 2
    sinh_rest = math.sinh(q * (T - t))
    if kind == BridgeKind.IR:
        x = q * (T - t)
        inner = _weight(t, tc) - math.exp(-x) * _ir_log_term(t, tc)
        return _av_deviation_var(t, tc) + 2.0 * (sig2 / q) * sinh_rest * inner
    return st_deviation_gap(t, tc) + _av_deviation_var(t, tc)


def st_deviation_gap(t: float, tc: TimeChange) -> float:
    """
    h_q(t) = Var(ST deviation) - Var(AV deviation)
           = 2 (sigma^2/q) sinh(q(T-t)) (1 - cosh(qt)) / sinh(qT).

    Negative for q > 0, positive for q < 0.
    """
    _check_half_open(t, tc.T)
    q, sig2 = tc.q, tc.sigma ** 2
    return -4.0 * (sig2 / q) * _weight(tc.T - t, tc) * math.sinh(0.5 * q * t) ** 2


def ou_deviation_law(kind: BridgeKind, t: float, b: float, tc: TimeChange) -> GaussianMoment:
    """
    Law of U_t^0 - U_t^br for a start-0 bridge to b.

    Mean -b sinh(qt)/sinh(qT). The IR and ST variances are evaluated in the
    expanded arrangement and checked against the rearranged one.
    """
    _check_half_open(t, tc.T)
    kind = BridgeKind(kind)
    if _small_q(tc):
        m = wiener_oracle.deviation_law(kind, t, BridgeSpec(b=b, T=tc.T))
        return GaussianMoment(mean=m.mean, variance=tc.sigma ** 2 * m.variance)
    mean = -b * _weight(t, tc)
    if t == 0.0:
        return GaussianMoment(mean=mean, variance=0.0)
    if kind == BridgeKind.AV:
        return GaussianMoment(mean=mean, variance=_av_deviation_var(t, tc))
    expanded, scale = _expanded_deviation_var(kind, t, tc)
    if __debug__:
        other = _rearranged_deviation_var(kind, t, tc)
        scale = max(scale, abs(other), _av_deviation_var(t, tc))
        # the IR correction loses about log10(1/(|q|T)) digits as q -> 0
        tol = DUAL_FORM_TOL * max(1.0, 1.0 / (abs(tc.q) * tc.T))
        if abs(expanded - other) > tol * scale:
            raise NumericalError(
                "deviation variance forms disagree",
                diagnostics={"kind": kind.value, "t": t, "expanded": expanded, "rearranged": other},
            )
    return GaussianMoment(mean=mean, variance=max(0.0, expanded))


def ou_rearranged_deviation_var(kind: BridgeKind, t: float, tc: TimeChange) -> float:
    """Variance of the deviation via the AV variance plus a correction term."""
    _check_half_open(t, tc.T)
    kind = BridgeKind(kind)
    if kind == BridgeKind.AV or t == 0.0:
        return 0.0 if t == 0.0 else _av_deviation_var(t, tc)
    return _rearranged_deviation_var(kind, t, tc)


def ou_wiener_l2_gap(t: float, q: float) -> float:
    """
    E(U_t^0 - W_t)^2 for sigma = 1 and a shared driver:
    (e^{2qt} - 1)/(2q) + (2/q)(1 - e^{qt}) + t, which vanishes as q -> 0.
    """
    if q == 0.0:
        return 0.0
    x = q * t
    if abs(x) < 0.5:
        return exp_series_tail(x, 3, lambda n: 2.0 ** (n - 1) - 2.0) / q
    return math.expm1(2.0 * x) / (2.0 * q) - 2.0 * math.expm1(x) / q + t


# =============================================================================
# EXPECTED QUADRATIC PATH DEVIATIONS
# =============================================================================

def j_integral(x_end: float) -> float:
    """
    J(x_end) = int_0^{x_end} (1 - e^{-2x}) log(sinh(x_end)/sinh(x)) dx, signed.

    Evaluated on u in [0, 1] with x = x_end * u; the integrand vanishes at
    u = 0 like u log u, so the interval is split near the origin.
    """
    if x_end == 0.0:
        return 0.0

    def integrand(u: float) -> float:
        if u <= 0.0:
            return 0.0
        x = x_end * u
        return -math.expm1(-2.0 * x) * log_sinh_ratio(x_end, x)

    breaks = (1e-6, 1e-4, 1e-2, 0.1)
    value = adaptive_quad(integrand, 0.0, 1.0, abs_target=1e-10 / max(1.0, abs(x_end)),
                          points=breaks, label=f"J({x_end})")
    return x_end * value


def x_coth_integral(x_end: float) -> float:
    """int_0^{x_end} x coth(x) dx, signed; the integrand is smooth and even."""
    if x_end == 0.0:
        return 0.0

    def integrand(x: float) -> float:
        return 1.0 if x == 0.0 else x / math.tanh(x)

    lo, hi = sorted((0.0, x_end))
    value = adaptive_quad(integrand, lo, hi, abs_target=1e-12 * max(1.0, x_end * x_end),
                          label=f"x coth x on [0, {x_end}]")
    return value if x_end > 0.0 else -value


def j_integral_midpoint(x_end: float, panels: int = 10 ** 7, chunk: int = 10 ** 6) -> float:
    """Brute-force midpoint sum for J(x_end), evaluated in chunks; the integrand vanishes at 0."""
    if x_end == 0.0:
        return 0.0
    total = 0.0
    for start in range(0, panels, chunk):
        u = (np.arange(start, min(start + chunk, panels), dtype=float) + 0.5) / panels
        x = x_end * u
        total += math.fsum(-np.expm1(-2.0 * x) * log_sinh_ratio(x_end, x))
    return x_end * total / panels


def j_integral_by_parts(x_end: float) -> float:
    """J(x_end) = int_0^{x_end} x coth x dx - x_end/2 - (1 - e^{-2 x_end})/4."""
    return x_coth_integral(x_end) - 0.5 * x_end + math.expm1(-2.0 * x_end) / 4.0


def st_mean_term(b: float, tc: TimeChange) -> float:
    """int_0^T (b sinh(qt)/sinh(qT))^2 dt = (b^2/(4q)) (sinh(2qT) - 2qT) / sinh^2(qT)."""
    q, T = tc.q, tc.T
    if _small_q(tc):
        return b * b * T / 3.0
    x = q * T
    if abs(x) < 1.0:
        ratio = sinh_minus_x(2.0 * x) / math.sinh(x) ** 2
    else:
        ratio = 2.0 / math.tanh(x) - 2.0 * x / math.sinh(x) ** 2
    return b * b / (4.0 * q) * ratio


def _av_variance_term(tc: TimeChange) -> float:
    """sigma^2 e^{qT} (sinh(2qT) - 2qT) / (4 q^2 sinh(qT))."""
    q, T, sig2 = tc.q, tc.T, tc.sigma ** 2
    x = q * T
    if abs(x) < 1.0:
        core = sinh_minus_x(2.0 * x) / math.sinh(x)
    else:
        core = 2.0 * math.cosh(x) - 2.0 * x / math.sinh(x)
    return sig2 * math.exp(x) * core / (4.0 * q * q)


# Taylor coefficients of x coth x = sum_n 2^{2n} B_{2n} x^{2n} / (2n)!
_BERNOULLI = special.bernoulli(60)
_X_COTH_COEFFICIENTS = tuple(
    float(2.0 ** (2 * n) * _BERNOULLI[2 * n] / math.factorial(2 * n)) for n in range(31)
)


def _ir_correction_term(tc: TimeChange) -> float:
    """
    int_0^T (Var IR deviation - Var AV deviation) dt.

    The exponential term and J cancel for q < 0; both are regrouped through
    J(x) = int_0^x y coth y dy - x/2 - (1 - e^{-2x})/4 so that
    -sigma^2/(4q^2) + sigma^2 e^{-2qT}/(4q^2) - sigma^2 J/q^2
        = -(sigma^2/q^2) (int_0^{qT} y coth y dy - qT/2).

    For |qT| < 1 the remaining cancellation of order 1/q^2 is avoided with the
    series x coth x = sum c_n x^{2n}, which gives
    sigma^2 T^2 (sum_{n>=1} c_n x^{2n-2} (1 - x/(2n+1)) - 1/2).
    """
    q, T, sig2 = tc.q, tc.T, tc.sigma ** 2
    x = q * T
    if abs(x) < 1.0:
        total = -0.5
        for n, c in enumerate(_X_COTH_COEFFICIENTS[1:], start=1):
            total += c * x ** (2 * n - 2) * (1.0 - x / (2 * n + 1))
        return sig2 * T * T * total
    return (sig2 / q ** 2 * (x / math.tanh(x) - 1.0)
            - sig2 * T * T / 2.0 + sig2 * T / (2.0 * q)
            - sig2 / q ** 2 * (x_coth_integral(x) - 0.5 * x))


def _ir_correction_term_expanded(tc: TimeChange) -> float:
    """The same integral in its expanded arrangement, with J by direct quadrature."""
    q, T, sig2 = tc.q, tc.T, tc.sigma ** 2
    x = q * T
    return (-sig2 / q ** 2 + T * sig2 * math.cosh(x) / (q * math.sinh(x))
            - sig2 * T * T / 2.0 + sig2 * T / (2.0 * q)
            - sig2 / (4.0 * q ** 2) + sig2 * math.exp(-2.0 * x) / (4.0 * q ** 2)
            - sig2 / q ** 2 * j_integral(x))


def _st_correction_term(tc: TimeChange) -> float:
    """int_0^T h_q(t) dt = 2 sigma^2 (cosh qT - 1)/(q^2 sinh qT) - sigma^2 T / q."""
    q, T, sig2 = tc.q, tc.T, tc.sigma ** 2
    return 2.0 * sig2 * math.tanh(0.5 * q * T) / q ** 2 - sig2 * T / q


def ou_expected_quad_dev(kind: BridgeKind, b: float, tc: TimeChange) -> float:
    """
    E int_0^T (U_t^0 - U_t^br)^2 dt for a start-0 bridge to b.

    Every kind carries the squared-mean term st_mean_term(b); the ST form
    returned by ou_expected_quad_dev_expanded omits it.
    """
    kind = BridgeKind(kind)
    if _small_q(tc):
        wiener_var = wiener_oracle.expected_quad_dev(kind, 0.0, tc.T)
        return tc.sigma ** 2 * wiener_var + b * b * tc.T / 3.0
    base = st_mean_term(b, tc) + _av_variance_term(tc)
    if kind == BridgeKind.AV:
        return base
    if kind == BridgeKind.IR:
        return base + _ir_correction_term(tc)
    return base + _st_correction_term(tc)


def ou_expected_quad_dev_expanded(kind: BridgeKind, b: float, tc: TimeChange) -> float:
    """
    The closed forms in their expanded arrangement: IR through J by direct
    quadrature, ST without the squared-mean term.
    """
    kind = BridgeKind(kind)
    if _small_q(tc):
        value = ou_expected_quad_dev(kind, b, tc)
        return value - b * b * tc.T / 3.0 if kind == BridgeKind.ST else value
    if kind == BridgeKind.AV:
        return st_mean_term(b, tc) + _av_variance_term(tc)
    if kind == BridgeKind.IR:
        return st_mean_term(b, tc) + _av_variance_term(tc) + _ir_correction_term_expanded(tc)
    return _av_variance_term(tc) + _st_correction_term(tc)


def ou_expected_integrated_abs_dev(kind: BridgeKind, b: float, tc: TimeChange) -> float:
    """E int_0^T |U_t^0 - U_t^br| dt, by adaptive quadrature of folded means."""

    def integrand(t: float) -> float:
        if t >= tc.T:
            return abs(b)
        return gaussian_abs_moment(ou_deviation_law(kind, t, b, tc))

    return adaptive_quad(integrand, 0.0, tc.T,
                         label=f"OU integrated abs deviation ({BridgeKind(kind).value})")
