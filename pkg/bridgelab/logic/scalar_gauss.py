"""
Scalar Gaussian Utilities

Density, distribution function, folded-normal mean, two-sided tail, second
moment and scalar-on-scalar conditioning of Gaussian laws.
"""

import math

import numpy as np
from scipy import special

from .constants import CAUCHY_SCHWARZ_SLACK
from .contracts import GaussianMoment
from .errors import DomainError

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def std_normal_cdf(x: float) -> float:
    """Phi(x), via scipy.special.ndtr."""
    if not np.isfinite(x):
        raise DomainError(f"std_normal_cdf needs a finite argument, got {x}")
    return float(special.ndtr(x))


def std_normal_pdf(x: float) -> float:
    """Phi'(x)."""
    if not np.isfinite(x):
        raise DomainError(f"std_normal_pdf needs a finite argument, got {x}")
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def folded_mean(m: GaussianMoment) -> float:
    """
    E|Y| for Y ~ N(mean, variance): 2 sigma Phi'(mu/sigma) + mu (2 Phi(mu/sigma) - 1).

    Raises DomainError for zero variance; callers use |mean| there.
    """
    if m.variance <= 0.0:
        raise DomainError("folded_mean requires a positive variance")
    sigma = math.sqrt(m.variance)
    z = m.mean / sigma
    # 2 Phi(z) - 1 == erf(z / sqrt 2), without the cancellation near z = 0
    return 2.0 * sigma * std_normal_pdf(z) + m.mean * float(special.erf(z / math.sqrt(2.0)))


def folded_mean_sigma_derivative(m: GaussianMoment) -> float:
    """Derivative of folded_mean with respect to sigma: 2 Phi'(mu/sigma)."""
    if m.variance <= 0.0:
        raise DomainError("folded_mean_sigma_derivative requires a positive variance")
    return 2.0 * std_normal_pdf(m.mean / math.sqrt(m.variance))


def gaussian_abs_moment(m: GaussianMoment) -> float:
    """E|Y|, with the degenerate law mapped to |mean|."""
    if m.variance == 0.0:
        return abs(m.mean)
    return folded_mean(m)


def tail(m: GaussianMoment, x: float) -> float:
    """P(|Y| > x) = 1 - Phi((mu + x)/sigma) + Phi((mu - x)/sigma)."""
    if x <= 0.0:
        raise DomainError(f"tail threshold must be positive, got {x}")
    if m.variance <= 0.0:
        raise DomainError("tail requires a positive variance")
    sigma = math.sqrt(m.variance)
    return float(special.ndtr(-(m.mean + x) / sigma) + special.ndtr((m.mean - x) / sigma))


def second_moment(m: GaussianMoment) -> float:
    """E(Y^2) = variance + mean^2."""
    return m.variance + m.mean * m.mean


def condition_on_linear(
    joint_mean_x: float,
    joint_mean_s: float,
    var_x: float,
    var_s: float,
    cov_xs: float,
    observed_s: float,
) -> GaussianMoment:
    """
    Law of X given S = observed_s for jointly Gaussian (X, S).

    mean = E X + (s - E S) Cov(X,S)/Var S, variance = Var X - Cov(X,S)^2/Var S.
    """
    if var_s <= 0.0:
        raise DomainError("conditioning variable must have positive variance")
    if var_x < 0.0:
        raise DomainError("variance of X must be nonnegative")
    if cov_xs * cov_xs > var_x * var_s * (1.0 + CAUCHY_SCHWARZ_SLACK):
        raise DomainError("covariance violates the Cauchy-Schwarz bound")
    mean = joint_mean_x + (observed_s - joint_mean_s) * cov_xs / var_s
    variance = max(0.0, var_x - cov_xs * cov_xs / var_s)
    return GaussianMoment(mean=mean, variance=variance)
