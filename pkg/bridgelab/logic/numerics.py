"""
Numerical Helpers

Overflow-safe hyperbolic ratios, cancellation-free small-argument series,
adaptive quadrature with accuracy enforcement, and factoring of batched
covariance matrices.
"""

import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate

from .constants import PSD_TOLERANCE, QUAD_EPSABS, QUAD_EPSREL, QUAD_LIMIT
from .errors import DomainError, NumericalError

logger = logging.getLogger(__name__)


# =============================================================================
# HYPERBOLIC FUNCTIONS
# =============================================================================

def sinh_ratio(x, y):
    """
    sinh(x) / sinh(y) without overflow.

    Uses sinh(x)/sinh(y) = e^{|x|-|y|} * expm1(-2|x|) / expm1(-2|y|) with the
    sign restored from x and y. y must be nonzero.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(y == 0.0):
        raise DomainError("sinh_ratio: denominator argument must be nonzero")
    ax, ay = np.abs(x), np.abs(y)
    out = np.sign(x) * np.sign(y) * np.exp(ax - ay) * np.expm1(-2.0 * ax) / np.expm1(-2.0 * ay)
    return out if out.ndim else float(out)


def log_sinh_ratio(x, y):
    """log(sinh|x| / sinh|y|) for nonzero x, y."""
    ax = np.abs(np.asarray(x, dtype=float))
    ay = np.abs(np.asarray(y, dtype=float))
    out = (ax - ay) + np.log(-np.expm1(-2.0 * ax)) - np.log(-np.expm1(-2.0 * ay))
    return out if out.ndim else float(out)


def log_tanh_half(x):
    """log(tanh(x/2)) for x > 0."""
    x = np.asarray(x, dtype=float)
    out = np.log(-np.expm1(-x)) - np.log1p(np.exp(-x))
    return out if out.ndim else float(out)


def sinh_minus_x(x: float) -> float:
    """sinh(x) - x, by series near 0 where the difference cancels."""
    if abs(x) >= 0.1:
        return float(np.sinh(x) - x)
    x2 = x * x
    term = x * x2 / 6.0
    total = 0.0
    k = 3
    while term != 0.0 and abs(term) > 1e-17 * abs(total):
        total += term
        term *= x2 / ((k + 1) * (k + 2))
        k += 2
    return total


def exp_series_tail(x: float, start: int, coefficient: Callable[[int], float]) -> float:
    """Sum over n >= start of coefficient(n) * x**n / n!, for small |x|."""
    term = x ** start / math.factorial(start)
    total = 0.0
    n = start
    for _ in range(60):
        piece = coefficient(n) * term
        total += piece
        if piece == 0.0 or abs(piece) <= 1e-17 * abs(total):
            break
        n += 1
        term *= x / n
    return total


# =============================================================================
# QUADRATURE
# =============================================================================

def adaptive_quad(
    func: Callable[[float], float],
    lower: float,
    upper: float,
    abs_target: float = 1e-10,
    points: Optional[Tuple[float, ...]] = None,
    label: str = "integral",
) -> float:
    """
    Adaptive Gauss-Kronrod quadrature (QUADPACK) that fails loudly.

    Raises NumericalError when the reported error exceeds
    max(abs_target, QUAD_EPSREL-scaled magnitude) by more than a factor 10.
    """
    result = integrate.quad(
        func, lower, upper,
        epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=QUAD_LIMIT,
        points=points, full_output=1,
    )
    value, abserr = float(result[0]), float(result[1])
    budget = 10.0 * max(abs_target, 1e-9 * abs(value))
    if not np.isfinite(value) or abserr > budget:
        info = result[2] if len(result) > 2 else {}
        raise NumericalError(
            f"quadrature for {label} did not converge",
            diagnostics={
                "value": value,
                "abserr": abserr,
                "budget": budget,
                "evaluations": info.get("neval") if isinstance(info, dict) else None,
                "interval": (lower, upper),
            },
        )
    if len(result) > 3:
        logger.debug(f"quad note for {label}: {result[3]}")
    return value


# =============================================================================
# COVARIANCE FACTORING
# =============================================================================

def psd_factor(cov: np.ndarray, scale: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Factor a stack of symmetric covariance matrices as A A^T.

    The smallest eigenvalue of each matrix is compared relative to `scale`:
    below -PSD_TOLERANCE * scale raises NumericalError, anything above is
    clamped to zero. `scale` defaults to the largest eigenvalue magnitude of
    each matrix; conditional_factor passes the largest diagonal entry of the
    unconditioned covariance instead.
    """
    cov = np.asarray(cov, dtype=float)
    eigval, eigvec = np.linalg.eigh(cov)
    if scale is None:
        scale = np.max(np.abs(eigval), axis=-1)
    scale = np.maximum(np.asarray(scale, dtype=float), np.finfo(float).tiny)
    worst = np.min(eigval, axis=-1) / scale
    if np.any(worst < -PSD_TOLERANCE):
        k = int(np.argmin(worst))
        raise NumericalError(
            "covariance matrix is not positive semidefinite",
            diagnostics={"index": k, "relative_eigenvalue": float(worst.flat[k])},
        )
    eigval = np.clip(eigval, 0.0, None)
    return eigvec * np.sqrt(eigval)[..., None, :]


def conditional_factor(cov: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Split a stack of (1+k)x(1+k) covariances of (X0, Y) into the regression
    of Y on X0 and a factor of the conditional covariance.

    Returns (beta, factor) with Y = beta * X0 + factor @ Z for independent
    standard normals Z. Rows with Var(X0) = 0 get beta = 0.
    """
    cov = np.asarray(cov, dtype=float)
    var0 = cov[:, 0, 0]
    cross = cov[:, 0, 1:]
    safe = np.where(var0 > 0.0, var0, 1.0)
    beta = np.where(var0[:, None] > 0.0, cross / safe[:, None], 0.0)
    schur = cov[:, 1:, 1:] - beta[:, :, None] * cross[:, None, :]
    schur = 0.5 * (schur + np.swapaxes(schur, -1, -2))
    scale = np.max(np.abs(np.diagonal(cov, axis1=-2, axis2=-1)), axis=-1)
    return beta, psd_factor(schur, scale=scale)
