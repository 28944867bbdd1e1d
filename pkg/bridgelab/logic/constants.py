"""
Bridge Lab Constants

Defines tolerances, verification gates, run defaults and enums shared by the
oracle, simulation and Monte Carlo layers. All values are deterministic.
"""

from enum import Enum
from typing import Dict, Tuple


# =============================================================================
# ENUMS
# =============================================================================

class BridgeKind(str, Enum):
    """Construction used to pin a process at both ends of [0, T]."""
    AV = "av"   # anticipative version
    IR = "ir"   # integral representation
    ST = "st"   # space-time transform


class ProcessFamily(str, Enum):
    """Underlying driving process."""
    WIENER = "wiener"
    OU = "ou"


class Verdict(str, Enum):
    """Outcome of one verification gate."""
    PASS = "pass"
    FAIL = "fail"
    NO_ORACLE = "no-oracle"


class Suite(str, Enum):
    """Verification suites exposed on the command line."""
    WIENER_UNCONDITIONAL = "wiener-unconditional"
    WIENER_CONDITIONAL = "wiener-conditional"
    OU = "ou"
    REGIONS = "regions"
    BACKENDS = "backends"
    ALL = "all"


ALL_KINDS: Tuple[BridgeKind, ...] = (BridgeKind.AV, BridgeKind.IR, BridgeKind.ST)


# =============================================================================
# NUMERICAL TOLERANCES
# =============================================================================

# Cauchy-Schwarz slack accepted by scalar conditioning (relative)
CAUCHY_SCHWARZ_SLACK = 1e-12

# Region inequality residuals closer than this to zero are boundary points
REGION_BOUNDARY_TOL = 1e-12

# Below |q|*T the OU formulas switch to their Wiener limits
SMALL_Q_THRESHOLD = 1e-6

# Negative eigenvalues of per-step covariances tolerated before clamping
PSD_TOLERANCE = 1e-10

# Gauss-Legendre nodes per interval for the conditional OU step covariances
COV_QUAD_NODES = 32

# Transformed evaluation times closer than this (times T) collapse onto grid points
TIME_MERGE_TOL = 1e-12

# Adaptive quadrature targets
QUAD_EPSABS = 1e-12
QUAD_EPSREL = 1e-12
QUAD_LIMIT = 200

# Dual-form variance agreement for the OU deviation variances
DUAL_FORM_TOL = 1e-12


# =============================================================================
# VERIFICATION DEFAULTS
# =============================================================================

DEFAULT_GATE = 4.0
DEFAULT_SEED = 42
DEFAULT_STEPS = 2 ** 10
DEFAULT_REPS = 100_000
DEFAULT_BLOCK_SIZE = 500
DEFAULT_REGION_GRID = 21
MIN_POINTWISE_REPS = 1_000
MIN_INTEGRATED_STEPS = 2 ** 8

# Gate floor for statistics with zero Monte Carlo variance
ABSOLUTE_GATE_FLOOR = 1e-9

# Order of the leading trapezoid bias removed by half-grid Richardson extrapolation
RICHARDSON_ORDER = 2

# Distance from region boundaries required for Monte Carlo spot checks
REGION_MC_MARGIN = 0.5

# Refinement levels for the Euler versus exact crosscheck
BACKEND_LEVELS: Tuple[int, ...] = (2 ** 8, 2 ** 9, 2 ** 10)

# Times at which pointwise statistics are verified
POINTWISE_TIMES: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

# Minimum analytic correlation gap for which IR > AV must be significant
CORRELATION_GAP_FLOOR = 0.005


# =============================================================================
# REGION LABELS
# =============================================================================

# Orderings of (e_av, e_ir, e_st), smallest first, with their letters
REGION_LETTERS: Dict[Tuple[str, str, str], str] = {
    ("av", "ir", "st"): "A",
    ("ir", "av", "st"): "B",
    ("ir", "st", "av"): "C",
    ("av", "st", "ir"): "D",
}

BOUNDARY_LABEL = "boundary"


# =============================================================================
# OUTPUT FORMATTING
# =============================================================================

TERMINAL_DIGITS = 15
FILE_DIGITS = 17

# Exit codes used by the command line
EXIT_OK = 0
EXIT_GATE_FAILURE = 1
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_IO = 4
