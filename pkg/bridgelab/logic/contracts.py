"""
Data Contracts for Bridge Lab

Defines Pydantic models for process parameters and bridge specifications (input),
time grids, seeds and path bundles (simulation), and estimate reports, suite
reports and run manifests (output). These contracts are the boundary between the
oracle, simulation and command layers.
"""

from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .constants import (
    BOUNDARY_LABEL,
    DEFAULT_BLOCK_SIZE,
    DEFAULT_GATE,
    DEFAULT_REPS,
    DEFAULT_SEED,
    DEFAULT_STEPS,
    REGION_LETTERS,
    BridgeKind,
    Verdict,
)


# =============================================================================
# GAUSSIAN LAWS
# =============================================================================

class GaussianMoment(BaseModel):
    """Mean and variance of a scalar Gaussian law."""
    model_config = ConfigDict(frozen=True)

    mean: float
    variance: float = Field(ge=0.0)


# =============================================================================
# PROCESS AND BRIDGE INPUTS
# =============================================================================

class BridgeSpec(BaseModel):
    """
    Bridge from level a at time 0 to level b at time T.

    `kind` selects the construction where a single one is meant; the path
    engine builds all three from one spec.
    """
    model_config = ConfigDict(frozen=True)

    a: float = 0.0
    b: float = 0.0
    T: float = Field(default=1.0, gt=0.0)
    kind: BridgeKind = BridgeKind.AV

    @property
    def shifted_end(self) -> float:
        """End level after moving the start to 0."""
        return self.b - self.a


class ProcessParams(BaseModel):
    """Ornstein-Uhlenbeck drift rate q (1/time) and diffusion sigma."""
    model_config = ConfigDict(frozen=True)

    q: float
    sigma: float = Field(default=1.0, gt=0.0)

    @field_validator("q")
    @classmethod
    def _q_nonzero(cls, v: float) -> float:
        if v == 0.0 or not np.isfinite(v):
            raise ValueError("q must be finite and nonzero (use the Wiener path for q = 0)")
        return v


class TimeChange(BaseModel):
    """OU time change kappa and its bridge composition kappa*_T on [0, T)."""
    model_config = ConfigDict(frozen=True)

    params: ProcessParams
    T: float = Field(gt=0.0)

    @property
    def q(self) -> float:
        return self.params.q

    @property
    def sigma(self) -> float:
        return self.params.sigma


# =============================================================================
# REGION MAP
# =============================================================================

class RegionPoint(BaseModel):
    """Normalized endpoint pair (b/sqrt(T), d/sqrt(T))."""
    model_config = ConfigDict(frozen=True)

    b_tilde: float
    d_tilde: float

    @model_validator(mode="after")
    def _finite(self) -> "RegionPoint":
        if not (np.isfinite(self.b_tilde) and np.isfinite(self.d_tilde)):
            raise ValueError("region coordinates must be finite")
        return self


class RegionLabel(BaseModel):
    """
    Ordering of the conditional quadratic deviations (e_av, e_ir, e_st).

    `ordering` lists kinds from smallest to largest; it is None on boundary
    curves where two of the three values coincide.
    """
    model_config = ConfigDict(frozen=True)

    ordering: Optional[Tuple[str, str, str]] = None
    boundary: bool = False

    @property
    def letter(self) -> Optional[str]:
        if self.ordering is None:
            return None
        return REGION_LETTERS.get(self.ordering)

    @property
    def tag(self) -> str:
        """Region letter, explicit permutation tag, or the boundary marker."""
        if self.boundary or self.ordering is None:
            return BOUNDARY_LABEL
        return self.letter or "<".join(self.ordering)


# =============================================================================
# SIMULATION CONTRACTS
# =============================================================================

class SeedSpec(BaseModel):
    """Master seed and replicate index identifying one random stream."""
    model_config = ConfigDict(frozen=True)

    master_seed: int = Field(ge=0, lt=2 ** 64)
    replicate_index: int = Field(default=0, ge=0)


class TimeGrid(BaseModel):
    """Strictly increasing evaluation times 0 = t_0 < ... < t_n = T."""
    model_config = ConfigDict(frozen=True)

    T: float = Field(gt=0.0)
    points: Tuple[float, ...]

    @model_validator(mode="after")
    def _check_points(self) -> "TimeGrid":
        pts = np.asarray(self.points, dtype=float)
        if pts.size < 2:
            raise ValueError("a time grid needs at least two points")
        if pts[0] != 0.0 or pts[-1] != self.T:
            raise ValueError("a time grid must start at 0 and end at T")
        if np.any(np.diff(pts) <= 0.0):
            raise ValueError("time grid points must be strictly increasing")
        return self

    @classmethod
    def uniform(cls, T: float, n_steps: int, extra_points: Tuple[float, ...] = ()) -> "TimeGrid":
        """Uniform grid with n_steps steps, plus any requested interior times."""
        if n_steps < 1:
            raise ValueError("n_steps must be positive")
        pts = np.linspace(0.0, T, n_steps + 1)
        pts[-1] = T
        if extra_points:
            extra = np.asarray(extra_points, dtype=float)
            if np.any((extra <= 0.0) | (extra >= T)):
                raise ValueError("extra grid points must lie strictly inside (0, T)")
            # extra times that coincide with grid points (up to rounding) are dropped
            gap = np.min(np.abs(extra[:, None] - pts[None, :]), axis=1)
            pts = np.union1d(pts, extra[gap > 1e-12 * T])
        return cls(T=T, points=tuple(float(p) for p in pts))

    @property
    def n_steps(self) -> int:
        return len(self.points) - 1

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def index_of(self, t: float) -> int:
        """Index of a grid point equal to t (up to rounding)."""
        arr = self.array
        k = int(np.argmin(np.abs(arr - t)))
        if abs(arr[k] - t) > 1e-12 * self.T:
            raise ValueError(f"time {t} is not a grid point")
        return k

    def is_uniform(self) -> bool:
        steps = np.diff(self.array)
        return bool(np.allclose(steps, steps[0], rtol=1e-9, atol=0.0))


class PathBundle(BaseModel):
    """
    One block of replicates sharing a grid: the driving Wiener path, its
    auxiliary Gaussian coordinates, and every process/bridge path built on it.

    Arrays are (replicates, points). `times` is the merged set of grid points
    and transformed ST evaluation times; `w_ext` holds the driver there.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    grid: TimeGrid
    times: np.ndarray
    grid_index: np.ndarray
    end_index: int
    replicates: np.ndarray
    master_seed: int
    normals: Optional[np.ndarray] = None
    dw: np.ndarray
    dm: np.ndarray
    w_ext: np.ndarray
    params: Optional[ProcessParams] = None
    spec: Optional[BridgeSpec] = None
    process: Optional[np.ndarray] = None
    derived: Dict[str, np.ndarray] = Field(default_factory=dict)
    m: Optional[np.ndarray] = None
    terminal: Optional[np.ndarray] = None
    conditioned_on: Optional[float] = None

    @property
    def n_reps(self) -> int:
        return int(self.replicates.size)

    @property
    def w(self) -> np.ndarray:
        """Driver values at grid points."""
        return self.w_ext[:, self.grid_index]

    @property
    def w_terminal(self) -> np.ndarray:
        """Driver value W_T per replicate."""
        return self.w_ext[:, self.end_index]

    def bridge(self, kind: BridgeKind) -> np.ndarray:
        key = BridgeKind(kind).value
        if key not in self.derived:
            raise KeyError(f"bridge '{key}' has not been built on this bundle")
        return self.derived[key]


class SimulationOptions(BaseModel):
    """Replicate count, seed, grid resolution, gate and worker settings of a Monte Carlo run."""
    model_config = ConfigDict(frozen=True)

    reps: int = Field(default=DEFAULT_REPS, ge=2)
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2 ** 64)
    steps: int = Field(default=DEFAULT_STEPS, ge=2)
    gate: float = Field(default=DEFAULT_GATE, gt=0.0)
    block_size: int = Field(default=DEFAULT_BLOCK_SIZE, ge=1)
    threads: int = Field(default=1, ge=1)
    progress: bool = False


# =============================================================================
# OUTPUT CONTRACTS
# =============================================================================

class EstimateReport(BaseModel):
    """Monte Carlo estimate with standard error and oracle verdict."""
    model_config = ConfigDict(populate_by_name=True)

    statistic: str
    params: Dict[str, Any] = Field(default_factory=dict)
    estimate: float
    std_error: float = Field(ge=0.0, alias="se")
    oracle_value: Optional[float] = Field(default=None, alias="oracle")
    z_score: Optional[float] = Field(default=None, alias="z")
    verdict: Verdict = Verdict.NO_ORACLE
    seed: int
    replicates: int = Field(alias="reps")
    grid_n: int
    bias_estimate: Optional[float] = None
    notes: List[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict != Verdict.FAIL


class CheckResult(BaseModel):
    """A deterministic or significance check that is not an estimate gate."""
    name: str
    passed: bool
    detail: str = ""
    values: Dict[str, Any] = Field(default_factory=dict)


class RegionPointResult(BaseModel):
    """Monte Carlo ordering at one (b_tilde, d_tilde) point."""
    b_tilde: float
    d_tilde: float
    expected: str
    observed: str
    agree: bool
    estimates: Dict[str, float]
    gap_z: Dict[str, Optional[float]]


class BackendLevel(BaseModel):
    """Strong error of the Euler backend at one refinement level."""
    n_steps: int
    rms_error: float


class BackendReport(BaseModel):
    """Grid-refinement study of Euler against the exact recursion."""
    case: str
    levels: List[BackendLevel]
    rates: List[Optional[float]]
    passed: bool


class SuiteReport(BaseModel):
    """All estimates and checks produced by one verification suite."""
    suite: str
    seed: int
    reps: int
    steps: int
    gate: float
    passed: bool
    estimates: List[EstimateReport] = Field(default_factory=list)
    checks: List[CheckResult] = Field(default_factory=list)
    regions: List[RegionPointResult] = Field(default_factory=list)
    backends: List[BackendReport] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)

    def failures(self) -> List[str]:
        failing = [e.statistic for e in self.estimates if not e.passed]
        failing += [c.name for c in self.checks if not c.passed]
        failing += [f"region({r.b_tilde},{r.d_tilde})" for r in self.regions if not r.agree]
        failing += [f"backend:{b.case}" for b in self.backends if not b.passed]
        return failing


class VerificationReport(BaseModel):
    """Top-level JSON report of a `verify` run."""
    suites: List[SuiteReport]
    passed: bool
    failing: List[str] = Field(default_factory=list)


class RunManifest(BaseModel):
    """Everything needed to re-run a command and check its outputs."""
    command: List[str]
    config: Dict[str, Any]
    master_seed: Optional[int] = None
    version: str
    started_at: str
    finished_at: str
    outputs: Dict[str, str] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)
