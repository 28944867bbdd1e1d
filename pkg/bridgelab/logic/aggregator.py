"""
Replicate Aggregator

Collects per-replicate values from independent blocks, merges them in any
order, and turns them into sample moments with standard errors.

Values are keyed by replicate index and summed in index order with a
compensated sum, so the final estimates do not depend on how blocks were
scheduled across workers.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

logger = logging.getLogger(__name__)


# =============================================================================
# ACCUMULATOR
# =============================================================================

class ReplicateAccumulator:
    """
    Per-statistic store of (replicate index, value) pairs; values may be
    scalars or fixed-width rows.

    merge() is associative and commutative; finalize() orders values by
    replicate index.
    """

    def __init__(self):
        self._indices: Dict[str, List[np.ndarray]] = {}
        self._values: Dict[str, List[np.ndarray]] = {}

    def add(self, name: str, indices: np.ndarray, values: np.ndarray) -> None:
        indices = np.asarray(indices, dtype=np.int64).ravel()
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != indices.size:
            raise ValueError(f"statistic '{name}': {indices.size} indices for {values.shape[0]} rows")
        self._indices.setdefault(name, []).append(indices)
        self._values.setdefault(name, []).append(values)

    def merge(self, other: "ReplicateAccumulator") -> "ReplicateAccumulator":
        merged = ReplicateAccumulator()
        for source in (self, other):
            for name in source._indices:
                merged._indices.setdefault(name, []).extend(source._indices[name])
                merged._values.setdefault(name, []).extend(source._values[name])
        return merged

    @property
    def names(self) -> List[str]:
        return sorted(self._indices)

    def count(self, name: str) -> int:
        return int(sum(chunk.size for chunk in self._indices.get(name, [])))

    def finalize(self) -> Dict[str, np.ndarray]:
        """Values per statistic sorted by replicate index; one row per replicate when vector-valued."""
        out: Dict[str, np.ndarray] = {}
        for name in self.names:
            idx = np.concatenate(self._indices[name])
            vals = np.concatenate(self._values[name], axis=0)
            order = np.argsort(idx, kind="stable")
            if np.any(np.diff(idx[order]) == 0):
                raise ValueError(f"statistic '{name}' has duplicate replicate indices")
            vals = vals[order]
            out[name] = vals[:, 0] if vals.shape[1] == 1 else vals
        return out


# =============================================================================
# BLOCKED EXECUTION
# =============================================================================

def block_ranges(n_reps: int, block_size: int) -> List[Tuple[int, int]]:
    """(start, count) for consecutive replicate blocks."""
    if n_reps < 1 or block_size < 1:
        raise ValueError("n_reps and block_size must be positive")
    return [(start, min(block_size, n_reps - start)) for start in range(0, n_reps, block_size)]


def accumulate(
    kernel: Callable[[int, int], ReplicateAccumulator],
    n_reps: int,
    block_size: int,
    threads: int = 1,
    progress: bool = False,
    desc: Optional[str] = None,
) -> Dict[str, np.ndarray]:
    """
    Run kernel(start, count) over replicate blocks and merge the results.

    Blocks run on a thread pool when threads > 1; numpy releases the GIL in
    the heavy array work.
    """
    blocks = block_ranges(n_reps, block_size)
    total = ReplicateAccumulator()
    bar = tqdm(total=n_reps, desc=desc, disable=not progress, leave=False)
    try:
        if threads <= 1:
            for start, count in blocks:
                total = total.merge(kernel(start, count))
                bar.update(count)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [(count, pool.submit(kernel, start, count)) for start, count in blocks]
                for count, future in futures:
                    total = total.merge(future.result())
                    bar.update(count)
    finally:
        bar.close()
    logger.debug(f"accumulated {n_reps} replicates in {len(blocks)} blocks ({threads} threads)")
    return total.finalize()


# =============================================================================
# SAMPLE MOMENTS
# =============================================================================

def _fmean(x: np.ndarray) -> float:
    return math.fsum(x) / x.size


def _sd(x: np.ndarray) -> float:
    if x.size < 2:
        return 0.0
    m = _fmean(x)
    return math.sqrt(math.fsum((x - m) ** 2) / (x.size - 1))


def mean_se(x: np.ndarray) -> Tuple[float, float]:
    """Sample mean and its standard error."""
    x = np.asarray(x, dtype=float)
    return _fmean(x), _sd(x) / math.sqrt(x.size)


def variance_se(x: np.ndarray) -> Tuple[float, float]:
    """Unbiased sample variance; SE from the spread of squared deviations."""
    x = np.asarray(x, dtype=float)
    centred = (x - _fmean(x)) ** 2
    return math.fsum(centred) / (x.size - 1), _sd(centred) / math.sqrt(x.size)


def cov_se(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """Unbiased sample covariance; SE from the spread of centred products."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    prod = (x - _fmean(x)) * (y - _fmean(y))
    return math.fsum(prod) / (x.size - 1), _sd(prod) / math.sqrt(x.size)


def corr_se(x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
    """Sample correlation with the large-sample SE (1 - r^2)/sqrt(n)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cxy, _ = cov_se(x, y)
    vx, _ = variance_se(x)
    vy, _ = variance_se(y)
    if vx <= 0.0 or vy <= 0.0:
        return 0.0, 0.0
    r = max(-1.0, min(1.0, cxy / math.sqrt(vx * vy)))
    return r, (1.0 - r * r) / math.sqrt(x.size)


def corr_gap_se(x: np.ndarray, y: np.ndarray, z: np.ndarray) -> Tuple[float, float]:
    """
    corr(x, z) - corr(y, z) with a delta-method SE that keeps the dependence
    between the two correlations (x and y share z).
    """
    n = x.size
    zs = (z - _fmean(z)) / _sd(z)
    xs = (x - _fmean(x)) / _sd(x)
    ys = (y - _fmean(y)) / _sd(y)
    r1 = math.fsum(xs * zs) / (n - 1)
    r2 = math.fsum(ys * zs) / (n - 1)
    # influence functions of Pearson correlations on standardized data
    infl = (xs * zs - 0.5 * r1 * (xs ** 2 + zs ** 2)) - (ys * zs - 0.5 * r2 * (ys ** 2 + zs ** 2))
    return r1 - r2, _sd(infl) / math.sqrt(n)
