"""
Replicate Random Streams

Each replicate draws from its own counter-based Philox stream keyed by
(master_seed, replicate_index), so a replicate's numbers do not depend on
which worker produced it or in what order.
"""

from typing import Sequence, Tuple

import numpy as np

from .contracts import SeedSpec


def replicate_generator(seed: SeedSpec) -> np.random.Generator:
    """Generator for one replicate."""
    sequence = np.random.SeedSequence(seed.master_seed, spawn_key=(seed.replicate_index,))
    return np.random.Generator(np.random.Philox(sequence))


def replicate_normals(master_seed: int, replicates: Sequence[int], shape: Tuple[int, ...]) -> np.ndarray:
    """Standard normals of the given shape for each replicate, stacked on axis 0."""
    out = np.empty((len(replicates),) + tuple(shape), dtype=float)
    for row, index in enumerate(replicates):
        gen = replicate_generator(SeedSpec(master_seed=master_seed, replicate_index=int(index)))
        out[row] = gen.standard_normal(shape)
    return out


def replicate_range(seed: SeedSpec, n_reps: int) -> np.ndarray:
    """Consecutive replicate indices starting at seed.replicate_index."""
    return np.arange(seed.replicate_index, seed.replicate_index + n_reps, dtype=np.int64)
