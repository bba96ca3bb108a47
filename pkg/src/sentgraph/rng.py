"""Deterministic, splittable random streams.

Every stochastic operation takes an explicit numpy Generator. Streams are
derived from structured integer keys (global seed, graph id, draw index, ...)
through a counter-based Philox generator, so corpora are reproducible even
when work is distributed across parallel workers.
"""

from __future__ import annotations

import numpy as np


def substream(*key: int) -> np.random.Generator:
    """Independent generator for a structured key such as (seed, graph_id, k)."""
    entropy = [int(k) for k in key]
    if any(k < 0 for k in entropy):
        raise ValueError("substream keys must be nonnegative integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def choice_index(rng: np.random.Generator, n: int) -> int:
    """Uniform index draw; the single primitive used by the samplers."""
    if n <= 0:
        raise ValueError("empty candidate set")
    return int(rng.integers(0, n))
