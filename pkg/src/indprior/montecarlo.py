"""Replicate loops split into fixed-size blocks, one random stream per block.

Block ``b`` always draws from ``make_rng(seed, b)`` and covers the same
replicate indices no matter how many workers run, so results are bit-identical
between sequential and threaded execution.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from .numerics import make_rng

BLOCK_SIZE = 2000


def block_sizes(reps: int, block: int = BLOCK_SIZE) -> list[int]:
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    full, rest = divmod(reps, block)
    return [block] * full + ([rest] if rest else [])


def run_blocks(
    seed: int,
    reps: int,
    fn: Callable[[np.random.Generator, int], np.ndarray],
    workers: int = 1,
    block: int = BLOCK_SIZE,
) -> np.ndarray:
    """Call ``fn(rng, size)`` once per block and concatenate along axis 0."""
    sizes = block_sizes(reps, block)

    def one(b):
        return np.asarray(fn(make_rng(seed, b), sizes[b]))

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    else:
        parts = [one(b) for b in range(len(sizes))]
    return np.concatenate(parts, axis=0)
