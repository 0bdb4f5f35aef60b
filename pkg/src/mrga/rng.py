"""Seeded random streams.

Every stream is a NumPy ``Generator`` over the PCG64 bit generator, seeded
with a single unsigned 64-bit integer. PCG64 output is specified bit-for-bit
by NumPy and is identical across platforms, so a given seed always yields the
same sequence.

Per-task seeds are derived with SplitMix64 so that a map task's stream
depends only on ``(master_seed, block_index)`` and never on scheduling.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# block index reserved for the reduce phase
REDUCE_INDEX = MASK64


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(master_seed: int, index: int) -> int:
    """Derive a child seed from a master seed and a component index."""
    return splitmix64((splitmix64(master_seed & MASK64) ^ (index & MASK64)) & MASK64)


def make_rng(seed: int) -> np.random.Generator:
    if seed < 0 or seed > MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))
