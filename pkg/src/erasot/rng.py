"""Randomness plumbing.

Every protocol run owns one counter-based stream (Philox) derived from a seed;
channel sampling, Bob's choices, and harness-level inputs use disjoint child
streams so trials are reproducible and order-independent. Per-trial streams are
derived by hashing (master_seed, trial_index) through numpy's SeedSequence.
"""

from __future__ import annotations

import numpy as np

Seedish = int | tuple | np.random.SeedSequence


def as_seed_sequence(seed: Seedish) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, tuple):
        return np.random.SeedSequence(entropy=tuple(int(s) for s in seed))
    return np.random.SeedSequence(int(seed))


def generator(seed: Seedish) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(as_seed_sequence(seed)))


def split(seed: Seedish, n: int) -> list[np.random.SeedSequence]:
    return as_seed_sequence(seed).spawn(n)


def trial_seed(master_seed: int, trial_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=(int(master_seed), int(trial_index)))


def draw_seed64(rng: np.random.Generator) -> int:
    """One public 64-bit seed value from a stream."""
    return int(rng.integers(0, 2**64, dtype=np.uint64))
