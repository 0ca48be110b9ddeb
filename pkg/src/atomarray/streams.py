"""Splittable random streams for reproducible ensembles.

Realization i of a run seeded with `master_seed` always sees the same
generator state, independent of how work is distributed over processes.
"""
import numpy as np


def seed_streams(master_seed: int, n: int) -> list[np.random.SeedSequence]:
    """Return n collision-free child SeedSequences of the master seed."""
    if n < 1:
        raise ValueError("need n >= 1 streams")
    return np.random.SeedSequence(master_seed).spawn(n)


def generator_for(master_seed: int, index: int) -> np.random.Generator:
    """Generator for realization `index`, reproducible in isolation."""
    if index < 0:
        raise ValueError("realization index must be >= 0")
    seq = np.random.SeedSequence(master_seed).spawn(index + 1)[index]
    return np.random.default_rng(seq)
