"""
Seeding discipline.

Every random stream is a numpy ``Generator(PCG64)``. Child streams are
derived from a master seed through ``SeedSequence(master, spawn_key=keys)``,
so replicate ``r`` of an experiment always sees the same numbers no matter
how many workers run or in which order they finish.
"""

from typing import Union

import numpy as np

DEFAULT_SEED = 20190807

SeedLike = Union[int, np.integer]


def derive_seed(master: SeedLike, *keys: int) -> int:
    """Deterministic 64-bit child seed for ``master`` and an integer key path."""
    sequence = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: SeedLike) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))
