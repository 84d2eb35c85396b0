"""Deterministic, counter-keyed random streams.

Every random draw in the package is taken from a Philox generator keyed
by a tuple of non-negative integers (a base seed followed by purpose and
index labels). Because the key fully determines the stream, work can be
split across threads or reordered without changing any result.
"""

from __future__ import annotations

import numpy as np

# purpose labels mixed into stream keys
SPLIT = 1
BOOTSTRAP = 2
DATA = 3
DIRECTIONS = 4
REPLICATION = 5
ORACLE = 6
FACES = 7

SEED_MASK = (1 << 64) - 1


def _key(keys) -> list[int]:
    out = []
    for k in keys:
        k = int(k)
        if k < 0:
            raise ValueError(f"stream keys must be non-negative, got {k}")
        out.append(k)
    return out


def stream(*keys: int) -> np.random.Generator:
    """Generator whose state is a pure function of ``keys``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(_key(keys))))


def derive_seed(*keys: int) -> int:
    """A 64-bit seed derived from ``keys`` (for handing to another seeded routine)."""
    state = np.random.SeedSequence(_key(keys)).generate_state(1, dtype=np.uint64)
    return int(state[0])
