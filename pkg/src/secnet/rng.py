"""Seeded, counter-based random streams.

Every stochastic routine in the package takes an integer seed and pulls its
randomness from :func:`substream`.  Streams are Philox generators keyed by a
``SeedSequence`` whose spawn key is the tuple of stream labels, so trial ``k``
of an experiment always sees the same numbers no matter which worker runs it
or in what order.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _seq(seed: int, keys: tuple[int, ...]) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed) & _MASK64, spawn_key=tuple(int(k) for k in keys))


def substream(seed: int, *keys: int) -> np.random.Generator:
    """Return an independent generator for ``(seed, *keys)``."""
    return np.random.Generator(np.random.Philox(_seq(seed, keys)))


def derive_seed(seed: int, *keys: int) -> int:
    """Derive a child 64-bit seed; distinct keys give unrelated streams."""
    return int(_seq(seed, keys).generate_state(1, dtype=np.uint64)[0])
