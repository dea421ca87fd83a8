"""Seeded random number generation.

Every stochastic choice in the package (parameter init, shuffling, dropout,
data synthesis, negative sampling) draws from a ``SeededRng`` so that a run
is fully determined by its seeds.  PCG64 guarantees the same draw sequence
for the same seed on every platform.
"""

from __future__ import annotations

import numpy as np


class SeededRng:
    """Deterministic random generator keyed by a 64-bit seed."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed)))

    def child(self, key: int) -> "SeededRng":
        """Independent substream; (seed, key) fully determines it."""
        rng = object.__new__(SeededRng)
        rng.seed = self.seed
        rng._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=(int(key),)))
        )
        return rng

    def uniform(self, low: float, high: float, size=None) -> np.ndarray:
        return self._gen.uniform(low, high, size=size)

    def random(self, size=None):
        return self._gen.random(size=size)

    def integers(self, low: int, high: int | None = None, size=None):
        return self._gen.integers(low, high, size=size)

    def choice(self, n_or_items, size=None, p=None):
        return self._gen.choice(n_or_items, size=size, p=p)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def shuffle(self, items: list) -> None:
        self._gen.shuffle(items)
