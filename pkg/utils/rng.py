"""
CONTRARIAN-CASCADES Counter-Based Random Numbers
Reproducible draws keyed by (seed, step) instead of by call order.
"""

from typing import Tuple

import numpy as np


class CounterRNG:
    """
    Counter-based random number source for simulated paths.

    Every draw is addressed by an integer key, so the value of a draw does not
    depend on how many draws happened before it or on which thread asked first.

    Features:
    - Philox bit generator seeded from SeedSequence([seed, *key])
    - Standard normal and Bernoulli draws
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"Seed must be non-negative, got {seed}")
        self._seed = int(seed)

    @property
    def seed(self) -> int:
        return self._seed

    def _generator(self, key: Tuple[int, ...]) -> np.random.Generator:
        sequence = np.random.SeedSequence([self._seed, *[int(k) for k in key]])
        return np.random.Generator(np.random.Philox(sequence))

    def normal(self, step: int, loc: float = 0.0, scale: float = 1.0) -> float:
        """Gaussian draw for a given step."""
        return float(self._generator((step, 0)).normal(loc, scale))

    def bernoulli(self, step: int, p: float = 0.5) -> int:
        """0/1 draw with success probability p for a given step."""
        return int(self._generator((step, 1)).random() < p)


if __name__ == "__main__":
    rng = CounterRNG(seed=42)
    print("normal(step=3):", rng.normal(3))
    print("normal(step=3) again:", rng.normal(3))
    print("bernoulli(step=0):", rng.bernoulli(0))
