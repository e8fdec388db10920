"""Seedable, platform-independent random numbers.

Counter-based generator: the ``i``-th 64-bit word of a stream is the
SplitMix64 finalizer applied to ``seed + i * GAMMA`` (mod 2**64).  The state
is therefore just ``(seed, counter)``, draws vectorize over numpy uint64
arrays, and saving the pair reproduces the rest of the stream exactly.

Uniforms use the top 53 bits of a word.  Gaussians come from Box-Muller over
consecutive word pairs, Gumbels from ``mu - beta * log(-log(U))``.
"""
from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 2.0 ** -53


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class Rng:
    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & _MASK
        self.counter = int(counter)

    def state(self) -> tuple[int, int]:
        return self.seed, self.counter

    @classmethod
    def from_state(cls, state) -> "Rng":
        return cls(*state)

    def words(self, count: int) -> np.ndarray:
        if count < 0:
            raise ValueError("count must be nonnegative")
        idx = np.arange(self.counter + 1, self.counter + count + 1, dtype=np.uint64)
        self.counter += count
        with np.errstate(over="ignore"):
            return _mix(np.uint64(self.seed) + idx * _GAMMA)

    def _unit_open(self, count: int) -> np.ndarray:
        # (k + 0.5) / 2**53 lies strictly inside (0, 1)
        return ((self.words(count) >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53

    def uniform(self, a: float = 0.0, b: float = 1.0, count: int = 1) -> np.ndarray:
        if not a < b:
            raise ValueError(f"uniform requires a < b, got ({a}, {b})")
        u = (self.words(count) >> np.uint64(11)).astype(np.float64) * _TWO_M53
        return a + (b - a) * u

    def gaussian(self, mu: float = 0.0, sigma: float = 1.0, count: int = 1) -> np.ndarray:
        if not sigma > 0:
            raise ValueError(f"gaussian requires sigma > 0, got {sigma}")
        pairs = (count + 1) // 2
        u = self._unit_open(2 * pairs).reshape(pairs, 2)
        r = np.sqrt(-2.0 * np.log(u[:, 0]))
        theta = 2.0 * math.pi * u[:, 1]
        z = np.column_stack([r * np.cos(theta), r * np.sin(theta)]).ravel()[:count]
        return mu + sigma * z

    def gumbel(self, mu: float = 0.0, beta: float = 1.0, count: int = 1) -> np.ndarray:
        if not beta > 0:
            raise ValueError(f"gumbel requires beta > 0, got {beta}")
        u = self._unit_open(count)
        return mu - beta * np.log(-np.log(u))

    def integers(self, n: int, count: int = 1) -> np.ndarray:
        """Uniform integers in ``[0, n)``."""
        if n < 1:
            raise ValueError("n must be positive")
        u = (self.words(count) >> np.uint64(11)).astype(np.float64) * _TWO_M53
        return np.minimum((u * n).astype(np.int64), n - 1)

    def permutation(self, n: int) -> np.ndarray:
        perm = np.arange(n)
        if n < 2:
            return perm
        # Fisher-Yates, one draw per position
        u = (self.words(n - 1) >> np.uint64(11)).astype(np.float64) * _TWO_M53
        for t, i in enumerate(range(n - 1, 0, -1)):
            j = min(int(u[t] * (i + 1)), i)
            perm[i], perm[j] = perm[j], perm[i]
        return perm

    def draws(self, kind: str, count: int, *params: float) -> np.ndarray:
        try:
            fn = {"uniform": self.uniform, "gaussian": self.gaussian, "gumbel": self.gumbel}[kind]
        except KeyError:
            raise ValueError(f"unknown distribution {kind!r}") from None
        return fn(*params, count=count)

    def spawn(self, key: int) -> "Rng":
        """Independent stream keyed by ``seed XOR key``."""
        return Rng(self.seed ^ (int(key) & _MASK))

    def __repr__(self):
        return f"Rng(seed={self.seed}, counter={self.counter})"
