"""Deterministic random streams built on the splitmix64 generator.

Every source of randomness in the package (parameter init, prompt init,
dataset synthesis, epoch shuffling, search mutation) draws from an `Rng`
derived from a single root seed, so whole runs are bitwise reproducible
across platforms. `derive` forks a statistically independent child stream
from the parent's seed without consuming parent state, which makes
per-record / per-epoch substreams order-independent.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15  # splitmix64 stream increment


def _mix(z: int) -> int:
    """splitmix64 finalizer (Steele, Lea, Flood 2014)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _tag64(tag: int | str) -> int:
    if isinstance(tag, bool):
        raise TypeError("bool is not a valid stream tag")
    if isinstance(tag, (int, np.integer)):
        return int(tag) & _MASK
    if isinstance(tag, str):
        h = 0xCBF29CE484222325  # FNV-1a 64-bit
        for b in tag.encode("utf-8"):
            h = ((h ^ b) * 0x100000001B3) & _MASK
        return h
    raise TypeError(f"stream tag must be int or str, got {type(tag).__name__}")


class Rng:
    """One splitmix64 stream: output i = mix(seed + (i+1)*GOLDEN)."""

    __slots__ = ("_seed", "_counter")

    def __init__(self, seed: int):
        self._seed = int(seed) & _MASK
        self._counter = 0

    @property
    def seed(self) -> int:
        return self._seed

    def derive(self, *tags: int | str) -> "Rng":
        """Fork an independent child stream keyed by the tag path."""
        s = self._seed
        for t in tags:
            s = _mix(s ^ _tag64(t))
        return Rng(s)

    def u64(self) -> int:
        self._counter += 1
        return _mix((self._seed + self._counter * _GOLDEN) & _MASK)

    def u64_array(self, n: int) -> np.ndarray:
        """Vectorized draw of n raw 64-bit words (wrapping uint64 math)."""
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        z = np.uint64(self._seed) + idx * np.uint64(_GOLDEN)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

    def uniform(self, n: int | None = None):
        """float64 in [0, 1): top 53 bits of each word."""
        if n is None:
            return (self.u64() >> 11) * 2.0**-53
        return (self.u64_array(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, shape, mean: float = 0.0, std: float = 1.0,
               dtype=np.float64) -> np.ndarray:
        """i.i.d. Gaussians via Box-Muller on the raw stream."""
        n = int(np.prod(shape)) if shape else 1
        pairs = (n + 1) // 2
        u1 = ((self.u64_array(pairs) >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (self.u64_array(pairs) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        out = (mean + std * z).reshape(shape)
        return out.astype(dtype)

    def integers(self, bound: int, size: int | None = None):
        """Uniform ints in [0, bound). Modulo reduction; bias is O(bound/2^64)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        if size is None:
            return self.u64() % bound
        return (self.u64_array(size) % np.uint64(bound)).astype(np.int64)

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n) by sorting random keys."""
        return np.argsort(self.u64_array(n), kind="stable").astype(np.int64)
