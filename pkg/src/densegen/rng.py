"""SplitMix64: a tiny 64-bit generator with a fully specified update.

state <- state + 0x9E3779B97F4A7C15
z <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
z <- (z ^ (z >> 27)) * 0x94D049BB133111EB
out = z ^ (z >> 31)

all arithmetic mod 2^64. Floats take the top 53 bits; normals use
Box-Muller (cosine branch only, so one normal per two draws). Reports built
from this stream are reproducible in any language.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * MIX1) & MASK64
        z = ((z ^ (z >> 27)) * MIX2) & MASK64
        return z ^ (z >> 31)

    def split(self) -> "SplitMix64":
        """Independent child stream seeded from the next output."""
        return SplitMix64(self.next_u64())

    def uniform(self) -> float:
        """Uniform on [0, 1)."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in [low, high) by rejection (no modulo bias)."""
        span = high - low
        if span <= 0:
            raise ValueError("empty range")
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            x = self.next_u64()
            if x < limit:
                return low + x % span

    def normal(self) -> float:
        u1 = 1.0 - self.uniform()  # (0, 1]
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normal_matrix(self, rows: int, cols: int | None = None, complex_: bool = False) -> np.ndarray:
        """Row-major standard normals; complex entries are (x + iy)/sqrt 2."""
        cols = rows if cols is None else cols
        if complex_:
            vals = [complex(self.normal(), self.normal()) / math.sqrt(2.0) for _ in range(rows * cols)]
            return np.array(vals, dtype=np.complex128).reshape(rows, cols)
        return np.array([self.normal() for _ in range(rows * cols)]).reshape(rows, cols)

    def numpy(self) -> np.random.Generator:
        """numpy Generator seeded from this stream, for library calls that take one."""
        return np.random.default_rng(self.next_u64())
