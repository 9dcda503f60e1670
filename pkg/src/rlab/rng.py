"""Reproducible random streams keyed by ``(seed, stream_id)``.

The generator is Philox4x64-10 (Salmon et al., SC'11) with key
``(seed, stream_id)`` and a counter starting at zero.  Only raw 64-bit
words are taken from it; every derived variate is defined here, so another
implementation with the same Philox core reproduces the streams exactly:

* ``uniform()``: top 53 bits of one word, times ``2**-53``.
* ``integers(lo, hi)``: ``lo + floor(u * (hi - lo + 1))`` for one uniform.
* ``normal()``: Box-Muller cosine branch from two uniforms
  ``sqrt(-2 log(1 - u1)) * cos(2 pi u2)``.
"""

from __future__ import annotations

import math

import numpy as np

DEFAULT_SEED = 20240917
MASK64 = (1 << 64) - 1


class CounterRNG:
    def __init__(self, seed: int = DEFAULT_SEED, stream: int = 0):
        self.seed = int(seed) & MASK64
        self.stream = int(stream) & MASK64
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self._bitgen = np.random.Philox(counter=0, key=key)

    def raw(self, n: int) -> np.ndarray:
        return self._bitgen.random_raw(n)

    def uniforms(self, n: int) -> np.ndarray:
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * float(self.uniforms(1)[0])

    def integers(self, lo: int, hi: int, n: int | None = None):
        """Integers in the closed range ``[lo, hi]``."""
        span = hi - lo + 1
        u = self.uniforms(1 if n is None else n)
        out = lo + np.floor(u * span).astype(np.int64)
        if n is None:
            return int(out[0])
        return [int(v) for v in out]

    def normals(self, n: int) -> np.ndarray:
        u = self.uniforms(2 * n).reshape(n, 2)
        return np.sqrt(-2.0 * np.log1p(-u[:, 0])) * np.cos(2.0 * math.pi * u[:, 1])

    def normal(self) -> float:
        return float(self.normals(1)[0])

    def permutation(self, n: int) -> list[int]:
        """Fisher-Yates, drawing ``j`` uniformly from ``[0, i]`` for i = n-1..1."""
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.integers(0, i)
            perm[i], perm[j] = perm[j], perm[i]
        return perm


def stream(seed: int, stream_id: int) -> CounterRNG:
    return CounterRNG(seed, stream_id)
