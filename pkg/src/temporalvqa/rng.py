"""Counter-based deterministic RNG (SplitMix64).

The generator is frozen here on purpose: draws must be bit-identical across
runs, platforms and backends, so golden files stay valid. The algorithm is
the SplitMix64 finalizer applied to ``base + gamma * counter``; every draw
is a pure function of (seed, draw index). All integer arithmetic is modulo
2**64 via numpy uint64 wrap-around; doubles come from the top 53 bits.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidRangeError

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1
_INV_2_53 = float(2.0**-53)


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class Rng:
    """Seeded stream of loads: identical seed, identical sequence."""

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK
        base = np.array([(self.seed + int(_GAMMA)) & _MASK], dtype=np.uint64)
        self._base = _mix(base)[0]
        self._counter = 0

    def _raw(self, n: int) -> np.ndarray:
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        return _mix(self._base + idx * _GAMMA)

    def spawn(self, key: int) -> "Rng":
        """Independent child stream; deterministic in (seed, key)."""
        salt = np.array([(int(key) * 0xD6E8FEB86659FD93 + 0x2545F4914F6CDD1D) & _MASK],
                        dtype=np.uint64)
        return Rng(int((self._base ^ _mix(salt)[0])))

    def random(self, size=None):
        """Doubles uniform on [0, 1)."""
        if size is None:
            return float(self._raw(1)[0] >> np.uint64(11)) * _INV_2_53
        n = int(np.prod(size))
        out = (self._raw(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53
        return out.reshape(size)

    def uniform(self, lo: float, hi: float, size=None):
        if not lo < hi:
            raise InvalidRangeError(f"uniform bounds must satisfy lo < hi, got [{lo}, {hi}]")
        return lo + (hi - lo) * self.random(size)

    def normal(self, size=None):
        """Standard normals via Box-Muller on paired uniform draws."""
        scalar = size is None
        n = 1 if scalar else int(np.prod(size))
        pairs = (n + 1) // 2
        u = self.random((2, pairs))
        radius = np.sqrt(-2.0 * np.log1p(-u[0]))
        angle = 2.0 * math.pi * u[1]
        out = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:n]
        return float(out[0]) if scalar else out.reshape(size)

    def integer(self, n: int) -> int:
        """One draw uniform on {0, ..., n-1}."""
        if n <= 0:
            raise InvalidRangeError(f"integer bound must be positive, got {n}")
        return min(int(self.random() * n), n - 1)

    def integers(self, n: int, size) -> np.ndarray:
        if n <= 0:
            raise InvalidRangeError(f"integer bound must be positive, got {n}")
        vals = np.minimum((self.random(size) * n).astype(np.int64), n - 1)
        return vals

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates."""
        for i in range(len(items) - 1, 0, -1):
            j = self.integer(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> list:
        out = list(range(n))
        self.shuffle(out)
        return out

    def sample(self, items: list, k: int) -> list:
        """k distinct elements, order given by a partial Fisher-Yates."""
        if k > len(items):
            raise InvalidRangeError(f"cannot sample {k} from {len(items)} items")
        pool = list(items)
        out = []
        for _ in range(k):
            j = self.integer(len(pool))
            out.append(pool.pop(j))
        return out
