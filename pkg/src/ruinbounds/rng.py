"""Deterministic counter-based random streams.

Every variate is a pure function of (master seed, path index, draw counter):
a 64-bit mix of the keyed counter, in the spirit of splittable counter-based
generators. Streams never share state, so simulations are reproducible
bit-for-bit regardless of how paths are distributed over workers, and any
path can be replayed in isolation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["RngStream", "mix64", "path_key", "uniform_from", "mix64_vec", "u01_vec"]

_MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
SALT = 0xD1B54A32D192ED03
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0  # 2^-53


def mix64(z: int) -> int:
    """64-bit finalizer: xorshift-multiply avalanche of the input word."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX_A) & _MASK
    z = ((z ^ (z >> 27)) * _MIX_B) & _MASK
    return z ^ (z >> 31)


def path_key(seed: int, path: int) -> int:
    return mix64((seed + (path + 1) * GOLDEN) & _MASK)


def uniform_from(key: int, counter: int) -> float:
    """Uniform variate in the open interval (0, 1) for one keyed counter."""
    word = mix64((key + (counter + 1) * GOLDEN) & _MASK)
    return ((word >> 11) + 0.5) * _INV_2_53


# vectorized twins used by the numpy simulation backend

_GOLDEN_U64 = np.uint64(GOLDEN)
_MIX_A_U64 = np.uint64(_MIX_A)
_MIX_B_U64 = np.uint64(_MIX_B)


def mix64_vec(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _MIX_A_U64
    z ^= z >> np.uint64(27)
    z *= _MIX_B_U64
    z ^= z >> np.uint64(31)
    return z


def path_key_vec(seed: int, paths: np.ndarray) -> np.ndarray:
    base = np.uint64(seed & _MASK) + (paths.astype(np.uint64) + np.uint64(1)) * _GOLDEN_U64
    return mix64_vec(base)


def u01_vec(keys: np.ndarray, counters: np.ndarray) -> np.ndarray:
    word = mix64_vec(keys + (counters + np.uint64(1)) * _GOLDEN_U64)
    return ((word >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


@dataclass
class RngStream:
    """Caller-owned stream handle; sampling advances only the counter."""

    key: int
    counter: int = 0

    @classmethod
    def from_seed(cls, seed: int, path: int = 0) -> "RngStream":
        return cls(path_key(seed, path))

    def uniform(self) -> float:
        u = uniform_from(self.key, self.counter)
        self.counter += 1
        return u

    def uniforms(self, n: int) -> np.ndarray:
        keys = np.full(n, np.uint64(self.key & _MASK))
        ctrs = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        return u01_vec(keys, ctrs)

    def substream(self, index: int) -> "RngStream":
        """Independent child stream, e.g. one per branch of a united model."""
        return RngStream(mix64((self.key ^ ((index + 1) * SALT)) & _MASK))
