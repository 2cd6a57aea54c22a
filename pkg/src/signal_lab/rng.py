"""Counter-based uniforms: the draw for (seed, index, stream) is a pure hash.

Any subset of trials can be generated in any order, or in parallel chunks,
and reproduces exactly the values a sequential run would see.
"""
from __future__ import annotations

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_STREAM = np.uint64(0xD2B74407B1CE6E93)


def _mix(z: np.ndarray) -> np.ndarray:
    # SplitMix64 finalizer
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def counter_bits(seed: int, index, stream: int = 0) -> np.ndarray:
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = _mix(np.asarray([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64) * _GAMMA
                   + np.uint64(stream) * _STREAM)
        return _mix(key ^ _mix((idx + np.uint64(1)) * _GAMMA))


def counter_uniform(seed: int, index, stream: int = 0) -> np.ndarray:
    """Uniform doubles in [0, 1), one per entry of ``index``."""
    bits = counter_bits(seed, index, stream)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
