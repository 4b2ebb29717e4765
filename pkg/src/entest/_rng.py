"""Counter-based random streams built on the SplitMix64 finalizer.

Every draw is a pure function of (key, counter), so datasets are
reproducible bit-for-bit regardless of generation order or thread count.
The scheme is the standard SplitMix64 generator (Steele, Lea & Flood 2014):
the value at counter ``c`` is ``mix64(key + (c + 1) * GAMMA)`` where
``mix64`` is the xor-shift/multiply finalizer with the published constants.
Uniforms take the top 53 bits, offset by half an ulp so 0 and 1 are never
produced; normals are the inverse normal CDF of those uniforms.
"""

import numpy as np
from scipy.special import ndtri

_GAMMA = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1

_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int, reduced mod 2**64."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def derive_key(*parts: int) -> int:
    """Fold integers (seed, n, trial, ...) into a single 64-bit stream key."""
    key = 0
    for part in parts:
        key = mix64((key ^ (int(part) & _MASK)) + _GAMMA)
    return key


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def uniforms(key: int, counters: np.ndarray) -> np.ndarray:
    """Uniform(0, 1) variates at the given counter positions of stream ``key``."""
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = _mix_array(np.uint64(key) + (c + np.uint64(1)) * np.uint64(_GAMMA))
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def uniform_block(key: int, n: int, lanes: int = 1, offset: int = 0) -> np.ndarray:
    """(n, lanes) uniforms; row i uses counters i*lanes .. i*lanes+lanes-1 (+offset)."""
    counters = np.arange(offset, offset + n * lanes, dtype=np.uint64)
    u = uniforms(key, counters)
    return u.reshape(n, lanes)


def normal_block(key: int, n: int, lanes: int = 1, offset: int = 0) -> np.ndarray:
    """Standard normal variates via the inverse CDF of :func:`uniform_block`."""
    return ndtri(uniform_block(key, n, lanes, offset))
