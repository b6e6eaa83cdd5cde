"""Portable 64-bit RNG used by the Gibbs sampler (xoshiro256++).

numpy's default generators are excellent but their bit streams are not part
of the API contract we want for chain reproducibility, and they are not
callable from inside a numba kernel.  This module implements xoshiro256++
(Blackman & Vigna) with splitmix64 seeding as plain uint64 arithmetic, so a
chain seeded with the same 64-bit integer produces the same assignments on
every platform.  The generator name is recorded in run metadata.

All functions are numba-compiled and operate on a 4-element uint64 state
array in place.
"""

import numpy as np
from numba import njit

GENERATOR_NAME = "xoshiro256++"

# 2**-53; (x >> 11) * _DOUBLE_SCALE maps a uint64 to a double in [0, 1)
_DOUBLE_SCALE = 1.0 / 9007199254740992.0


@njit(cache=True, nogil=True, inline="always")
def _rotl(x, k):
    return (x << k) | (x >> (np.uint64(64) - k))


@njit(cache=True, nogil=True)
def seed_state(seed):
    """Expand a 64-bit seed into the xoshiro state via splitmix64."""
    state = np.empty(4, dtype=np.uint64)
    z = np.uint64(seed)
    for i in range(4):
        z = z + np.uint64(0x9E3779B97F4A7C15)
        t = z
        t = (t ^ (t >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        t = (t ^ (t >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        state[i] = t ^ (t >> np.uint64(31))
    return state


@njit(cache=True, nogil=True, inline="always")
def next_u64(state):
    s0 = state[0]
    s1 = state[1]
    s2 = state[2]
    s3 = state[3]
    result = _rotl(s0 + s3, np.uint64(23)) + s0
    t = s1 << np.uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, np.uint64(45))
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
    return result


@njit(cache=True, nogil=True, inline="always")
def next_double(state):
    """Uniform double in [0, 1) with 53 random bits."""
    return (next_u64(state) >> np.uint64(11)) * _DOUBLE_SCALE
