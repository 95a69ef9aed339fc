"""Stateless 64-bit seed mixing.

Every random stream in the package is keyed by a 64-bit integer obtained
from `derive`, so a replication or a subset draw depends only on
``(seed, index)`` and never on which thread produced it or in which order.
"""

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z):
    """SplitMix64 finalizer (pure-Python twin of `_mix64`)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive(seed, index):
    """Child key for stream `index` of `seed`.

    The seed is avalanched before the XOR so that ``derive(s, r)`` and
    ``derive(s ^ 1, r ^ 1)`` are unrelated.
    """
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be nonnegative")
    return mix64(mix64(seed) ^ (index & MASK64))


def generator(key):
    """numpy Generator on a counter-based Philox stream keyed by `key`."""
    return np.random.Generator(np.random.Philox(key=key & MASK64))


def draw_key(rng):
    """Pull one 64-bit key out of an existing generator."""
    return int(rng.integers(0, 1 << 64, dtype=np.uint64))


@njit(cache=True, nogil=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def _bounded(state, bound):
    """Uniform integer in [0, bound) by Lemire's method on 32-bit draws.

    Returns ``(value, new_state)``; exact (rejection removes the bias).
    """
    b = np.uint64(bound)
    while True:
        state = state + np.uint64(GOLDEN)
        x = _mix64(state) >> np.uint64(32)
        prod = x * b
        low = prod & np.uint64(0xFFFFFFFF)
        if low >= b:
            return prod >> np.uint64(32), state
        thresh = (np.uint64(0x100000000) - b) % b
        if low >= thresh:
            return prod >> np.uint64(32), state
