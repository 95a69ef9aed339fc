"""Subset enumeration and random subset draws over a sample.

Two enumerators live here and every other module goes through them:

* `subset_means` walks all C(N, m) subsets in revolving-door (Gray code)
  order, so consecutive subsets differ by exactly one element and each mean
  costs one add and one subtract on a compensated running sum.
* `random_subset_means` draws subsets of m distinct indices by partial
  Fisher-Yates, the i-th subset keyed by ``(key, i)`` alone.
"""

from math import comb

import numpy as np
from numba import njit

from .errors import CapExceeded, InvalidArgument
from .rng import GOLDEN, _bounded, _mix64

SUBSET_CAP = 50_000_000


@njit(cache=True, nogil=True)
def _neumaier(s, c, x):
    t = s + x
    if abs(s) >= abs(x):
        c += (s - t) + x
    else:
        c += (x - t) + s
    return t, c


@njit(cache=True, nogil=True)
def _revolving_door_means(x, m, out):
    # Knuth, TAOCP 7.2.1.3 Algorithm R; requires 2 <= m < n.
    n = x.shape[0]
    c = np.empty(m + 2, dtype=np.int64)
    s = 0.0
    comp = 0.0
    for j in range(1, m + 1):
        c[j] = j - 1
        s, comp = _neumaier(s, comp, x[j - 1])
    c[m + 1] = n
    inv = 1.0 / m
    k = 0
    odd = m % 2 == 1
    while True:
        out[k] = (s + comp) * inv
        k += 1
        leave = -1
        enter = -1
        if odd:
            if c[1] + 1 < c[2]:
                leave = c[1]
                c[1] += 1
                enter = c[1]
            else:
                j = 2
                stage = 4
        else:
            if c[1] > 0:
                leave = c[1]
                c[1] -= 1
                enter = c[1]
            else:
                j = 2
                stage = 5
        while leave < 0:
            if stage == 4:
                if c[j] >= j:
                    leave = c[j]
                    enter = j - 2
                    c[j] = c[j - 1]
                    c[j - 1] = j - 2
                else:
                    j += 1
                    stage = 5
            else:
                if c[j] + 1 < c[j + 1]:
                    leave = j - 2
                    c[j - 1] = c[j]
                    c[j] += 1
                    enter = c[j]
                else:
                    j += 1
                    if j > m:
                        return k
                    stage = 4
        s, comp = _neumaier(s, comp, x[enter])
        s, comp = _neumaier(s, comp, -x[leave])


@njit(cache=True, nogil=True)
def _revolving_door_subsets(n, m, out):
    # Same walk as `_revolving_door_means`, recording the index sets.
    c = np.empty(m + 2, dtype=np.int64)
    for j in range(1, m + 1):
        c[j] = j - 1
    c[m + 1] = n
    k = 0
    odd = m % 2 == 1
    while True:
        for j in range(m):
            out[k, j] = c[j + 1]
        k += 1
        moved = False
        if odd:
            if c[1] + 1 < c[2]:
                c[1] += 1
                moved = True
            else:
                j = 2
                stage = 4
        else:
            if c[1] > 0:
                c[1] -= 1
                moved = True
            else:
                j = 2
                stage = 5
        while not moved:
            if stage == 4:
                if c[j] >= j:
                    c[j] = c[j - 1]
                    c[j - 1] = j - 2
                    moved = True
                else:
                    j += 1
                    stage = 5
            else:
                if c[j] + 1 < c[j + 1]:
                    c[j - 1] = c[j]
                    c[j] += 1
                    moved = True
                else:
                    j += 1
                    if j > m:
                        return k
                    stage = 4


def _check_cap(n, m, cap):
    total = comb(n, m)
    if total > cap:
        raise CapExceeded(f"C({n}, {m}) subsets", total, cap)
    return total


def subset_means(sample, m, cap=SUBSET_CAP):
    """Means of all C(N, m) subsets of `sample`, in revolving-door order."""
    x = np.ascontiguousarray(sample, dtype=np.float64)
    n = x.shape[0]
    if not 1 <= m <= n:
        raise InvalidArgument(f"subset size m={m} must lie in [1, {n}]")
    total = _check_cap(n, m, cap)
    if m == 1:
        return x.copy()
    if m == n:
        return np.array([_neumaier_sum(x) / n])
    out = np.empty(total, dtype=np.float64)
    visited = _revolving_door_means(x, m, out)
    assert visited == total
    return out


def revolving_door(n, m, cap=SUBSET_CAP):
    """All m-subsets of range(n) as rows of an int array, revolving-door order."""
    if not 1 <= m <= n:
        raise InvalidArgument(f"subset size m={m} must lie in [1, {n}]")
    total = _check_cap(n, m, cap)
    if m == 1:
        return np.arange(n, dtype=np.int64).reshape(n, 1)
    if m == n:
        return np.arange(n, dtype=np.int64).reshape(1, n)
    out = np.empty((total, m), dtype=np.int64)
    _revolving_door_subsets(n, m, out)
    return out


@njit(cache=True, nogil=True)
def _neumaier_sum(x):
    s = 0.0
    c = 0.0
    for v in x:
        s, c = _neumaier(s, c, v)
    return s + c


@njit(cache=True, nogil=True)
def _subset_state(key, index):
    return _mix64(key ^ _mix64(np.uint64(index) + np.uint64(GOLDEN)))


@njit(cache=True, nogil=True)
def _random_subset_means(x, m, start, stop, key, out):
    n = x.shape[0]
    work = x.copy()
    picks = np.empty(m, dtype=np.int64)
    inv = 1.0 / m
    for i in range(start, stop):
        state = _subset_state(key, i)
        s = 0.0
        for j in range(m):
            r, state = _bounded(state, n - j)
            p = j + np.int64(r)
            picks[j] = p
            v = work[p]
            work[p] = work[j]
            work[j] = v
            s += v
        out[i - start] = s * inv
        # undo the swaps so the next draw starts from the pristine order
        for j in range(m - 1, -1, -1):
            p = picks[j]
            v = work[p]
            work[p] = work[j]
            work[j] = v
    return out


@njit(cache=True, nogil=True)
def _random_subset(n, m, key, index, work, picks):
    state = _subset_state(key, index)
    for j in range(m):
        r, state = _bounded(state, n - j)
        p = j + np.int64(r)
        picks[j] = p
        v = work[p]
        work[p] = work[j]
        work[j] = v
    chosen = work[:m].copy()
    for j in range(m - 1, -1, -1):
        p = picks[j]
        v = work[p]
        work[p] = work[j]
        work[j] = v
    return chosen


def random_subset_means(sample, m, count, key, start=0):
    """Means of subsets ``start .. start+count-1`` of the keyed stream.

    Each subset is m distinct indices chosen uniformly; the i-th subset is a
    function of ``(key, i)`` only, so any partition of the index range
    reproduces the same values.
    """
    x = np.ascontiguousarray(sample, dtype=np.float64)
    n = x.shape[0]
    if not 1 <= m <= n:
        raise InvalidArgument(f"subset size m={m} must lie in [1, {n}]")
    if count < 0 or start < 0:
        raise InvalidArgument("count and start must be nonnegative")
    out = np.empty(count, dtype=np.float64)
    return _random_subset_means(x, m, start, start + count, np.uint64(key), out)


def random_subset(n, m, key, index):
    """Sorted indices of the `index`-th keyed random m-subset of range(n)."""
    if not 1 <= m <= n:
        raise InvalidArgument(f"subset size m={m} must lie in [1, {n}]")
    work = np.arange(n, dtype=np.int64)
    picks = np.empty(m, dtype=np.int64)
    return np.sort(_random_subset(n, m, np.uint64(key), index, work, picks))
