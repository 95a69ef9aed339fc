"""Slow, obviously-correct reference implementations used only by the tests.

Nothing here shares code with the package: plain itertools loops, sorted()
medians and fractions where exactness is cheap.
"""

import itertools
import math
from fractions import Fraction


def median(values):
    v = sorted(values)
    n = len(v)
    return v[n // 2] if n % 2 else (v[n // 2 - 1] + v[n // 2]) / 2


def all_subset_means(x, m):
    return [math.fsum(c) / m for c in itertools.combinations(x, m)]


def umom(x, m):
    return median(all_subset_means(x, m))


def mom(x, k):
    b = len(x) // k
    return median([math.fsum(x[i * b:(i + 1) * b]) / b for i in range(k)])


def u_statistic(x, h, m):
    vals = [h(*c) for c in itertools.combinations(x, m)]
    return math.fsum(vals) / len(vals)


def u_variance_by_enumeration(atoms, h, m, N):
    """Var(U_{N,m}) summing over every outcome in support^N (no grouping)."""
    terms1, terms2 = [], []
    for outcome in itertools.product(atoms, repeat=N):
        w = math.prod(p for _, p in outcome)
        u = u_statistic([v for v, _ in outcome], h, m)
        terms1.append(w * u)
        terms2.append(w * u * u)
    first, second = math.fsum(terms1), math.fsum(terms2)
    return second - first * first


def expectation(atoms, f, d):
    return math.fsum(math.prod(p for _, p in ys) * f(*(v for v, _ in ys))
                     for ys in itertools.product(atoms, repeat=d))


def breakdown_count(N, m):
    """Smallest corruption count c whose clean subsets no longer form a strict majority."""
    total = math.comb(N, m)
    return min(c for c in range(N + 1) if Fraction(math.comb(N - c, m)) <= Fraction(total, 2))


def gaussian_two_sided_tail(t):
    # 2(1 - Phi(sqrt t)) written without cancellation
    return math.erfc(math.sqrt(t / 2.0))
