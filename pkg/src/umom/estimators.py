"""Mean estimators: sample mean, median-of-means and its permutation-invariant
(U-quantile) versions, plus the closed-form robustness facts about them."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import combinatorics
from .combinatorics import SUBSET_CAP
from .errors import InvalidArgument
from .rng import draw_key


def median(values):
    """Median by selection; even lengths give the midpoint of the two middle values."""
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    if n == 0:
        raise InvalidArgument("median of an empty vector")
    x = x.ravel()
    hi = n // 2
    if n % 2:
        return float(np.partition(x, hi)[hi])
    part = np.partition(x, (hi - 1, hi))
    return float(0.5 * part[hi - 1] + 0.5 * part[hi])


def sample_mean(sample):
    x = np.asarray(sample, dtype=np.float64)
    if x.size == 0:
        raise InvalidArgument("empty sample")
    return math.fsum(x) / x.size


def mom_estimate(sample, k, rng=None):
    """Median of k block means over disjoint blocks of floor(N/k) points.

    Trailing points that do not fill a block are dropped. With `rng` the
    indices are shuffled first, otherwise blocks follow the input order.
    """
    x = np.asarray(sample, dtype=np.float64)
    n = x.size
    if not isinstance(k, (int, np.integer)) or k < 1 or (k > 1 and 2 * k > n) or n == 0:
        raise InvalidArgument(f"block count k={k!r} must satisfy 1 <= k <= N/2 (N={n})")
    if rng is not None:
        x = x[rng.permutation(n)]
    b = n // k
    means = x[: k * b].reshape(k, b).mean(axis=1)
    return median(means)


def exact_umom(sample, m, cap=SUBSET_CAP):
    """Median of the means of all C(N, m) subsets of size m.

    The sample is sorted first, so the result depends on the order
    statistics only. Memory: C(N, m) doubles are materialised.
    """
    x = np.sort(np.asarray(sample, dtype=np.float64))
    return median(combinatorics.subset_means(x, m, cap=cap))


def incomplete_umom(sample, m, subsets, rng, with_replacement=True, threads=1):
    """Median of `subsets` subset means, subsets drawn uniformly from all m-subsets.

    One 64-bit key is taken from `rng`; subset i is a function of (key, i)
    only, so splitting the work over `threads` does not change the result.
    """
    x = np.asarray(sample, dtype=np.float64)
    n = x.size
    if not 1 <= m <= n:
        raise InvalidArgument(f"subset size m={m} must lie in [1, {n}]")
    if subsets < 1:
        raise InvalidArgument("subset count must be at least 1")
    key = draw_key(rng)
    if not with_replacement:
        return median(_distinct_subset_means(x, m, subsets, key))
    if threads <= 1 or subsets < 2 * threads:
        return median(combinatorics.random_subset_means(x, m, subsets, key))
    edges = np.linspace(0, subsets, threads + 1).astype(int)
    with ThreadPoolExecutor(threads) as pool:
        parts = pool.map(
            lambda ab: combinatorics.random_subset_means(x, m, ab[1] - ab[0], key, start=ab[0]),
            zip(edges[:-1], edges[1:]),
        )
        return median(np.concatenate(list(parts)))


def _distinct_subset_means(x, m, subsets, key):
    n = x.size
    if subsets > math.comb(n, m):
        raise InvalidArgument(f"cannot draw {subsets} distinct subsets out of C({n}, {m})")
    seen = set()
    means = []
    attempt = 0
    while len(means) < subsets:
        idx = combinatorics.random_subset(n, m, key, attempt)
        attempt += 1
        tag = idx.tobytes()
        if tag in seen:
            continue
        seen.add(tag)
        means.append(math.fsum(x[idx]) / m)
    return np.array(means)


def breakdown_fraction(m):
    """Asymptotic breakdown point of the order-m U-quantile estimator."""
    if m < 1:
        raise InvalidArgument("m must be at least 1")
    return 1.0 - 0.5 ** (1.0 / m)


def hl_asymptotic_variance(m, sigma):
    """Limiting variance of sqrt(N)(estimate - mu) for Gaussian data, order m >= 2."""
    if m < 2:
        raise InvalidArgument("the generalized Hodges-Lehmann variance needs m >= 2")
    if not sigma > 0:
        raise InvalidArgument("sigma must be positive")
    return m * sigma ** 2 * math.atan(1.0 / math.sqrt(m * m - 1.0))


def contaminate(sample, count, value, rng):
    """Copy of `sample` with `count` distinct random positions set to `value`."""
    x = np.array(sample, dtype=np.float64)
    if not 0 <= count <= x.size:
        raise InvalidArgument(f"cannot corrupt {count} of {x.size} points")
    x[rng.choice(x.size, size=count, replace=False)] = value
    return x


# estimator specs ---------------------------------------------------------------


@dataclass(frozen=True)
class SampleMean:
    name = "sample_mean"

    def __call__(self, sample, rng=None):
        return sample_mean(sample)


@dataclass(frozen=True)
class MOM:
    k: int
    shuffle: bool = False
    name = "mom"

    def __call__(self, sample, rng=None):
        return mom_estimate(sample, self.k, rng if self.shuffle else None)


@dataclass(frozen=True)
class ExactUMOM:
    m: int
    name = "exact_umom"

    def __call__(self, sample, rng=None):
        return exact_umom(sample, self.m)


@dataclass(frozen=True)
class HodgesLehmann(ExactUMOM):
    m: int = 2
    name = "hodges_lehmann"


@dataclass(frozen=True)
class IncompleteUMOM:
    m: int
    subsets: int
    with_replacement: bool = True
    name = "incomplete_umom"

    def __call__(self, sample, rng=None):
        if rng is None:
            raise InvalidArgument("incomplete_umom needs a seeded generator")
        return incomplete_umom(sample, self.m, self.subsets, rng, self.with_replacement)


ESTIMATORS = {c.name: c for c in (SampleMean, MOM, ExactUMOM, HodgesLehmann, IncompleteUMOM)}


def uses_randomness(spec):
    return isinstance(spec, IncompleteUMOM) or (isinstance(spec, MOM) and spec.shuffle)


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes"):
        return True
    if low in ("0", "false", "no"):
        return False
    raise InvalidArgument(f"not a boolean: {text!r}")


def _parse_int(text):
    val = float(text)
    if not val.is_integer():
        raise InvalidArgument(f"not an integer: {text!r}")
    return int(val)


def estimator_to_config(spec):
    out = {"estimator": spec.name}
    if isinstance(spec, MOM):
        out["k"] = str(spec.k)
        out["shuffle"] = str(spec.shuffle).lower()
    elif isinstance(spec, ExactUMOM):
        out["m"] = str(spec.m)
    elif isinstance(spec, IncompleteUMOM):
        out.update(m=str(spec.m), subsets=str(spec.subsets),
                   with_replacement=str(spec.with_replacement).lower())
    return out


def estimator_from_config(cfg):
    """Build an estimator spec from a flat config dict, consuming its keys."""
    name = cfg.pop("estimator", None)
    if name is None:
        raise InvalidArgument("missing key estimator")
    if name not in ESTIMATORS:
        raise InvalidArgument(f"unknown estimator {name!r}")

    def need(key, conv=_parse_int):
        if key not in cfg:
            raise InvalidArgument(f"estimator {name} requires key {key}")
        return conv(cfg.pop(key))

    if name == "sample_mean":
        return SampleMean()
    if name == "mom":
        shuffle = _parse_bool(cfg.pop("shuffle")) if "shuffle" in cfg else False
        return MOM(need("k"), shuffle)
    if name == "exact_umom":
        return ExactUMOM(need("m"))
    if name == "hodges_lehmann":
        return HodgesLehmann(_parse_int(cfg.pop("m")) if "m" in cfg else 2)
    repl = _parse_bool(cfg.pop("with_replacement")) if "with_replacement" in cfg else True
    return IncompleteUMOM(need("m"), need("subsets"), repl)
