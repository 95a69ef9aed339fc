import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from umom.combinatorics import subset_means
from umom.errors import CapExceeded, InvalidArgument
from umom.estimators import (MOM, ExactUMOM, HodgesLehmann, IncompleteUMOM, SampleMean,
                             breakdown_fraction, contaminate, estimator_from_config,
                             estimator_to_config, exact_umom, hl_asymptotic_variance,
                             incomplete_umom, median, mom_estimate, sample_mean)
from umom.rng import derive, generator

import oracles


def rng(seed=0):
    return generator(derive(seed, 0))


# examples ---------------------------------------------------------------------------


def test_median_examples():
    assert median([1, 2, 3]) == 2
    assert median([1, 2, 3, 4]) == 2.5
    assert median([5, 5, 5]) == 5
    with pytest.raises(InvalidArgument):
        median([])


def test_mom_examples():
    assert mom_estimate([0, 0, 3, 3, 12, 12], 3) == 3
    assert mom_estimate(np.full(11, 2.5), 4) == 2.5
    x = np.arange(7.0)
    assert mom_estimate(x, 1) == sample_mean(x)
    # remainder is dropped: 7 points, 2 blocks of 3, the last point unused
    assert mom_estimate([1, 2, 3, 10, 20, 30, 1e9], 2) == median([2, 20])


@pytest.mark.parametrize("k", [0, 4, 2.0])
def test_mom_rejects_bad_k(k):
    with pytest.raises(InvalidArgument):
        mom_estimate(np.arange(7.0), k)


def test_exact_umom_examples():
    assert exact_umom([0, 1, 2, 9], 2) == 3.0
    x = np.array([3.0, -1.0, 4.0, 1.0, 5.0])
    assert exact_umom(x, 5) == pytest.approx(x.mean(), abs=1e-15)
    assert exact_umom(x, 1) == median(x)
    with pytest.raises(CapExceeded):
        exact_umom(np.zeros(40), 20)


def test_incomplete_umom_examples():
    x = [0.0, 1.0, 2.0, 9.0]
    # subset means are {0.5, 1, 1.5, 4.5, 5, 5.5}; a sampled median sits on one of the
    # two central values (or their midpoint on an exact tie), never farther out
    for seed in range(20):
        est = incomplete_umom(x, 2, 100_000, rng(seed))
        assert est in (1.5, 3.0, 4.5)
    assert incomplete_umom(x, 2, 100, rng(5)) == incomplete_umom(x, 2, 100, rng(5))
    assert incomplete_umom(np.full(9, -4.0), 3, 50, rng(1)) == -4.0


def test_incomplete_umom_thread_count_is_irrelevant():
    x = np.random.default_rng(3).standard_t(3, 300)
    one = incomplete_umom(x, 20, 5000, rng(8), threads=1)
    assert incomplete_umom(x, 20, 5000, rng(8), threads=8) == one


def test_incomplete_umom_without_replacement():
    x = np.array([0.0, 1.0, 2.0, 9.0])
    # asking for all six subsets without replacement reproduces the exact estimator
    assert incomplete_umom(x, 2, 6, rng(2), with_replacement=False) == exact_umom(x, 2)
    with pytest.raises(InvalidArgument):
        incomplete_umom(x, 2, 7, rng(2), with_replacement=False)


def test_breakdown_fraction():
    assert breakdown_fraction(1) == 0.5
    assert breakdown_fraction(2) == pytest.approx(0.29289, abs=1e-5)
    assert breakdown_fraction(100) == pytest.approx(math.log(2) / 100, abs=1e-4)


def test_hodges_lehmann_variance():
    assert hl_asymptotic_variance(2, 1.0) == pytest.approx(math.pi / 3, abs=1e-12)
    assert hl_asymptotic_variance(3, 1.0) == pytest.approx(3 * math.atan(1 / math.sqrt(8)), abs=1e-15)
    assert hl_asymptotic_variance(3, 1.0) == pytest.approx(1.01951, abs=1e-5)
    assert 1.0 < hl_asymptotic_variance(1000, 1.0) < 1.001
    vals = [hl_asymptotic_variance(m, 1.0) for m in range(2, 60)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert hl_asymptotic_variance(2, 3.0) == pytest.approx(9 * math.pi / 3)


def test_contaminate():
    x = np.arange(4.0)
    np.testing.assert_array_equal(contaminate(x, 0, 1e9, rng()), x)
    np.testing.assert_array_equal(contaminate(x, 4, 7.0, rng()), np.full(4, 7.0))
    y = contaminate(np.zeros(4), 1, 1e9, rng(3))
    assert np.count_nonzero(y == 1e9) == 1
    with pytest.raises(InvalidArgument):
        contaminate(x, 5, 0.0, rng())


# properties ----------------------------------------------------------------------------

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=False)
samples = st.lists(finite, min_size=6, max_size=14).map(np.array)


def estimators():
    return [SampleMean(), MOM(2), MOM(3, shuffle=True), ExactUMOM(2), ExactUMOM(3),
            HodgesLehmann(), IncompleteUMOM(4, 200)]


def scale(x):
    return max(1.0, float(np.max(np.abs(x))))


@settings(max_examples=60, deadline=None)
@given(samples, st.floats(-1e4, 1e4, allow_nan=False), st.integers(0, 2 ** 32))
def test_translation_equivariance(x, c, seed):
    for est in estimators():
        a = est(x + c, rng(seed))
        b = est(x, rng(seed)) + c
        assert a == pytest.approx(b, abs=1e-9 * (scale(x) + abs(c)))


@settings(max_examples=60, deadline=None)
@given(samples, st.floats(-100, 100, allow_nan=False).filter(lambda c: abs(c) > 1e-3),
       st.integers(0, 2 ** 32))
def test_scale_equivariance(x, c, seed):
    for est in estimators():
        a = est(c * x, rng(seed))
        b = c * est(x, rng(seed))
        assert a == pytest.approx(b, abs=1e-9 * scale(x) * abs(c))


@settings(max_examples=60, deadline=None)
@given(samples, st.integers(0, 2 ** 32))
def test_estimates_lie_within_sample_range(x, seed):
    tol = 1e-12 * scale(x)
    for est in estimators():
        v = est(x, rng(seed))
        assert x.min() - tol <= v <= x.max() + tol


@settings(max_examples=40, deadline=None)
@given(samples, st.integers(1, 5), st.randoms(use_true_random=False))
def test_exact_umom_is_permutation_invariant(x, m, r):
    y = x.copy()
    r.shuffle(y)
    assert exact_umom(y, m) == exact_umom(x, m)


def test_exact_umom_all_24_orderings():
    base = [0.1, 0.7, -3.3, 1e3]
    for m in (1, 2, 3, 4):
        assert len({exact_umom(list(p), m) for p in itertools.permutations(base)}) == 1


@settings(max_examples=40, deadline=None)
@given(samples, st.integers(1, 6))
def test_exact_umom_is_median_of_enumerated_means(x, m):
    assert exact_umom(x, m) == median(subset_means(np.sort(x), m))
    assert exact_umom(x, m) == pytest.approx(oracles.umom(x.tolist(), m), abs=1e-9 * scale(x))


@settings(max_examples=40, deadline=None)
@given(samples, st.integers(1, 3))
def test_mom_matches_oracle(x, k):
    assert mom_estimate(x, k) == pytest.approx(oracles.mom(x.tolist(), k), abs=1e-9 * scale(x))


@pytest.mark.parametrize("m", [2, 3])
def test_breakdown_threshold_exact(m):
    N = 12
    clean = np.random.default_rng(11).normal(size=N)
    c_star = oracles.breakdown_count(N, m)
    for c in range(N + 1):
        x = clean.copy()
        x[:c] = 1e12
        est = exact_umom(x, m)
        if c < c_star:
            assert 2 * math.comb(N - c, m) > math.comb(N, m)
            uncorrupted = subset_means(clean[c:], m) if N - c >= m else np.array([0.0])
            assert abs(est) <= np.max(np.abs(uncorrupted)) + 1e-12
            assert clean.min() <= est <= clean.max()
        elif c == c_star:
            assert est > 1e6


def test_estimator_config_round_trip():
    for spec in (SampleMean(), MOM(7, shuffle=True), ExactUMOM(3), HodgesLehmann(),
                 IncompleteUMOM(40, 10_000, with_replacement=False)):
        cfg = {k: str(v) for k, v in estimator_to_config(spec).items()}
        assert estimator_from_config(cfg) == spec
        assert cfg == {}
