import math

import numpy as np
import pytest

from umom.distributions import (Contaminated, DiscreteFinite, Gaussian, LogNormal, Pareto,
                                Rademacher, StudentT, discrete_expectation, feller_g, from_config,
                                sample, to_config, true_moments)
from umom.errors import CapExceeded, InvalidArgument, MomentDoesNotExist
from umom.rng import derive, generator

import oracles

SPECS = [
    Gaussian(1.5, 2.0),
    StudentT(5.0, -1.0, 0.5),
    Pareto(3.5, 2.0, 1.0),
    LogNormal(0.0, 0.5),
    Rademacher(),
    DiscreteFinite(((-1.0, 0.25), (0.0, 0.35), (2.0, 0.4))),
    Contaminated(Gaussian(), 0.05, 10.0),
]


def rng(seed=0):
    return generator(derive(seed, 0))


def test_rademacher_draws_repeat_under_same_seed():
    a = sample(Rademacher(), 3, rng(7))
    b = sample(Rademacher(), 3, rng(7))
    assert set(a) <= {-1.0, 1.0}
    np.testing.assert_array_equal(a, b)


def test_dominant_atom_mean():
    P = DiscreteFinite(((5.0, 1 - 1e-3), (6.0, 1e-3)))
    x = sample(P, 100_000, rng(1))
    assert abs(x.mean() - P.mean) < 5 * P.sd / math.sqrt(x.size)
    assert np.mean(x == 5.0) > 0.99


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
def test_empirical_moments_match(spec):
    x = sample(spec, 200_000, rng(3))
    se = spec.sd / math.sqrt(x.size)
    assert abs(x.mean() - spec.mean) < 5 * se
    # variance checked loosely; heavy tails make its standard error large
    assert abs(x.var() / spec.variance - 1) < 0.1


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
def test_abs_moment_two_is_variance(spec):
    assert true_moments(spec).abs_central_moment(2) == pytest.approx(spec.variance, rel=1e-7)


def test_rademacher_moments():
    mo = true_moments(Rademacher())
    assert (mo.mean, mo.variance) == (0.0, 1.0)
    for q in (0.5, 1, 3, 7):
        assert mo.abs_central_moment(q) == pytest.approx(1.0, abs=1e-15)


def test_gaussian_third_abs_moment():
    assert true_moments(Gaussian()).abs_central_moment(3) == pytest.approx(
        2 * math.sqrt(2 / math.pi), rel=1e-14)


def test_student_t_fourth_moment_does_not_exist():
    with pytest.raises(MomentDoesNotExist):
        true_moments(StudentT(3.0)).abs_central_moment(4)
    with pytest.raises(MomentDoesNotExist):
        true_moments(Pareto(3.0)).abs_central_moment(3)


# laws with a finite sixth moment, so the Monte Carlo standard error is meaningful
@pytest.mark.parametrize("spec", [Pareto(8.0, 2.0), LogNormal(0.0, 0.5), StudentT(7.0)],
                         ids=lambda s: s.name)
def test_third_abs_moment_against_monte_carlo(spec):
    x = sample(spec, 1_000_000, rng(4))
    v = np.abs(x - spec.mean) ** 3
    assert abs(v.mean() - true_moments(spec).abs_central_moment(3)) < 6 * v.std() / math.sqrt(v.size)


def test_pareto_abs_moment_against_scipy():
    from scipy import stats
    spec = Pareto(3.5, 2.0, 1.0)
    classical = stats.pareto(3.5)
    want = classical.expect(lambda x: abs(x - classical.mean()) ** 3)
    assert true_moments(spec).abs_central_moment(3) == pytest.approx(want, rel=1e-7)


def test_student_t_closed_form_matches_quadrature():
    spec = StudentT(6.0, 0.3, 1.7)
    quad = spec._expect(lambda x: abs(x - spec.mean) ** 3)
    assert true_moments(spec).abs_central_moment(3) == pytest.approx(quad, rel=1e-8)


@pytest.mark.parametrize("bad", [
    lambda: Gaussian(0, 0),
    lambda: StudentT(2.0),
    lambda: Pareto(2.0),
    lambda: DiscreteFinite(((0.0, 1.0),)),
    lambda: DiscreteFinite(((0.0, 0.5), (1.0, 0.4))),
    lambda: DiscreteFinite(((1.0, 0.5), (0.0, 0.5))),
    lambda: Contaminated(Gaussian(), 1.0, 0.0),
])
def test_invalid_specs(bad):
    with pytest.raises(InvalidArgument):
        bad()


def test_feller_g_rademacher():
    assert feller_g(Rademacher(), 4) == pytest.approx(0.5, abs=1e-15)
    assert feller_g(Rademacher(), 100) == pytest.approx(0.1, abs=1e-15)


def test_feller_g_gaussian_limit():
    # for large m the truncation is inactive and sqrt(m) g(m) -> E|Z|^3
    m = 10_000
    val = math.sqrt(m) * feller_g(Gaussian(), m, budget=2_000_000)
    assert val == pytest.approx(2 * math.sqrt(2 / math.pi), abs=0.01)


def test_feller_g_decreasing_and_bounded():
    for spec in (StudentT(5.0), Rademacher(), LogNormal(0.0, 1.0)):
        vals = [feller_g(spec, m, budget=200_000) for m in (1, 4, 16, 64, 256)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
        # g(1) = E[Z^2 min(|Z|, 1)] <= E Z^2 = 1, up to sampling error
        assert vals[0] <= 1.0 + 1e-2


def test_feller_g_discrete_matches_definition():
    P = DiscreteFinite(((-2.0, 0.1), (0.0, 0.4), (1.0, 0.3), (4.0, 0.2)))
    mu, sd = P.mean, P.sd
    for m in (1, 2, 9, 50):
        want = oracles.expectation(
            P.atoms, lambda y: ((y - mu) / sd) ** 2 * min(abs(y - mu) / sd, math.sqrt(m)), 1)
        assert feller_g(P, m) == pytest.approx(want / math.sqrt(m), rel=1e-14)


def test_discrete_expectation_examples():
    P = DiscreteFinite(((-1.0, 0.25), (0.0, 0.35), (2.0, 0.4)))
    mu = P.mean
    assert discrete_expectation(P, lambda a, b: a * b, 2) == pytest.approx(mu * mu, abs=1e-15)
    assert discrete_expectation(P, lambda a: (a - mu) ** 2, 1) == pytest.approx(P.variance, abs=1e-15)
    for d in (0, 1, 3):
        assert discrete_expectation(P, lambda *a: 4.25, d) == pytest.approx(4.25, abs=1e-14)
    with pytest.raises(CapExceeded):
        discrete_expectation(P, lambda *a: 0.0, 20, cap=1000)


def test_contamination_fraction():
    spec = Contaminated(Gaussian(), 0.1, 1e6)
    n = 100_000
    frac = np.mean(sample(spec, n, rng(9)) == 1e6)
    assert abs(frac - 0.1) < 5 * math.sqrt(0.1 * 0.9 / n)


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.name)
def test_config_round_trip(spec):
    cfg = to_config(spec)
    assert from_config(dict(cfg)) == spec
    left = dict(cfg)
    from_config(left)
    assert left == {}
