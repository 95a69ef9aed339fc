"""Sampleable laws with known moments, finite-support laws, and g(m).

Every spec is a frozen dataclass whose ``mean`` and ``variance`` are the
closed-form moments of the law; construction fails for degenerate laws.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import CapExceeded, InvalidArgument, MomentDoesNotExist

ENUMERATION_CAP = 10_000_000
FELLER_BUDGET = 1_000_000


class DistributionSpec:
    """Base class; concrete laws below set ``mean`` and ``variance``."""

    name: str = ""
    mean: float
    variance: float

    @property
    def sd(self):
        return math.sqrt(self.variance)

    def _finish(self, mean, variance):
        if not (math.isfinite(mean) and math.isfinite(variance)):
            raise InvalidArgument(f"{self.name}: moments are not finite")
        if variance <= 0:
            raise InvalidArgument(f"{self.name}: degenerate law (variance {variance})")
        object.__setattr__(self, "mean", float(mean))
        object.__setattr__(self, "variance", float(variance))

    # integrability bound for E|X - mu|^q; q must be strictly below it
    def _max_moment(self):
        return math.inf

    def _draw(self, rng, n):
        raise NotImplementedError

    def _expect(self, f):
        """E f(X) by quadrature or summation for a scalar function `f`."""
        raise NotImplementedError


def _quad(f, pdf, lo, hi, breaks=()):
    pts = sorted(p for p in breaks if lo < p < hi)
    edges = [lo, *pts, hi]

    def integrand(x):
        w = pdf(x)
        return 0.0 if w == 0.0 else f(x) * w

    total = 0.0
    for a, b in zip(edges, edges[1:]):
        val, _ = integrate.quad(integrand, a, b, limit=400, epsabs=1e-13, epsrel=1e-11)
        total += val
    return total


@dataclass(frozen=True)
class Gaussian(DistributionSpec):
    loc: float = 0.0
    scale: float = 1.0
    name = "gaussian"

    def __post_init__(self):
        if not self.scale > 0:
            raise InvalidArgument("gaussian: sd must be positive")
        self._finish(self.loc, self.scale ** 2)

    def _draw(self, rng, n):
        return rng.normal(self.loc, self.scale, n)

    def _expect(self, f):
        s = self.scale
        pdf = lambda x: math.exp(-0.5 * ((x - self.loc) / s) ** 2) / (s * math.sqrt(2 * math.pi))
        return _quad(f, pdf, -math.inf, math.inf, breaks=(self.loc,))

    def abs_central_moment(self, q):
        return self.scale ** q * 2 ** (q / 2) * math.gamma((q + 1) / 2) / math.sqrt(math.pi)


@dataclass(frozen=True)
class StudentT(DistributionSpec):
    dof: float = 5.0
    loc: float = 0.0
    scale: float = 1.0
    name = "student_t"

    def __post_init__(self):
        if not self.dof > 2:
            raise InvalidArgument("student_t: dof must exceed 2 for a finite variance")
        if not self.scale > 0:
            raise InvalidArgument("student_t: scale must be positive")
        self._finish(self.loc, self.scale ** 2 * self.dof / (self.dof - 2))

    def _max_moment(self):
        return self.dof

    def _draw(self, rng, n):
        return self.loc + self.scale * rng.standard_t(self.dof, n)

    def _pdf(self, x):
        nu = self.dof
        z = (x - self.loc) / self.scale
        logc = special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * math.log(nu * math.pi)
        return math.exp(logc - (nu + 1) / 2 * math.log1p(z * z / nu)) / self.scale

    def _expect(self, f):
        return _quad(f, self._pdf, -math.inf, math.inf, breaks=(self.loc,))

    def abs_central_moment(self, q):
        nu = self.dof
        logv = (q * math.log(self.scale) + q / 2 * math.log(nu) + special.gammaln((q + 1) / 2)
                + special.gammaln((nu - q) / 2) - 0.5 * math.log(math.pi) - special.gammaln(nu / 2))
        return math.exp(logv)


@dataclass(frozen=True)
class Pareto(DistributionSpec):
    """Pareto(alpha) with minimum `scale`, shifted so its mean is `target_mean`."""

    alpha: float = 3.0
    target_mean: float = 0.0
    scale: float = 1.0
    name = "pareto"

    def __post_init__(self):
        if not self.alpha > 2:
            raise InvalidArgument("pareto: tail index must exceed 2")
        if not self.scale > 0:
            raise InvalidArgument("pareto: scale must be positive")
        a = self.alpha
        var = self.scale ** 2 * a / ((a - 1) ** 2 * (a - 2))
        self._finish(self.target_mean, var)

    @property
    def shift(self):
        return self.target_mean - self.scale * self.alpha / (self.alpha - 1)

    def _max_moment(self):
        return self.alpha

    def _draw(self, rng, n):
        # numpy's pareto is the Lomax law, i.e. classical Pareto minus one
        return self.shift + self.scale * (1.0 + rng.pareto(self.alpha, n))

    def _expect(self, f):
        a, s, lo = self.alpha, self.scale, self.shift + self.scale
        pdf = lambda x: a * s ** a / (x - self.shift) ** (a + 1)
        return _quad(f, pdf, lo, math.inf, breaks=(self.target_mean,))


@dataclass(frozen=True)
class LogNormal(DistributionSpec):
    logmean: float = 0.0
    logsd: float = 1.0
    name = "lognormal"

    def __post_init__(self):
        if not self.logsd > 0:
            raise InvalidArgument("lognormal: logsd must be positive")
        mu, s2 = self.logmean, self.logsd ** 2
        self._finish(math.exp(mu + s2 / 2), math.expm1(s2) * math.exp(2 * mu + s2))

    def _draw(self, rng, n):
        return rng.lognormal(self.logmean, self.logsd, n)

    def _expect(self, f):
        # integrate over the underlying normal variable
        s = self.logsd
        g = lambda z: f(math.exp(self.logmean + s * z))
        phi = lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
        zmean = (math.log(self.mean) - self.logmean) / s
        return _quad(g, phi, -math.inf, math.inf, breaks=(0.0, zmean))


@dataclass(frozen=True)
class DiscreteFinite(DistributionSpec):
    """Finite-support law; `atoms` is a sequence of (value, probability)."""

    atoms: tuple = ()
    name = "discrete"

    def __post_init__(self):
        atoms = tuple((float(v), float(p)) for v, p in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if len(atoms) < 2:
            raise InvalidArgument("discrete: at least two atoms required")
        vals = [v for v, _ in atoms]
        probs = [p for _, p in atoms]
        if any(not (0 < p <= 1) for p in probs):
            raise InvalidArgument("discrete: atom probabilities must lie in (0, 1]")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise InvalidArgument(f"discrete: probabilities sum to {math.fsum(probs)!r}")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise InvalidArgument("discrete: atom values must be strictly increasing")
        mean = math.fsum(v * p for v, p in atoms)
        var = math.fsum(p * (v - mean) ** 2 for v, p in atoms)
        self._finish(mean, var)

    @property
    def values(self):
        return np.array([v for v, _ in self.atoms])

    @property
    def probs(self):
        return np.array([p for _, p in self.atoms])

    def _draw(self, rng, n):
        cdf = np.cumsum(self.probs)
        idx = np.searchsorted(cdf, rng.random(n), side="right")
        return self.values[np.minimum(idx, len(self.atoms) - 1)]

    def _expect(self, f):
        return math.fsum(p * f(v) for v, p in self.atoms)

    def abs_central_moment(self, q):
        return math.fsum(p * abs(v - self.mean) ** q for v, p in self.atoms)

    def index_of(self, value):
        """Atom index of `value`, or -1 if it is not a support point."""
        i = int(np.searchsorted(self.values, value))
        if i < len(self.atoms) and self.atoms[i][0] == value:
            return i
        return -1


@dataclass(frozen=True)
class Rademacher(DiscreteFinite):
    atoms: tuple = ((-1.0, 0.5), (1.0, 0.5))
    name = "rademacher"

    def __post_init__(self):
        object.__setattr__(self, "atoms", ((-1.0, 0.5), (1.0, 0.5)))
        super().__post_init__()

    def _draw(self, rng, n):
        return np.where(rng.random(n) < 0.5, -1.0, 1.0)


@dataclass(frozen=True)
class Contaminated(DistributionSpec):
    """Mixture: `base` with probability 1 - epsilon, point mass at `outlier` otherwise."""

    base: DistributionSpec = field(default_factory=Gaussian)
    epsilon: float = 0.0
    outlier: float = 0.0
    name = "contaminated"

    def __post_init__(self):
        if not 0 <= self.epsilon < 1:
            raise InvalidArgument("contaminated: epsilon must lie in [0, 1)")
        e, b = self.epsilon, self.base
        mean = (1 - e) * b.mean + e * self.outlier
        second = (1 - e) * (b.variance + (b.mean - mean) ** 2) + e * (self.outlier - mean) ** 2
        self._finish(mean, second)

    def _max_moment(self):
        return self.base._max_moment()

    def _draw(self, rng, n):
        hit = rng.random(n) < self.epsilon
        x = self.base._draw(rng, n)
        x[hit] = self.outlier
        return x

    def _expect(self, f):
        return (1 - self.epsilon) * self.base._expect(f) + self.epsilon * f(self.outlier)


def sample(spec, n, rng):
    """n i.i.d. draws from `spec` using numpy Generator `rng`."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise InvalidArgument(f"sample size must be a positive integer, got {n!r}")
    return np.asarray(spec._draw(rng, int(n)), dtype=np.float64)


@dataclass(frozen=True)
class Moments:
    mean: float
    variance: float
    abs_central_moment: Callable[[float], float]


def true_moments(spec):
    """Closed-form mean, variance and q -> E|X - mean|^q for `spec`."""

    def acm(q):
        if q <= 0:
            raise InvalidArgument("moment order must be positive")
        if q >= spec._max_moment():
            raise MomentDoesNotExist(f"{spec.name}: E|X - mu|^{q} is infinite")
        own = getattr(spec, "abs_central_moment", None)
        if own is not None:
            return own(q)
        mu = spec.mean
        return spec._expect(lambda x: abs(x - mu) ** q)

    return Moments(spec.mean, spec.variance, acm)


def feller_g(spec, m, budget=FELLER_BUDGET, rng=None):
    """g(m) = m^{-1/2} E[Z^2 min(|Z|, sqrt m)] for the standardized variable Z.

    Exact for finite-support laws; otherwise a Monte Carlo average over
    `budget` draws (seeded with 0 unless `rng` is given, so that calls for
    different m share the same draws).
    """
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise InvalidArgument(f"m must be a positive integer, got {m!r}")
    mu, sd = spec.mean, spec.sd
    root = math.sqrt(m)
    if isinstance(spec, DiscreteFinite):
        terms = (p * ((v - mu) / sd) ** 2 * min(abs(v - mu) / sd, root) for v, p in spec.atoms)
        return math.fsum(terms) / root
    if rng is None:
        rng = np.random.default_rng(0)
    z = (sample(spec, budget, rng) - mu) / sd
    return math.fsum(z * z * np.minimum(np.abs(z), root)) / budget / root


def discrete_expectation(P, f, d, cap=ENUMERATION_CAP):
    """Exact E f(Y_1, ..., Y_d) for Y_i i.i.d. from the finite law P."""
    if d < 0:
        raise InvalidArgument("d must be nonnegative")
    required = len(P.atoms) ** d
    if required > cap:
        raise CapExceeded(f"discrete_expectation over {len(P.atoms)}^{d} tuples", required, cap)
    terms = []
    for combo in itertools.product(P.atoms, repeat=d):
        w = math.prod(p for _, p in combo)
        terms.append(w * f(*(v for v, _ in combo)))
    return math.fsum(terms)


# flat key=value serialization -------------------------------------------------

_FIELDS = {
    "gaussian": (Gaussian, {"mean": "loc", "sd": "scale"}),
    "student_t": (StudentT, {"dof": "dof", "location": "loc", "scale": "scale"}),
    "pareto": (Pareto, {"alpha": "alpha", "mean": "target_mean", "scale": "scale"}),
    "lognormal": (LogNormal, {"logmean": "logmean", "logsd": "logsd"}),
    "rademacher": (Rademacher, {}),
    "discrete": (DiscreteFinite, {"atoms": "atoms"}),
    "contaminated": (Contaminated, {"epsilon": "epsilon", "outlier": "outlier"}),
}


def format_atoms(atoms):
    return ",".join(f"{v!r}:{p!r}" for v, p in atoms)


def parse_atoms(text):
    atoms = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            v, p = item.split(":")
            atoms.append((float(v), float(p)))
        except ValueError:
            raise InvalidArgument(f"bad atom {item!r}; expected value:prob") from None
    return tuple(atoms)


def to_config(spec, prefix=""):
    """Flat ``{key: text}`` mapping, e.g. ``{'dist': 'student_t', 'dof': '5.0'}``."""
    cls, names = _FIELDS[spec.name]
    out = {prefix + "dist": spec.name}
    for key, attr in names.items():
        val = getattr(spec, attr)
        out[prefix + key] = format_atoms(val) if key == "atoms" else repr(float(val))
    if isinstance(spec, Contaminated):
        out.update(to_config(spec.base, prefix + "base_"))
    return out


def from_config(cfg, prefix=""):
    """Inverse of `to_config`; consumes the keys it uses from `cfg` (a dict)."""
    kind = cfg.pop(prefix + "dist", None)
    if kind is None:
        raise InvalidArgument(f"missing key {prefix}dist")
    if kind not in _FIELDS:
        raise InvalidArgument(f"unknown distribution {kind!r}")
    cls, names = _FIELDS[kind]
    kwargs = {}
    for key, attr in names.items():
        if prefix + key not in cfg:
            continue
        text = cfg.pop(prefix + key)
        kwargs[attr] = parse_atoms(text) if key == "atoms" else float(text)
    if kind == "contaminated":
        kwargs["base"] = from_config(cfg, prefix + "base_")
    return cls(**kwargs)
