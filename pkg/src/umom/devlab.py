"""Seeded Monte Carlo experiments on estimator deviations.

Replication r draws its data and any estimator randomness from a Philox
stream keyed by ``derive(seed, r)``, so results do not depend on the number
of worker threads or the order in which replications finish.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from statistics import NormalDist

import numpy as np

from . import __version__
from .distributions import DistributionSpec, feller_g, sample, to_config
from .errors import InsufficientPoints, InvalidArgument, NonpositiveSlope, ReplicationError
from .estimators import MOM, ExactUMOM, IncompleteUMOM, estimator_to_config
from .rng import derive, generator

Z95 = NormalDist().inv_cdf(0.975)
MIN_TAIL_COUNT = 20
DEFAULT_T_GRID = tuple(float(t) for t in np.linspace(1.0, 8.0, 16))


@dataclass(frozen=True)
class ExperimentConfig:
    distribution: DistributionSpec
    estimator: object
    N: int
    replications: int
    seed: int
    t_grid: tuple = DEFAULT_T_GRID
    fit_range: tuple | None = None

    def __post_init__(self):
        if self.N < 1:
            raise InvalidArgument("N must be positive")
        if self.replications < 1:
            raise InvalidArgument("replications must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidArgument("seed must be an unsigned 64-bit integer")
        grid = tuple(float(t) for t in self.t_grid)
        if not grid:
            raise InvalidArgument("t_grid must be nonempty")
        if grid[0] < 0 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise InvalidArgument("t_grid must be strictly increasing and nonnegative")
        object.__setattr__(self, "t_grid", grid)

    @property
    def fit_bounds(self):
        return self.fit_range if self.fit_range is not None else (self.t_grid[0], self.t_grid[-1])

    def echo(self):
        """Flat description of the experiment (thread count deliberately excluded)."""
        out = {"N": self.N, "replications": self.replications, "seed": self.seed,
               "t_grid": list(self.t_grid), "fit_range": list(self.fit_bounds)}
        out.update(to_config(self.distribution))
        out.update(estimator_to_config(self.estimator))
        return out


def _replicate(config, r):
    rng = generator(derive(config.seed, r))
    try:
        x = sample(config.distribution, config.N, rng)
        return config.estimator(x, rng)
    except Exception as exc:
        raise ReplicationError(r, exc) from exc


def run_experiment(config, threads=1, progress=None):
    """Vector of `replications` estimates; bit-identical for any thread count."""
    reps = config.replications
    out = np.empty(reps, dtype=np.float64)

    def work(lo, hi):
        for r in range(lo, hi):
            out[r] = _replicate(config, r)
            if progress is not None:
                progress(1)

    if threads <= 1:
        work(0, reps)
        return out
    chunk = max(1, min(256, reps // (4 * threads) or 1))
    with ThreadPoolExecutor(threads) as pool:
        futures = [pool.submit(work, lo, min(lo + chunk, reps)) for lo in range(0, reps, chunk)]
        for f in futures:
            f.result()
    return out


# tails -----------------------------------------------------------------------------


def wilson_interval(successes, n, z=Z95):
    """Wilson score interval for a binomial proportion (vectorised)."""
    k = np.asarray(successes, dtype=np.float64)
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4.0 * n * n)) / denom
    return np.maximum(centre - half, 0.0), np.minimum(centre + half, 1.0)


@dataclass
class TailCurve:
    t: list
    p_hat: list
    wilson_lo: list
    wilson_hi: list
    replications: int

    @classmethod
    def from_probabilities(cls, t, p, replications):
        """Curve with Wilson bounds for given exceedance fractions (p in [0, 1])."""
        p = np.asarray(p, dtype=np.float64)
        if np.any((p < 0) | (p > 1)):
            raise InvalidArgument("exceedance probabilities must lie in [0, 1]")
        lo, hi = wilson_interval(p * replications, replications)
        return cls([float(v) for v in t], p.tolist(), lo.tolist(), hi.tolist(), int(replications))


def tail_curve(estimates, mu, sigma, N, t_grid):
    """Fraction of replications with |sqrt(N)(estimate - mu)| >= sigma sqrt(t), per t."""
    if not sigma > 0:
        raise InvalidArgument("sigma must be positive")
    est = np.asarray(estimates, dtype=np.float64)
    dev = np.abs(math.sqrt(N) * (est - mu))
    t = np.asarray(t_grid, dtype=np.float64)
    counts = np.array([np.count_nonzero(dev >= sigma * math.sqrt(v)) for v in t])
    n = est.size
    lo, hi = wilson_interval(counts, n)
    return TailCurve(t.tolist(), (counts / n).tolist(), lo.tolist(), hi.tolist(), n)


@dataclass
class SubGaussianFit:
    L_hat: float
    intercept: float
    prefactor: float
    r_squared: float
    t_range: list
    n_points: int


def fit_subgaussian_constant(curve, t_min, t_max):
    """Weighted affine fit of -ln p_hat = intercept + t / L over [t_min, t_max].

    Only points with at least 20 exceedances enter; each is weighted by the
    inverse square of its Wilson half-width on the log scale.
    """
    t = np.asarray(curve.t, dtype=np.float64)
    p = np.asarray(curve.p_hat, dtype=np.float64)
    lo = np.asarray(curve.wilson_lo, dtype=np.float64)
    hi = np.asarray(curve.wilson_hi, dtype=np.float64)
    keep = (t >= t_min) & (t <= t_max) & (p * curve.replications >= MIN_TAIL_COUNT) & (p > 0)
    if np.count_nonzero(keep) < 3:
        raise InsufficientPoints(
            f"{np.count_nonzero(keep)} estimable points in [{t_min}, {t_max}]; need 3")
    t, p, lo, hi = t[keep], p[keep], lo[keep], hi[keep]
    y = -np.log(p)
    half = 0.5 * (np.log(hi) - np.log(lo))
    # relative weights; squaring raw half-widths can underflow for huge replication counts
    half = np.maximum(half, 1e-150)
    w = (half.min() / half) ** 2
    W = math.fsum(w)
    tbar = math.fsum(w * t) / W
    ybar = math.fsum(w * y) / W
    sxx = math.fsum(w * (t - tbar) ** 2)
    sxy = math.fsum(w * (t - tbar) * (y - ybar))
    if sxx == 0:
        raise InsufficientPoints("all estimable points share one t value")
    slope = sxy / sxx
    if not slope > 0:
        raise NonpositiveSlope(f"fitted slope {slope!r}: tail is not decaying over the range")
    intercept = ybar - slope * tbar
    resid = y - (intercept + slope * t)
    syy = math.fsum(w * (y - ybar) ** 2)
    r2 = 1.0 - math.fsum(w * resid ** 2) / syy if syy > 0 else 1.0
    return SubGaussianFit(1.0 / slope, intercept, math.exp(-intercept), r2,
                          [float(t_min), float(t_max)], int(t.size))


def variance_ratio(estimates, mu, sigma, N):
    """Mean of (sqrt(N)(estimate - mu))^2 over replications, divided by sigma^2."""
    est = np.asarray(estimates, dtype=np.float64)
    if est.size < 2:
        raise InvalidArgument("need at least two estimates")
    z = math.sqrt(N) * (est - mu)
    return math.fsum(z * z) / est.size / sigma ** 2


# reports ---------------------------------------------------------------------------------


@dataclass
class ExperimentReport:
    config: dict
    summary: dict
    tail_curve: TailCurve
    fit: SubGaussianFit | None
    fit_error: str | None = None
    diagnostics: dict = field(default_factory=dict)
    wall_clock: float | None = None
    version: str = __version__

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["tail_curve"] = TailCurve(**d["tail_curve"])
        d["fit"] = SubGaussianFit(**d["fit"]) if d.get("fit") is not None else None
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def diagnostics(config):
    """Quantities that govern how far the asymptotic tail claims reach at this N."""
    dist, est, N = config.distribution, config.estimator, config.N
    out = {}
    if isinstance(est, MOM):
        block = N // est.k
        out["k_g_sq"] = est.k * feller_g(dist, block) ** 2
    elif isinstance(est, (ExactUMOM, IncompleteUMOM)):
        out["bias_scale"] = math.sqrt(N / est.m) * feller_g(dist, est.m)
    return out


def build_report(config, estimates, wall_clock=None):
    mu, sigma = config.distribution.mean, config.distribution.sd
    est = np.asarray(estimates, dtype=np.float64)
    curve = tail_curve(est, mu, sigma, config.N, config.t_grid)
    fit, err = None, None
    try:
        fit = fit_subgaussian_constant(curve, *config.fit_bounds)
    except (InsufficientPoints, NonpositiveSlope) as exc:
        err = f"{type(exc).__name__}: {exc}"
    mean = math.fsum(est) / est.size
    sd = math.sqrt(math.fsum((est - mean) ** 2) / max(est.size - 1, 1))
    summary = {"mean": mean, "sd": sd, "replications": int(est.size),
               "variance_ratio": variance_ratio(est, mu, sigma, config.N) if est.size > 1 else None}
    return ExperimentReport(config.echo(), summary, curve, fit, err, diagnostics(config), wall_clock)


def _num(x):
    x = float(x) + 0.0  # folds -0.0 into 0.0
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def export_report(report, path, format="json"):
    """Write `report` as json, csv (t, p_hat, wilson bounds) or plotdata (t, -ln p_hat)."""
    curve = report.tail_curve
    if format == "json":
        text = report.to_json()
    elif format == "csv":
        lines = ["t,p_hat,wilson_lo,wilson_hi"]
        for row in zip(curve.t, curve.p_hat, curve.wilson_lo, curve.wilson_hi):
            lines.append(",".join(_num(v) for v in row))
        text = "\n".join(lines) + "\n"
    elif format == "plotdata":
        lines = []
        for t, p in zip(curve.t, curve.p_hat):
            y = -math.log(p) if p > 0 else math.inf
            lines.append(f"{_num(t)} {_num(y)}")
        text = "\n".join(lines) + "\n"
    else:
        raise InvalidArgument(f"unknown format {format!r}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


def run(config, threads=1, progress=None, timed=False):
    """run_experiment followed by build_report."""
    start = time.perf_counter()
    estimates = run_experiment(config, threads=threads, progress=progress)
    elapsed = time.perf_counter() - start if timed else None
    return estimates, build_report(config, estimates, elapsed)
