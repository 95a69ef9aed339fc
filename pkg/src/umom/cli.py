"""Command-line front end.

Exit codes: 0 success, 2 config error, 3 enumeration cap exceeded,
4 runtime numeric error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import config as cfgmod
from . import devlab, identities
from .distributions import DiscreteFinite, from_config, parse_atoms, sample
from .errors import CapExceeded, ConfigError, FitError, InvalidArgument, ReplicationError
from .estimators import (breakdown_fraction, contaminate, estimator_from_config, exact_umom,
                         uses_randomness)
from .rng import derive, generator
from .ustat import decomposition_report, make_kernel

EXIT_OK, EXIT_CONFIG, EXIT_CAP, EXIT_NUMERIC = 0, 2, 3, 4


class _Fail(Exception):
    def __init__(self, code, message):
        self.code = code
        super().__init__(message)


def _int(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(key, "required key is missing")
        return default
    text = cfg.pop(key)
    try:
        val = float(text)
    except ValueError:
        raise ConfigError(key, f"not a number: {text!r}") from None
    if not val.is_integer():
        raise ConfigError(key, f"not an integer: {text!r}")
    return int(val)


def _float(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(key, "required key is missing")
        return default
    text = cfg.pop(key)
    try:
        return float(text)
    except ValueError:
        raise ConfigError(key, f"not a number: {text!r}") from None


def _seed(cfg, args):
    if args.seed is not None:
        cfg.pop("seed", None)
        return args.seed
    if "seed" not in cfg:
        raise ConfigError("seed", "required key is missing (no implicit seeding)")
    seed = _int(cfg, "seed")
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    return seed


def _done(cfg):
    """Fail on keys the chosen configuration does not use, before any work starts."""
    if cfg:
        raise ConfigError(next(iter(cfg)), "key not used by this configuration")


def _wrap(key, fn, *a, **kw):
    try:
        return fn(*a, **kw)
    except CapExceeded:
        raise
    except (InvalidArgument, ValueError) as exc:
        raise ConfigError(key, str(exc)) from None


def _t_grid(cfg):
    if "t_grid" in cfg:
        text = cfg.pop("t_grid")
        try:
            return tuple(float(v) for v in text.split(",") if v.strip())
        except ValueError:
            raise ConfigError("t_grid", f"not a comma-separated list of numbers: {text!r}") from None
    if {"t_min", "t_max", "t_points"} & cfg.keys():
        lo, hi = _float(cfg, "t_min", 1.0), _float(cfg, "t_max", 8.0)
        pts = _int(cfg, "t_points", 16)
        return tuple(float(v) for v in np.linspace(lo, hi, pts))
    return devlab.DEFAULT_T_GRID


def _experiment(cfg, args):
    dist = _wrap("dist", from_config, cfg)
    est = _wrap("estimator", estimator_from_config, cfg)
    N = _int(cfg, "N")
    reps = _int(cfg, "replications")
    seed = _seed(cfg, args)
    grid = _t_grid(cfg)
    fit = None
    if "fit_t_min" in cfg or "fit_t_max" in cfg:
        fit = (_float(cfg, "fit_t_min", grid[0]), _float(cfg, "fit_t_max", grid[-1]))
    _done(cfg)
    return _wrap("config", devlab.ExperimentConfig, dist, est, N, reps, seed, grid, fit)


def _progress(total):
    if not sys.stderr.isatty():
        return None
    done = [0]
    step = max(1, total // 100)

    def tick(n):
        done[0] += n
        if done[0] % step == 0 or done[0] == total:
            print(f"\rreplications {done[0]}/{total}", end="", file=sys.stderr, flush=True)

    return tick


def _write(args, text):
    if args.out:
        with open(args.out, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)


def cmd_estimate(cfg, args):
    if "data" not in cfg:
        raise ConfigError("data", "required key is missing")
    path = cfg.pop("data")
    if not os.path.isabs(path) and args.config:
        path = os.path.join(os.path.dirname(os.path.abspath(args.config)), path)
    est = _wrap("estimator", estimator_from_config, cfg)
    rng = generator(derive(_seed(cfg, args), 0)) if uses_randomness(est) else None
    cfg.pop("seed", None)
    _done(cfg)
    try:
        with open(path, encoding="utf-8") as fh:
            data = np.array([float(line) for line in fh if line.strip()])
    except OSError as exc:
        raise ConfigError("data", str(exc)) from None
    except ValueError as exc:
        raise ConfigError("data", f"bad number in data file: {exc}") from None
    value = _wrap("estimator", est, data, rng)
    print(repr(float(value)))
    _write(args, json.dumps({"estimate": float(value), "n": int(data.size)}, indent=2) + "\n")


def _experiment_command(cfg, args, show):
    conf = _experiment(cfg, args)
    _, report = devlab.run(conf, threads=args.threads, progress=_progress(conf.replications),
                           timed=args.timing)
    if sys.stderr.isatty():
        print(file=sys.stderr)
    if args.out:
        devlab.export_report(report, args.out, args.format)
    show(report)


def cmd_tails(cfg, args):
    def show(report):
        if report.fit is None:
            print(f"fit failed: {report.fit_error}")
            raise _Fail(EXIT_NUMERIC, report.fit_error)
        f = report.fit
        print(f"L_hat {f.L_hat!r} prefactor {f.prefactor!r} r_squared {f.r_squared!r} "
              f"points {f.n_points} range {f.t_range}")

    _experiment_command(cfg, args, show)


def cmd_variance(cfg, args):
    _experiment_command(cfg, args, lambda r: print(repr(r.summary["variance_ratio"])))


def cmd_decompose(cfg, args):
    name = cfg.pop("kernel", None)
    if name is None:
        raise ConfigError("kernel", "required key is missing")
    m = _int(cfg, "m")
    if "atoms" not in cfg:
        raise ConfigError("atoms", "required key is missing")
    P = _wrap("atoms", lambda t: DiscreteFinite(parse_atoms(t)), cfg.pop("atoms"))
    N = _int(cfg, "N")
    params = {}
    if "g" in cfg:
        params["g"] = cfg.pop("g")
    if "shift" in cfg:
        params["shift"] = _float(cfg, "shift")
    if "mu" in cfg:
        params["mu"] = _float(cfg, "mu")
    elif name == "centered_product":
        params["mu"] = P.mean
    _done(cfg)
    try:
        kernel = _wrap("kernel", make_kernel, name, m, **params)
    except TypeError:
        raise ConfigError(next(iter(params)), f"not a parameter of kernel {name!r}") from None
    report = _wrap("N", decomposition_report, kernel, P, N)
    text = report.to_json() + "\n"
    sys.stdout.write(text)
    _write(args, text)


def first_breaking_count(N, m):
    """Smallest c with C(N-c, m) <= C(N, m)/2."""
    total = math.comb(N, m)
    return next(c for c in range(N + 1) if 2 * math.comb(N - c, m) <= total)


def breakdown_scan(clean, m, outlier, rng):
    """exact_umom after corrupting c = 0..N points; returns [(c, estimate, bounded)]."""
    lo, hi = float(np.min(clean)), float(np.max(clean))
    tol = 1e-9 * max(1.0, abs(lo), abs(hi))
    rows = []
    for c in range(clean.size + 1):
        est = exact_umom(contaminate(clean, c, outlier, rng), m)
        rows.append((c, est, lo - tol <= est <= hi + tol))
    return rows


def cmd_breakdown(cfg, args):
    dist = _wrap("dist", from_config, cfg)
    N = _int(cfg, "N", 12)
    m = _int(cfg, "m")
    outlier = _float(cfg, "outlier", 1e12)
    seed = _seed(cfg, args)
    _done(cfg)
    if not 1 <= m <= N:
        raise ConfigError("m", f"must lie in [1, N={N}]")
    rng = generator(derive(seed, 0))
    clean = sample(dist, N, rng)
    rows = breakdown_scan(clean, m, outlier, rng)
    predicted = first_breaking_count(N, m)
    observed = next((c for c, est, ok in rows if not ok), None)
    for c, est, ok in rows:
        print(f"c={c} estimate={est!r} {'bounded' if ok else 'broken'}")
    print(f"first breaking count: observed {observed} predicted {predicted}")
    print(f"fraction {predicted / N!r} vs asymptotic 1-(1/2)^(1/m) = {breakdown_fraction(m)!r}")
    _write(args, json.dumps({"N": N, "m": m, "outlier": outlier, "observed": observed,
                             "predicted": predicted, "asymptotic": breakdown_fraction(m),
                             "estimates": [est for _, est, _ in rows]}, indent=2) + "\n")
    if observed != predicted:
        raise _Fail(EXIT_NUMERIC, "breakdown threshold differs from the combinatorial prediction")


def cmd_selftest(cfg, args):
    checks = identities.run_suite()
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} identity checks passed")
    if failed:
        raise _Fail(EXIT_NUMERIC, f"{failed} identity checks failed")


COMMANDS = {
    "estimate": cmd_estimate,
    "tails": cmd_tails,
    "variance": cmd_variance,
    "decompose": cmd_decompose,
    "breakdown": cmd_breakdown,
    "selftest": cmd_selftest,
}


def build_parser():
    p = argparse.ArgumentParser(prog="umom", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("json", "csv", "plotdata"), default="json")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--threads", type=int, default=1, metavar="N")
    p.add_argument("--timing", action="store_true", help="record wall-clock time in the report")
    return p


def dispatch(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed", "must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ConfigError("--threads", "must be at least 1")
        if args.config:
            try:
                cfg = cfgmod.load(args.config)
            except OSError as exc:
                raise ConfigError("--config", str(exc)) from None
        elif args.command == "selftest":
            cfg = {}
        else:
            raise ConfigError("--config", f"'{args.command}' needs a config file")
        cfgmod.check_keys(cfg, args.command)
        COMMANDS[args.command](cfg, args)
    except _Fail as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReplicationError as exc:
        code = EXIT_CAP if isinstance(exc.cause, CapExceeded) else (
            EXIT_CONFIG if isinstance(exc.cause, InvalidArgument) else EXIT_NUMERIC)
        print(f"error: {exc}", file=sys.stderr)
        return code
    except CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (FitError, ArithmeticError, ValueError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
