"""Flat ``key=value`` config files: one pair per line, ``#`` comments, no sections."""

import re

from .errors import ConfigError

_DIST_KEYS = {"dist", "mean", "sd", "dof", "location", "scale", "alpha", "logmean", "logsd",
              "atoms", "epsilon", "outlier"}
_DIST_KEY = re.compile(r"^(?:base_)*(" + "|".join(sorted(_DIST_KEYS)) + r")$")

ESTIMATOR_KEYS = {"estimator", "k", "m", "subsets", "with_replacement", "shuffle"}
EXPERIMENT_KEYS = {"N", "replications", "seed", "t_grid", "t_min", "t_max", "t_points",
                   "fit_t_min", "fit_t_max"}

ALLOWED = {
    "estimate": ESTIMATOR_KEYS | {"data", "seed"},
    "tails": ESTIMATOR_KEYS | EXPERIMENT_KEYS,
    "variance": ESTIMATOR_KEYS | EXPERIMENT_KEYS,
    "decompose": {"kernel", "m", "atoms", "N", "g", "shift", "mu"},
    "breakdown": {"N", "m", "outlier", "seed"},
    "selftest": set(),
}
WITH_DISTRIBUTION = {"tails", "variance", "breakdown"}


def parse(text):
    """Parse config text into an ordered dict of raw string values."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        if key in out:
            raise ConfigError(key, "duplicate key")
        out[key] = value
    return out


def load(path):
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def check_keys(cfg, command):
    """Reject keys the subcommand does not know (typos are hard errors)."""
    allowed = ALLOWED[command]
    for key in cfg:
        if key in allowed:
            continue
        if command in WITH_DISTRIBUTION and _DIST_KEY.match(key):
            continue
        raise ConfigError(key, f"unknown key for '{command}'")
