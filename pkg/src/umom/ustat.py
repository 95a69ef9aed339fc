"""Exact U-statistics and Hoeffding decompositions over finite-support laws.

Projections are only computed for `DiscreteFinite` laws, where every
integral is a finite weighted sum and can be evaluated exactly (up to
rounding, with compensated sums).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np

from . import combinatorics
from .combinatorics import SUBSET_CAP
from .distributions import ENUMERATION_CAP, DiscreteFinite, discrete_expectation
from .errors import CapExceeded, InvalidArgument, ValueNotInSupport


# kernels -----------------------------------------------------------------------


class Kernel:
    """Symmetric function of `order` real arguments.

    Arguments are sorted before `func` sees them, which makes every kernel
    exactly permutation invariant regardless of floating-point reassociation.
    """

    name = "custom"

    def __init__(self, order, func=None, sup_norm=None):
        if order < 1:
            raise InvalidArgument("kernel order must be at least 1")
        self.order = int(order)
        self.sup_norm = sup_norm
        if func is not None:
            self._func = func

    def _func(self, *args):
        raise NotImplementedError

    def __call__(self, *args):
        if len(args) != self.order:
            raise InvalidArgument(f"kernel of order {self.order} called with {len(args)} arguments")
        return float(self._func(*sorted(args)))

    def params(self):
        return {}

    def __repr__(self):
        extra = "".join(f", {k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}(order={self.order}{extra})"


class MeanKernel(Kernel):
    name = "mean"

    def _func(self, *args):
        return math.fsum(args) / self.order


_G_FUNCS = {
    "identity": lambda x: x,
    "square": lambda x: x * x,
    "abs": abs,
}


class ProductKernel(Kernel):
    """Product of g(x_i); `g` is a callable or the name of a built-in map."""

    name = "product"

    def __init__(self, order, g="identity"):
        super().__init__(order)
        if isinstance(g, str):
            if g not in _G_FUNCS:
                raise InvalidArgument(f"unknown g {g!r}; choose from {sorted(_G_FUNCS)}")
            self.g_name, self.g = g, _G_FUNCS[g]
        else:
            self.g_name, self.g = getattr(g, "__name__", "custom"), g

    def _func(self, *args):
        return math.prod(self.g(a) for a in args)

    def params(self):
        return {"g": self.g_name}


class ShiftedSignKernel(Kernel):
    """sign(sqrt(m) (mean(args) - shift)), with sign(0) = +1."""

    name = "shifted_sign"

    def __init__(self, order, shift=0.0):
        super().__init__(order, sup_norm=1.0)
        self.shift = float(shift)

    def _func(self, *args):
        return 1.0 if math.fsum(args) / self.order - self.shift >= 0 else -1.0

    def params(self):
        return {"shift": self.shift}


class CenteredProductKernel(Kernel):
    """Product of (x_i - mu); completely degenerate when mu is the mean."""

    name = "centered_product"

    def __init__(self, order, mu=0.0):
        super().__init__(order)
        self.mu = float(mu)

    def _func(self, *args):
        return math.prod(a - self.mu for a in args)

    def params(self):
        return {"mu": self.mu}


KERNELS = {c.name: c for c in (MeanKernel, ProductKernel, ShiftedSignKernel, CenteredProductKernel)}


def make_kernel(name, order, **params):
    if name not in KERNELS:
        raise InvalidArgument(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}")
    return KERNELS[name](order, **params)


# U-statistic on a sample -------------------------------------------------------------


def u_statistic_exact(sample, kernel, cap=SUBSET_CAP):
    """Average of the kernel over all C(N, m) subsets of the sample."""
    x = np.asarray(sample, dtype=np.float64)
    m, n = kernel.order, x.size
    if m > n:
        raise InvalidArgument(f"kernel order {m} exceeds sample size {n}")
    if isinstance(kernel, MeanKernel):
        means = combinatorics.subset_means(x, m, cap=cap)
        return math.fsum(means) / means.size
    rows = combinatorics.revolving_door(n, m, cap=cap)
    return math.fsum(kernel(*x[r]) for r in rows) / rows.shape[0]


def blocked_average(sample, kernel, permutation):
    """Average of the kernel over consecutive blocks of the permuted sample.

    Uses k = floor(N/m) blocks of m points; averaging this over all N!
    permutations reproduces the U-statistic.
    """
    x = np.asarray(sample, dtype=np.float64)
    n, m = x.size, kernel.order
    perm = np.asarray(permutation)
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise InvalidArgument("permutation must list each index 0..N-1 exactly once")
    if m > n:
        raise InvalidArgument(f"kernel order {m} exceeds sample size {n}")
    k = n // m
    y = x[perm]
    return math.fsum(kernel(*y[i * m:(i + 1) * m]) for i in range(k)) / k


def hajek_gap_bound(var_h, N, m):
    """var_h (m/N)^2 / (1 - m/N): bound on Var(U - S) from Var(h)."""
    if not m < N:
        raise InvalidArgument("the gap bound needs m < N")
    r = m / N
    return var_h * r * r / (1.0 - r)


# projections over a finite law ---------------------------------------------------


def _fsum_last(arr):
    """Compensated sum over the last axis."""
    if arr.ndim == 1:
        return np.float64(math.fsum(arr))
    flat = arr.reshape(-1, arr.shape[-1])
    out = np.fromiter((math.fsum(row) for row in flat), dtype=np.float64, count=flat.shape[0])
    return out.reshape(arr.shape[:-1])


def _weighted_total(arr, w):
    """Sum of arr against the product measure w x ... x w on all its axes."""
    while arr.ndim:
        arr = _fsum_last(arr * w)
    return float(arr)


class Projector:
    """Kernel tensor over support tuples of P with its Hoeffding projections."""

    def __init__(self, kernel, P, cap=ENUMERATION_CAP):
        if not isinstance(P, DiscreteFinite):
            raise InvalidArgument("projections need a finite-support law")
        self.kernel, self.P = kernel, P
        self.m = kernel.order
        self.s = len(P.atoms)
        self.values = P.values
        self.w = P.probs
        if self.s ** self.m > cap:
            raise CapExceeded(f"kernel tensor {self.s}^{self.m}", self.s ** self.m, cap)

    @cached_property
    def tensor(self):
        cache = {}
        H = np.empty((self.s,) * self.m)
        for idx in itertools.product(range(self.s), repeat=self.m):
            key = tuple(sorted(idx))
            if key not in cache:
                cache[key] = self.kernel(*self.values[list(key)])
            H[idx] = cache[key]
        return H

    @cached_property
    def _partials(self):
        # partial[k][a_1..a_k] = E h(v_a1, ..., v_ak, Y_{k+1}, ..., Y_m)
        out = [None] * (self.m + 1)
        out[self.m] = self.tensor
        for k in range(self.m - 1, -1, -1):
            out[k] = _fsum_last(out[k + 1] * self.w)
        return out

    def partial(self, k):
        return self._partials[k]

    @property
    def mean(self):
        return float(self._partials[0])

    def projection(self, j):
        """Array over support j-tuples of (pi_j h), by inclusion-exclusion."""
        if not 1 <= j <= self.m:
            raise InvalidArgument(f"projection order j={j} must lie in [1, {self.m}]")
        return self._projections[j]

    @cached_property
    def _projections(self):
        out = {}
        for j in range(1, self.m + 1):
            terms = []
            for r in range(j + 1):
                sign = -1.0 if (j - r) % 2 else 1.0
                for I in itertools.combinations(range(j), r):
                    part = self._partials[r]
                    # place the r axes of `part` on positions I of a j-dim array
                    shape = [1] * j
                    for pos in I:
                        shape[pos] = self.s
                    terms.append(sign * np.broadcast_to(part.reshape(shape), (self.s,) * j))
            out[j] = _fsum_last(np.stack(terms, axis=-1))
        return out

    def delta_sq(self, j):
        p = self.projection(j)
        return _weighted_total(p * p, self.w)

    def var_h(self):
        c = self.tensor - self.mean
        return _weighted_total(c * c, self.w)

    def _placed(self, J):
        """pi_|J| h(y_J) as an m-dim array over support m-tuples."""
        shape = [1] * self.m
        for pos in J:
            shape[pos] = self.s
        return np.broadcast_to(self.projection(len(J)).reshape(shape), (self.s,) * self.m)

    def orthogonality_residual(self):
        """Largest |E pi h(Y_J) pi h(Y_J')| over distinct nonempty J, J' in [m].

        By symmetry the covariance depends only on |J|, |J'| and |J & J'|, so
        one representative pair per class is integrated.
        """
        worst = 0.0
        m = self.m
        for a in range(1, m + 1):
            for b in range(a, m + 1):
                for c in range(max(0, a + b - m), min(a, b) + 1):
                    if a == b == c:
                        continue
                    J = tuple(range(a))
                    Jp = tuple(range(a - c, a - c + b))
                    cov = _weighted_total(self._placed(J) * self._placed(Jp), self.w)
                    worst = max(worst, abs(cov))
        return worst

    def reconstruction_residual(self):
        """max over support tuples of |h - E h - sum_J pi_|J| h(y_J)|."""
        terms = [self.tensor - self.mean]
        for j in range(1, self.m + 1):
            for J in itertools.combinations(range(self.m), j):
                terms.append(-self._placed(J))
        total = _fsum_last(np.stack(terms, axis=-1))
        return float(np.max(np.abs(total)))

    def support_index(self, sample):
        x = np.asarray(sample, dtype=np.float64)
        idx = np.searchsorted(self.values, x)
        idx = np.minimum(idx, self.s - 1)
        bad = self.values[idx] != x
        if np.any(bad):
            raise ValueNotInSupport(f"value {x[bad][0]!r} is not an atom of the law")
        return idx


def hoeffding_projection(kernel, P, j, points, cap=ENUMERATION_CAP):
    """(pi_j h)(points) = sum over I in [j] of (-1)^{j-|I|} E h(points_I, Y_rest)."""
    m = kernel.order
    if not 1 <= j <= m:
        raise InvalidArgument(f"projection order j={j} must lie in [1, {m}]")
    pts = [float(p) for p in points]
    if len(pts) != j:
        raise InvalidArgument(f"expected {j} points, got {len(pts)}")
    for p in pts:
        if P.index_of(p) < 0:
            raise ValueNotInSupport(f"value {p!r} is not an atom of the law")
    terms = []
    for r in range(j + 1):
        sign = -1.0 if (j - r) % 2 else 1.0
        for I in itertools.combinations(range(j), r):
            fixed = [pts[i] for i in I]
            e = discrete_expectation(P, lambda *ys: kernel(*fixed, *ys), m - r, cap=cap)
            terms.append(sign * e)
    return math.fsum(terms)


def hajek_statistic(sample, kernel, P):
    """S = (m/N) sum_i h1(X_i) with h1(y) = E h(y, Y_2..Y_m) - E h, exactly."""
    x = np.asarray(sample, dtype=np.float64)
    proj = Projector(kernel, P)
    idx = proj.support_index(x)
    h1 = proj.partial(1) - proj.mean
    return kernel.order / x.size * math.fsum(h1[idx])


# decomposition report --------------------------------------------------------------


@dataclass
class DecompositionReport:
    m: int
    N: int
    delta_sq: list
    var_h: float
    var_u: float
    var_s: float
    var_gap: float
    orthogonality_residual: float

    def to_json(self):
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))

    def a01_residual(self):
        """|Var h - sum_j C(m,j) delta_j^2|."""
        m = self.m
        total = math.fsum(math.comb(m, j) * d for j, d in enumerate(self.delta_sq, start=1))
        return abs(self.var_h - total)


def decomposition_report(kernel, P, N, projector=None):
    m = kernel.order
    if N < m:
        raise InvalidArgument(f"N={N} must be at least the kernel order {m}")
    proj = projector or Projector(kernel, P)
    delta = [proj.delta_sq(j) for j in range(1, m + 1)]
    coef = [math.comb(m, j) ** 2 / math.comb(N, j) for j in range(1, m + 1)]
    var_u = math.fsum(c * d for c, d in zip(coef, delta))
    var_s = m * m * delta[0] / N
    var_gap = math.fsum(c * d for c, d in zip(coef[1:], delta[1:]))
    return DecompositionReport(
        m=m, N=N, delta_sq=delta, var_h=proj.var_h(), var_u=var_u, var_s=var_s,
        var_gap=var_gap, orthogonality_residual=proj.orthogonality_residual(),
    )


def _compositions(total, parts):
    """All tuples of `parts` nonnegative ints summing to `total`."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _multiset_sum(counts, table, j):
    """sum over j-subsets J of a sample with atom counts `counts` of table[atoms(J)].

    `table` is a j-dim array over support indices; subsets are grouped by
    their atom multiset c, each occurring prod_a C(n_a, c_a) times.
    """
    s = len(counts)
    terms = []
    for c in _compositions(j, s):
        mult = math.prod(math.comb(n, k) for n, k in zip(counts, c))
        if mult == 0:
            continue
        idx = tuple(a for a in range(s) for _ in range(c[a]))
        terms.append(mult * table[idx])
    return math.fsum(terms)


def brute_force_u_variance(kernel, P, N, cap=ENUMERATION_CAP, projector=None):
    """Var(U_{N,m}) by exhaustive enumeration of P^N.

    Outcomes with the same atom counts give the same U, so the enumeration
    runs over count vectors with multinomial weights.
    """
    m = kernel.order
    proj = projector or Projector(kernel, P)
    s = len(P.atoms)
    n_classes = math.comb(N + s - 1, s - 1)
    if n_classes > cap:
        raise CapExceeded(f"type classes of {s} atoms over N={N}", n_classes, cap)
    w = P.probs
    H = proj.tensor
    total = math.comb(N, m)
    probs, us = [], []
    for counts in _compositions(N, s):
        coef = math.factorial(N)
        for c in counts:
            coef //= math.factorial(c)
        probs.append(coef * math.prod(float(p) ** c for p, c in zip(w, counts)))
        us.append(_multiset_sum(counts, H, m) / total)
    mean = math.fsum(p * u for p, u in zip(probs, us))
    return math.fsum(p * (u - mean) ** 2 for p, u in zip(probs, us))


def u_variance_identity(report, P, kernel, N=None):
    """|brute-force Var(U) - report.var_u| for the report's (kernel, P, N)."""
    N = report.N if N is None else N
    if N != report.N:
        raise InvalidArgument("N must match the report")
    return abs(brute_force_u_variance(kernel, P, N) - report.var_u)


def hoeffding_term(sample, kernel, P, j, projector=None):
    """C(m,j)/C(N,j) * sum over j-subsets J of (pi_j h)(X_J): the j-th term of U."""
    x = np.asarray(sample, dtype=np.float64)
    m, n = kernel.order, x.size
    if not 1 <= j <= m or j > n:
        raise InvalidArgument(f"j={j} must lie in [1, min(m, N)]")
    proj = projector or Projector(kernel, P)
    counts = np.bincount(proj.support_index(x), minlength=proj.s)
    total = _multiset_sum([int(c) for c in counts], proj.projection(j), j)
    return math.comb(m, j) / math.comb(n, j) * total


def realize_degenerate_component(sample, kernel, P, j, projector=None):
    """V_{N,j} = (C(m,j)/C(N,j))^{1/2} sum over j-subsets J of (pi_j h)(X_J)."""
    if j < 2:
        raise InvalidArgument("degenerate components start at j = 2")
    x = np.asarray(sample, dtype=np.float64)
    m, n = kernel.order, x.size
    term = hoeffding_term(x, kernel, P, j, projector)
    return term / math.sqrt(math.comb(m, j) / math.comb(n, j))
