"""Exact-identity suite for the Hoeffding machinery.

Runs every built-in kernel of order 2..4 against small finite laws and
checks the variance identities against exhaustive enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass

from .distributions import DiscreteFinite
from .ustat import (CenteredProductKernel, MeanKernel, ProductKernel, Projector,
                    ShiftedSignKernel, brute_force_u_variance, decomposition_report,
                    hajek_gap_bound)

TOL = 1e-10

LAWS = (
    DiscreteFinite(((-1.0, 0.3), (2.0, 0.7))),
    DiscreteFinite(((-1.0, 0.25), (0.0, 0.35), (2.0, 0.4))),
    DiscreteFinite(((-2.0, 0.1), (0.0, 0.4), (1.0, 0.3), (4.0, 0.2))),
)
ORDERS = (2, 3, 4)
SIZES = tuple(range(6, 13))


def kernels_for(P, m):
    return (
        MeanKernel(m),
        ProductKernel(m),
        ShiftedSignKernel(m, shift=P.mean),
        CenteredProductKernel(m, mu=P.mean),
    )


@dataclass
class Check:
    name: str
    value: float
    limit: float

    @property
    def passed(self):
        return self.value <= self.limit

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} <= {self.limit:.3e}"


def run_suite(laws=LAWS, orders=ORDERS, sizes=SIZES):
    """All checks, one `Check` per (identity, kernel, law, m[, N])."""
    checks = []
    for li, P in enumerate(laws):
        for m in orders:
            for kernel in kernels_for(P, m):
                proj = Projector(kernel, P)
                tag = f"{kernel.name} m={m} law{li}({len(P.atoms)} atoms)"
                checks.append(Check(f"reconstruction {tag}", proj.reconstruction_residual(), TOL))
                for N in sizes:
                    rep = decomposition_report(kernel, P, N, projector=proj)
                    if N == sizes[0]:
                        checks.append(Check(f"var_h identity {tag}", rep.a01_residual(), TOL))
                        checks.append(Check(f"orthogonality {tag}", rep.orthogonality_residual, TOL))
                    brute = brute_force_u_variance(kernel, P, N, projector=proj)
                    checks.append(Check(f"Var(U) vs enumeration {tag} N={N}",
                                        abs(brute - rep.var_u), TOL))
                    bound = hajek_gap_bound(rep.var_h, N, m)
                    # a negative gap beyond rounding would also be a failure
                    checks.append(Check(f"Var(U-S) <= gap bound {tag} N={N}",
                                        max(rep.var_gap - bound, -rep.var_gap), TOL))
    return checks
