"""Short-range (exponential correlation) optimal designs and cross-efficiencies.

With ``rho(t) = exp(-lam |t|)`` and noise share ``1 - gamma`` the
one-parameter criterion is

    Psi(p) = [int f^2 p + 2 gamma int f^2 Q(1/p) p] / (int f^2 p)^2,
    Q(t) = 1 / (exp(lam t) - 1),

and its minimiser has the same ``1/H^-(mu - tau/f^2)`` form as the long-range
design, with ``1/(2 gamma)`` added to ``mu``.
"""
from __future__ import annotations

from dataclasses import dataclass

from .corrkernels import LimitKernel
from .design_core import THROUGH_ORIGIN, BasisSet, DesignDensity, Grid, efficiency
from .errors import DomainError
from .oneparam import DEFAULT_MAX_ITER, DEFAULT_TOL, FixedPointSolution, solve_multipliers, solve_one_param


@dataclass(frozen=True)
class ShortRangeContext:
    lam: float
    gamma: float

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"lambda must be positive, got {self.lam}")
        if not 0.0 < self.gamma <= 1.0:
            raise DomainError(f"gamma must lie in (0, 1], got {self.gamma}")


def solve_shortrange(basis: BasisSet, ctx: ShortRangeContext, grid: Grid, tol=DEFAULT_TOL,
                     max_iter=DEFAULT_MAX_ITER, method="auto") -> FixedPointSolution:
    """Optimal one-parameter density under the exponential correlation."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    return solve_multipliers(basis, ctx, grid, tol, max_iter, method)


def cross_efficiency_lr_of_sr(design: DesignDensity, kernel: LimitKernel, basis: BasisSet = THROUGH_ORIGIN,
                              reference: DesignDensity | None = None) -> float:
    """Efficiency of a (short-range) design when the truth is long-range.

    ``reference`` is the long-range optimum; it is solved for when omitted.
    """
    if reference is None:
        reference = solve_one_param(basis, kernel, design.grid).density
    return efficiency(design, reference, basis, kernel)


def cross_efficiency_sr_of_lr(design: DesignDensity, ctx: ShortRangeContext, basis: BasisSet = THROUGH_ORIGIN,
                              reference: DesignDensity | None = None) -> float:
    """Efficiency of a (long-range) design when the truth is exponential."""
    if reference is None:
        reference = solve_shortrange(basis, ctx, design.grid).density
    return efficiency(design, reference, basis, ctx)
