"""Optimal densities for one-parameter models ``y = theta f(t) + eps``.

Under the long-range kernel the optimal density is

    p(t) = [ (1 - alpha) / (c (1 + alpha)) * (mu - tau / f(t)**2) ]_+ ** (1/alpha)

(``(mu - tau/f**2)_+ / (2c)`` at ``alpha = 1``), where ``mu`` and ``tau`` are
fixed by normalisation and by

    mu = 2 c / (1 - alpha) * int f^2 p^(1+alpha) / int f^2 p.

For ``f(t) = t`` the density vanishes on the hole ``|t| < sqrt(tau/mu)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._multipliers import MultiplierSystem, bracket_values, kernel_terms, multipliers_from_density
from .corrkernels import LimitKernel
from .design_core import BasisSet, DesignDensity, Grid
from .errors import ConvergenceError, DomainError

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200


@dataclass
class FixedPointSolution:
    mu: float
    tau: float
    density: DesignDensity = field(repr=False)
    residual_norm: float
    iterations: int
    support: list
    method: str = "broyden"
    converged: bool = True

    @property
    def edge(self) -> float:
        """``sqrt(tau/mu)``: the hole radius when ``f(t) = t``."""
        return float(np.sqrt(max(self.tau, 0.0) / self.mu))


def _squared_basis(basis: BasisSet, grid: Grid):
    if basis.p != 1:
        raise DomainError(f"one-parameter solver needs p = 1, got p = {basis.p}")
    f2 = basis.evaluate(grid.nodes)[0] ** 2
    if not np.any(f2 > 0):
        raise DomainError("regression function vanishes on the whole grid")
    return f2


def support_intervals(values, grid: Grid) -> list:
    """Maximal runs of nodes with positive density, as ``(t_lo, t_hi)`` pairs."""
    pos = np.asarray(values) > 0
    t = grid.nodes
    out = []
    start = None
    for i, flag in enumerate(pos):
        if flag and start is None:
            start = i
        if not flag and start is not None:
            out.append((float(t[start]), float(t[i - 1])))
            start = None
    if start is not None:
        out.append((float(t[start]), float(t[-1])))
    return out


def density_from_multipliers(basis: BasisSet, kernel, mu: float, tau: float, grid: Grid) -> np.ndarray:
    """Node values of the optimal-density formula at given multipliers.

    Not normalised unless ``(mu, tau)`` solve the multiplier equations.
    ``kernel`` may also be a short-range context (anything with ``lam`` and
    ``gamma``).
    """
    if not mu > 0:
        raise DomainError(f"mu must be positive, got {mu}")
    f2 = _squared_basis(basis, grid)
    return kernel_terms(kernel).density(bracket_values(f2, mu, tau))


def multipliers(density: DesignDensity, basis: BasisSet, kernel) -> tuple:
    """``(mu, tau)`` implied by a density through the multiplier equations."""
    f2 = _squared_basis(basis, density.grid)
    return multipliers_from_density(kernel_terms(kernel), density.grid, f2, density.values)


def optimality_check(density: DesignDensity, basis: BasisSet, kernel, mu=None, tau=None) -> float:
    """Largest pointwise violation of the first-order optimality condition.

    On the support ``|f^2 (H(1/p) - mu) + tau|`` must vanish; off the support
    ``f^2 (0 - mu) + tau`` must be nonnegative.  When ``mu`` and ``tau`` are
    omitted they are computed from the density itself.
    """
    terms = kernel_terms(kernel)
    f2 = _squared_basis(basis, density.grid)
    if mu is None or tau is None:
        mu_d, tau_d = multipliers_from_density(terms, density.grid, f2, density.values)
        mu = mu_d if mu is None else mu
        tau = tau_d if tau is None else tau
    p = density.values
    on = p > 0
    viol_on = np.abs(f2[on] * (terms.h_of_density(p[on]) - mu) + tau)
    viol_off = np.clip(mu * f2[~on] - tau, 0.0, None)
    return float(max(viol_on.max(initial=0.0), viol_off.max(initial=0.0)))


def solve_multipliers(basis: BasisSet, context, grid: Grid, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                      method="auto") -> FixedPointSolution:
    f2 = _squared_basis(basis, grid)
    system = MultiplierSystem(kernel_terms(context), grid, f2)
    res = system.solve(tol, max_iter, method=method)
    values = np.asarray(res.values, dtype=float)
    finite = np.all(np.isfinite(values)) and (grid.weights @ values) > 0
    density = DesignDensity.normalized(grid, values if finite else np.ones(grid.n))
    if res.converged:
        # already normalised to tol; avoid rescaling so the formula holds exactly
        if abs(grid.weights @ values - 1.0) <= 1e-8:
            density = DesignDensity(grid, values)
    sol = FixedPointSolution(
        mu=float(res.mu),
        tau=float(res.tau),
        density=density,
        residual_norm=float(res.residual),
        iterations=int(res.iterations),
        support=support_intervals(density.values, grid),
        method=res.method,
        converged=bool(res.converged),
    )
    if not res.converged:
        raise ConvergenceError(
            f"multiplier equations not solved: residual {res.residual:.3e} > tol {tol:.1e}", sol
        )
    return sol


def solve_one_param(basis: BasisSet, kernel: LimitKernel, grid: Grid, tol=DEFAULT_TOL,
                    max_iter=DEFAULT_MAX_ITER, method="auto") -> FixedPointSolution:
    """Optimal density for a one-parameter model under the long-range kernel.

    ``method`` is ``"auto"`` (Broyden, then bracketing on failure),
    ``"broyden"`` or ``"bracket"``.  Raises :class:`ConvergenceError` with the
    best iterate attached when the residuals stay above ``tol``.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    return solve_multipliers(basis, kernel, grid, tol, max_iter, method)
