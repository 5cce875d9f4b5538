"""Numerical optimisation of design densities on a grid.

Densities are moved on the probability simplex of grid masses
``m_k = w_k phi_k`` by multiplicative (exponentiated-gradient) steps

    phi_k <- phi_k * exp(-eta (g_k - sum_j m_j g_j) / crit)

with Armijo backtracking on the criterion, where ``g_k = d crit / d m_k``.
``g_k - sum_j m_j g_j`` is the directional derivative towards a point mass at
node ``k``, so ``max(0, -min_k(...)) / crit`` measures first-order
non-stationarity.

Gradients follow from ``Psi = W^-1 R W^-1`` with ``dW/dm_k = F_k F_k^T`` and
``dR/dm_k = h_k F_k F_k^T`` where ``h = H(1/phi)`` for the long-range kernel
and ``1 + 2 gamma H_lam(1/phi)`` for the short-range one.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from ._multipliers import kernel_terms
from .corrkernels import LimitKernel, h_shortrange
from .design_core import (
    THROUGH_ORIGIN,
    BasisSet,
    DesignDensity,
    Grid,
    criterion_eval,
    default_criterion,
    moment_matrices,
    psi_matrix,
)
from .errors import ConvergenceError, DomainError, SingularDesignError
from .oneparam import solve_one_param

log = logging.getLogger(__name__)


_ROUNDOFF = 4.0 * np.finfo(float).eps
_FLAT_STEPS = 50


@dataclass(frozen=True)
class OptimizerOptions:
    max_iter: int = 20000
    tol: float = 1e-7          # relative first-order violation
    ftol: float = 0.0          # stop when the relative decrease of one step falls below this
    armijo: float = 1e-4
    eta0: float = 1.0
    grow: float = 1.5
    max_backtracks: int = 60
    symmetric: bool = True
    restarts: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")
        if not self.tol > 0 or self.ftol < 0:
            raise DomainError("tolerances must be positive")
        if not (0 < self.armijo < 1 and self.eta0 > 0 and self.grow >= 1):
            raise DomainError("invalid step-rule parameters")
        if self.restarts < 0:
            raise DomainError("restarts must be nonnegative")


def _r_weight(context, phi):
    """Integrand weights of R and their derivative in phi (per unit mass)."""
    if isinstance(context, LimitKernel):
        terms = kernel_terms(context)
        return terms.r_coef * phi ** (1.0 + context.alpha), terms.h_of_density(phi)
    from .design_core import qphi_shortrange

    lam, gamma = context.lam, context.gamma
    hvals = np.zeros_like(phi)
    pos = phi > 0
    hvals[pos] = h_shortrange(lam, 1.0 / phi[pos])
    return phi + 2.0 * gamma * qphi_shortrange(lam, phi), 1.0 + 2.0 * gamma * hvals


def criterion_and_gradient(basis: BasisSet, kind: str, context, grid: Grid, values, F=None):
    """Criterion of the (possibly unnormalised) node values and ``d crit / d m_k``.

    ``m_k = w_k * values_k`` is the mass at node ``k``; a central finite
    difference in ``values_k`` divided by ``w_k`` reproduces the gradient.
    """
    phi = np.asarray(values, dtype=float)
    F = basis.evaluate(grid.nodes) if F is None else F
    w = grid.weights
    rw, hr = _r_weight(context, phi)
    W = (F * (w * phi)) @ F.T
    R = (F * (w * rw)) @ F.T
    W = 0.5 * (W + W.T)
    R = 0.5 * (R + R.T)
    Psi = psi_matrix(W, R)
    crit = criterion_eval(kind, Psi)
    if kind == "D":
        cw = linalg.cho_factor(W)
        qw = np.einsum("ik,ik->k", F, linalg.cho_solve(cw, F))
        try:
            cr = linalg.cho_factor(R)
        except linalg.LinAlgError as exc:
            raise SingularDesignError("R is not positive definite") from exc
        qr = np.einsum("ik,ik->k", F, linalg.cho_solve(cr, F))
        g = (hr * qr - 2.0 * qw) * crit / basis.p
    else:
        j = 0 if kind == "single" else 1
        e = np.zeros(basis.p)
        e[j] = 1.0
        a = linalg.solve(W, e, assume_a="pos")
        fa = a @ F
        fb = Psi[:, j] @ F
        g = -2.0 * fa * fb + hr * fa**2
    return crit, g


@dataclass
class OptimizationResult:
    density: DesignDensity = field(repr=False)
    value: float
    violation: float
    iterations: int
    converged: bool
    trace: list = field(repr=False, default_factory=list)
    restarts: list = field(default_factory=list)


def _symmetrize(v, grid):
    return 0.5 * (v + v[grid.mirror])


def _descend(objective, phi, grid, options, symmetric, trace=None, accept=None):
    """Generic multiplicative descent; ``objective(phi) -> (value, grad)``."""
    w = grid.weights

    def direction(phi, f, g):
        if symmetric:
            g = _symmetrize(g, grid)
        m = w * phi
        d = (g - m @ g) / abs(f)
        # first-order condition on the simplex: no node wants more mass (d >= 0) and
        # nodes that want less carry none (complementary slackness, relative to the peak)
        slack = float(np.max(phi * np.clip(d, 0.0, None))) / float(phi.max())
        return d, max(0.0, -float(d.min()), slack), float(m @ d**2)

    f, g = objective(phi)
    d, viol, slope = direction(phi, f, g)
    eta = options.eta0
    it = 0
    flat = 0
    for it in range(1, options.max_iter + 1):
        if trace is not None:
            trace.append((it - 1, f, viol))
        if viol <= options.tol:
            return phi, f, viol, it - 1, True
        for _ in range(options.max_backtracks):
            new = phi * np.exp(np.clip(-eta * d, -700.0, 700.0))
            new /= w @ new
            if symmetric:
                new = _symmetrize(new, grid)
            try:
                fn, gn = objective(new)
            except (SingularDesignError, linalg.LinAlgError):
                fn = np.inf
            if np.isfinite(fn):
                dn, vn, sn = direction(new, fn, gn)
                expected = options.armijo * eta * slope
                if expected > _ROUNDOFF:
                    ok = fn <= f - expected * abs(f)
                else:
                    # the decrease is below the rounding of f: require progress in the gradient
                    ok = fn <= f and vn < viol
                if ok and (accept is None or accept(new)):
                    break
            eta *= 0.5
        else:
            # no acceptable step: report stall
            return phi, f, viol, it, False
        decrease = (f - fn) / abs(f)
        flat = flat + 1 if decrease <= _ROUNDOFF and vn > 0.99 * viol else 0
        phi, f, d, viol, slope = new, fn, dn, vn, sn
        eta *= options.grow
        if flat >= _FLAT_STEPS:
            break
        if options.ftol and decrease < options.ftol:
            break
    return phi, f, viol, it, viol <= options.tol


def optimize_density(basis: BasisSet, kind: str | None, context, grid: Grid,
                     options: OptimizerOptions = OptimizerOptions(), start: DesignDensity | None = None,
                     raise_on_failure=False) -> OptimizationResult:
    """Minimise a design criterion over densities on ``grid``.

    Starts from the uniform density unless ``start`` is given.  With
    ``options.symmetric`` the iterates stay mirror-symmetric exactly.  Seeded
    random restarts run only as a diagnostic and never replace the output.
    """
    kind = kind or default_criterion(basis)
    F = basis.evaluate(grid.nodes)

    def objective(phi):
        return criterion_and_gradient(basis, kind, context, grid, phi, F)

    phi0 = (start or DesignDensity.uniform(grid)).values.copy()
    if options.symmetric:
        phi0 = _symmetrize(phi0, grid)
    if np.any(phi0 <= 0):
        raise DomainError("multiplicative updates need a strictly positive start")
    trace = []
    phi, f, viol, it, ok = _descend(objective, phi0, grid, options, options.symmetric, trace)
    density = DesignDensity.normalized(grid, phi)
    result = OptimizationResult(density, f, viol, it, ok, trace)

    rng = np.random.default_rng(options.seed)
    for r in range(options.restarts):
        start_r = phi0 * np.exp(rng.normal(0.0, 0.5, grid.n))
        if options.symmetric:
            start_r = _symmetrize(start_r, grid)
        start_r /= grid.weights @ start_r
        p_r, f_r, v_r, it_r, ok_r = _descend(objective, start_r, grid, options, options.symmetric)
        result.restarts.append({
            "restart": r, "value": f_r, "violation": v_r, "iterations": it_r, "converged": ok_r,
            "sup_diff": float(np.max(np.abs(p_r / (grid.weights @ p_r) - density.values))),
        })
    if not ok:
        log.warning("optimizer stopped after %d iterations with violation %.3e", it, viol)
        if raise_on_failure:
            raise ConvergenceError(f"stationarity violation {viol:.3e} > tol {options.tol:.1e}", result)
    return result


# --------------------------------------------------------------------------
# standardized maximin


@dataclass
class MaximinProblem:
    alphas: tuple
    basis: BasisSet
    kind: str
    references: dict = field(repr=False)      # alpha -> optimal criterion value
    densities: dict = field(repr=False)       # alpha -> optimal density
    c: float = 1.0

    @classmethod
    def build(cls, alphas, grid: Grid, basis: BasisSet = THROUGH_ORIGIN, kind: str | None = None,
              c: float = 1.0, options: OptimizerOptions = OptimizerOptions(), tol=1e-10):
        kind = kind or default_criterion(basis)
        alphas = tuple(sorted(float(a) for a in alphas))
        if not alphas:
            raise DomainError("alpha set is empty")
        if any(not 0.0 < a < 1.0 for a in alphas):
            raise DomainError("every alpha in the maximin set must lie in (0, 1)")
        refs, dens = {}, {}
        for a in alphas:
            kernel = LimitKernel(a, c)
            if basis.p == 1:
                d = solve_one_param(basis, kernel, grid, tol=tol).density
            else:
                d = optimize_density(basis, kind, kernel, grid, options).density
            dens[a] = d
            refs[a] = criterion_eval(kind, moment_matrices(basis, d, kernel).Psi)
        return cls(alphas, basis, kind, refs, dens, c)

    def kernels(self):
        return [LimitKernel(a, self.c) for a in self.alphas]


def efficiency_profile(problem: MaximinProblem, density) -> np.ndarray:
    """Efficiencies ``Psi_a(p*_a) / Psi_a(p)`` over the alpha set."""
    values = density.values if isinstance(density, DesignDensity) else np.asarray(density)
    grid = next(iter(problem.densities.values())).grid
    F = problem.basis.evaluate(grid.nodes)
    out = []
    for a, k in zip(problem.alphas, problem.kernels()):
        crit, _ = criterion_and_gradient(problem.basis, problem.kind, k, grid, values, F)
        out.append(problem.references[a] / crit)
    return np.array(out)


@dataclass
class MaximinResult:
    density: DesignDensity = field(repr=False)
    profile: np.ndarray
    min_efficiency: float
    active: tuple
    trace: list = field(repr=False, default_factory=list)
    converged: bool = True


TEMPERATURES = (10.0, 100.0, 1000.0)


def maximin_design(problem: MaximinProblem, grid: Grid, options: OptimizerOptions | None = None,
                   temperatures=TEMPERATURES, polish_iter=1000, active_tol=1e-3) -> MaximinResult:
    """Maximise the minimum efficiency over the alpha set.

    The minimum is replaced by a log-sum-exp soft minimum at increasing
    temperatures, followed by a polish at a much higher temperature.  The
    iterate with the best exact minimum efficiency is kept as the incumbent;
    every stage starts from it and the trace records its value, so the
    reported min-efficiency trace is non-decreasing.
    """
    options = options or OptimizerOptions(max_iter=3000, tol=1e-7, symmetric=True)
    F = problem.basis.evaluate(grid.nodes)
    kernels = problem.kernels()
    refs = np.array([problem.references[a] for a in problem.alphas])

    def profile_and_grads(phi):
        e = np.empty(len(kernels))
        G = np.empty((len(kernels), grid.n))
        for i, k in enumerate(kernels):
            v, gv = criterion_and_gradient(problem.basis, problem.kind, k, grid, phi, F)
            e[i] = refs[i] / v
            G[i] = -refs[i] / v**2 * gv
        return e, G

    last = {}

    def smoothed(temp):
        def objective(phi):
            e, G = profile_and_grads(phi)
            last["e"] = e
            lo = e.min()
            z = np.exp(-temp * (e - lo))
            soft = lo - np.log(z.sum()) / temp
            wts = z / z.sum()
            return -soft, -(wts @ G)
        return objective

    phi = DesignDensity.uniform(grid).values.copy()
    incumbent = {"phi": phi, "min": float(profile_and_grads(phi)[0].min())}
    trace = [(0, incumbent["min"])]

    def track(new):
        # the objective was just evaluated at ``new``; keep the best exact minimum seen
        m = float(last["e"].min())
        if m > incumbent["min"]:
            incumbent["phi"], incumbent["min"] = new, m
        trace.append((len(trace), incumbent["min"]))
        return True

    ok = True
    stages = [(t, options) for t in temperatures]
    stages.append((100.0 * max(temperatures), OptimizerOptions(
        max_iter=polish_iter, tol=options.tol, symmetric=options.symmetric)))
    for temp, opts in stages:
        # each stage starts from the incumbent, so a smoothed stage can never lose ground
        _, _, viol, it, ok = _descend(smoothed(temp), incumbent["phi"], grid, opts, opts.symmetric, accept=track)
        log.info("maximin stage T=%g: %d iterations, min efficiency %.6f", temp, it, incumbent["min"])
    phi = incumbent["phi"]
    density = DesignDensity.normalized(grid, phi)
    prof = efficiency_profile(problem, density)
    lo = float(prof.min())
    active = tuple(a for a, e in zip(problem.alphas, prof) if e <= lo + active_tol)
    return MaximinResult(density, prof, lo, active, trace, ok)
