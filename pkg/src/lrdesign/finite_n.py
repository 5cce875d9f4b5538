"""Exact finite-N least-squares covariance for designs generated by a density.

Observations ``y_j = theta^T f(t_j) + eps_j`` at ``t_j = a((j-1)/(N-1))``,
``a`` the quantile function of the design density, with

    Cov(eps_i, eps_j) = gamma * rho(N (t_i - t_j)) + (1 - gamma) * delta_ij.

The ordinary least-squares covariance ``(X^T X)^-1 X^T Sigma X (X^T X)^-1`` is
computed exactly (sigma^2 = 1).  Scaled by ``N / d_alpha(N)`` it is compared
with the asymptotic prediction ``2 gamma W^-1 R W^-1``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.integrate import cumulative_trapezoid

from .corrkernels import MITTAG_LEFFLER, CorrelationModel, d_norm, limit_kernel, rho_eval
from .design_core import BasisSet, DesignDensity, format_float, moment_matrices
from .errors import DomainError, SingularDesignError

N_CAP = 5000
_BLOCK = 1024


@dataclass(frozen=True)
class FiniteDesign:
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise DomainError("a finite design needs at least two points")
        if np.any(np.diff(pts) < 0):
            raise DomainError("design points must be non-decreasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def N(self) -> int:
        return self.points.size


def design_points_from_density(phi: DesignDensity, N: int) -> FiniteDesign:
    """``t_i = a((i-1)/(N-1))`` with ``a`` the quantile function of ``phi``.

    The CDF is the cumulative trapezoid integral of the node values (monotone
    by construction), inverted by linear interpolation.  A flat stretch of the
    CDF (a hole in the support) maps its level to the left end of the stretch.
    """
    if N < 2:
        raise DomainError(f"N must be at least 2, got {N}")
    t = phi.nodes
    cdf = cumulative_trapezoid(phi.values, t, initial=0.0)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    u = np.arange(N) / (N - 1)
    idx = np.searchsorted(cdf, u, side="left")
    out = np.empty(N)
    first = idx == 0
    out[first] = t[0]
    k = idx[~first]
    lo, hi = cdf[k - 1], cdf[k]
    frac = (u[~first] - lo) / (hi - lo)
    out[~first] = t[k - 1] + frac * (t[k] - t[k - 1])
    np.clip(out, t[0], t[-1], out=out)
    return FiniteDesign(np.maximum.accumulate(out))


def _quantize(x):
    # 40-bit mantissa (relative 5e-13): far below the rounding noise already in N (t_i - t_j)
    m, e = np.frexp(x)
    return np.ldexp(np.round(m * 2.0**40) / 2.0**40, e)


def _rho_blocks(model, t):
    """Yield ``(rows, rho(N (t_rows - t)))`` with the unit diagonal imposed."""
    N = t.size
    blocks = [slice(s, min(s + _BLOCK, N)) for s in range(0, N, _BLOCK)]

    def lags(rows):
        return np.abs(N * (t[rows, None] - t[None, :]))

    if model.family == MITTAG_LEFFLER:
        # each Mittag-Leffler value is expensive: evaluate every distinct lag once
        keys = np.unique(np.concatenate([np.unique(_quantize(lags(b))) for b in blocks]))
        table = np.asarray(rho_eval(model, keys), dtype=float)
        evaluate = lambda rows: table[np.searchsorted(keys, _quantize(lags(rows)))]
    else:
        evaluate = lambda rows: np.asarray(rho_eval(model, lags(rows)), dtype=float)
    for rows in blocks:
        rho = evaluate(rows)
        ii = np.arange(rows.start, rows.stop)
        rho[ii - rows.start, ii] = 1.0
        yield rows, rho


def _check_gamma(gamma):
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")


def exact_lse_covariance(basis: BasisSet, design: FiniteDesign, model: CorrelationModel, gamma: float,
                         scaled: bool = False, cap: int = N_CAP) -> np.ndarray:
    """Exact OLS covariance; multiplied by ``N / d_alpha(N)`` when ``scaled``."""
    _check_gamma(gamma)
    N = design.N
    if N > cap:
        raise DomainError(f"N = {N} exceeds the dense-algebra cap {cap}")
    t = design.points
    X = basis.evaluate(t).T
    try:
        cf = linalg.cho_factor(X.T @ X)
    except linalg.LinAlgError as exc:
        raise SingularDesignError("X^T X is singular for this design") from exc
    B = linalg.cho_solve(cf, X.T).T          # X (X^T X)^-1, shape (N, p)
    SB = (1.0 - gamma) * B
    if gamma > 0:
        # unit diagonal regardless of the family formula
        for rows, rho in _rho_blocks(model, t):
            SB[rows] += gamma * (rho @ B)
    cov = B.T @ SB
    cov = 0.5 * (cov + cov.T)
    if scaled:
        cov *= N / d_norm(model, N)
    return cov


@dataclass
class ConvergenceReport:
    N: tuple
    d_alpha: tuple
    errors: tuple
    slope: float
    prediction: np.ndarray = field(repr=False)
    scaled: list = field(repr=False, default_factory=list)
    degenerate: bool = False      # gamma = 0: errors are absolute, prediction is 0

    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.errors) < 0))

    def halved(self) -> bool:
        return bool(self.errors[-1] <= 0.5 * self.errors[0])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["N", "d_alpha", "abs_error" if self.degenerate else "rel_error"])
            for n, d, e in zip(self.N, self.d_alpha, self.errors):
                w.writerow([n, format_float(d), format_float(e)])
            w.writerow(["slope", "", format_float(self.slope)])


def convergence_report(basis: BasisSet, phi: DesignDensity, model: CorrelationModel, gamma: float,
                       N_list, cap: int = N_CAP) -> ConvergenceReport:
    """Frobenius error of the scaled exact covariance against ``2 gamma Psi``."""
    _check_gamma(gamma)
    if not model.is_long_range:
        raise DomainError("the finite-N check needs a long-range model")
    Ns = tuple(int(n) for n in N_list)
    if len(Ns) < 2 or any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise DomainError("N values must be strictly increasing (at least two)")
    if Ns[-1] > cap:
        raise DomainError(f"N = {Ns[-1]} exceeds the dense-algebra cap {cap}")
    kernel = limit_kernel(model)
    pred = 2.0 * gamma * moment_matrices(basis, phi, kernel).Psi
    degenerate = gamma == 0.0
    scale = 1.0 if degenerate else np.linalg.norm(pred)
    errs, ds, mats = [], [], []
    for n in Ns:
        design = design_points_from_density(phi, n)
        S = exact_lse_covariance(basis, design, model, gamma, scaled=True, cap=cap)
        mats.append(S)
        ds.append(d_norm(model, n))
        errs.append(float(np.linalg.norm(S - pred) / scale))
    e = np.array(errs)
    if np.all(e > 0):
        slope = float(np.polyfit(np.log(1.0 / np.array(ds)), np.log(e), 1)[0])
    else:
        slope = float("nan")
    return ConvergenceReport(Ns, tuple(ds), tuple(errs), slope, pred, mats, degenerate)
