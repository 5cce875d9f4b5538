"""Design densities on a grid and the asymptotic moment matrices.

For a density ``phi`` on ``[-T, T]`` and regression functions ``f``:

* ``W(phi)  = int f f^T phi``
* ``R(phi)  = r_coef * int f f^T phi**(1 + alpha)`` (long-range kernel)
* ``M(phi)  = int f f^T phi + 2 gamma int f f^T Q_lam(1/phi) phi``
  (short-range kernel, white-noise share included)
* ``Psi     = W^-1 R W^-1`` (or ``W^-1 M W^-1``)

Integrals use composite Simpson on the equally spaced grid nodes.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from scipy import linalg

from .corrkernels import LimitKernel, q_shortrange
from .errors import DomainError, SingularDesignError

COND_LIMIT = 1e12
NORMALIZATION_TOL = 1e-8

CRITERIA = ("D", "single", "slope")


class SingularDesignWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class Grid:
    """``n`` equally spaced nodes on ``[-T, T]``; ``n`` odd so 0 is a node."""

    T: float
    n: int = 2001

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError(f"half-width T must be positive, got {self.T}")
        if self.n < 3 or self.n % 2 == 0:
            raise DomainError(f"grid size must be odd and >= 3, got {self.n}")

    @cached_property
    def nodes(self) -> np.ndarray:
        t = np.linspace(-self.T, self.T, self.n)
        t[self.n // 2] = 0.0
        # exact mirror symmetry of the abscissae
        t[self.n // 2 + 1:] = -t[: self.n // 2][::-1]
        return t

    @property
    def h(self) -> float:
        return 2.0 * self.T / (self.n - 1)

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.ones(self.n)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * (self.h / 3.0)

    @cached_property
    def mirror(self) -> np.ndarray:
        """Index of the node at ``-t`` for every node."""
        return np.arange(self.n)[::-1]

    def refined(self) -> "Grid":
        return Grid(self.T, 2 * self.n - 1)


def quadrature(values, grid: Grid) -> float:
    """Composite Simpson integral of node values over ``[-T, T]``."""
    values = np.asarray(values, dtype=float)
    return float(grid.weights @ values)


@dataclass(frozen=True)
class DesignDensity:
    """A probability density on ``[-T, T]`` sampled at the grid nodes."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n,):
            raise DomainError(f"expected {self.grid.n} density values, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0.0):
            raise DomainError("density values must be finite and nonnegative")
        mass = quadrature(v, self.grid)
        if abs(mass - 1.0) > NORMALIZATION_TOL:
            raise DomainError(f"density integrates to {mass!r}, not 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def normalized(cls, grid: Grid, values) -> "DesignDensity":
        v = np.clip(np.asarray(values, dtype=float), 0.0, None)
        mass = quadrature(v, grid)
        if not mass > 0:
            raise DomainError("cannot normalise a density with zero mass")
        return cls(grid, v / mass)

    @classmethod
    def uniform(cls, grid: Grid) -> "DesignDensity":
        return cls(grid, np.full(grid.n, 1.0 / (2.0 * grid.T)))

    @classmethod
    def from_function(cls, grid: Grid, func: Callable) -> "DesignDensity":
        return cls.normalized(grid, func(grid.nodes))

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def is_symmetric(self, atol=1e-12) -> bool:
        return bool(np.allclose(self.values, self.values[self.grid.mirror], rtol=0, atol=atol))


@dataclass(frozen=True)
class BasisSet:
    """Regression functions ``f_1..f_p`` with parity flags (+1 even, -1 odd, 0 none)."""

    name: str
    functions: tuple
    parity: tuple

    @property
    def p(self) -> int:
        return len(self.functions)

    def evaluate(self, t) -> np.ndarray:
        """Matrix of shape ``(p, len(t))``."""
        t = np.asarray(t, dtype=float)
        return np.vstack([np.broadcast_to(np.asarray(f(t), dtype=float), t.shape) for f in self.functions])


def _one(t):
    return np.ones_like(t)


def _ident(t):
    return t


LOCATION = BasisSet("location", (_one,), (1,))
THROUGH_ORIGIN = BasisSet("through_origin", (_ident,), (-1,))
LINEAR = BasisSet("linear", (_one, _ident), (1, -1))
BASES = {b.name: b for b in (LOCATION, THROUGH_ORIGIN, LINEAR)}


def basis_by_name(name: str) -> BasisSet:
    try:
        return BASES[name]
    except KeyError:
        raise DomainError(f"unknown basis {name!r}; choose from {sorted(BASES)}") from None


@dataclass(frozen=True)
class MomentMatrices:
    W: np.ndarray
    R: np.ndarray
    Psi: np.ndarray


def _weighted_gram(F, weights):
    return (F * weights) @ F.T


def w_matrix(basis: BasisSet, phi: DesignDensity) -> np.ndarray:
    """``W_ij = int f_i f_j phi``.  Warns when W is numerically singular."""
    F = basis.evaluate(phi.nodes)
    W = _weighted_gram(F, phi.grid.weights * phi.values)
    W = 0.5 * (W + W.T)
    if np.linalg.cond(W) > COND_LIMIT:
        warnings.warn("information matrix W is numerically singular", SingularDesignWarning, stacklevel=2)
    return W


def r_matrix_longrange(basis: BasisSet, phi: DesignDensity, kernel: LimitKernel) -> np.ndarray:
    """``R_ij = r_coef * int f_i f_j phi**(1 + alpha)``."""
    F = basis.evaluate(phi.nodes)
    R = kernel.r_coef * _weighted_gram(F, phi.grid.weights * phi.values ** (1.0 + kernel.alpha))
    return 0.5 * (R + R.T)


def qphi_shortrange(lam: float, phi_values) -> np.ndarray:
    """``Q_lam(1/phi) * phi`` with the limit 0 where ``phi = 0``."""
    v = np.asarray(phi_values, dtype=float)
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = q_shortrange(lam, 1.0 / v[pos]) * v[pos]
    return out


def r_matrix_shortrange(basis: BasisSet, phi: DesignDensity, lam: float, gamma: float) -> np.ndarray:
    """``M_ij = int f_i f_j phi + 2 gamma int f_i f_j Q_lam(1/phi) phi``."""
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    F = basis.evaluate(phi.nodes)
    w = phi.grid.weights
    M = _weighted_gram(F, w * (phi.values + 2.0 * gamma * qphi_shortrange(lam, phi.values)))
    return 0.5 * (M + M.T)


def psi_matrix(W, R) -> np.ndarray:
    """``W^-1 R W^-1`` through a Cholesky factorisation of ``W``."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if np.linalg.cond(W) > COND_LIMIT:
        raise SingularDesignError("information matrix W is numerically singular")
    try:
        cf = linalg.cho_factor(W)
    except linalg.LinAlgError as exc:
        raise SingularDesignError("information matrix W is not positive definite") from exc
    X = linalg.cho_solve(cf, R)
    Psi = linalg.cho_solve(cf, X.T)
    return 0.5 * (Psi + Psi.T)


def criterion_eval(kind: str, Psi) -> float:
    """Scalar criterion: ``D`` = det(Psi)**(1/p), ``single`` = Psi_11, ``slope`` = Psi_22."""
    Psi = np.atleast_2d(Psi)
    p = Psi.shape[0]
    if kind == "D":
        sign, logdet = np.linalg.slogdet(Psi)
        if sign <= 0:
            return 0.0
        return float(np.exp(logdet / p))
    if kind == "single":
        if p != 1:
            raise DomainError("the single-parameter criterion needs p = 1")
        return float(Psi[0, 0])
    if kind == "slope":
        if p != 2:
            raise DomainError("the slope criterion needs the two-parameter linear basis")
        return float(Psi[1, 1])
    raise DomainError(f"unknown criterion {kind!r}; choose from {CRITERIA}")


def moment_matrices(basis: BasisSet, phi: DesignDensity, context) -> MomentMatrices:
    """W, R and Psi for a long-range ``LimitKernel`` or a short-range context.

    A short-range context is any object with ``lam`` and ``gamma``.
    """
    W = w_matrix(basis, phi)
    if isinstance(context, LimitKernel):
        R = r_matrix_longrange(basis, phi, context)
    else:
        R = r_matrix_shortrange(basis, phi, context.lam, context.gamma)
    return MomentMatrices(W, R, psi_matrix(W, R))


def criterion_value(basis: BasisSet, phi: DesignDensity, kind: str, context) -> float:
    return criterion_eval(kind, moment_matrices(basis, phi, context).Psi)


def default_criterion(basis: BasisSet) -> str:
    return "single" if basis.p == 1 else "D"


def efficiency(p: DesignDensity, p_opt: DesignDensity, basis: BasisSet, context, kind: str | None = None) -> float:
    """``criterion(p_opt) / criterion(p)``; at most 1 when ``p_opt`` is optimal."""
    kind = kind or default_criterion(basis)
    num = criterion_value(basis, p_opt, kind, context)
    den = criterion_value(basis, p, kind, context)
    if not den > 0 or not np.isfinite(den):
        raise ZeroDivisionError(f"degenerate criterion value {den!r} for the candidate design")
    return num / den


# --------------------------------------------------------------------------
# density CSV: header ``t,phi``, increasing t, 17 significant digits


def format_float(x) -> str:
    return format(float(x), ".17g")


def write_density_csv(path, density: DesignDensity) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "phi"])
        for t, v in zip(density.nodes, density.values):
            writer.writerow([format_float(t), format_float(v)])


def read_density_csv(path) -> DesignDensity:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["t", "phi"]:
        raise DomainError(f"{path}: expected header 't,phi'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    t, phi = data[:, 0], data[:, 1]
    if np.any(np.diff(t) <= 0):
        raise DomainError(f"{path}: nodes must be strictly increasing")
    grid = Grid(float(t[-1]), len(t))
    if not np.allclose(t, grid.nodes, rtol=0, atol=1e-12 * grid.T):
        raise DomainError(f"{path}: nodes are not an equally spaced symmetric grid")
    return DesignDensity(grid, phi)

