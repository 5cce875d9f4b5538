"""Root-finding for the multipliers (mu, tau) of one-parameter optimal densities.

The optimal density has the form ``p(t) = 1/H^-(mu - tau/f(t)**2)`` where the
argument is positive and 0 elsewhere.  ``(mu, tau)`` solve

    r1 = int p - 1 = 0
    r2 = mu - mu_target(p) = 0

with ``mu_target`` the kernel-specific right-hand side.  The primary method is
a damped Broyden iteration from the uniform-density guess; a nested
bracketing solve in ``s = tau/mu`` is the fallback.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .corrkernels import LimitKernel, h_shortrange, h_shortrange_inv, q_shortrange, q_shortrange_deriv
from .design_core import Grid


class LongRangeTerms:
    """Kernel-dependent pieces for ``Q(t) = r_coef / t**alpha``."""

    def __init__(self, kernel: LimitKernel):
        self.kernel = kernel
        self.alpha = kernel.alpha
        self.c = kernel.c
        self.r_coef = kernel.r_coef

    def density(self, y):
        """``1/H^-(y)`` for ``y > 0``; 0 elsewhere."""
        y = np.where(y > 0, y, 0.0)
        if self.alpha == 1.0:
            return y / (2.0 * self.c)
        with np.errstate(over="ignore"):
            return (y * (1.0 - self.alpha) / (self.c * (1.0 + self.alpha))) ** (1.0 / self.alpha)

    def h_of_density(self, p):
        """``H(1/p)`` (finite for every ``p >= 0``)."""
        a = self.alpha
        if a == 1.0:
            return 2.0 * self.c * p
        return self.c * (1.0 + a) / (1.0 - a) * p**a

    def qp(self, p):
        """``Q(1/p) p``."""
        return self.r_coef * p ** (1.0 + self.alpha)

    def qprime(self, p):
        """``Q'(1/p)``."""
        return -self.alpha * self.r_coef * p ** (1.0 + self.alpha)

    mu_offset = 0.0

    def tau_offset(self, int_f2p):
        return 0.0

    def density_log(self, ell):
        """Density at ``y = exp(ell)``."""
        return float(self.density(np.array([np.exp(ell)]))[0])


class ShortRangeTerms:
    """Kernel pieces for ``Q(t) = 1/(exp(lam t) - 1)`` with noise share ``gamma``."""

    def __init__(self, lam: float, gamma: float):
        self.lam = lam
        self.gamma = gamma
        self.mu_offset = 1.0 / (2.0 * gamma)

    def density(self, y):
        out = np.zeros_like(y, dtype=float)
        pos = (y > 0) & np.isfinite(y)
        out[pos] = 1.0 / h_shortrange_inv(self.lam, y[pos])
        out[np.isposinf(y)] = np.inf
        return out

    def _apply(self, func, p):
        out = np.zeros_like(p, dtype=float)
        pos = p > 0
        out[pos] = func(p[pos])
        return out

    def h_of_density(self, p):
        return self._apply(lambda v: h_shortrange(self.lam, 1.0 / v), p)

    def qp(self, p):
        return self._apply(lambda v: q_shortrange(self.lam, 1.0 / v) * v, p)

    def qprime(self, p):
        return self._apply(lambda v: q_shortrange_deriv(self.lam, 1.0 / v), p)

    def tau_offset(self, int_f2p):
        return int_f2p / (2.0 * self.gamma)

    def density_log(self, ell):
        """Density at ``y = exp(ell)``, solved in log space.

        ``1/H^-(y) ~ lam / log(1/y)`` vanishes only logarithmically, so near the
        edge of the support it is far from 0 even where ``y`` underflows.
        """
        if ell == -np.inf:
            return 0.0

        def log_h(x):
            d = -np.expm1(-x)
            return -x + np.log(1.0 / d + x / (d * d)) - ell

        x = brentq(log_h, 1e-8, 2.0 * abs(ell) + 50.0, xtol=1e-300, rtol=1e-15)
        return self.lam / x


def kernel_terms(context):
    if isinstance(context, LimitKernel):
        return LongRangeTerms(context)
    return ShortRangeTerms(context.lam, context.gamma)


def bracket_values(f2, mu, tau):
    """``mu - tau/f**2`` with the limits at ``f = 0``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        y = mu - tau / f2
    zero = f2 == 0.0
    if tau > 0:
        y[zero] = -np.inf
    elif tau < 0:
        y[zero] = np.inf
    else:
        y[zero] = mu
    return y


def multipliers_from_density(terms, grid: Grid, f2, p):
    """``(mu, tau)`` implied by a normalised density through the multiplier equations."""
    w = grid.weights
    int_f2p = w @ (f2 * p)
    int_f2qp = w @ (f2 * terms.qp(p))
    mu = terms.mu_offset + 2.0 * int_f2qp / int_f2p
    tau = terms.tau_offset(int_f2p) + int_f2qp + w @ (f2 * terms.qprime(p))
    return float(mu), float(tau)


@dataclass
class RootResult:
    mu: float
    tau: float
    values: np.ndarray
    residual: float
    iterations: int
    method: str
    converged: bool


class MultiplierSystem:
    def __init__(self, terms, grid: Grid, f2):
        self.terms = terms
        self.grid = grid
        self.f2 = np.asarray(f2, dtype=float)

    def density(self, mu, tau):
        return self.terms.density(bracket_values(self.f2, mu, tau))

    def residuals(self, x):
        mu, tau = x
        return self.residuals_of(mu, self.density(mu, tau))

    def residuals_of(self, mu, p):
        w = self.grid.weights
        mass = w @ p
        if not np.isfinite(mass) or not mu > 0:
            return np.array([np.inf, np.inf]), p
        int_f2p = w @ (self.f2 * p)
        if not int_f2p > 0:
            return np.array([mass - 1.0, np.inf]), p
        target = self.terms.mu_offset + 2.0 * (w @ (self.f2 * self.terms.qp(p))) / int_f2p
        return np.array([mass - 1.0, mu - target]), p

    def initial_guess(self):
        p = np.where(self.f2 > 0, 1.0, 0.0)
        p = p / (self.grid.weights @ p)
        return np.array(multipliers_from_density(self.terms, self.grid, self.f2, p))

    # ------------------------------------------------------------------

    def _fd_jacobian(self, x, r):
        J = np.empty((2, 2))
        for j in range(2):
            step = 1e-7 * max(abs(x[j]), 1e-3 * abs(x[0]), 1e-8)
            xp = x.copy()
            xp[j] += step
            rp, _ = self.residuals(xp)
            if not np.all(np.isfinite(rp)):
                xp[j] = x[j] - step
                rp, _ = self.residuals(xp)
                step = -step
            J[:, j] = (rp - r) / step
        return J

    def broyden(self, tol, max_iter, x0=None) -> RootResult:
        x = self.initial_guess() if x0 is None else np.asarray(x0, dtype=float)
        r, p = self.residuals(x)
        best = (np.max(np.abs(r)), x.copy(), p)
        if not np.all(np.isfinite(r)):
            return RootResult(x[0], x[1], p, np.inf, 0, "broyden", False)
        J = self._fd_jacobian(x, r)
        fresh = True
        it = 0
        for it in range(1, max_iter + 1):
            if np.max(np.abs(r)) <= tol:
                return RootResult(x[0], x[1], p, float(np.max(np.abs(r))), it - 1, "broyden", True)
            try:
                dx = np.linalg.solve(J, -r)
            except np.linalg.LinAlgError:
                dx = None
            accepted = False
            if dx is not None and np.all(np.isfinite(dx)):
                lam = 1.0
                norm = np.linalg.norm(r)
                for _ in range(40):
                    xn = x + lam * dx
                    rn, pn = self.residuals(xn)
                    if np.all(np.isfinite(rn)) and xn[0] > 0 and np.linalg.norm(rn) < (1.0 - 1e-4 * lam) * norm:
                        accepted = True
                        break
                    lam *= 0.5
            if not accepted:
                if fresh:
                    break
                J = self._fd_jacobian(x, r)
                fresh = True
                continue
            step = xn - x
            J = J + np.outer(rn - r - J @ step, step) / (step @ step)
            fresh = False
            x, r, p = xn, rn, pn
            if np.max(np.abs(r)) < best[0]:
                best = (np.max(np.abs(r)), x.copy(), p)
        res, x, p = best
        return RootResult(x[0], x[1], p, float(res), it, "broyden", res <= tol)

    def bracketed(self, tol) -> RootResult:
        """Nested bracketing in ``s = tau/mu``: normalise for ``mu``, then match ``mu``."""
        f2max = float(self.f2.max())
        w = self.grid.weights
        counter = [0]

        def mu_for(s):
            def mass(logmu):
                counter[0] += 1
                m = w @ self.density(np.exp(logmu), s * np.exp(logmu))
                return (m if np.isfinite(m) else 1e300) - 1.0

            lo, hi = -1.0, 1.0
            while mass(lo) > 0:
                lo -= 2.0
            while mass(hi) < 0:
                hi += 2.0
            return float(np.exp(brentq(mass, lo, hi, xtol=1e-15, rtol=1e-15)))

        def g(s):
            mu = mu_for(s)
            r, _ = self.residuals(np.array([mu, s * mu]))
            return r[1]

        s_lo = 0.0
        g_lo = g(s_lo)
        if g_lo > 0:
            if self.f2.min() <= 0:
                raise ValueError("cannot bracket tau/mu below zero when f vanishes on the grid")
            s_lo = -f2max
            while g(s_lo) > 0:
                s_lo *= 2.0
        s_hi = None
        for k in range(1, 60):
            cand = f2max * (1.0 - 2.0**-k)
            if g(cand) > 0:
                s_hi = cand
                break
        if g_lo == 0.0:
            s = 0.0
        else:
            if s_hi is None:
                raise ValueError("could not bracket the multiplier ratio tau/mu")
            s = brentq(g, s_lo, s_hi, xtol=1e-15, rtol=1e-15, maxiter=200)
        mu = mu_for(s)
        r, p = self.residuals(np.array([mu, s * mu]))
        res = float(np.max(np.abs(r)))
        if res > tol:
            edge = self._edge_refine(s, mu, tol, counter)
            if edge is not None and edge.residual < res:
                return edge
        # one Broyden polish from the bracketed point tightens r1 and r2 jointly
        if res > tol:
            polished = self.broyden(tol, 50, x0=[mu, s * mu])
            if polished.residual < res:
                polished.method = "bracket"
                return polished
        return RootResult(mu, s * mu, p, res, counter[0], "bracket", res <= tol)

    def _edge_refine(self, s, mu, tol, counter):
        """Resolve a root that sits where a node enters the support.

        At ``s = f_k^2`` the node's density jumps in floating point, because
        ``y = mu - tau/f_k^2`` cannot be resolved below ~1e-16 mu while the
        density may still be far from 0 there.  The entering node(s) then get
        their own variable ``ell = log y`` and the root is bracketed in ``ell``.
        """
        f2 = self.f2
        inside = np.flatnonzero(f2 > 0)
        k = inside[np.argmin(np.abs(f2[inside] - s))]
        fk = f2[k]
        if abs(fk - s) > 1e-12 * fk:
            return None
        K = np.flatnonzero(f2 == fk)
        w = self.grid.weights

        def values(mu, ell):
            p = self.density(mu, fk * mu)
            p[K] = self.terms.density_log(ell)
            return p

        def mu_for(ell):
            def mass(logmu):
                counter[0] += 1
                m = w @ values(np.exp(logmu), ell)
                return (m if np.isfinite(m) else 1e300) - 1.0

            lo, hi = np.log(mu) - 1.0, np.log(mu) + 1.0
            while mass(lo) > 0:
                lo -= 2.0
            while mass(hi) < 0:
                hi += 2.0
            return float(np.exp(brentq(mass, lo, hi, xtol=1e-15, rtol=1e-15)))

        def g(ell):
            m = mu_for(ell)
            return self.residuals_of(m, values(m, ell))[0][1]

        # from y = 1e-10 mu (just inside) down to a density of ~1e-12 (just outside)
        ell_hi = np.log(mu) - 23.0
        ell_lo = -1e12
        g_hi, g_lo = g(ell_hi), g(ell_lo)
        if not np.sign(g_hi) * np.sign(g_lo) < 0:
            return None
        ell = brentq(g, ell_lo, ell_hi, xtol=1e-12, rtol=1e-15, maxiter=200)
        m = mu_for(ell)
        p = values(m, ell)
        r, _ = self.residuals_of(m, p)
        res = float(np.max(np.abs(r)))
        tau = fk * (m - np.exp(ell))
        return RootResult(m, tau, p, res, counter[0], "bracket", res <= tol)

    def solve(self, tol, max_iter, method="auto") -> RootResult:
        if method in ("auto", "broyden"):
            res = self.broyden(tol, max_iter)
            if res.converged or method == "broyden":
                return res
        return self.bracketed(tol)
