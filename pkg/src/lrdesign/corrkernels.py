"""Correlation families, the Mittag-Leffler function and limit kernels.

Long-range families (Cauchy, Mittag-Leffler, slowly varying) share the
limit kernel ``Q(t) = c / ((1 - alpha) |t|**alpha)`` (``c / |t|`` at
``alpha = 1``).  The short-range exponential family uses the kernel
``Q(t) = sum_j exp(-lam * j * t) = 1 / (exp(lam * t) - 1)``.

Every function here is pure; array arguments are evaluated elementwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import mpmath
import numpy as np
from scipy.special import gammaln, gammasgn

from .errors import AccuracyError, DomainError

CAUCHY = "cauchy"
MITTAG_LEFFLER = "mittag_leffler"
SVF = "svf"
EXPONENTIAL = "exponential"
FAMILIES = (CAUCHY, MITTAG_LEFFLER, SVF, EXPONENTIAL)
LONG_RANGE = (CAUCHY, MITTAG_LEFFLER, SVF)

# series truncation policy
_SERIES_RTOL = 1e-16
_MAX_TERMS = 1_000_000
# accept a double-precision regime only if its error estimate is below this
_ACCEPT_RTOL = 1e-13
_MAX_DPS = 4000


@dataclass(frozen=True)
class CorrelationModel:
    """Error correlation family and its parameters.

    ``svf`` is the slowly varying factor ``L`` of the SVF family, a callable
    taking and returning arrays; ``None`` means ``L = 1``.  It multiplies the
    correlation ``|t|**-alpha`` and the normaliser ``d_alpha(N)`` and is
    evaluated at the same (unscaled) argument in both places.
    """

    family: str
    alpha: float = 1.0
    beta: float = 1.0
    nu: float = 1.0
    lam: float = 1.0
    svf: Optional[Callable] = None

    def __post_init__(self):
        fam = self.family
        if fam not in FAMILIES:
            raise DomainError(f"unknown correlation family {fam!r}")
        if fam in LONG_RANGE and not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if fam == CAUCHY and not self.beta > 0.0:
            raise DomainError(f"Cauchy beta must be positive, got {self.beta}")
        if fam == MITTAG_LEFFLER:
            if not 0.0 < self.nu <= 1.0:
                raise DomainError(f"nu must lie in (0, 1], got {self.nu}")
            if not self.beta >= self.nu:
                raise DomainError(f"beta must be >= nu, got beta={self.beta}, nu={self.nu}")
        if fam == EXPONENTIAL and not self.lam > 0.0:
            raise DomainError(f"lambda must be positive, got {self.lam}")

    @classmethod
    def cauchy(cls, alpha, beta=1.0):
        return cls(CAUCHY, alpha=alpha, beta=beta)

    @classmethod
    def mittag_leffler(cls, alpha, nu, beta=1.0):
        return cls(MITTAG_LEFFLER, alpha=alpha, nu=nu, beta=beta)

    @classmethod
    def slowly_varying(cls, alpha, L=None):
        return cls(SVF, alpha=alpha, svf=L)

    @classmethod
    def exponential(cls, lam):
        return cls(EXPONENTIAL, lam=lam)

    @property
    def is_long_range(self) -> bool:
        if self.family == MITTAG_LEFFLER:
            return (self.nu, self.beta) != (1.0, 1.0)
        return self.family in LONG_RANGE


@dataclass(frozen=True)
class LimitKernel:
    """The long-range limit kernel ``Q_alpha`` with family constant ``c``."""

    alpha: float
    c: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not (self.c > 0.0 and math.isfinite(self.c)):
            raise DomainError(f"kernel constant c must be positive, got {self.c}")

    @property
    def r_coef(self) -> float:
        """Coefficient of ``int f_i f_j phi**(1 + alpha)`` in the R matrix."""
        if self.alpha == 1.0:
            return self.c
        return self.c / (1.0 - self.alpha)

    def scaled(self, k) -> "LimitKernel":
        return LimitKernel(self.alpha, self.c * k)


def limit_kernel(model: CorrelationModel) -> LimitKernel:
    """Return the limit kernel of a long-range model."""
    if not model.is_long_range:
        raise DomainError(f"{model.family} model with these parameters is not long-range")
    c = 1.0
    if model.family == MITTAG_LEFFLER:
        # Gamma(0) is infinite, so beta == nu gives c = 0 and is rejected
        c = math.exp(gammaln(model.beta) - gammaln(model.beta - model.nu))
    return LimitKernel(model.alpha, c)


# --------------------------------------------------------------------------
# Mittag-Leffler function


def _check_ml_args(nu, beta):
    if not 0.0 < nu <= 1.0:
        raise DomainError(f"nu must lie in (0, 1], got {nu}")
    if not beta >= nu:
        raise DomainError(f"beta must be >= nu, got beta={beta}, nu={nu}")


def _series_log_terms(nu, beta, t):
    """Log-magnitudes of ``Gamma(beta) t**k / Gamma(nu k + beta)``, k = 0..K."""
    k_peak = t ** (1.0 / nu) / nu
    K = int(min(_MAX_TERMS, 2.0 * k_peak + 60))
    while True:
        k = np.arange(K + 1, dtype=float)
        logs = gammaln(beta) + k * math.log(t) - gammaln(nu * k + beta)
        top = logs.max()
        if logs[-1] < top + math.log(_SERIES_RTOL) - 5.0 or K >= _MAX_TERMS:
            return logs
        K = min(_MAX_TERMS, 2 * K)


def _ml_series_double(logs):
    signs = np.where(np.arange(logs.size) % 2 == 0, 1.0, -1.0)
    total = math.fsum(signs * np.exp(logs))
    # each term carries a relative error of roughly eps * (1 + |log term|)
    err = 4.0 * np.finfo(float).eps * float(np.max(np.exp(logs) * (1.0 + np.abs(logs))))
    return total, err


def _ml_asymptotic(nu, beta, t):
    """Optimally truncated algebraic expansion for large ``t``.

    Returns ``(value, error_estimate)``.  Terms are
    ``Gamma(beta) t**-k / Gamma(beta - nu k)``; for ``beta - nu k <= 0`` their
    size is bounded by the envelope ``Gamma(1 - beta + nu k) / pi``, which
    (unlike the terms themselves, which dip to 0 at the poles) decreases to a
    single minimum.  The sum stops at that minimum or once the envelope is
    negligible, and the envelope there is the error estimate.  For ``nu = 1``
    an exponentially small part is not represented and is added to the
    estimate.
    """
    lg_b = gammaln(beta)
    lt = math.log(t)
    total = 0.0
    if nu == 1.0 and float(beta).is_integer():
        # the algebraic part terminates: 1/Gamma(beta - k) = 0 for k >= beta
        for k in range(1, int(beta)):
            term = math.exp(lg_b - k * lt - gammaln(beta - k))
            total += term if k % 2 == 1 else -term
        omitted = 0.0
    else:
        omitted = math.inf
        prev_env = math.inf
        prev_x = math.inf
        done = False
        for first in range(1, _MAX_TERMS, 256):
            k = np.arange(first, first + 256, dtype=float)
            x = beta - nu * k
            with np.errstate(over="ignore", invalid="ignore"):
                log_size = lg_b - k * lt - gammaln(x)
                terms = np.where(np.isfinite(log_size), gammasgn(x) * np.exp(log_size), 0.0)
            terms = np.where(k % 2 == 1, terms, -terms)
            log_env = lg_b - k * lt + np.where(x > 0, -gammaln(np.maximum(x, 1e-300)), gammaln(1.0 - x) - math.log(math.pi))
            for i in range(k.size):
                # log Gamma is convex, so the envelope's first rise is its minimum
                if x[i] <= 0 and prev_x <= 0 and log_env[i] > prev_env:
                    omitted = math.exp(prev_env)
                    done = True
                    break
                total += terms[i]
                prev_env = log_env[i]
                prev_x = x[i]
                if total != 0.0 and log_env[i] < math.log(1e-17 * abs(total)):
                    omitted = math.exp(log_env[i])
                    done = True
                    break
            if done:
                break
    if nu == 1.0:
        # exponentially small part not captured by the algebraic terms
        omitted += math.exp(lg_b - t + (abs(beta - 1.0) + 1.0) * lt)
    return total, omitted


def _ml_series_mp(nu, beta, t, logs):
    top = float(logs.max()) / math.log(10.0)
    k_peak = int(logs.argmax())
    dps = int(30 + max(0.0, top))
    for _ in range(4):
        if dps > _MAX_DPS:
            raise AccuracyError(f"E_{{{nu},{beta}}}(-{t}) needs {dps} digits; refusing")
        with mpmath.workdps(dps):
            mt = mpmath.mpf(t)
            mnu = mpmath.mpf(nu)
            mb = mpmath.mpf(beta)
            total = mpmath.mpf(0)
            power = mpmath.mpf(1)
            # the sum may be far smaller than its largest term, so stop
            # relative to the running total, not to the peak
            for k in range(_MAX_TERMS):
                term = power * mpmath.rgamma(mnu * k + mb)
                total += term
                if k > k_peak and abs(term) < _SERIES_RTOL * 1e-4 * abs(total):
                    break
                power *= -mt
            else:
                raise AccuracyError(f"E_{{{nu},{beta}}}(-{t}) series did not converge")
            value = total * mpmath.gamma(mb)
            # digits lost to cancellation: peak term over result
            lost = top - float(mpmath.log10(abs(value))) if value != 0 else dps
            if value > 0 and dps - lost >= 25:
                return float(value)
            dps = int(30 + max(0.0, top) + max(lost, 0.0) + 10)
    raise AccuracyError(f"E_{{{nu},{beta}}}(-{t}) did not reach working accuracy")


def ml_eval(nu: float, beta: float, t: float) -> float:
    """Normalised Mittag-Leffler function ``E_{nu,beta}(-t)`` for ``t >= 0``.

    ``E_{nu,beta}(-t) = Gamma(beta) * sum_k (-t)**k / Gamma(nu*k + beta)``,
    so that the value at 0 is 1.

    Regimes, tried in order:

    1. the power series in double precision with exact summation, accepted
       when the cancellation error estimate is below 1e-13 relative;
    2. the optimally truncated large-``t`` expansion
       ``Gamma(beta) * sum_{k>=1} (-1)**(k+1) t**-k / Gamma(beta - nu*k)``,
       accepted under the same bound on its first omitted term;
    3. the power series in extended precision (working digits grow with the
       largest term), which covers the band between the two.

    So the crossover between series and expansion is not a fixed ``t*``; it
    is wherever the series first loses more than three digits and the
    expansion has become accurate.
    """
    _check_ml_args(nu, beta)
    t = float(t)
    if not (t >= 0.0 and math.isfinite(t)):
        raise DomainError(f"t must be finite and nonnegative, got {t}")
    if t == 0.0:
        return 1.0

    logs = None
    # the largest series term is roughly exp(t**(1/nu)); beyond exp(700) skip the double series
    if math.log(t) / nu < math.log(700.0):
        logs = _series_log_terms(nu, beta, t)
        if logs.max() < 700.0:
            value, err = _ml_series_double(logs)
            if value > 0.0 and err <= _ACCEPT_RTOL * value:
                return value
    value, err = _ml_asymptotic(nu, beta, t)
    if value > 0.0 and err <= _ACCEPT_RTOL * value:
        return value
    if logs is None:
        logs = _series_log_terms(nu, beta, t)
    return _ml_series_mp(nu, beta, t, logs)


def ml_eval_array(nu, beta, t):
    """Elementwise :func:`ml_eval`; repeated arguments are evaluated once."""
    t = np.asarray(t, dtype=float)
    uniq, inverse = np.unique(t, return_inverse=True)
    vals = np.array([ml_eval(nu, beta, x) for x in uniq])
    return vals[inverse].reshape(t.shape)


# --------------------------------------------------------------------------
# correlation functions and normalisers


def _svf_values(model, x):
    if model.svf is None:
        return np.ones_like(x)
    return np.asarray(model.svf(x), dtype=float)


def rho_eval(model: CorrelationModel, t):
    """Correlation ``rho(t)``; an even function with ``rho(0) = 1``.

    The SVF family is only specified through its tail ``L(|t|)/|t|**alpha``;
    near the origin the same expression is clipped at 1.
    """
    scalar = np.ndim(t) == 0
    x = np.abs(np.asarray(t, dtype=float))
    fam = model.family
    if fam == CAUCHY:
        out = (1.0 + x ** model.beta) ** (-model.alpha / model.beta)
    elif fam == MITTAG_LEFFLER:
        out = ml_eval_array(model.nu, model.beta, x ** model.alpha)
    elif fam == SVF:
        with np.errstate(divide="ignore"):
            raw = _svf_values(model, x) / x ** model.alpha
        out = np.where(x == 0.0, 1.0, np.minimum(1.0, raw))
    else:
        out = np.exp(-model.lam * x)
    return float(out) if scalar else out


def d_norm(model: CorrelationModel, N) -> float:
    """Normalising sequence ``d_alpha(N)`` for partial sums of ``rho``."""
    if model.family == EXPONENTIAL or not model.is_long_range:
        raise DomainError("short-range models have no long-range normaliser")
    if N < 1:
        raise DomainError(f"N must be a positive integer, got {N}")
    base = math.log(N) if model.alpha == 1.0 else float(N) ** (1.0 - model.alpha)
    if model.family == SVF:
        base *= float(_svf_values(model, np.asarray(float(N))))
    return base


def q_alpha(kernel: LimitKernel, t):
    """Limit kernel ``Q_alpha(t)``; diverges at ``t = 0``."""
    scalar = np.ndim(t) == 0
    x = np.abs(np.asarray(t, dtype=float))
    if np.any(x == 0.0):
        raise DomainError("Q_alpha is infinite at t = 0")
    out = kernel.r_coef / x ** kernel.alpha
    return float(out) if scalar else out


def q_alpha_partial(model: CorrelationModel, t: float, N: int) -> float:
    """Partial sum ``(1/d_alpha(N)) * sum_{j=1..N} rho(j t)``."""
    j = np.arange(1, int(N) + 1, dtype=float)
    return math.fsum(rho_eval(model, j * t)) / d_norm(model, N)


def h_alpha(kernel: LimitKernel, t):
    """``H(t) = Q(t) - t Q'(t)`` for the long-range limit kernel."""
    scalar = np.ndim(t) == 0
    x = np.asarray(t, dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("H_alpha is defined for positive arguments only")
    a = kernel.alpha
    if a == 1.0:
        out = 2.0 * kernel.c / x
    else:
        out = kernel.c * (1.0 + a) / ((1.0 - a) * x ** a)
    return float(out) if scalar else out


def h_alpha_inv(kernel: LimitKernel, y):
    """Inverse of :func:`h_alpha` on ``(0, inf)``."""
    scalar = np.ndim(y) == 0
    v = np.asarray(y, dtype=float)
    if np.any(v <= 0.0):
        raise DomainError("H_alpha^-1 is defined for positive arguments only")
    a = kernel.alpha
    if a == 1.0:
        out = 2.0 * kernel.c / v
    else:
        out = (kernel.c * (1.0 + a) / ((1.0 - a) * v)) ** (1.0 / a)
    return float(out) if scalar else out


# --------------------------------------------------------------------------
# short-range (exponential) kernel; t = inf is allowed and gives 0


def _check_rate(lam):
    if not lam > 0.0:
        raise DomainError(f"lambda must be positive, got {lam}")


def _positive_arg(t, name):
    x = np.asarray(t, dtype=float)
    if np.any(~(x > 0.0)):
        raise DomainError(f"{name} is defined for positive arguments only")
    return x


def q_shortrange(lam: float, t):
    """``Q(t) = sum_{j>=1} exp(-lam j t) = 1/(exp(lam t) - 1)``."""
    _check_rate(lam)
    scalar = np.ndim(t) == 0
    x = lam * _positive_arg(t, "Q")
    em = np.exp(-x)
    out = em / -np.expm1(-x)
    return float(out) if scalar else out


def q_shortrange_deriv(lam: float, t):
    """Derivative ``Q'(t)`` of :func:`q_shortrange`."""
    _check_rate(lam)
    scalar = np.ndim(t) == 0
    x = lam * _positive_arg(t, "Q'")
    em = np.exp(-x)
    out = -lam * em / np.expm1(-x) ** 2
    return float(out) if scalar else out


def _h_unit(x):
    # H for lam = 1, written in exp(-x) so that large x cannot overflow
    em = np.exp(-x)
    d = -np.expm1(-x)
    with np.errstate(invalid="ignore"):
        out = em / d + x * em / (d * d)
    return np.where(np.isinf(x), 0.0, out)


def _h_unit_deriv(x):
    em = np.exp(-x)
    d = -np.expm1(-x)
    return -x * em * (1.0 + em) / d**3


def h_shortrange(lam: float, t):
    """``H(t) = Q(t) - t Q'(t)`` for the exponential kernel; decreasing."""
    _check_rate(lam)
    scalar = np.ndim(t) == 0
    out = _h_unit(lam * _positive_arg(t, "H"))
    return float(out) if scalar else out


def h_shortrange_inv(lam: float, y):
    """Inverse of :func:`h_shortrange` by log-space bisection plus Newton.

    ``H_lam(s) = h(lam * s)`` with a rate-free ``h``, so the root is found
    once for ``h`` and divided by ``lam``.  The result satisfies
    ``|H(s) - y| <= 1e-12 * y``.
    """
    _check_rate(lam)
    scalar = np.ndim(y) == 0
    v = np.asarray(y, dtype=float)
    if np.any(~(v > 0.0)) or np.any(~np.isfinite(v)):
        raise DomainError("H^-1 is defined for finite positive arguments only")
    # h(x) ~ 2/x at 0 and ~ x exp(-x) at infinity
    lo = np.minimum(1e-3, 0.5 / v)
    hi = np.full_like(v, 1.0)
    for _ in range(12):
        grow = _h_unit(hi) > v
        if not grow.any():
            break
        hi = np.where(grow, np.minimum(2.0 * hi, 800.0), hi)
    llo, lhi = np.log(lo), np.log(hi)
    for _ in range(64):
        mid = 0.5 * (llo + lhi)
        above = _h_unit(np.exp(mid)) > v
        llo = np.where(above, mid, llo)
        lhi = np.where(above, lhi, mid)
    x = np.exp(0.5 * (llo + lhi))
    xlo, xhi = np.exp(llo), np.exp(lhi)
    for _ in range(3):
        step = (_h_unit(x) - v) / _h_unit_deriv(x)
        cand = x - step
        x = np.where((cand > xlo) & (cand < xhi), cand, x)
    out = x / lam
    return float(out) if scalar else out
