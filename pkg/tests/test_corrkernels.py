import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lrdesign.corrkernels import (
    CorrelationModel,
    LimitKernel,
    d_norm,
    h_alpha,
    h_alpha_inv,
    h_shortrange,
    h_shortrange_inv,
    limit_kernel,
    ml_eval,
    ml_eval_array,
    q_alpha,
    q_alpha_partial,
    q_shortrange,
    q_shortrange_deriv,
    rho_eval,
)
from lrdesign.errors import DomainError

# e * (1 - 2/sqrt(pi) int_0^1 exp(-u^2) du) by adaptive quadrature
ML_HALF_ONE = 0.4275835761558069
# sum_{j=1}^{200} exp(-0.5 j)
Q_SR_DIRECT = 1.5414940825367982
# (1/sqrt(N)) sum_{j=1}^{N} (1 + j)^(-1/2), summed with math.fsum
# Gamma(beta) E_{nu,beta}(-t) by the power series in mpmath at 600+ digits
ML_SERIES_ORACLES = {
    (0.1, 1.6, 2.0): 0.33583468429309615,
    (0.1, 0.1, 2.0): 0.10390098018962629,
    (0.25, 1.0, 3.0): 0.2190044275604068,
    (0.5, 1.0, 5.0): 0.11070463773306863,
    (0.7, 1.3, 20.0): 0.03032072091239129,
}
PARTIAL_SUMS = {1000: 1.9236962177149928, 10000: 1.9755464494956123, 100000: 1.9922346758465306}


class TestMittagLeffler:
    def test_exponential_case(self):
        assert ml_eval(1, 1, 2.0) == pytest.approx(math.exp(-2.0), rel=1e-14)

    def test_beta_two_case(self):
        assert ml_eval(1, 2, 1.0) == pytest.approx(1.0 - math.exp(-1.0), rel=1e-14)

    def test_half_order_against_quadrature_oracle(self):
        assert ml_eval(0.5, 1, 1.0) == pytest.approx(ML_HALF_ONE, rel=1e-12)

    @pytest.mark.parametrize("args", sorted(ML_SERIES_ORACLES))
    def test_high_precision_series_oracle(self, args):
        assert ml_eval(*args) == pytest.approx(ML_SERIES_ORACLES[args], rel=1e-12)

    def test_zero_argument(self):
        assert ml_eval(0.7, 1, 0.0) == 1.0

    def test_exp_agreement_on_range(self):
        t = np.linspace(0.0, 30.0, 301)
        got = ml_eval_array(1.0, 1.0, t)
        assert np.max(np.abs(got / np.exp(-t) - 1.0)) < 1e-10

    def test_beta_two_on_range(self):
        t = np.linspace(0.01, 30.0, 300)
        got = ml_eval_array(1.0, 2.0, t)
        assert np.max(np.abs(got / (-np.expm1(-t) / t) - 1.0)) < 1e-10

    def test_large_argument_tail(self):
        # leading asymptotic term Gamma(beta) / (t Gamma(beta - nu))
        nu, beta, t = 0.5, 1.0, 1e4
        lead = math.gamma(beta) / (t * math.gamma(beta - nu))
        assert ml_eval(nu, beta, t) == pytest.approx(lead, rel=1e-3)

    def test_crossover_continuity(self):
        # both regimes and the extended-precision fallback must join smoothly
        t = np.linspace(5.0, 60.0, 400)
        v = ml_eval_array(0.6, 1.3, t)
        assert np.all(np.diff(v) < 0)
        assert np.max(np.abs(np.diff(np.log(v), 2))) < 1e-3

    @pytest.mark.parametrize("nu,beta", [(0, 1), (1.5, 2), (0.5, 0.2)])
    def test_domain(self, nu, beta):
        with pytest.raises(DomainError):
            ml_eval(nu, beta, 1.0)

    def test_negative_argument(self):
        with pytest.raises(DomainError):
            ml_eval(0.5, 1.0, -1.0)

    @given(st.floats(0.1, 1.0), st.floats(0.0, 1.5))
    def test_decreasing_in_t(self, nu, extra):
        beta = nu + extra
        t = np.linspace(0.0, 40.0, 41)
        v = ml_eval_array(nu, beta, t)
        assert np.all(np.diff(v) < 0)
        assert v[0] == 1.0 and np.all(v > 0)


class TestRho:
    def test_cauchy(self):
        assert rho_eval(CorrelationModel.cauchy(0.5, 1), 3.0) == pytest.approx(0.5, rel=1e-15)
        assert rho_eval(CorrelationModel.cauchy(0.5, 2), 0.0) == 1.0

    def test_exponential(self):
        assert rho_eval(CorrelationModel.exponential(0.5), 2.0) == pytest.approx(math.exp(-1.0), rel=1e-15)

    def test_svf_clipped_near_zero(self):
        m = CorrelationModel.slowly_varying(0.5)
        assert rho_eval(m, 0.0) == 1.0
        assert rho_eval(m, 0.25) == 1.0
        assert rho_eval(m, 4.0) == pytest.approx(0.5)

    def test_mittag_leffler(self):
        m = CorrelationModel.mittag_leffler(0.5, 1.0, 2.0)
        assert rho_eval(m, 4.0) == pytest.approx((1 - math.exp(-2.0)) / 2.0, rel=1e-13)

    def test_invalid_models(self):
        with pytest.raises(DomainError):
            CorrelationModel.cauchy(1.5)
        with pytest.raises(DomainError):
            CorrelationModel.cauchy(0.5, 0.0)
        with pytest.raises(DomainError):
            CorrelationModel.mittag_leffler(0.5, 0.8, 0.5)
        with pytest.raises(DomainError):
            CorrelationModel.exponential(0.0)
        with pytest.raises(DomainError):
            CorrelationModel("gauss")

    def test_ml_one_one_is_short_range(self):
        m = CorrelationModel.mittag_leffler(0.5, 1.0, 1.0)
        assert not m.is_long_range
        with pytest.raises(DomainError):
            limit_kernel(m)

    @given(
        st.sampled_from(["cauchy", "mittag_leffler", "svf", "exponential"]),
        st.floats(0.05, 1.0),
        st.lists(st.floats(-50.0, 50.0), min_size=1, max_size=8),
    )
    def test_even_and_bounded(self, family, alpha, ts):
        if family == "mittag_leffler":
            m = CorrelationModel.mittag_leffler(alpha, 0.7, 1.2)
        elif family == "exponential":
            m = CorrelationModel.exponential(alpha)
        else:
            m = CorrelationModel(family, alpha=alpha, beta=1.5)
        t = np.array(ts)
        a, b = rho_eval(m, t), rho_eval(m, -t)
        np.testing.assert_array_equal(a, b)
        assert np.all(np.abs(a) <= 1.0) and np.all(a > 0)


class TestLimitKernel:
    def test_q_alpha(self):
        assert q_alpha(LimitKernel(0.5, 1.0), 1.0) == pytest.approx(2.0)
        c = 1.0 / math.sqrt(math.pi)
        assert q_alpha(LimitKernel(1.0, c), 2.0) == pytest.approx(1.0 / (2.0 * math.sqrt(math.pi)), rel=1e-15)

    def test_q_alpha_at_zero(self):
        with pytest.raises(DomainError):
            q_alpha(LimitKernel(0.5), 0.0)

    def test_ml_constant(self):
        k = limit_kernel(CorrelationModel.mittag_leffler(1.0, 0.5, 1.0))
        assert k.c == pytest.approx(1.0 / math.sqrt(math.pi), rel=1e-14)

    def test_kernel_validation(self):
        with pytest.raises(DomainError):
            LimitKernel(0.5, 0.0)
        with pytest.raises(DomainError):
            LimitKernel(0.0)

    @pytest.mark.parametrize("N", sorted(PARTIAL_SUMS))
    def test_partial_sums_match_direct_oracle(self, N):
        got = q_alpha_partial(CorrelationModel.cauchy(0.5, 1.0), 1.0, N)
        assert got == pytest.approx(PARTIAL_SUMS[N], rel=1e-13)

    def test_partial_sum_ratio_approaches_one(self):
        m = CorrelationModel.cauchy(0.5, 1.0)
        errs = [abs(q_alpha_partial(m, 1.0, N) / 2.0 - 1.0) for N in (10**3, 10**4, 10**5)]
        assert errs[0] > errs[1] > errs[2]


class TestNormalizer:
    def test_power(self):
        assert d_norm(CorrelationModel.cauchy(0.5), 100) == pytest.approx(10.0)

    def test_log(self):
        assert d_norm(CorrelationModel.cauchy(1.0), 20) == pytest.approx(math.log(20))

    def test_svf(self):
        assert d_norm(CorrelationModel.slowly_varying(0.5), 400) == pytest.approx(20.0)
        L = lambda x: np.log(np.e + x)
        assert d_norm(CorrelationModel.slowly_varying(0.5, L), 400) == pytest.approx(20.0 * math.log(math.e + 400))

    def test_exponential_has_none(self):
        with pytest.raises(DomainError):
            d_norm(CorrelationModel.exponential(1.0), 10)


class TestHFunctions:
    def test_values(self):
        k = LimitKernel(0.5, 1.0)
        assert h_alpha(k, 1.0) == pytest.approx(3.0)
        assert h_alpha_inv(k, 3.0) == pytest.approx(1.0)
        assert h_alpha(LimitKernel(1.0, 1.0), 4.0) == pytest.approx(0.5)

    def test_domain(self):
        with pytest.raises(DomainError):
            h_alpha(LimitKernel(0.5), 0.0)
        with pytest.raises(DomainError):
            h_alpha_inv(LimitKernel(0.5), -1.0)

    @given(st.floats(0.01, 1.0), st.floats(0.1, 10.0), st.floats(1e-3, 1e3))
    def test_longrange_round_trip(self, alpha, c, t):
        k = LimitKernel(alpha, c)
        assert h_alpha_inv(k, h_alpha(k, t)) == pytest.approx(t, rel=1e-12)

    @given(st.floats(0.05, 5.0), st.floats(1e-3, 1e3))
    def test_shortrange_round_trip(self, lam, t):
        y = h_shortrange(lam, t)
        if y > 0:
            assert h_shortrange_inv(lam, y) == pytest.approx(t, rel=1e-12)

    def test_shortrange_decreasing(self):
        t = np.geomspace(1e-3, 50.0, 500)
        assert np.all(np.diff(h_shortrange(0.7, t)) < 0)


class TestShortRangeKernel:
    def test_closed_form(self):
        assert q_shortrange(1.0, math.log(2.0)) == pytest.approx(1.0, rel=1e-15)

    def test_direct_sum_oracle(self):
        assert q_shortrange(0.5, 1.0) == pytest.approx(Q_SR_DIRECT, rel=1e-12)

    def test_tail_monotone_to_zero(self):
        t = np.geomspace(1.0, 1e4, 50)
        q = q_shortrange(1.0, t)
        assert np.all(np.diff(q) <= 0) and q[-1] == 0.0 and np.all(np.isfinite(q))

    def test_derivative_by_central_difference(self):
        t, h = 0.8, 1e-6
        fd = (q_shortrange(0.5, t + h) - q_shortrange(0.5, t - h)) / (2 * h)
        assert q_shortrange_deriv(0.5, t) == pytest.approx(fd, rel=1e-7)

    def test_h_definition(self):
        lam, t = 0.5, 1.3
        assert h_shortrange(lam, t) == pytest.approx(q_shortrange(lam, t) - t * q_shortrange_deriv(lam, t), rel=1e-14)

    def test_domain(self):
        with pytest.raises(DomainError):
            q_shortrange(1.0, 0.0)
        with pytest.raises(DomainError):
            q_shortrange(0.0, 1.0)
