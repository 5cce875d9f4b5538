import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrdesign.corrkernels import CorrelationModel
from lrdesign.design_core import LINEAR, LOCATION, THROUGH_ORIGIN, DesignDensity, Grid
from lrdesign.errors import DomainError, SingularDesignError
from lrdesign.finite_n import (
    FiniteDesign,
    convergence_report,
    design_points_from_density,
    exact_lse_covariance,
)
from lrdesign.oneparam import solve_one_param
from lrdesign.corrkernels import LimitKernel

# two points at -1, 1 with rho(4) = 5^(-1/2): Var(mean) = (1 + 5^(-1/2)) / 2
N2_LOCATION = 0.7236067977499789


def ols_double_sum(t, rho, gamma):
    """Slope variance for the through-origin model, summed term by term."""
    n = len(t)
    sxx = math.fsum(x * x for x in t)
    total = math.fsum(
        t[i] * t[j] * (gamma * (1.0 if i == j else rho(n * abs(t[i] - t[j]))) + (1.0 - gamma) * (i == j))
        for i in range(n) for j in range(n)
    )
    return total / sxx**2


class TestDesignPoints:
    def test_uniform(self, grid):
        pts = design_points_from_density(DesignDensity.uniform(grid), 11).points
        np.testing.assert_allclose(pts, np.linspace(-1.0, 1.0, 11), atol=1e-12)

    def test_three_points(self, grid):
        pts = design_points_from_density(DesignDensity.uniform(grid), 3).points
        np.testing.assert_allclose(pts, [-1.0, 0.0, 1.0], atol=1e-12)

    def test_hole_is_skipped(self, grid):
        s = solve_one_param(THROUGH_ORIGIN, LimitKernel(0.5), grid)
        pts = design_points_from_density(s.density, 100).points
        assert not np.any(np.abs(pts) < s.edge - grid.h)

    @settings(max_examples=20)
    @given(st.lists(st.floats(0.05, 5.0), min_size=1, max_size=3), st.integers(2, 300))
    def test_symmetric_positive_density(self, coeffs, N):
        g = Grid(1.0, 401)
        d = DesignDensity.from_function(g, lambda t: 0.1 + sum(c * t ** (2 * k + 2) for k, c in enumerate(coeffs)))
        pts = design_points_from_density(d, N).points
        np.testing.assert_allclose(pts, -pts[::-1], atol=1e-9)
        assert np.all(np.diff(pts) >= 0) and pts[0] == -1.0 and pts[-1] == 1.0

    def test_validation(self, grid):
        with pytest.raises(DomainError):
            design_points_from_density(DesignDensity.uniform(grid), 1)
        with pytest.raises(DomainError):
            FiniteDesign(np.array([0.0, -1.0]))


class TestExactCovariance:
    def test_two_point_location(self):
        m = CorrelationModel.cauchy(0.5, 1.0)
        cov = exact_lse_covariance(LOCATION, FiniteDesign(np.array([-1.0, 1.0])), m, 1.0)
        assert cov[0, 0] == pytest.approx(N2_LOCATION, rel=1e-14)

    def test_white_noise_is_ols_identity(self):
        pts = np.linspace(-1, 1, 9)
        cov = exact_lse_covariance(LINEAR, FiniteDesign(pts), CorrelationModel.cauchy(0.5), 0.0)
        X = np.vstack([np.ones(9), pts]).T
        np.testing.assert_allclose(cov, np.linalg.inv(X.T @ X), rtol=1e-13, atol=1e-15)

    @pytest.mark.parametrize("model", [
        CorrelationModel.cauchy(0.3, 2.0),
        CorrelationModel.exponential(0.7),
        CorrelationModel.mittag_leffler(0.5, 0.8, 1.1),
    ], ids=["cauchy", "exponential", "mittag_leffler"])
    def test_double_sum_oracle(self, model):
        from lrdesign.corrkernels import rho_eval

        t = [-1.0, -0.7, -0.45, 0.2, 0.3, 0.8, 1.0]
        rho = lambda x: float(rho_eval(model, x))
        cov = exact_lse_covariance(THROUGH_ORIGIN, FiniteDesign(np.array(t)), model, 0.6)
        assert cov[0, 0] == pytest.approx(ols_double_sum(t, rho, 0.6), rel=1e-12)

    def test_symmetric_design_decouples_linear(self, grid):
        d = design_points_from_density(DesignDensity.uniform(grid), 400)
        cov = exact_lse_covariance(LINEAR, d, CorrelationModel.cauchy(0.5), 1.0)
        assert abs(cov[0, 1]) <= 1e-12 * abs(cov).max()

    @settings(max_examples=20)
    @given(st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=40, unique=True), st.floats(0.0, 1.0))
    def test_psd(self, pts, gamma):
        d = FiniteDesign(np.sort(np.array(pts)))
        try:
            cov = exact_lse_covariance(LINEAR, d, CorrelationModel.cauchy(0.4), gamma)
        except SingularDesignError:
            return
        np.testing.assert_array_equal(cov, cov.T)
        assert np.linalg.eigvalsh(cov).min() >= -1e-10 * abs(cov).max()

    def test_scaling(self):
        d = FiniteDesign(np.linspace(-1, 1, 100))
        m = CorrelationModel.cauchy(0.5)
        a = exact_lse_covariance(LINEAR, d, m, 1.0)
        b = exact_lse_covariance(LINEAR, d, m, 1.0, scaled=True)
        np.testing.assert_allclose(b, a * 100 / 10.0, rtol=1e-14)

    def test_cap_and_gamma(self):
        d = FiniteDesign(np.linspace(-1, 1, 50))
        with pytest.raises(DomainError):
            exact_lse_covariance(LOCATION, d, CorrelationModel.cauchy(0.5), 1.0, cap=10)
        with pytest.raises(DomainError):
            exact_lse_covariance(LOCATION, d, CorrelationModel.cauchy(0.5), 1.5)

    def test_singular(self):
        with pytest.raises(SingularDesignError):
            exact_lse_covariance(LINEAR, FiniteDesign(np.array([0.5, 0.5, 0.5])), CorrelationModel.cauchy(0.5), 1.0)


class TestReport:
    def test_location_uniform_cauchy(self, small_grid, tmp_path):
        rep = convergence_report(LOCATION, DesignDensity.uniform(small_grid), CorrelationModel.cauchy(0.5),
                                 1.0, (100, 400, 1600))
        assert rep.monotone() and not rep.degenerate
        assert rep.slope > 0
        rep.write_csv(tmp_path / "r.csv")
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[0] == "N,d_alpha,rel_error" and lines[-1].startswith("slope,,") and len(lines) == 5

    def test_degenerate_gamma_zero(self, small_grid):
        rep = convergence_report(LOCATION, DesignDensity.uniform(small_grid), CorrelationModel.cauchy(0.5),
                                 0.0, (200, 800, 3200))
        assert rep.degenerate
        # Var of the mean of N iid unit errors, scaled by N / sqrt(N)
        np.testing.assert_allclose(rep.errors, [1 / math.sqrt(n) for n in (200, 800, 3200)], rtol=1e-12)
        assert rep.slope == pytest.approx(1.0, abs=1e-9)

    def test_validation(self, small_grid):
        u = DesignDensity.uniform(small_grid)
        with pytest.raises(DomainError):
            convergence_report(LOCATION, u, CorrelationModel.exponential(1.0), 1.0, (10, 20))
        with pytest.raises(DomainError):
            convergence_report(LOCATION, u, CorrelationModel.cauchy(0.5), 1.0, (20, 10))
        with pytest.raises(DomainError):
            convergence_report(LOCATION, u, CorrelationModel.cauchy(0.5), 1.0, (10, 6000))
