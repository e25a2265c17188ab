import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from simonslab.core.errors import IntegrandError, ParameterError
from simonslab.geometry.frame import surface_frame
from simonslab.geometry.graph import Plane
from simonslab.geometry.rules import build_quadrature
from simonslab.kernels import FractionalKernel, MollifierKernel, unit_sphere_area
from simonslab.quadrature import (ball_moment_x1_4, ball_moment_x1sq_x2sq, c_star,
                                  mc_ball_moment_x1_4, mc_rotated_mixed_moment, moments_table,
                                  node_sum, pv_surface_integral, sphere_moment_theta1_4,
                                  sphere_product_rule, tail_bound, tail_shells, varpi)

dimensions = st.integers(min_value=2, max_value=12)


class TestMoments:
    """Closed-form moment algebra"""

    @given(dimensions)
    def test_q_is_three_d(self, n):
        assert ball_moment_x1_4(n) == pytest.approx(3.0 * ball_moment_x1sq_x2sq(n), rel=1e-14)

    @given(dimensions)
    def test_ball_to_sphere(self, n):
        assert ball_moment_x1_4(n) * (n + 4) == pytest.approx(sphere_moment_theta1_4(n), rel=1e-13)

    @given(dimensions)
    def test_quartic_sum(self, n):
        q, d = ball_moment_x1_4(n), ball_moment_x1sq_x2sq(n)
        assert n * q + n * (n - 1) * d == pytest.approx(unit_sphere_area(n) / (n + 4), rel=1e-13)

    @given(st.integers(min_value=3, max_value=12))
    def test_c_star(self, n):
        assert c_star(n) == pytest.approx(sphere_moment_theta1_4(n - 1), rel=1e-13)

    def test_known_values(self):
        assert varpi(3) == pytest.approx(math.pi)
        assert sphere_moment_theta1_4(3) == pytest.approx(4.0 * math.pi / 5.0)

    def test_table_columns(self):
        rows = moments_table(range(2, 5))
        assert [r["n"] for r in rows] == [2, 3, 4]
        assert set(rows[0]) == {"n", "Q", "D", "sphere_moment", "varpi", "c_star"}

    def test_bad_dimension(self):
        with pytest.raises(ParameterError):
            ball_moment_x1_4(1)


class TestMonteCarlo:
    def test_x1_4_within_error(self):
        est, err = mc_ball_moment_x1_4(3, samples=200_000, seed=7)
        assert abs(est - ball_moment_x1_4(3)) <= 4.0 * err

    def test_rotated_within_error(self):
        q = ball_moment_x1_4(2)
        est, err = mc_rotated_mixed_moment(2, samples=200_000, seed=7)
        assert abs(est - (2.0 * q - 2.0 * q / 3.0)) <= 4.0 * err

    def test_fixed_seed(self):
        assert mc_ball_moment_x1_4(3, 10_000, seed=1) == mc_ball_moment_x1_4(3, 10_000, seed=1)


class TestSphereRule:
    def test_weights_sum_to_area(self):
        _, weights = sphere_product_rule(16)
        assert weights.sum() == pytest.approx(4.0 * math.pi, rel=1e-13)

    def test_quartic_moment(self):
        points, weights = sphere_product_rule()
        assert weights @ points[:, 0] ** 4 == pytest.approx(sphere_moment_theta1_4(3), rel=1e-12)


@pytest.fixture
def plane_rule():
    plane = Plane(3)
    base = surface_frame(plane, np.zeros(3))
    return build_quadrature(plane, base, 0.0, R=2.0, level=4)


class TestPrincipalValue:
    """Truncated sums, delta extrapolation and schedule validation"""

    def test_odd_integrand_cancels(self, plane_rule):
        kernel = FractionalKernel(3, s=0.5)

        def integrand(rule):
            z = rule.points - rule.base.point
            return kernel.value(np.linalg.norm(z, axis=1)) * z[:, 0]

        d = plane_rule.innermost
        result = pv_surface_integral(integrand, plane_rule, (8 * d, 4 * d, 2 * d))
        assert abs(result.extrapolated_value) < 1e-9
        assert result.deltas == (8 * d, 4 * d, 2 * d)

    def test_constant_integrand_is_area(self, sphere, north_frame):
        rule = build_quadrature(sphere, north_frame, 0.0, R=2.0, level=4)
        assert rule.covers
        result = pv_surface_integral(lambda r: np.ones(r.size), rule)
        assert result.value == pytest.approx(4.0 * math.pi, rel=1e-10)

    def test_schedule_must_decrease(self, plane_rule):
        d = plane_rule.innermost
        with pytest.raises(ParameterError):
            pv_surface_integral(lambda rule: np.ones(rule.size), plane_rule, (2 * d, 4 * d))

    def test_non_finite_integrand(self, plane_rule):
        values = np.ones(plane_rule.size)
        values[3] = np.nan
        with pytest.raises(IntegrandError) as info:
            node_sum(plane_rule, values)
        assert info.value.index == 3


class TestTailBound:
    def test_compact_support_has_no_tail(self, plane_rule):
        assert tail_bound(plane_rule, MollifierKernel(3, eps=0.3), 1.0) == 0.0

    def test_power_series_closed_form(self, plane_rule):
        kernel = FractionalKernel(3, s=0.5)
        assert tail_bound(plane_rule, kernel, 1.0) == pytest.approx(
            tail_shells(plane_rule, kernel, 1.0, shells=80), rel=1e-12)

    def test_growth_slope_on_plane(self, plane_rule):
        assert plane_rule.growth.slope == pytest.approx(2.0, abs=0.1)
