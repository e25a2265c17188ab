import numpy as np
import pytest

from simonslab.core.errors import CapabilityError, ParameterError, TruncationError, UnsupportedOperation
from simonslab.geometry.fields import BumpField, ConstantField, CoordinateField
from simonslab.kernels import FractionalKernel, GaussianKernel, SimonsLimitKernel
from simonslab.nonlocal_ops import (bilinear_form_pointwise, compare_mean_curvature_forms, default_truncation,
                                    estimate, gradient_fd_check, lk_apply, make_context, mean_curvature_estimate,
                                    nonlocal_mean_curvature, nonlocal_mean_curvature_gradient,
                                    tangential_divergence_check, tangential_product_rule_check,
                                    total_curvature_sq, total_curvature_sq_rearranged)


@pytest.fixture(scope="module")
def covering_context():
    from simonslab.geometry.surfaces import Sphere
    from simonslab.kernels import MollifierKernel

    return make_context(Sphere(3), MollifierKernel(3, eps=0.3), "north", R=2.0, level=6)


class TestContext:
    def test_default_truncation(self, sphere, plane, mollifier):
        assert default_truncation(sphere, mollifier) == pytest.approx(0.45)
        assert default_truncation(sphere, FractionalKernel(3, s=0.5)) == pytest.approx(2.0)
        with pytest.raises(ParameterError):
            default_truncation(plane, FractionalKernel(3, s=0.5))

    def test_dimension_mismatch(self, sphere):
        with pytest.raises(ParameterError):
            make_context(sphere, GaussianKernel(4), "north", level=2)

    def test_coarse_rule(self, sphere_context):
        assert sphere_context.coarse.level == sphere_context.rule.level - 1
        assert sphere_context.with_coarse().rule.size < sphere_context.rule.size


class TestFlatPlane:
    """Every nonlocal curvature vanishes on a hyperplane"""

    def test_total_curvature(self, plane_context):
        assert total_curvature_sq(plane_context) == 0.0

    def test_lk_of_constant(self, plane_context):
        assert lk_apply(plane_context, ConstantField(2.0)) == 0.0

    def test_boundary_mean_curvature(self, plane_context):
        assert nonlocal_mean_curvature(plane_context, "boundary") == 0.0

    def test_gradient_is_normal(self, plane_context):
        grad = nonlocal_mean_curvature_gradient(plane_context)
        np.testing.assert_array_equal(grad[:2], 0.0)
        assert grad[2] > 0.0


class TestSphere:
    def test_rearranged_total_curvature(self, sphere_context):
        direct = total_curvature_sq(sphere_context)
        assert direct > 0.0
        assert total_curvature_sq_rearranged(sphere_context) == pytest.approx(direct, rel=1e-10)

    def test_bilinear_symmetry(self, sphere_context):
        u = CoordinateField(1)
        v = BumpField(np.array([0.1, 0.0, 1.0]), 0.3)
        assert bilinear_form_pointwise(sphere_context, u, v) == bilinear_form_pointwise(sphere_context, v, u)
        assert bilinear_form_pointwise(sphere_context, u, u) >= 0.0

    def test_lk_of_height(self, sphere_context):
        # x_3 is maximal at the north pole, so L_K x_3 > 0 there
        assert lk_apply(sphere_context, CoordinateField(3)) > 0.0

    def test_gradient_by_symmetry(self, sphere_context):
        grad = nonlocal_mean_curvature_gradient(sphere_context)
        np.testing.assert_allclose(grad[:2], 0.0, atol=1e-10)

    def test_estimate_budget(self, sphere_context):
        result = estimate(sphere_context, total_curvature_sq)
        assert result.error >= result.quadrature >= 0.0
        assert result.tail == 0.0
        assert set(result.to_record()) == {"value", "error", "quadrature", "tail"}

    def test_mean_curvature_forms_agree(self, sphere_context):
        results, pairs = compare_mean_curvature_forms(sphere_context)
        assert set(results) == {"boundary", "volume", "difference"}
        assert results["boundary"].value > 0.0
        for pair in pairs:
            assert pair["agree"], pair

    def test_gradient_matches_finite_differences(self, covering_context):
        fd = gradient_fd_check(covering_context)
        scale = max(1.0, float(np.max(np.abs(fd["boundary"]))))
        assert fd["gap"] <= 10.0 * fd["budget"] + 1e-6 * scale, fd

    def test_capped_limit_kernel_uses_boundary_form(self, sphere):
        ctx = make_context(sphere, SimonsLimitKernel(3, eps=0.2, cap_radius=0.1), "north", level=3)
        assert mean_curvature_estimate(ctx).value == nonlocal_mean_curvature(ctx, "boundary")
        with pytest.raises(UnsupportedOperation):
            nonlocal_mean_curvature(ctx, "volume")

    def test_unknown_form(self, sphere_context):
        with pytest.raises(ParameterError):
            nonlocal_mean_curvature(sphere_context, "spectral")

    def test_difference_form_needs_support(self, sphere):
        ctx = make_context(sphere, GaussianKernel(3, sigma=0.1), "north", level=3)
        with pytest.raises(CapabilityError):
            nonlocal_mean_curvature(ctx, "difference")


class TestTangentialCalculus:
    """Divergence theorem and product rule on the covering sphere rule"""

    bump = BumpField(np.array([0.3, 0.1, 0.95]), 0.5)
    other = BumpField(np.array([0.0, 0.3, 0.95]), 0.6, amplitude=2.0)

    @pytest.mark.parametrize("j", [1, 2, 3])
    def test_divergence(self, covering_context, j):
        lhs, rhs = tangential_divergence_check(covering_context, self.bump, j)
        assert lhs == pytest.approx(rhs, abs=1e-5)

    @pytest.mark.parametrize("j", [1, 3])
    def test_product_rule(self, covering_context, j):
        lhs, rhs = tangential_product_rule_check(covering_context, self.bump, self.other, j)
        assert lhs == pytest.approx(rhs, abs=1e-5)

    def test_bad_axis(self, covering_context):
        with pytest.raises(ParameterError):
            tangential_divergence_check(covering_context, self.bump, 4)

    def test_leaking_support(self, sphere_context):
        wide = BumpField(np.array([0.0, 0.0, 1.0]), 1.0)
        with pytest.raises(TruncationError):
            tangential_divergence_check(sphere_context, wide, 1)
