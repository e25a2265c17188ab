import numpy as np
import pytest

from simonslab.core.errors import (CapabilityError, ConfigError, DegenerateGradientError, HypothesisError,
                                   ParameterError)
from simonslab.core.executor import CheckExecutor
from simonslab.geometry.fields import BumpField, ConstantField, CoordinateField
from simonslab.geometry.motion import RigidMotion
from simonslab.geometry.surfaces import complete_frame
from simonslab.kernels import FractionalKernel, GaussianKernel
from simonslab.levelset import (TransformedFunction, VolumeGrid, c_ku_sq, c_ku_sq_rearranged, coarea_check,
                                h_ku, l_ku_apply, levelset_context, make_levelset, sharp_interface_study,
                                simons_u_residual)
from simonslab.levelset.functions import AnisotropicSigmoid, LinearFunction, SigmoidSphere
from simonslab.levelset.grid import grid_reduce

CELLS = 16


@pytest.fixture
def gaussian():
    return GaussianKernel(3, sigma=0.2)


@pytest.fixture
def ball():
    return SigmoidSphere(3, radius=1.0, width=0.1)


class TestFunctions:
    def test_shorthand(self):
        u = make_levelset("sigmoid-sphere:1,0.1")
        assert isinstance(u, SigmoidSphere)
        assert u.radius == 1.0 and u.width == 0.1
        with pytest.raises(ConfigError):
            make_levelset("blob")

    def test_linear_is_flat(self):
        u = LinearFunction(3)
        np.testing.assert_array_equal(u.shape_operator(np.array([0.3, -0.1, 0.2])), 0.0)
        np.testing.assert_allclose(u.normal(np.zeros(3)), [0.0, 0.0, 1.0])

    @pytest.mark.parametrize("radius", [0.5, 1.0, 2.0])
    def test_sphere_levels(self, radius):
        u = SigmoidSphere(3, radius=radius, width=0.1)
        shell = u.named_point("shell")
        assert u.value(shell) == pytest.approx(0.5)
        assert u.mean_curvature(shell) == pytest.approx(2.0 / radius, rel=1e-12)
        np.testing.assert_allclose(u.normal(shell), [0.0, 0.0, 1.0], atol=1e-15)

    def test_level_radius(self, ball):
        r = ball.radius_of_level(0.25)
        assert ball.profile(np.array(r)) == pytest.approx(0.25)

    def test_anisotropic_point(self):
        u = AnisotropicSigmoid(3)
        assert u.value(u.named_point()) == pytest.approx(0.5)

    def test_degenerate_normal(self, ball):
        with pytest.raises(DegenerateGradientError):
            ball.normal(ball.named_point("center"), g_min=1e-6)

    def test_transformed(self, ball):
        motion = RigidMotion.random(3, seed=3)
        moved = TransformedFunction(ball, motion)
        shell = ball.named_point("shell")
        assert moved.mean_curvature(motion.apply(shell)) == pytest.approx(ball.mean_curvature(shell))
        assert moved.value(motion.apply(shell)) == pytest.approx(0.5)


class TestGrid:
    def test_volume(self):
        grid = VolumeGrid(np.zeros(3), np.eye(3), 0.5, 8)
        assert float(grid_reduce(grid, lambda p: np.ones(len(p)))) == pytest.approx(1.0, rel=1e-14)

    def test_workers_do_not_change_sums(self):
        rotation = RigidMotion.random(3, seed=1).rotation
        grid = VolumeGrid(np.array([0.1, 0.2, 0.3]), rotation, 0.7, 64)
        assert len(grid.slabs()) > 1

        def integrand(p):
            return np.sin(3.0 * p).sum(axis=1) * np.exp(-np.sum(p ** 2, axis=1))

        serial = grid_reduce(grid, integrand, CheckExecutor(1))
        parallel = grid_reduce(grid, integrand, CheckExecutor(4))
        assert float(serial) == float(parallel)

    def test_bad_grid(self):
        with pytest.raises(ParameterError):
            VolumeGrid(np.zeros(3), np.eye(3), 0.5, 1)

    def test_coarser(self):
        grid = VolumeGrid(np.zeros(3), np.eye(3), 0.5, 8)
        assert grid.coarser().spacing == pytest.approx(2.0 * grid.spacing)


class TestOperators:
    def test_h_needs_bounded_u(self, gaussian):
        with pytest.raises(HypothesisError):
            h_ku(LinearFunction(3), gaussian, cells=CELLS)

    def test_lk_of_constant(self, ball, gaussian):
        result = l_ku_apply(ball, gaussian, ConstantField(3.0), "shell", cells=CELLS)
        assert result.value == 0.0

    def test_lk_at_critical_point(self, ball, gaussian):
        result = l_ku_apply(ball, gaussian, CoordinateField(1), "center", cells=CELLS)
        assert np.isfinite(result.value)

    def test_c2_forms_agree(self, ball, gaussian):
        direct = c_ku_sq(ball, gaussian, "shell", cells=24)
        rearranged = c_ku_sq_rearranged(ball, gaussian, "shell", cells=24)
        assert direct.value > 0.0
        assert rearranged == pytest.approx(direct.value, rel=1e-9)

    def test_c2_needs_normal(self, ball, gaussian):
        with pytest.raises(DegenerateGradientError):
            c_ku_sq(ball, gaussian, "center", cells=CELLS)

    def test_dimension_mismatch(self, ball):
        with pytest.raises(ParameterError):
            levelset_context(ball, GaussianKernel(4), "shell", cells=CELLS)


class TestSimonsLevelSet:
    def test_linear_function(self, gaussian):
        report = simons_u_residual(LinearFunction(3, slope=2.0), gaussian, "origin", 1, 2, cells=CELLS)
        assert abs(report.residual) < 1e-10
        assert report.passed
        assert report.parameters["cells"] == CELLS

    def test_sigmoid_sphere_at_shell(self, ball, gaussian):
        report = simons_u_residual(ball, gaussian, "shell", 1, 1, cells=24)
        assert report.passed, report.summary()
        assert report.term_c2 != 0.0

    def test_rigid_motion_leaves_terms_unchanged(self, ball, gaussian):
        motion = RigidMotion.random(3, seed=4)
        moved = TransformedFunction(ball, motion)
        shell = ball.named_point("shell")
        tangents = complete_frame(ball.normal(shell))
        original = simons_u_residual(ball, gaussian, shell, 1, 2, cells=CELLS, tangents=tangents)
        image = simons_u_residual(moved, gaussian, motion.apply(shell), 1, 2, cells=CELLS,
                                  tangents=motion.rotate(tangents))
        for term in ("term_lhs", "term_lk", "term_c2", "term_geo"):
            assert getattr(image, term) == pytest.approx(getattr(original, term), rel=1e-8, abs=1e-10)

    def test_singular_kernel(self, ball):
        with pytest.raises(CapabilityError):
            simons_u_residual(ball, FractionalKernel(3, s=0.5), "shell", cells=CELLS)


class TestCoarea:
    def test_radial(self, ball):
        bump = BumpField(ball.named_point("shell") + np.array([0.05, 0.0, 0.0]), 0.3)
        result = coarea_check(ball, bump)
        assert result["passed"], result

    def test_needs_radial(self):
        with pytest.raises(CapabilityError):
            coarea_check(AnisotropicSigmoid(3), BumpField(np.zeros(3), 0.2))

    def test_needs_support(self, ball):
        with pytest.raises(ParameterError):
            coarea_check(ball, CoordinateField(1))

    def test_bump_on_the_shell(self, ball):
        bump = BumpField(ball.named_point("shell"), 0.3)
        result = coarea_check(ball, bump)
        assert result["gap"] <= 1e-4, result
        assert result["levels"] == 128
        assert result["order"] == 64


class TestSharpInterface:
    def test_sphere_limit(self, gaussian):
        study = sharp_interface_study(1.0, gaussian, widths=(0.08, 0.04), cells=32, level=4)
        assert len(study.to_records()) == 2
        assert study.geometric["h"] > 0.0
        assert set(study.checks) == {"h", "c2", "lk"}
        assert study.passed, study.checks

    def test_widths_must_decrease(self, gaussian):
        with pytest.raises(ParameterError):
            sharp_interface_study(1.0, gaussian, widths=(0.02, 0.04))
