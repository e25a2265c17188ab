import math

import numpy as np
import pytest

from simonslab.core.errors import CapabilityError, HypothesisError, ParameterError
from simonslab.geometry.fields import BumpField, ConstantField, CoordinateField
from simonslab.geometry.frame import surface_frame
from simonslab.geometry.graph import AnisotropicParaboloid, Paraboloid
from simonslab.geometry.motion import RigidMotion
from simonslab.geometry.surfaces import Helicoid, TransformedSurface
from simonslab.identities import (classical_simons_residual, classical_simons_terms, limit_study,
                                  simons_residual, stability_conclusion_check,
                                  stability_decomposition_check)
from simonslab.identities.limit import classical_targets
from simonslab.identities.reports import ResidualReport, fit_rate
from simonslab.identities.stability import curvature_at_nodes
from simonslab.kernels import FractionalKernel
from simonslab.nonlocal_ops import make_context


@pytest.fixture
def small_sphere_context(sphere, mollifier):
    return make_context(sphere, mollifier, "north", level=3)


class TestResidualReport:
    def test_passed_within_budget(self):
        report = ResidualReport("simons", 1.0, 0.5, 0.25, 0.25 - 1e-9, {"lhs": 1e-10}, {})
        assert report.residual == pytest.approx(1e-9)
        assert report.passed

    def test_failed_outside_budget(self):
        report = ResidualReport("simons", 1.0, 0.5, 0.25, 0.0, {"lhs": 1e-3, "lk": 1e-3}, {})
        assert report.budget_total == pytest.approx(2e-3)
        assert not report.passed
        record = report.to_record()
        assert record["passed"] is False
        assert record["residual"] == pytest.approx(0.25)


class TestSimonsResidual:
    def test_plane(self, plane_context):
        report = simons_residual(plane_context, 1, 2)
        assert report.residual == 0.0
        assert report.passed

    def test_sphere(self, sphere, mollifier):
        ctx = make_context(sphere, mollifier, "north", level=5)
        report = simons_residual(ctx, 1, 1)
        assert report.passed, report.summary()
        assert report.checks["symmetry_ok"]
        assert report.parameters["L"] == 5
        assert set(report.budgets) == {"lhs", "lk", "c2", "geo"}

    def test_budget_resolves_the_curvature_term(self, sphere, mollifier):
        report = simons_residual(make_context(sphere, mollifier, "north", level=5), 1, 1)
        assert report.term_c2 != 0.0
        assert report.budget_total < abs(report.term_c2)
        assert "finite_difference" in report.checks
        assert report.checks["finite_difference_ok"]

    @pytest.mark.parametrize("name", ["paraboloid", "anisotropic"])
    @pytest.mark.parametrize("i, j", [(1, 2), (2, 1), (2, 2)])
    def test_paraboloid_off_axis(self, mollifier, name, i, j):
        surface = Paraboloid(3) if name == "paraboloid" else AnisotropicParaboloid(3)
        report = simons_residual(make_context(surface, mollifier, "offset", level=5), i, j)
        assert report.passed, report.summary()
        assert report.checks["symmetry_ok"]

    def test_rigid_motion_leaves_terms_unchanged(self, mollifier):
        surface = AnisotropicParaboloid(3)
        motion = RigidMotion.random(3, seed=7)
        moved = TransformedSurface(surface, motion)
        original = simons_residual(make_context(surface, mollifier, "offset", level=4), 1, 2)
        image = simons_residual(make_context(moved, mollifier, "offset", level=4), 1, 2)
        for term in ("term_lhs", "term_lk", "term_c2", "term_geo"):
            assert getattr(image, term) == pytest.approx(getattr(original, term), rel=1e-8, abs=1e-10)

    def test_bad_index(self, plane_context):
        with pytest.raises(ParameterError):
            simons_residual(plane_context, 3, 1)

    def test_singular_kernel(self, sphere):
        ctx = make_context(sphere, FractionalKernel(3, s=0.5), "north", delta=0.05, level=3)
        with pytest.raises(CapabilityError):
            simons_residual(ctx, 1, 1)


class TestClassical:
    """Simons' identity on classical minimal surfaces"""

    @pytest.mark.parametrize("name", ["neck", "upper"])
    def test_catenoid(self, catenoid, name):
        assert abs(classical_simons_residual(catenoid, catenoid.named_point(name))) <= 1e-6

    def test_helicoid(self):
        helicoid = Helicoid(3)
        terms = classical_simons_terms(helicoid, helicoid.named_point("twisted"))
        assert terms["c2"] > 0.0
        assert abs(terms["residual"]) <= 1e-6

    def test_sphere_is_not_minimal(self, sphere):
        with pytest.raises(HypothesisError):
            classical_simons_residual(sphere, sphere.named_point())


class TestLimit:
    def test_targets_at_neck(self, catenoid):
        base = surface_frame(catenoid, catenoid.named_point("neck"))
        targets, _ = classical_targets(catenoid, base, 1, 1)
        assert targets["c2"] == pytest.approx(math.pi)
        assert targets["h"] == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("schedule", [(0.1, 0.2), (), (0.5, 1.5)])
    def test_bad_schedule(self, catenoid, schedule):
        with pytest.raises(ParameterError):
            limit_study(catenoid, eps_schedule=schedule)

    def test_bad_mode(self, catenoid):
        with pytest.raises(ParameterError):
            limit_study(catenoid, mode="window")

    def test_converges_at_neck(self, catenoid):
        study = limit_study(catenoid, "neck", eps_schedule=(0.4, 0.2, 0.1), level=6)
        assert len(study) == 3
        assert study.monotone("c2")
        assert study.rates["c2"] > 0.0
        assert study.targets["c2"] == pytest.approx(math.pi)

    def test_fit_rate(self):
        eps = [0.4, 0.2, 0.1, 0.05]
        assert fit_rate(eps, [3.0 * e for e in eps]) == pytest.approx(1.0)
        assert fit_rate(eps, [0.0] * 4) is None


class TestStability:
    """Algebra of the stability inequality"""

    def test_decomposition(self, small_sphere_context):
        ctx = small_sphere_context
        eta = BumpField(ctx.base.point, 0.3)
        c = curvature_at_nodes(ctx.kernel, ctx.rule)
        report = stability_decomposition_check(ctx, eta, c)
        assert report.passed, report.checks
        assert report.discarded >= 0.0

    def test_decomposition_with_field(self, small_sphere_context):
        ctx = small_sphere_context
        eta = BumpField(ctx.base.point + np.array([0.05, 0.0, 0.0]), 0.25)
        c = CoordinateField(3) + ConstantField(1.0)
        assert stability_decomposition_check(ctx, eta, c).passed

    def test_negative_c(self, small_sphere_context):
        eta = BumpField(small_sphere_context.base.point, 0.3)
        with pytest.raises(ParameterError):
            stability_decomposition_check(small_sphere_context, eta, ConstantField(-1.0))

    def test_synthetic_conclusion(self, small_sphere_context):
        eta = BumpField(small_sphere_context.base.point, 0.3)
        conclusion = stability_conclusion_check(small_sphere_context, eta, synthetic=True)
        assert conclusion.passed
        assert conclusion.mean_curvature is None
        assert any("synthetic" in item for item in conclusion.assumed)

    def test_sphere_is_not_k_minimal(self, small_sphere_context):
        eta = BumpField(small_sphere_context.base.point, 0.3)
        with pytest.raises(HypothesisError):
            stability_conclusion_check(small_sphere_context, eta)

    def test_plane(self, plane, mollifier):
        ctx = make_context(plane, mollifier, "origin", level=3)
        eta = BumpField(ctx.base.point, 0.3)
        conclusion = stability_conclusion_check(ctx, eta)
        assert conclusion.mean_curvature == 0.0
        assert conclusion.passed
