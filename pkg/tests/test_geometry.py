import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simonslab.core.errors import CapabilityError, ConfigError, GeometryError, ParameterError
from simonslab.geometry.fields import (BumpField, CoordinateField, ShapeEntryField, TransformedField,
                                       random_bumps)
from simonslab.geometry.frame import (check_tangent_index, surface_frame, surface_laplacian,
                                      tangential_derivative)
from simonslab.geometry.graph import Polynomial, paraboloid_disk_area
from simonslab.geometry.motion import RigidMotion
from simonslab.geometry.rules import build_quadrature
from simonslab.geometry.surfaces import (Helicoid, Sphere, TransformedSurface,
                                         complete_frame, make_surface)

angles = st.tuples(st.floats(0.05, math.pi - 0.05), st.floats(0.0, 2.0 * math.pi))


def sphere_point(theta, phi, a=1.0):
    return a * np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


class TestSurfaces:
    """Implicit surface data"""

    def test_sphere_shape(self, sphere, north_frame):
        np.testing.assert_allclose(north_frame.shape, np.eye(2), atol=1e-14)
        assert north_frame.mean_curvature == pytest.approx(2.0)

    def test_plane_is_flat(self, plane):
        frame = surface_frame(plane, np.zeros(3))
        assert frame.total_curvature_sq == 0.0
        np.testing.assert_array_equal(frame.normal, [0.0, 0.0, 1.0])

    def test_catenoid_is_minimal(self, catenoid):
        for name in ("neck", "upper"):
            frame = surface_frame(catenoid, catenoid.named_point(name))
            assert abs(frame.mean_curvature) < 1e-12

    def test_catenoid_neck_curvature(self, catenoid):
        frame = surface_frame(catenoid, catenoid.named_point("neck"))
        assert frame.total_curvature_sq == pytest.approx(2.0, rel=1e-12)

    def test_helicoid_is_minimal(self):
        helicoid = Helicoid(3)
        frame = surface_frame(helicoid, helicoid.named_point("twisted"))
        assert abs(frame.mean_curvature) < 1e-12

    def test_point_off_surface(self, sphere):
        with pytest.raises(GeometryError):
            surface_frame(sphere, np.array([0.0, 0.0, 1.1]))

    def test_unknown_point(self, sphere):
        with pytest.raises(ConfigError):
            sphere.named_point("south-west")

    def test_shorthand(self):
        sphere = make_surface("sphere:2")
        assert sphere.radius == 2.0
        with pytest.raises(ConfigError):
            make_surface("torus:1")

    def test_helicoid_has_no_quadrature(self):
        helicoid = Helicoid(3)
        frame = surface_frame(helicoid, helicoid.named_point())
        with pytest.raises(CapabilityError):
            build_quadrature(helicoid, frame, R=0.5, level=2)


class TestFrames:
    """Adapted frames"""

    @given(angles)
    @settings(max_examples=40)
    def test_orthonormal(self, angle):
        sphere = Sphere(3)
        frame = surface_frame(sphere, sphere_point(*angle))
        rotation = frame.rotation
        np.testing.assert_allclose(rotation @ rotation.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(rotation) == pytest.approx(1.0)

    @given(st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3))
    def test_complete_frame(self, v):
        v = np.array(v)
        if np.linalg.norm(v) < 1e-3:
            v = np.array([0.0, 0.0, 1.0])
        nu = v / np.linalg.norm(v)
        tangents = complete_frame(nu)
        np.testing.assert_allclose(tangents @ nu, 0.0, atol=1e-12)
        np.testing.assert_allclose(tangents @ tangents.T, np.eye(2), atol=1e-12)

    def test_tangent_index(self):
        assert check_tangent_index(2, 3) == 2
        with pytest.raises(ParameterError):
            check_tangent_index(3, 3)
        with pytest.raises(ParameterError):
            check_tangent_index(True, 3)


class TestTangentialCalculus:
    def test_coordinate_laplacian(self, sphere, north_frame):
        # Delta x_k = -H nu_k on any hypersurface
        value = surface_laplacian(sphere, CoordinateField(3), north_frame.point, frame=north_frame)
        assert value == pytest.approx(-2.0, rel=1e-6)

    def test_tangential_derivative_of_height(self, sphere):
        x = sphere_point(0.7, 0.3)
        nu = sphere.normal(x)
        expected = -nu[2] * nu[0]
        assert tangential_derivative(sphere, CoordinateField(3), x, 1) == pytest.approx(expected, abs=1e-12)

    def test_shape_entry_field(self, sphere, north_frame):
        t1 = north_frame.tangents[0]
        field = ShapeEntryField(sphere, t1, t1)
        assert field.value(north_frame.point)[0] == pytest.approx(1.0)


class TestQuadrature:
    """Polar surface rules"""

    def test_sphere_area(self, sphere, north_frame):
        rule = build_quadrature(sphere, north_frame, R=2.0, level=4)
        assert rule.covers
        assert rule.area_estimate == pytest.approx(4.0 * math.pi, rel=1e-10)

    def test_paraboloid_disk(self):
        surface = make_surface({"name": "paraboloid", "domain": "disk", "extent": 1.0})
        base = surface_frame(surface, np.zeros(3))
        rule = build_quadrature(surface, base, R=3.0, level=5)
        assert rule.area_estimate == pytest.approx(paraboloid_disk_area(1.0), rel=1e-8)

    def test_weights_positive(self, catenoid):
        base = surface_frame(catenoid, catenoid.named_point("neck"))
        rule = build_quadrature(catenoid, base, R=0.8, level=3)
        assert np.all(rule.weights > 0.0)
        assert np.all(np.linalg.norm(rule.points - base.point, axis=1) <= 0.8 * (1 + 1e-12))

    def test_exclusion(self, sphere, north_frame):
        rule = build_quadrature(sphere, north_frame, delta=0.2, R=1.0, level=3)
        assert np.all(rule.chart_radius >= 0.2)
        with pytest.raises(ParameterError):
            build_quadrature(sphere, north_frame, delta=1.0, R=1.0, level=3)

    def test_refinement_shrinks_spacing(self, sphere, north_frame):
        coarse = build_quadrature(sphere, north_frame, R=1.0, level=3)
        fine = coarse.at_level(4)
        assert fine.spacing == pytest.approx(coarse.spacing / 2.0)
        assert fine.size > coarse.size


class TestRigidMotions:
    """Covariance of the surface data"""

    def test_random_rotation_is_proper(self):
        motion = RigidMotion.random(3, seed=5)
        np.testing.assert_allclose(motion.rotation @ motion.rotation.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(motion.rotation) == pytest.approx(1.0)

    def test_rejects_non_orthogonal(self):
        with pytest.raises(ParameterError):
            RigidMotion(np.diag([1.0, 2.0, 1.0]))

    def test_transformed_curvature(self, catenoid):
        motion = RigidMotion.random(3, seed=11)
        moved = TransformedSurface(catenoid, motion)
        x = catenoid.named_point("upper")
        original = surface_frame(catenoid, x)
        image = surface_frame(moved, motion.apply(x))
        np.testing.assert_allclose(image.shape, original.shape, atol=1e-10)
        np.testing.assert_allclose(image.normal, motion.rotate(original.normal), atol=1e-12)

    def test_transformed_field(self):
        motion = RigidMotion.random(3, seed=2)
        bump = BumpField(np.array([0.1, 0.0, 0.2]), 0.5)
        moved = TransformedField(bump, motion)
        x = np.array([[0.2, 0.1, 0.1]])
        assert moved.value(motion.apply(x))[0] == pytest.approx(bump.value(x)[0])


class TestFields:
    def test_bump_support(self):
        bump = BumpField(np.zeros(3), 0.5, amplitude=2.0)
        assert bump.value(np.zeros(3))[0] == pytest.approx(2.0)
        assert bump.value(np.array([0.5, 0.0, 0.0]))[0] == 0.0

    def test_bump_gradient(self):
        bump = BumpField(np.zeros(3), 0.5)
        x = np.array([[0.1, -0.2, 0.05]])
        numeric = super(BumpField, bump).gradient(x)
        np.testing.assert_allclose(bump.gradient(x), numeric, rtol=1e-7)

    def test_random_bumps_are_reproducible(self):
        a = random_bumps(np.random.default_rng(4), np.zeros(3), 0.2, 0.3, 3)
        b = random_bumps(np.random.default_rng(4), np.zeros(3), 0.2, 0.3, 3)
        assert [bump.center.tolist() for bump in a] == [bump.center.tolist() for bump in b]


class TestPolynomial:
    def test_table(self):
        p = Polynomial.from_table("# e1 e2 c\n2 0 0.5\n0 2 1.0\n", 2)
        assert p.degree == 2
        np.testing.assert_allclose(p(np.array([[1.0, 2.0]])), [4.5])
        np.testing.assert_allclose(p.hessian(np.zeros((1, 2)))[0], np.diag([1.0, 2.0]))

    def test_bad_line(self):
        with pytest.raises(ConfigError):
            Polynomial.from_table("2 0 x\n", 2)

    def test_graph_from_terms(self):
        surface = make_surface({"name": "graph", "terms": [[2, 0, 0.5], [0, 2, 1.0]]})
        frame = surface_frame(surface, np.zeros(3))
        np.testing.assert_allclose(frame.shape_ambient[:2, :2], -np.diag([1.0, 2.0]), atol=1e-12)
