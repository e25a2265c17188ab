import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from simonslab.core.errors import ConfigError, DomainError, ParameterError, UnsupportedOperation
from simonslab.kernels import (FractionalKernel, GaussianKernel, Kernel, MollifierKernel,
                               SimonsLimitKernel, kernel_gradient, kernel_mass, kernel_value,
                               make_kernel, unit_sphere_area)

vectors = st.lists(st.floats(-2.0, 2.0), min_size=3, max_size=3).map(np.array)


class TestUnitSphere:
    def test_known_areas(self):
        assert unit_sphere_area(2) == pytest.approx(2.0 * math.pi)
        assert unit_sphere_area(3) == pytest.approx(4.0 * math.pi)

    def test_bad_dimension(self):
        with pytest.raises(ParameterError):
            unit_sphere_area(0)


class TestMakeKernel:
    """Shorthand and mapping construction"""

    def test_shorthand(self):
        k = make_kernel(3, "mollifier:0.15")
        assert isinstance(k, MollifierKernel)
        assert k.eps == 0.15

    def test_mapping(self):
        k = make_kernel(3, {"family": "fractional", "s": 0.25})
        assert isinstance(k, FractionalKernel)
        assert k.scale == pytest.approx(1.0 / 3.25)

    def test_unknown_family(self):
        with pytest.raises(ConfigError):
            make_kernel(3, "cauchy:1")

    def test_invalid_parameter(self):
        with pytest.raises(ParameterError):
            make_kernel(3, "fractional:1.5")


class TestSymmetry:
    """Radial kernels are even and their gradients odd"""

    @given(vectors)
    @settings(max_examples=50)
    def test_even(self, x):
        k = GaussianKernel(3, sigma=0.5)
        assert kernel_value(k, x) == kernel_value(k, -x)

    @given(vectors)
    @settings(max_examples=50)
    def test_gradient_odd(self, x):
        k = MollifierKernel(3, eps=1.0)
        np.testing.assert_array_equal(kernel_gradient(k, x), -kernel_gradient(k, -x))

    def test_gradient_matches_finite_differences(self):
        k = GaussianKernel(3, sigma=0.4)
        x = np.array([0.1, -0.2, 0.15])
        h = 1e-6
        fd = np.array([(kernel_value(k, x + h * e) - kernel_value(k, x - h * e)) / (2 * h)
                       for e in np.eye(3)])
        np.testing.assert_allclose(kernel_gradient(k, x), fd, rtol=1e-7)


class TestMollifier:
    def test_support(self):
        k = MollifierKernel(3, eps=0.3)
        assert k.support_radius == 0.3
        assert k.value(np.array([0.3, 0.5])).tolist() == [0.0, 0.0]
        assert k.value(0.0) > 0.0

    def test_tail_moment_vanishes_outside(self):
        k = MollifierKernel(3, eps=0.3)
        assert float(k.tail_moment(0.4)) == 0.0

    def test_tail_moment_at_zero_is_half_mass(self):
        k = MollifierKernel(3, eps=0.3)
        mass = k.mass_constant
        assert float(k.tail_moment(0.0)) * unit_sphere_area(3) / 2.0 == pytest.approx(mass, rel=1e-7)

    @pytest.mark.parametrize("rho", ["bump", "polynomial"])
    def test_profile_from_shorthand(self, rho):
        k = make_kernel(3, f"mollifier:0.3,{rho}")
        assert k.rho == rho
        assert k.describe()["rho"] == rho
        assert float(k.tail_moment(0.0)) * unit_sphere_area(3) / 2.0 == pytest.approx(k.mass_constant, rel=1e-7)

    def test_profiles_differ(self):
        bump = MollifierKernel(3, eps=0.3)
        polynomial = MollifierKernel(3, eps=0.3, rho="polynomial")
        assert polynomial.value(0.0) == pytest.approx(0.3 ** -5)
        assert bump.value(0.0) == pytest.approx(math.exp(-1.0) * 0.3 ** -5)
        assert polynomial.value(np.array([0.3])).tolist() == [0.0]

    def test_polynomial_derivative(self):
        k = MollifierKernel(3, eps=0.5, rho="polynomial")
        r, step = 0.2, 1e-6
        fd = (k.value(r + step) - k.value(r - step)) / (2.0 * step)
        assert float(k.profile_derivative(np.array(r))) == pytest.approx(float(fd), rel=1e-6)

    def test_unknown_profile(self):
        with pytest.raises(ConfigError) as info:
            make_kernel(3, {"family": "mollifier", "eps": 0.3, "rho": "gaussian"})
        assert info.value.path == "kernel.rho"


class TestGaussian:
    def test_mass_constant(self):
        k = GaussianKernel(3, sigma=0.3, amplitude=2.0)
        expected = 0.5 * 2.0 * (2.0 * math.pi * 0.09) ** 1.5
        assert kernel_mass(k) == pytest.approx(expected, rel=1e-9)

    def test_tail_moment_closed_form(self):
        k = GaussianKernel(3, sigma=0.3)
        for r in (0.0, 0.2, 0.7):
            direct = k._quad(lambda t: float(k.profile(np.array(t))) * t ** 2, r, 10.0)
            assert float(k.tail_moment(r)) == pytest.approx(direct, rel=1e-9)


class TestFractional:
    def test_singular_at_origin(self):
        k = FractionalKernel(3, s=0.5)
        with pytest.raises(DomainError):
            k.value(np.array([0.0, 1.0]))

    def test_not_integrable(self):
        with pytest.raises(UnsupportedOperation):
            kernel_mass(FractionalKernel(3, s=0.5))

    def test_envelope_holds(self):
        k = FractionalKernel(3, s=0.5, C=1.0)
        assert k.bound_violations(np.geomspace(1e-3, 1e3, 200)) == 0

    def test_tail_moment(self):
        k = FractionalKernel(3, s=0.5)
        direct = k._quad(lambda t: float(k.profile(np.array(t))) * t ** 2, 0.5, np.inf)
        assert float(k.tail_moment(0.5)) == pytest.approx(direct, rel=1e-6)


class TestSimonsLimit:
    """Power profile and its quartic cap"""

    def test_tail_moment(self):
        k = SimonsLimitKernel(3, eps=0.2)
        assert float(k.tail_moment(0.5)) == pytest.approx(0.2 * 0.5 ** -0.8 / 0.8)

    def test_cap_is_continuous(self):
        k = SimonsLimitKernel(3, eps=0.2, cap_radius=0.1)
        inside, outside = k.profile(np.array([0.1 - 1e-9, 0.1 + 1e-9]))
        assert inside == pytest.approx(outside, rel=1e-6)
        d_in, d_out = k.profile_derivative(np.array([0.1 - 1e-9, 0.1 + 1e-9]))
        assert d_in == pytest.approx(d_out, rel=1e-6)

    def test_capped_is_smooth_at_origin(self):
        k = SimonsLimitKernel(3, eps=0.2, cap_radius=0.1)
        assert k.singularity_order == 0.0
        assert np.isfinite(k.value(0.0))

    @pytest.mark.parametrize("r", [0.05, 0.3, 1.0])
    def test_capped_moments_match_quadrature(self, r):
        k = SimonsLimitKernel(3, eps=0.3, cap_radius=0.1)
        assert k.radial_moment(r, 3) == pytest.approx(Kernel.radial_moment(k, r, 3), rel=1e-8)
        assert k.derivative_moment(r, 4) == pytest.approx(Kernel.derivative_moment(k, r, 4), rel=1e-8)
        assert k.tail_moment_integral(r) == pytest.approx(Kernel.tail_moment_integral(k, r), rel=1e-8)

    def test_divergent_moment(self):
        k = SimonsLimitKernel(3, eps=0.2)
        with pytest.raises(ParameterError):
            k.radial_moment(1.0, 1)

    def test_capped_is_integrable(self):
        k = SimonsLimitKernel(3, eps=0.2, cap_radius=0.1)
        assert k.integrable
        expected = 0.5 * unit_sphere_area(3) * (Kernel.radial_moment(k, 1.0, 2) + float(k.tail_moment(1.0)))
        assert kernel_mass(k) == pytest.approx(expected, rel=1e-8)
        assert not k.truncatable

    def test_power_profile_is_not_integrable(self):
        k = SimonsLimitKernel(3, eps=0.2)
        assert not k.integrable
        assert k.mass_constant is None
        with pytest.raises(UnsupportedOperation):
            kernel_mass(k)
