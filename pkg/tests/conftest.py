import numpy as np
import pytest

from simonslab.geometry.frame import surface_frame
from simonslab.geometry.graph import Paraboloid, Plane
from simonslab.geometry.surfaces import Catenoid, Sphere
from simonslab.kernels import MollifierKernel
from simonslab.nonlocal_ops import make_context


@pytest.fixture
def sphere():
    return Sphere(3, radius=1.0)


@pytest.fixture
def plane():
    return Plane(3)


@pytest.fixture
def paraboloid():
    return Paraboloid(3)


@pytest.fixture
def catenoid():
    return Catenoid(3, neck=1.0)


@pytest.fixture
def mollifier():
    return MollifierKernel(3, eps=0.3)


@pytest.fixture
def sphere_context(sphere, mollifier):
    return make_context(sphere, mollifier, "north", level=4)


@pytest.fixture
def plane_context(plane, mollifier):
    return make_context(plane, mollifier, "origin", level=4)


@pytest.fixture
def north_frame(sphere):
    return surface_frame(sphere, np.array([0.0, 0.0, 1.0]))
