"""Adapted frames and tangential calculus at surface points"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from simonslab.core.errors import GeometryError, NumericError, ParameterError

logger = logging.getLogger(__name__)

ON_SURFACE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class FramedPoint:
    """Base point with the adapted frame.

    ``rotation`` has rows (t_1, ..., t_{n-1}, nu), so it maps nu to
    (0, ..., 0, 1).  ``shape[i, j]`` = h_ij = t_i . S t_j in that frame.
    """
    point: np.ndarray
    normal: np.ndarray
    tangents: np.ndarray
    mean_curvature: float
    shape: np.ndarray
    shape_ambient: np.ndarray
    curvature_gradient: Optional[np.ndarray] = field(default=None)

    @property
    def dimension(self):
        return len(self.point)

    @property
    def rotation(self):
        return np.vstack([self.tangents, self.normal])

    @property
    def total_curvature_sq(self):
        """c_E^2 = sum h_ij^2"""
        return float(np.sum(self.shape ** 2))

    def axis(self, i):
        """Frame axis i (1-based): tangents first, then the normal"""
        n = self.dimension
        if not 1 <= i <= n:
            raise ParameterError(f"frame index must lie in 1..{n}, got {i}")
        return self.rotation[i - 1]

    def to_frame(self, v):
        return np.asarray(v, dtype=float) @ self.rotation.T

    def describe(self):
        return {
            "point": self.point.tolist(),
            "normal": self.normal.tolist(),
            "mean_curvature": float(self.mean_curvature),
            "shape": self.shape.tolist(),
        }


def check_tangent_index(i, n, name="i"):
    if isinstance(i, bool) or int(i) != i or not 1 <= i <= n - 1:
        raise ParameterError(f"{name} must lie in 1..{n - 1}, got {i}")
    return int(i)


def surface_frame(S, x, tangents=None, third_order=False):
    """Adapted frame of S at the surface point x"""
    x = np.asarray(x, dtype=float)
    n = S.dimension
    distance = S.distance_estimate(x)
    if distance > ON_SURFACE_TOL * max(1.0, S.length_scale, float(np.linalg.norm(x))):
        raise GeometryError(f"point {x.tolist()} is {distance:.3g} away from the {S.name} surface")

    nu = S.normal(x)
    if tangents is None:
        tangents = S.frame_tangents(x, nu)
    else:
        tangents = np.asarray(tangents, dtype=float)
        if tangents.shape != (n - 1, n):
            raise GeometryError(f"expected {n - 1} tangents in R^{n}")
        gram = np.vstack([tangents, nu])
        if not np.allclose(gram @ gram.T, np.eye(n), atol=1e-10):
            raise GeometryError("tangents must be orthonormal and orthogonal to the normal")

    shape_ambient = S.shape_operator(x)
    shape = tangents @ shape_ambient @ tangents.T
    curvature_gradient = None
    if third_order:
        curvature_gradient = np.stack(
            [tangents @ S.curvature_derivative(x, t) @ tangents.T for t in tangents])

    return FramedPoint(point=x, normal=nu, tangents=tangents,
                       mean_curvature=float(np.trace(shape_ambient)),
                       shape=shape, shape_ambient=shape_ambient,
                       curvature_gradient=curvature_gradient)


def surface_curve(S, x, direction, s):
    """Points x + s t pulled back onto S along nu(x), one row per s"""
    x = np.asarray(x, dtype=float)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    nu = S.normal(x)
    start = x[None, :] + s[:, None] * np.asarray(direction, dtype=float)[None, :]
    return S.project(start, nu)


def _direction(S, x, i, frame):
    n = S.dimension
    if isinstance(i, (int, np.integer)) and not isinstance(i, bool):
        if frame is not None:
            return frame.axis(int(i))
        if not 1 <= i <= n:
            raise ParameterError(f"direction index must lie in 1..{n}, got {i}")
        return np.eye(n)[int(i) - 1]
    d = np.asarray(i, dtype=float)
    if d.shape != (n,):
        raise ParameterError(f"direction must be an index or a vector in R^{n}")
    return d


def tangential_derivative(S, g, x, i, frame=None):
    """delta_i g = d_i g - nu_i (nu . grad g) at a surface point.

    ``i`` is a 1-based ambient axis, a frame axis when ``frame`` is given,
    or an explicit direction vector.
    """
    from simonslab.geometry.fields import field_gradient

    x = np.asarray(x, dtype=float)
    d = _direction(S, x, i, frame)
    nu = S.normal(x)
    grad = field_gradient(g, x[None])[0]
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite gradient", stencil=grad.tolist())
    return float(d @ grad - (d @ nu) * (nu @ grad))


FIVE_POINT = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
STEPS = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])


def second_derivative_along(S, fn, x, direction, h):
    """d^2/ds^2 fn(curve(s)) at s = 0, fourth-order stencil"""
    points = surface_curve(S, x, direction, STEPS * h)
    values = np.asarray(fn(points), dtype=float)
    if not np.all(np.isfinite(values)):
        raise NumericError("non-finite value in second-derivative stencil", stencil=values.tolist())
    return float(FIVE_POINT @ values) / h ** 2


def surface_laplacian(S, g, x, h=None, frame=None):
    """Laplace-Beltrami of g at x from geodesic-equivalent surface curves"""
    x = np.asarray(x, dtype=float)
    if frame is None:
        frame = surface_frame(S, x)
    h = 1e-2 * S.length_scale if h is None else float(h)
    fn = g.value if hasattr(g, "value") else g
    total = 0.0
    for t in frame.tangents:
        total += second_derivative_along(S, fn, x, t, h)
    return total
