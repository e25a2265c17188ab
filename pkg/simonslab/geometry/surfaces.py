"""Hypersurface catalog.

Every surface is the boundary of E = {phi < 0} for an analytic level
function phi, so normal, shape operator and mean curvature share one code
path:

    nu = grad phi / |grad phi|
    S  = P (hess phi) P / |grad phi|,   P = I - nu nu^T
    H  = tr S                            (no division by n - 1)

Surfaces that admit surface quadrature also provide a polar patch around a
framed base point (see ``geometry.rules``).
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from simonslab.core.config import parse_shorthand, resolve_properties
from simonslab.core.errors import (CapabilityError, ConfigError, GeometryError,
                                   ParameterError)
from simonslab.core.registry import get_all, get_class, register

logger = logging.getLogger(__name__)

NEWTON_STEPS = 60


def as_points(x, dimension):
    """Return (points (N, n), was_single)"""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[-1] != dimension:
        raise ParameterError(f"expected points in R^{dimension}, got shape {x.shape}")
    return pts, single


def complete_frame(normal):
    """Orthonormal tangents by Gram-Schmidt of the coordinate axes.

    Rows (t_1, ..., t_{n-1}, nu) form a proper rotation.
    """
    normal = np.asarray(normal, dtype=float)
    n = len(normal)
    order = np.argsort(np.abs(normal), kind="stable")
    basis = [normal]
    for k in order[: n - 1]:
        v = np.eye(n)[k]
        for b in basis:
            v = v - (v @ b) * b
        basis.append(v / np.linalg.norm(v))
    tangents = np.array(basis[1:])
    if np.linalg.det(np.vstack([tangents, normal])) < 0.0:
        tangents[-1] = -tangents[-1]
    return tangents


@dataclass(frozen=True)
class PolarPatch:
    """Polar coordinates (rho, phi) around a base point.

    ``embed(rho, phi)`` returns points, the area density (dA = density
    drho dphi) and a validity mask.  ``edge(phi)`` is the outer chart radius
    when it varies with the angle; ``sectors`` are angular breakpoints where
    the edge has corners.
    """
    radius: float
    embed: Callable
    edge: Optional[Callable] = None
    sectors: Optional[np.ndarray] = None
    covers: bool = False


class Surface:
    """Base class of implicit hypersurfaces"""
    name = "surface"
    category = "Surfaces"
    properties = {}
    positional = ()
    default_point_name = "origin"
    has_analytic_third = False

    def __init__(self, dimension=3, **params):
        self.dimension = int(dimension)
        if self.dimension < 2:
            raise ParameterError(f"ambient dimension must be >= 2, got {dimension}")
        self.params = resolve_properties(type(self), params, path="surface")
        for key, value in self.params.items():
            setattr(self, key, value)
        self._validate()

    def _validate(self):
        pass

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{type(self).__name__}({args})"

    def describe(self):
        return {"name": self.name, "dimension": self.dimension, **self.params}

    # -- implicit data, vectorized over (N, n) -------------------------------

    def _level(self, x):
        raise NotImplementedError

    def _gradient(self, x):
        raise NotImplementedError

    def _hessian(self, x):
        raise NotImplementedError

    def _hessian_derivative(self, x, t):
        """Directional derivative of the Hessian along t (finite differences)"""
        h = self.fd_step(x)[:, None, None]
        step = h[..., 0] * t
        plus2 = self._hessian(x + 2.0 * step)
        plus1 = self._hessian(x + step)
        minus1 = self._hessian(x - step)
        minus2 = self._hessian(x - 2.0 * step)
        return (-plus2 + 8.0 * plus1 - 8.0 * minus1 + minus2) / (12.0 * h)

    def level(self, x):
        pts, single = as_points(x, self.dimension)
        out = self._level(pts)
        return out[0] if single else out

    def level_gradient(self, x):
        pts, single = as_points(x, self.dimension)
        out = self._gradient(pts)
        return out[0] if single else out

    def level_hessian(self, x):
        pts, single = as_points(x, self.dimension)
        out = self._hessian(pts)
        return out[0] if single else out

    # -- geometric data ------------------------------------------------------

    @property
    def length_scale(self):
        return 1.0

    @property
    def growth_exponent(self):
        """Declared beta in the area-growth hypothesis"""
        return float(self.dimension - 1)

    @property
    def coverage_radius(self):
        """Largest truncation radius a polar patch supports"""
        return math.inf

    def fd_step(self, x):
        """h_fd = 1e-4 * local curvature scale"""
        kappa = np.linalg.norm(self._shape(x), axis=(1, 2), ord=2)
        scale = np.minimum(self.length_scale, 1.0 / np.maximum(kappa, 1e-300))
        return 1e-4 * scale

    def _shape(self, x):
        g = self._gradient(x)
        norm = np.linalg.norm(g, axis=1)
        if np.any(norm == 0.0):
            raise GeometryError("level function has a critical point on the surface")
        nu = g / norm[:, None]
        proj = np.eye(self.dimension)[None] - nu[:, :, None] * nu[:, None, :]
        shape = proj @ self._hessian(x) @ proj / norm[:, None, None]
        return 0.5 * (shape + np.swapaxes(shape, 1, 2))

    def normal(self, x):
        """Exterior unit normal"""
        pts, single = as_points(x, self.dimension)
        g = self._gradient(pts)
        norm = np.linalg.norm(g, axis=1)
        if np.any(norm == 0.0):
            raise GeometryError("level function has a critical point on the surface")
        out = g / norm[:, None]
        return out[0] if single else out

    def shape_operator(self, x):
        """Ambient shape operator S = grad_T nu (symmetric, S nu = 0)"""
        pts, single = as_points(x, self.dimension)
        out = self._shape(pts)
        return out[0] if single else out

    def mean_curvature(self, x):
        """H_E = tr S"""
        pts, single = as_points(x, self.dimension)
        out = np.trace(self._shape(pts), axis1=1, axis2=2)
        return out[0] if single else out

    def curvature_derivative(self, x, t):
        """D_t S along tangent vectors t at surface points x"""
        pts, single = as_points(x, self.dimension)
        t = np.broadcast_to(np.asarray(t, dtype=float), pts.shape)
        g = self._gradient(pts)
        gn = np.linalg.norm(g, axis=1)
        nu = g / gn[:, None]
        hess = self._hessian(pts)
        proj = np.eye(self.dimension)[None] - nu[:, :, None] * nu[:, None, :]
        shape = proj @ hess @ proj / gn[:, None, None]

        ht = np.einsum("nij,nj->ni", hess, t)
        dg = np.einsum("ni,ni->n", nu, ht)
        dnu = np.einsum("nij,nj->ni", proj, ht) / gn[:, None]
        dproj = -(dnu[:, :, None] * nu[:, None, :] + nu[:, :, None] * dnu[:, None, :])
        dhess = self._hessian_derivative(pts, t)
        out = (dproj @ hess @ proj + proj @ dhess @ proj + proj @ hess @ dproj) / gn[:, None, None] \
            - shape * (dg / gn)[:, None, None]
        out = 0.5 * (out + np.swapaxes(out, 1, 2))
        return out[0] if single else out

    def distance_estimate(self, x):
        """|phi| / |grad phi|, a first-order distance to the surface"""
        pts, single = as_points(x, self.dimension)
        out = np.abs(self._level(pts)) / np.linalg.norm(self._gradient(pts), axis=1)
        return out[0] if single else out

    def project(self, x, direction, tol=1e-14):
        """Move points along ``direction`` onto the surface (Newton on phi)"""
        pts, single = as_points(x, self.dimension)
        d = np.broadcast_to(np.asarray(direction, dtype=float), pts.shape)
        tau = np.zeros(len(pts))
        for _ in range(NEWTON_STEPS):
            y = pts + tau[:, None] * d
            slope = np.einsum("ni,ni->n", self._gradient(y), d)
            if np.any(np.abs(slope) < 1e-300):
                raise GeometryError("projection direction tangent to the surface")
            delta = self._level(y) / slope
            tau = tau - delta
            if np.max(np.abs(delta)) <= tol * self.length_scale:
                break
        out = pts + tau[:, None] * d
        return out[0] if single else out

    def frame_tangents(self, x, normal):
        return complete_frame(normal)

    # -- points and charts ---------------------------------------------------

    def named_points(self):
        return {}

    def named_point(self, name=None):
        name = name or self.default_point_name
        points = self.named_points()
        if name not in points:
            raise ConfigError("point", f"unknown point {name!r} for {self.name}; known: {sorted(points)}")
        return np.asarray(points[name], dtype=float)

    def polar_patch(self, base, R):
        raise CapabilityError(f"{self.name} provides pointwise data only, no surface quadrature")


@register("surface")
class Sphere(Surface):
    """Round sphere bounding the ball E"""
    name = "sphere"
    positional = ("radius",)
    default_point_name = "north"
    properties = {
        "radius": {"type": "float", "default": 1.0},
        "center": {"type": "float_list", "default": None, "optional": True},
    }

    def _validate(self):
        if self.radius <= 0.0:
            raise ParameterError("sphere radius must be positive")
        self._center = np.zeros(self.dimension) if self.center is None else np.asarray(self.center, float)
        if self._center.shape != (self.dimension,):
            raise ParameterError("sphere center has the wrong dimension")

    @property
    def length_scale(self):
        return self.radius

    @property
    def coverage_radius(self):
        return 2.0 * self.radius

    def _level(self, x):
        return np.linalg.norm(x - self._center, axis=1) - self.radius

    def _gradient(self, x):
        d = x - self._center
        return d / np.linalg.norm(d, axis=1)[:, None]

    def _hessian(self, x):
        d = x - self._center
        rho = np.linalg.norm(d, axis=1)
        u = d / rho[:, None]
        return (np.eye(self.dimension)[None] - u[:, :, None] * u[:, None, :]) / rho[:, None, None]

    def named_points(self):
        north = self._center.copy()
        north[-1] += self.radius
        east = self._center.copy()
        east[0] += self.radius
        return {"north": north, "east": east}

    def polar_patch(self, base, R):
        if self.dimension != 3:
            raise CapabilityError("surface quadrature is implemented in R^3")
        a = self.radius
        covers = R >= 2.0 * a
        radius = math.pi * a if covers else 2.0 * a * math.asin(R / (2.0 * a))
        nu0 = base.normal
        t1, t2 = base.tangents

        def embed(rho, phi):
            theta = rho / a
            direction = np.cos(phi)[:, None] * t1 + np.sin(phi)[:, None] * t2
            points = self._center + a * (np.cos(theta)[:, None] * nu0 + np.sin(theta)[:, None] * direction)
            return points, a * np.sin(theta), np.ones(len(rho), dtype=bool)

        return PolarPatch(radius, embed, covers=covers)


class ParametricSurface(Surface):
    """Surface with a global parametrization X(u), u in R^2 (n = 3)"""
    periodic = ()        # parameter indices that are angles

    def parametrize(self, u):
        raise NotImplementedError

    def jacobian(self, u):
        """(N, 3, 2) derivative of X"""
        raise NotImplementedError

    def parameter_of(self, x):
        raise NotImplementedError

    def parameter_bounds(self, u0, R):
        """Bounds on |du_a| for points within ambient distance R of X(u0)"""
        raise NotImplementedError

    def domain_edge(self, u0, w):
        """Largest t with u0 + t w inside the parameter domain (inf if unbounded)"""
        return np.full(len(w), np.inf)

    def domain_corners(self):
        return None

    def polar_patch(self, base, R):
        if self.dimension != 3:
            raise CapabilityError("surface quadrature is implemented in R^3")
        u0 = self.parameter_of(base.point)
        j0 = self.jacobian(u0[None])[0]
        tangents = base.tangents
        chart = np.linalg.pinv(j0) @ tangents.T            # J0 M = T^T
        inverse = np.linalg.inv(chart)
        det = abs(np.linalg.det(chart))

        bounds = self.parameter_bounds(u0, R)
        rho_max = np.linalg.norm(inverse, ord=2) * float(np.linalg.norm(bounds))

        def direction(phi):
            return np.stack([np.cos(phi), np.sin(phi)], axis=1) @ chart.T

        def edge(phi):
            return np.minimum(rho_max, self.domain_edge(u0, direction(phi)))

        samples = np.linspace(0.0, 2.0 * math.pi, 4096, endpoint=False)
        sampled = edge(samples)
        if not np.all(np.isfinite(sampled)):
            raise ParameterError("polar patch edge is unbounded; give a finite truncation radius")
        lo, hi = float(sampled.min()), float(sampled.max())
        varying = hi - lo > 1e-12 * hi
        radius = lo * (1.0 - 1e-3) if varying else lo

        sectors = None
        corners = self.domain_corners()
        if varying and corners is not None:
            rel = (corners - u0) @ inverse.T
            sectors = np.sort(np.mod(np.arctan2(rel[:, 1], rel[:, 0]), 2.0 * math.pi))

        periodic = list(self.periodic)

        def embed(rho, phi):
            u = u0 + rho[:, None] * direction(phi)
            valid = np.ones(len(rho), dtype=bool)
            for k in periodic:
                valid &= np.abs(u[:, k] - u0[k]) <= math.pi
            jac = self.jacobian(u)
            metric = np.einsum("nia,nib->nab", jac, jac)
            density = np.sqrt(np.linalg.det(metric)) * det * rho
            return self.parametrize(u), density, valid

        return PolarPatch(radius, embed, edge=edge if varying else None, sectors=sectors,
                          covers=False)


@register("surface")
class Cylinder(ParametricSurface):
    """Round cylinder about the last axis, E the solid cylinder"""
    name = "cylinder"
    positional = ("radius",)
    periodic = (0,)
    properties = {"radius": {"type": "float", "default": 1.0}}

    def _validate(self):
        if self.dimension != 3:
            raise ParameterError("cylinder is defined in R^3")
        if self.radius <= 0.0:
            raise ParameterError("cylinder radius must be positive")

    @property
    def length_scale(self):
        return self.radius

    @property
    def growth_exponent(self):
        return 1.0

    def _level(self, x):
        return np.hypot(x[:, 0], x[:, 1]) - self.radius

    def _gradient(self, x):
        rho = np.hypot(x[:, 0], x[:, 1])
        return np.stack([x[:, 0] / rho, x[:, 1] / rho, np.zeros(len(x))], axis=1)

    def _hessian(self, x):
        rho = np.hypot(x[:, 0], x[:, 1])
        u = x[:, :2] / rho[:, None]
        out = np.zeros((len(x), 3, 3))
        out[:, :2, :2] = (np.eye(2)[None] - u[:, :, None] * u[:, None, :]) / rho[:, None, None]
        return out

    def named_points(self):
        return {"origin": np.array([self.radius, 0.0, 0.0])}

    def parametrize(self, u):
        a = self.radius
        return np.stack([a * np.cos(u[:, 0]), a * np.sin(u[:, 0]), u[:, 1]], axis=1)

    def jacobian(self, u):
        a = self.radius
        out = np.zeros((len(u), 3, 2))
        out[:, 0, 0] = -a * np.sin(u[:, 0])
        out[:, 1, 0] = a * np.cos(u[:, 0])
        out[:, 2, 1] = 1.0
        return out

    def parameter_of(self, x):
        return np.array([math.atan2(x[1], x[0]), x[2]])

    def parameter_bounds(self, u0, R):
        a = self.radius
        angle = math.pi if R >= 2.0 * a else 2.0 * math.asin(R / (2.0 * a))
        return np.array([angle, R])


@register("surface")
class Catenoid(ParametricSurface):
    """Catenoid r = c cosh(z/c); E is the region around the axis"""
    name = "catenoid"
    positional = ("neck",)
    default_point_name = "neck"
    periodic = (0,)
    properties = {"neck": {"type": "float", "default": 1.0}}

    def _validate(self):
        if self.dimension != 3:
            raise ParameterError("catenoid is defined in R^3")
        if self.neck <= 0.0:
            raise ParameterError("neck radius must be positive")

    @property
    def length_scale(self):
        return self.neck

    @property
    def coverage_radius(self):
        return 1.9 * self.neck

    def _level(self, x):
        c = self.neck
        return np.hypot(x[:, 0], x[:, 1]) - c * np.cosh(x[:, 2] / c)

    def _gradient(self, x):
        c = self.neck
        rho = np.hypot(x[:, 0], x[:, 1])
        return np.stack([x[:, 0] / rho, x[:, 1] / rho, -np.sinh(x[:, 2] / c)], axis=1)

    def _hessian(self, x):
        c = self.neck
        rho = np.hypot(x[:, 0], x[:, 1])
        u = x[:, :2] / rho[:, None]
        out = np.zeros((len(x), 3, 3))
        out[:, :2, :2] = (np.eye(2)[None] - u[:, :, None] * u[:, None, :]) / rho[:, None, None]
        out[:, 2, 2] = -np.cosh(x[:, 2] / c) / c
        return out

    def point_at(self, u, v):
        """Surface point with angle u and height z = c v"""
        c = self.neck
        return np.array([c * math.cosh(v) * math.cos(u), c * math.cosh(v) * math.sin(u), c * v])

    def named_points(self):
        return {"neck": self.point_at(0.0, 0.0), "upper": self.point_at(0.0, 0.5)}

    def parametrize(self, u):
        c = self.neck
        ch = np.cosh(u[:, 1])
        return np.stack([c * ch * np.cos(u[:, 0]), c * ch * np.sin(u[:, 0]), c * u[:, 1]], axis=1)

    def jacobian(self, u):
        c = self.neck
        ch, sh = np.cosh(u[:, 1]), np.sinh(u[:, 1])
        out = np.zeros((len(u), 3, 2))
        out[:, 0, 0] = -c * ch * np.sin(u[:, 0])
        out[:, 1, 0] = c * ch * np.cos(u[:, 0])
        out[:, 0, 1] = c * sh * np.cos(u[:, 0])
        out[:, 1, 1] = c * sh * np.sin(u[:, 0])
        out[:, 2, 1] = c
        return out

    def parameter_of(self, x):
        return np.array([math.atan2(x[1], x[0]), x[2] / self.neck])

    def parameter_bounds(self, u0, R):
        c = self.neck
        if R >= 2.0 * c:
            raise ParameterError(f"catenoid patches need R < 2c = {2.0 * c}")
        return np.array([2.0 * math.asin(R / (2.0 * c)), R / c])


@register("surface")
class Helicoid(Surface):
    """Helicoid x sin(z/c) = y cos(z/c); pointwise data only"""
    name = "helicoid"
    positional = ("pitch",)
    default_point_name = "ruling"
    properties = {"pitch": {"type": "float", "default": 1.0}}

    def _validate(self):
        if self.dimension != 3:
            raise ParameterError("helicoid is defined in R^3")
        if self.pitch <= 0.0:
            raise ParameterError("pitch must be positive")

    @property
    def length_scale(self):
        return self.pitch

    def _level(self, x):
        w = x[:, 2] / self.pitch
        return x[:, 0] * np.sin(w) - x[:, 1] * np.cos(w)

    def _gradient(self, x):
        c = self.pitch
        w = x[:, 2] / c
        s, co = np.sin(w), np.cos(w)
        return np.stack([s, -co, (x[:, 0] * co + x[:, 1] * s) / c], axis=1)

    def _hessian(self, x):
        c = self.pitch
        w = x[:, 2] / c
        s, co = np.sin(w), np.cos(w)
        out = np.zeros((len(x), 3, 3))
        out[:, 0, 2] = out[:, 2, 0] = co / c
        out[:, 1, 2] = out[:, 2, 1] = s / c
        out[:, 2, 2] = (-x[:, 0] * s + x[:, 1] * co) / c ** 2
        return out

    def named_points(self):
        c = self.pitch
        w = 0.3
        return {"ruling": np.array([0.7 * c, 0.0, 0.0]),
                "twisted": np.array([0.4 * c * math.cos(w), 0.4 * c * math.sin(w), w * c])}


class TransformedSurface(Surface):
    """Rigid image of another surface; frames are the rotated original frames"""
    name = "transformed"

    def __init__(self, surface, motion):
        self.inner = surface
        self.motion = motion
        self.dimension = surface.dimension
        self.params = {}

    def __repr__(self):
        return f"TransformedSurface({self.inner!r})"

    def describe(self):
        return {"name": self.name, "inner": self.inner.describe(),
                "rotation": self.motion.rotation.tolist(),
                "translation": self.motion.translation.tolist()}

    @property
    def has_analytic_third(self):
        return self.inner.has_analytic_third

    @property
    def length_scale(self):
        return self.inner.length_scale

    @property
    def growth_exponent(self):
        return self.inner.growth_exponent

    @property
    def coverage_radius(self):
        return self.inner.coverage_radius

    def _level(self, x):
        return self.inner._level(self.motion.inverse(x))

    def _gradient(self, x):
        return self.motion.rotate(self.inner._gradient(self.motion.inverse(x)))

    def _hessian(self, x):
        return self.motion.conjugate(self.inner._hessian(self.motion.inverse(x)))

    def _hessian_derivative(self, x, t):
        inner = self.inner._hessian_derivative(self.motion.inverse(x), self.motion.unrotate(t))
        return self.motion.conjugate(inner)

    def frame_tangents(self, x, normal):
        y = self.motion.inverse(x)
        inner = self.inner.frame_tangents(y, self.inner.normal(y))
        return self.motion.rotate(inner)

    def named_points(self):
        return {k: self.motion.apply(v) for k, v in self.inner.named_points().items()}

    def named_point(self, name=None):
        return self.motion.apply(self.inner.named_point(name))

    def polar_patch(self, base, R):
        from simonslab.geometry.frame import FramedPoint

        motion = self.motion
        inner_base = FramedPoint(
            point=motion.inverse(base.point), normal=motion.unrotate(base.normal),
            tangents=motion.unrotate(base.tangents), mean_curvature=base.mean_curvature,
            shape=base.shape, shape_ambient=motion.rotation.T @ base.shape_ambient @ motion.rotation)
        patch = self.inner.polar_patch(inner_base, R)

        def embed(rho, phi):
            points, density, valid = patch.embed(rho, phi)
            return motion.apply(points), density, valid

        return PolarPatch(patch.radius, embed, edge=patch.edge, sectors=patch.sectors,
                          covers=patch.covers)


def surface_shorthand():
    return {name: cls.positional for name, cls in get_all("surface").items()}


def make_surface(spec, path="surface"):
    """Build a surface from ``name:params`` or a mapping with ``name``"""
    # graph surfaces register on import
    from simonslab.geometry import graph  # noqa: F401

    record = parse_shorthand(spec, surface_shorthand(), path)
    name = record.pop("name", None)
    cls = get_class("surface", name)
    if cls is None:
        raise ConfigError(f"{path}.name", f"unknown surface {name!r}; known: {sorted(get_all('surface'))}")
    dimension = int(record.pop("dimension", 3))
    return cls(dimension, **record)
