"""Catalog of test functions u whose level sets carry the function-case operators.

The level set through y is oriented by nu_u = -grad u / |grad u|, the outer
normal of {u > u(y)}.  With phi = -u the shape data follow the surface
conventions:

    S_u = -P (hess u) P / |grad u|,   H_u = tr S_u
"""

import logging
import math

import numpy as np
from scipy import optimize, special

from simonslab.core.config import parse_shorthand, resolve_properties
from simonslab.core.errors import ConfigError, DegenerateGradientError, ParameterError
from simonslab.core.registry import get_all, get_class, register
from simonslab.geometry.surfaces import as_points

logger = logging.getLogger(__name__)


class LevelSetFunction:
    """Base class of closed-form functions on R^n with gradient and Hessian"""
    name = "levelset"
    category = "Level sets"
    properties = {}
    positional = ()
    radial = False

    def __init__(self, dimension=3, **params):
        self.dimension = int(dimension)
        if self.dimension < 2:
            raise ParameterError(f"ambient dimension must be >= 2, got {dimension}")
        self.params = resolve_properties(type(self), params, path="levelset")
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

    def _vector(self, value, default, what):
        v = np.asarray(default if value is None else value, dtype=float)
        if v.shape != (self.dimension,):
            raise ParameterError(f"{self.name} {what} must have {self.dimension} entries")
        return v

    @property
    def bound(self):
        """sup |u|, None when u is unbounded"""
        return None

    @property
    def length_scale(self):
        return 1.0

    # -- vectorized data over (N, n) -----------------------------------------

    def _value(self, x):
        raise NotImplementedError

    def _gradient(self, x):
        raise NotImplementedError

    def _hessian(self, x):
        raise NotImplementedError

    def value(self, x):
        pts, single = as_points(x, self.dimension)
        out = self._value(pts)
        return out[0] if single else out

    def __call__(self, x):
        return self.value(x)

    def gradient(self, x):
        pts, single = as_points(x, self.dimension)
        out = self._gradient(pts)
        return out[0] if single else out

    def hessian(self, x):
        pts, single = as_points(x, self.dimension)
        out = self._hessian(pts)
        return out[0] if single else out

    # -- level-set geometry ----------------------------------------------------

    def level_data(self, x, g_min=0.0):
        """(|grad u|, nu_u, S_u, H_u, mask) with mask = |grad u| >= g_min.

        Rows outside the mask carry zero normal and shape.
        """
        pts, _ = as_points(x, self.dimension)
        grad = self._gradient(pts)
        norm = np.linalg.norm(grad, axis=1)
        mask = (norm >= g_min) & (norm > 0.0)
        safe = np.where(mask, norm, 1.0)
        nu = np.where(mask[:, None], -grad / safe[:, None], 0.0)
        proj = np.eye(self.dimension)[None] - nu[:, :, None] * nu[:, None, :]
        shape = -proj @ self._hessian(pts) @ proj / safe[:, None, None]
        shape = np.where(mask[:, None, None], 0.5 * (shape + np.swapaxes(shape, 1, 2)), 0.0)
        mean = np.trace(shape, axis1=1, axis2=2)
        return norm, nu, shape, mean, mask

    def normal(self, x, g_min=0.0):
        x = np.asarray(x, dtype=float)
        norm, nu, _, _, mask = self.level_data(x, g_min)
        if not np.all(mask):
            raise DegenerateGradientError(f"|grad u| = {norm.min():.3e} below {g_min:.3e}")
        return nu[0] if x.ndim == 1 else nu

    def mean_curvature(self, x):
        x = np.asarray(x, dtype=float)
        mean = self.level_data(x)[3]
        return float(mean[0]) if x.ndim == 1 else mean

    def shape_operator(self, x):
        x = np.asarray(x, dtype=float)
        shape = self.level_data(x)[2]
        return shape[0] if x.ndim == 1 else shape

    def named_points(self):
        return {"origin": np.zeros(self.dimension)}

    def named_point(self, name=None):
        points = self.named_points()
        name = name or next(iter(points))
        if name not in points:
            raise ConfigError("point", f"unknown point {name!r} for {self.name}; known: {sorted(points)}")
        return np.asarray(points[name], dtype=float)


@register("levelset")
class ConstantFunction(LevelSetFunction):
    name = "constant"
    positional = ("value",)
    properties = {
        "value": {"type": "float", "default": 0.5},
    }

    @property
    def bound(self):
        return abs(self.value)

    def _value(self, x):
        return np.full(len(x), self.value)

    def _gradient(self, x):
        return np.zeros_like(x)

    def _hessian(self, x):
        return np.zeros((len(x), self.dimension, self.dimension))


@register("levelset")
class LinearFunction(LevelSetFunction):
    """u(y) = offset + a . y"""
    name = "linear"
    positional = ("slope",)
    properties = {
        "slope": {"type": "float", "default": 1.0, "doc": "|a| when no direction is given"},
        "direction": {"type": "float_list", "default": None, "optional": True},
        "offset": {"type": "float", "default": 0.0},
    }

    def _validate(self):
        e_n = np.zeros(self.dimension)
        e_n[-1] = -1.0
        d = self._vector(self.direction, e_n, "direction")
        if np.linalg.norm(d) == 0.0:
            raise ParameterError("linear direction must be nonzero")
        self._a = self.slope * d / np.linalg.norm(d)

    def _value(self, x):
        return self.offset + x @ self._a

    def _gradient(self, x):
        return np.broadcast_to(self._a, x.shape).copy()

    def _hessian(self, x):
        return np.zeros((len(x), self.dimension, self.dimension))


class RadialFunction(LevelSetFunction):
    """u(y) = F(|y - c|); level sets are spheres about c"""
    radial = True

    def _validate(self):
        self._center = self._vector(self.center, np.zeros(self.dimension), "center")

    @property
    def origin(self):
        return self._center

    def profile(self, r):
        raise NotImplementedError

    def profile_derivative(self, r):
        raise NotImplementedError

    def profile_second(self, r):
        raise NotImplementedError

    def radius_of_level(self, t, r_max):
        """F^-1(t) on the monotone branch [0, r_max]"""
        return optimize.brentq(lambda r: float(self.profile(np.array(r))) - t, 0.0, r_max,
                               xtol=1e-14, rtol=1e-14)

    def _parts(self, x):
        d = x - self._center
        r = np.linalg.norm(d, axis=1)
        safe = np.where(r > 0.0, r, 1.0)
        return d / safe[:, None], r, safe

    def _value(self, x):
        return self.profile(np.linalg.norm(x - self._center, axis=1))

    def _gradient(self, x):
        e, r, _ = self._parts(x)
        return self.profile_derivative(r)[:, None] * e

    def _hessian(self, x):
        e, r, safe = self._parts(x)
        d1 = self.profile_derivative(r)
        d2 = self.profile_second(r)
        outer = e[:, :, None] * e[:, None, :]
        eye = np.eye(self.dimension)[None]
        return d2[:, None, None] * outer + (d1 / safe)[:, None, None] * (eye - outer)

    def named_points(self):
        shell = self._center.copy()
        shell[-1] += self.level_radius
        return {"shell": shell, "center": self._center.copy()}


@register("levelset")
class RadialGaussian(RadialFunction):
    """u = A exp(-|y - c|^2 / (2 w^2))"""
    name = "radial-gaussian"
    positional = ("width", "amplitude")
    properties = {
        "width": {"type": "float", "default": 0.5},
        "amplitude": {"type": "float", "default": 1.0},
        "center": {"type": "float_list", "default": None, "optional": True},
    }

    def _validate(self):
        if self.width <= 0.0:
            raise ParameterError("width must be positive")
        super()._validate()

    @property
    def bound(self):
        return abs(self.amplitude)

    @property
    def length_scale(self):
        return self.width

    @property
    def level_radius(self):
        return self.width

    def profile(self, r):
        return self.amplitude * np.exp(-np.asarray(r) ** 2 / (2.0 * self.width ** 2))

    def profile_derivative(self, r):
        return -np.asarray(r) / self.width ** 2 * self.profile(r)

    def profile_second(self, r):
        r = np.asarray(r)
        return (r ** 2 / self.width ** 4 - 1.0 / self.width ** 2) * self.profile(r)


def sigmoid(t):
    return special.expit(t)


@register("levelset")
class SigmoidSphere(RadialFunction):
    """u = sigma((R - |y - c|) / w), a smoothed indicator of the ball B_R(c)"""
    name = "sigmoid-sphere"
    positional = ("radius", "width")
    properties = {
        "radius": {"type": "float", "default": 1.0},
        "width": {"type": "float", "default": 0.05},
        "center": {"type": "float_list", "default": None, "optional": True},
    }

    def _validate(self):
        if self.radius <= 0.0 or self.width <= 0.0:
            raise ParameterError("radius and width must be positive")
        super()._validate()

    @property
    def bound(self):
        return 1.0

    @property
    def length_scale(self):
        return self.radius

    @property
    def level_radius(self):
        return self.radius

    def profile(self, r):
        return sigmoid((self.radius - np.asarray(r)) / self.width)

    def profile_derivative(self, r):
        s = self.profile(r)
        return -s * (1.0 - s) / self.width

    def profile_second(self, r):
        s = self.profile(r)
        return s * (1.0 - s) * (1.0 - 2.0 * s) / self.width ** 2

    def radius_of_level(self, t, r_max=None):
        return self.radius - self.width * float(special.logit(t))


@register("levelset")
class AnisotropicSigmoid(LevelSetFunction):
    """u = sigma((1 - q(y)) / w) with q(y) = 1/2 sum a_k (y_k - c_k)^2"""
    name = "anisotropic-sigmoid"
    positional = ("width",)
    properties = {
        "width": {"type": "float", "default": 0.1},
        "axes": {"type": "float_list", "default": None, "optional": True},
        "center": {"type": "float_list", "default": None, "optional": True},
    }

    def _validate(self):
        if self.width <= 0.0:
            raise ParameterError("width must be positive")
        self._a = self._vector(self.axes, 1.0 + np.arange(self.dimension), "axes")
        if np.any(self._a <= 0.0):
            raise ParameterError("axes must be positive")
        self._center = self._vector(self.center, np.zeros(self.dimension), "center")

    @property
    def bound(self):
        return 1.0

    def _q(self, x):
        d = x - self._center
        return d, 0.5 * np.einsum("nk,k,nk->n", d, self._a, d)

    def _value(self, x):
        _, q = self._q(x)
        return sigmoid((1.0 - q) / self.width)

    def _gradient(self, x):
        d, q = self._q(x)
        s = sigmoid((1.0 - q) / self.width)
        return (-s * (1.0 - s) / self.width)[:, None] * (d * self._a)

    def _hessian(self, x):
        d, q = self._q(x)
        s = sigmoid((1.0 - q) / self.width)
        ds = -s * (1.0 - s) / self.width
        d2s = s * (1.0 - s) * (1.0 - 2.0 * s) / self.width ** 2
        g = d * self._a
        return d2s[:, None, None] * g[:, :, None] * g[:, None, :] + ds[:, None, None] * np.diag(self._a)[None]

    def named_points(self):
        # on the level u = 1/2, along the last axis
        p = self._center.copy()
        p[-1] += math.sqrt(2.0 / self._a[-1])
        return {"axis": p}


@register("levelset")
class SigmoidHalfspace(LevelSetFunction):
    """u = sigma(-y_n / w), a smoothed indicator of {y_n < 0}"""
    name = "sigmoid-halfspace"
    positional = ("width",)
    properties = {
        "width": {"type": "float", "default": 0.05},
    }

    def _validate(self):
        if self.width <= 0.0:
            raise ParameterError("width must be positive")

    @property
    def bound(self):
        return 1.0

    def _value(self, x):
        return sigmoid(-x[:, -1] / self.width)

    def _gradient(self, x):
        s = sigmoid(-x[:, -1] / self.width)
        out = np.zeros_like(x)
        out[:, -1] = -s * (1.0 - s) / self.width
        return out

    def _hessian(self, x):
        s = sigmoid(-x[:, -1] / self.width)
        out = np.zeros((len(x), self.dimension, self.dimension))
        out[:, -1, -1] = s * (1.0 - s) * (1.0 - 2.0 * s) / self.width ** 2
        return out


class TransformedFunction(LevelSetFunction):
    """u o M^-1 for a rigid motion M"""
    name = "transformed"

    def __init__(self, function, motion):
        self.inner = function
        self.motion = motion
        self.dimension = function.dimension
        self.params = {}
        self.radial = False

    def describe(self):
        return {"name": self.name, "inner": self.inner.describe(),
                "rotation": self.motion.rotation.tolist(),
                "translation": self.motion.translation.tolist()}

    @property
    def bound(self):
        return self.inner.bound

    @property
    def length_scale(self):
        return self.inner.length_scale

    def _value(self, x):
        return self.inner._value(self.motion.inverse(x))

    def _gradient(self, x):
        return self.motion.rotate(self.inner._gradient(self.motion.inverse(x)))

    def _hessian(self, x):
        return self.motion.conjugate(self.inner._hessian(self.motion.inverse(x)))

    def named_points(self):
        return {k: self.motion.apply(v) for k, v in self.inner.named_points().items()}


def levelset_shorthand():
    return {name: cls.positional for name, cls in get_all("levelset").items()}


def make_levelset(spec, dimension=3, path="levelset"):
    """Build a level-set function from ``name:params`` or a mapping with ``name``"""
    record = parse_shorthand(spec, levelset_shorthand(), path)
    name = record.pop("name", None)
    cls = get_class("levelset", name)
    if cls is None:
        raise ConfigError(f"{path}.name", f"unknown level-set function {name!r}; known: {sorted(get_all('levelset'))}")
    dimension = int(record.pop("dimension", dimension))
    return cls(dimension, **record)
