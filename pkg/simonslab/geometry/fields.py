"""Scalar fields on a neighbourhood of the surface.

Fields are closed-form evaluators over ambient space; restricted to the
surface nodes they give the data the nonlocal operators integrate.
``support`` is ``(center, radius)`` for compactly supported fields and
``None`` otherwise.
"""

import numpy as np

from simonslab.core.errors import ParameterError

FD_STEP = 1e-5


def _points(x):
    return np.atleast_2d(np.asarray(x, dtype=float))


class Field:
    """Base scalar field; gradient falls back to central differences"""
    support = None

    def value(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.value(x)

    def gradient(self, x):
        pts = _points(x)
        n = pts.shape[1]
        out = np.empty_like(pts)
        for k in range(n):
            e = np.zeros(n)
            e[k] = FD_STEP
            out[:, k] = (-self.value(pts + 2 * e) + 8 * self.value(pts + e)
                         - 8 * self.value(pts - e) + self.value(pts - 2 * e)) / (12 * FD_STEP)
        return out

    def __mul__(self, other):
        return ProductField(self, other)

    def __add__(self, other):
        return SumField(self, other)


def field_value(g, x):
    pts = _points(x)
    if isinstance(g, Field):
        return g.value(pts)
    return np.asarray(g(pts), dtype=float)


def field_gradient(g, x):
    if isinstance(g, Field):
        return g.gradient(x)
    return FunctionField(g).gradient(x)


class FunctionField(Field):
    """Wrap plain callables"""

    def __init__(self, fn, gradient=None, support=None):
        self.fn = fn
        self.grad_fn = gradient
        self.support = support

    def value(self, x):
        return np.asarray(self.fn(_points(x)), dtype=float)

    def gradient(self, x):
        if self.grad_fn is None:
            return super().gradient(x)
        return np.asarray(self.grad_fn(_points(x)), dtype=float)


class ConstantField(Field):
    def __init__(self, constant=1.0):
        self.constant = float(constant)

    def value(self, x):
        return np.full(len(_points(x)), self.constant)

    def gradient(self, x):
        return np.zeros_like(_points(x))


class LinearField(Field):
    """a . x + b"""

    def __init__(self, a, b=0.0):
        self.a = np.asarray(a, dtype=float)
        self.b = float(b)

    def value(self, x):
        return _points(x) @ self.a + self.b

    def gradient(self, x):
        return np.broadcast_to(self.a, _points(x).shape).copy()


class CoordinateField(LinearField):
    """x_k (1-based)"""

    def __init__(self, k, dimension=3):
        if not 1 <= k <= dimension:
            raise ParameterError(f"coordinate index must lie in 1..{dimension}")
        super().__init__(np.eye(dimension)[k - 1])
        self.k = k


class BumpField(Field):
    """A exp(1 - 1/(1 - |x-c|^2/r^2)) inside B_r(c), peak value A"""

    def __init__(self, center, radius, amplitude=1.0):
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.amplitude = float(amplitude)
        if self.radius <= 0.0:
            raise ParameterError("bump radius must be positive")
        self.support = (self.center, self.radius)

    def _parts(self, x):
        d = _points(x) - self.center
        q = np.einsum("ni,ni->n", d, d) / self.radius ** 2
        inside = q < 1.0
        safe = np.where(inside, q, 0.0)
        value = np.where(inside, self.amplitude * np.exp(1.0 - 1.0 / (1.0 - safe)), 0.0)
        return d, safe, inside, value

    def value(self, x):
        return self._parts(x)[3]

    def gradient(self, x):
        d, q, inside, value = self._parts(x)
        factor = np.where(inside, -value / (1.0 - q) ** 2 * 2.0 / self.radius ** 2, 0.0)
        return factor[:, None] * d


def _merge_support(first, second, intersect):
    if intersect:
        candidates = [s for s in (first, second) if s is not None]
        return min(candidates, key=lambda s: s[1]) if candidates else None
    if first is None or second is None:
        return None
    c1, r1 = first
    c2, r2 = second
    return c1, max(r1, float(np.linalg.norm(np.asarray(c2) - c1)) + r2)


class ProductField(Field):
    def __init__(self, first, second):
        self.first = first
        self.second = second
        self.support = _merge_support(first.support, second.support, intersect=True)

    def value(self, x):
        return self.first.value(x) * self.second.value(x)

    def gradient(self, x):
        return self.first.gradient(x) * self.second.value(x)[:, None] \
            + self.first.value(x)[:, None] * self.second.gradient(x)


class SumField(Field):
    def __init__(self, first, second):
        self.first = first
        self.second = second
        self.support = _merge_support(first.support, second.support, intersect=False)

    def value(self, x):
        return self.first.value(x) + self.second.value(x)

    def gradient(self, x):
        return self.first.gradient(x) + self.second.gradient(x)


class ShapeEntryField(Field):
    """y -> u . S(y) v, the ambient extension of h_ij = delta_j nu_i"""

    def __init__(self, surface, u, v):
        self.surface = surface
        self.u = np.asarray(u, dtype=float)
        self.v = np.asarray(v, dtype=float)

    def value(self, x):
        shape = self.surface.shape_operator(_points(x))
        return np.einsum("i,nij,j->n", self.u, shape, self.v)


class NormalComponentField(Field):
    """y -> nu(y) . d with the analytic gradient H P d / |grad phi|"""

    def __init__(self, surface, direction):
        self.surface = surface
        self.direction = np.asarray(direction, dtype=float)

    def value(self, x):
        return self.surface.normal(_points(x)) @ self.direction

    def gradient(self, x):
        pts = _points(x)
        g = self.surface.level_gradient(pts)
        gn = np.linalg.norm(g, axis=1)
        nu = g / gn[:, None]
        pd = self.direction[None, :] - (nu @ self.direction)[:, None] * nu
        return np.einsum("nij,nj->ni", self.surface.level_hessian(pts), pd) / gn[:, None]


class ShapeNormField(Field):
    """|S(y)|_F^2, the classical total curvature c_E^2"""

    def __init__(self, surface):
        self.surface = surface

    def value(self, x):
        shape = self.surface.shape_operator(_points(x))
        return np.einsum("nij,nij->n", shape, shape)


class TransformedField(Field):
    """f o M^-1 for a rigid motion M"""

    def __init__(self, field, motion):
        self.field = field
        self.motion = motion
        if field.support is not None:
            self.support = (motion.apply(field.support[0]), field.support[1])

    def value(self, x):
        return self.field.value(self.motion.inverse(_points(x)))

    def gradient(self, x):
        return self.motion.rotate(self.field.gradient(self.motion.inverse(_points(x))))


def random_bumps(rng, center, spread, radius, count, dimension=3):
    """Random bumps near ``center`` for product-rule and coarea samples"""
    center = np.asarray(center, dtype=float)
    out = []
    for _ in range(count):
        offset = rng.uniform(-spread, spread, dimension)
        out.append(BumpField(center + offset, radius * rng.uniform(0.7, 1.0),
                             rng.uniform(0.5, 1.5)))
    return out
