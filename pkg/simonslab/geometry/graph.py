"""Graph surfaces x_n = f(x') with polynomial f.

Coefficient tables are plain text, one monomial per line: the exponent
tuple followed by the coefficient, e.g. for f = (y1^2 + 2 y2^2)/2::

    # e1 e2 coefficient
    2 0 0.5
    0 2 1.0

Blank lines and ``#`` comments are ignored.
"""

import logging
import math
from functools import cached_property

import numpy as np

from simonslab.core.errors import ConfigError, ParameterError
from simonslab.core.registry import register
from simonslab.geometry.surfaces import ParametricSurface

logger = logging.getLogger(__name__)


class Polynomial:
    """Multivariate polynomial sum_m c_m y^e_m in d variables"""

    def __init__(self, exponents, coefficients, variables):
        self.variables = int(variables)
        exponents = np.asarray(exponents, dtype=int).reshape(-1, self.variables)
        coefficients = np.asarray(coefficients, dtype=float).reshape(-1)
        if len(exponents) != len(coefficients):
            raise ParameterError("exponent and coefficient counts differ")
        if np.any(exponents < 0):
            raise ParameterError("negative exponent in polynomial table")
        keep = coefficients != 0.0
        self.exponents = exponents[keep]
        self.coefficients = coefficients[keep]

    @classmethod
    def zero(cls, variables):
        return cls(np.zeros((0, variables)), np.zeros(0), variables)

    @classmethod
    def from_terms(cls, terms, variables, path="terms"):
        rows = [list(term) for term in terms]
        for k, row in enumerate(rows):
            if len(row) != variables + 1:
                raise ConfigError(f"{path}[{k}]", f"expected {variables} exponents and a coefficient")
        if not rows:
            return cls.zero(variables)
        data = np.asarray(rows, dtype=float)
        exps = data[:, :-1]
        if not np.all(exps == np.round(exps)):
            raise ConfigError(path, "exponents must be integers")
        return cls(exps.astype(int), data[:, -1], variables)

    @classmethod
    def from_table(cls, text, variables, path="table"):
        terms = []
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                terms.append([float(part) for part in line.split()])
            except ValueError:
                raise ConfigError(f"{path}:{number}", f"cannot parse {line!r}") from None
        return cls.from_terms(terms, variables, path)

    @classmethod
    def read_table(cls, filename, variables):
        with open(filename, "r", encoding="utf-8") as handle:
            text = handle.read()
        logger.debug("Read polynomial table %s", filename)
        return cls.from_table(text, variables, path=str(filename))

    def __repr__(self):
        return f"Polynomial({len(self.coefficients)} terms in {self.variables} variables)"

    @property
    def degree(self):
        return int(self.exponents.sum(axis=1).max()) if len(self.exponents) else 0

    def __call__(self, y):
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if not len(self.coefficients):
            return np.zeros(len(y))
        monomials = np.prod(y[:, None, :] ** self.exponents[None], axis=2)
        return monomials @ self.coefficients

    def derivative(self, k):
        exps = self.exponents.copy()
        coefs = self.coefficients * exps[:, k]
        exps[:, k] = np.maximum(exps[:, k] - 1, 0)
        return Polynomial(exps, coefs, self.variables)

    @cached_property
    def _first(self):
        return [self.derivative(k) for k in range(self.variables)]

    @cached_property
    def _second(self):
        return [[p.derivative(l) for l in range(self.variables)] for p in self._first]

    @cached_property
    def _third(self):
        return [[[q.derivative(m) for m in range(self.variables)] for q in row] for row in self._second]

    def gradient(self, y):
        return np.stack([p(y) for p in self._first], axis=-1)

    def hessian(self, y):
        return np.stack([np.stack([q(y) for q in row], axis=-1) for row in self._second], axis=-2)

    def third(self, y):
        return np.stack([np.stack([np.stack([c(y) for c in col], axis=-1) for col in row], axis=-2)
                         for row in self._third], axis=-3)


@register("surface")
class GraphSurface(ParametricSurface):
    """Graph of a polynomial over the plane, a disk or a box; E lies below"""
    name = "graph"
    positional = ("table",)
    has_analytic_third = True
    properties = {
        "table": {"type": "string", "default": None, "optional": True,
                  "doc": "path of a coefficient table"},
        "terms": {"type": "any", "default": None, "optional": True,
                  "doc": "inline rows [e1, ..., e_{n-1}, coefficient]"},
        "domain": {"type": "string", "default": "plane", "choices": ("plane", "disk", "box")},
        "extent": {"type": "float", "default": 1.0, "doc": "disk radius or box half-width"},
    }

    def _validate(self):
        if self.extent <= 0.0:
            raise ParameterError("domain extent must be positive")
        self.polynomial = self._polynomial()

    def _polynomial(self):
        d = self.dimension - 1
        if self.table is not None:
            return Polynomial.read_table(self.table, d)
        if self.terms is not None:
            return Polynomial.from_terms(self.terms, d, path="surface.terms")
        raise ConfigError("surface.table", "graph surfaces need a coefficient table or terms")

    def _split(self, x):
        return x[:, :-1], x[:, -1]

    def _level(self, x):
        y, z = self._split(x)
        return z - self.polynomial(y)

    def _gradient(self, x):
        y, _ = self._split(x)
        return np.concatenate([-self.polynomial.gradient(y), np.ones((len(x), 1))], axis=1)

    def _hessian(self, x):
        y, _ = self._split(x)
        out = np.zeros((len(x), self.dimension, self.dimension))
        out[:, :-1, :-1] = -self.polynomial.hessian(y)
        return out

    def _hessian_derivative(self, x, t):
        y, _ = self._split(x)
        out = np.zeros((len(x), self.dimension, self.dimension))
        out[:, :-1, :-1] = -np.einsum("nijk,nk->nij", self.polynomial.third(y), t[:, :-1])
        return out

    def point_at(self, y):
        y = np.asarray(y, dtype=float)
        return np.append(y, self.polynomial(y[None])[0])

    def named_points(self):
        d = self.dimension - 1
        offset = np.zeros(d)
        offset[0] = 0.3
        if d > 1:
            offset[1] = -0.2
        return {"origin": self.point_at(np.zeros(d)), "offset": self.point_at(offset)}

    # -- parametrization -----------------------------------------------------

    def parametrize(self, u):
        return np.concatenate([u, self.polynomial(u)[:, None]], axis=1)

    def jacobian(self, u):
        d = self.dimension - 1
        out = np.zeros((len(u), self.dimension, d))
        out[:, :d, :] = np.eye(d)[None]
        out[:, d, :] = self.polynomial.gradient(u)
        return out

    def parameter_of(self, x):
        return np.asarray(x, dtype=float)[:-1].copy()

    def parameter_bounds(self, u0, R):
        return np.full(self.dimension - 1, float(R))

    def domain_edge(self, u0, w):
        if self.domain == "plane":
            return np.full(len(w), np.inf)
        if self.domain == "disk":
            a = np.einsum("ni,ni->n", w, w)
            b = w @ u0
            c = u0 @ u0 - self.extent ** 2
            return (-b + np.sqrt(np.maximum(b * b - a * c, 0.0))) / a
        h = self.extent
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (np.sign(w) * h - u0) / w
        t = np.where(w == 0.0, np.inf, t)
        return t.min(axis=1)

    def domain_corners(self):
        if self.domain != "box":
            return None
        h = self.extent
        return np.array([[h, h], [-h, h], [-h, -h], [h, -h]])


@register("surface")
class Plane(GraphSurface):
    """Half-space boundary {x_n = 0}"""
    name = "plane"
    positional = ()
    properties = {
        "domain": {"type": "string", "default": "plane", "choices": ("plane", "disk", "box")},
        "extent": {"type": "float", "default": 1.0},
    }
    table = None
    terms = None

    def _polynomial(self):
        return Polynomial.zero(self.dimension - 1)


@register("surface")
class Paraboloid(GraphSurface):
    """f(y') = |y'|^2 / 2"""
    name = "paraboloid"
    positional = ("extent",)
    properties = Plane.properties
    table = None
    terms = None

    def _polynomial(self):
        d = self.dimension - 1
        return Polynomial(2 * np.eye(d, dtype=int), np.full(d, 0.5), d)


@register("surface")
class AnisotropicParaboloid(GraphSurface):
    """f(y') = (y1^2 + 2 y2^2 + 3 y3^2 + ...) / 2"""
    name = "anisotropic-paraboloid"
    positional = ("extent",)
    properties = Plane.properties
    table = None
    terms = None

    def _polynomial(self):
        d = self.dimension - 1
        return Polynomial(2 * np.eye(d, dtype=int), 0.5 * np.arange(1, d + 1, dtype=float), d)


def paraboloid_disk_area(radius=1.0):
    """Area of {x_n = |y'|^2/2, |y'| <= radius} in R^3"""
    return 2.0 * math.pi / 3.0 * ((1.0 + radius ** 2) ** 1.5 - 1.0)
