"""Radial kernel families.

A kernel is K(x) = k(|x|) on R^n.  Each family is a registered class with
a ``properties`` schema; ``make_kernel`` builds one from a config record or
a shorthand such as ``mollifier:0.3``.

Besides value and derivative, every kernel exposes the radial moments the
rest of the package needs:

* ``tail_moment(r)``            = int_r^inf t^(n-1) k(t) dt
* ``radial_moment(r, p)``       = int_0^r k(t) t^p dt
* ``derivative_moment(r, p)``   = int_0^r k'(t) t^p dt
* ``tail_moment_integral(r)``   = int_0^r tail_moment(t) dt
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from simonslab.core.config import parse_shorthand, resolve_properties
from simonslab.core.errors import (ConfigError, DomainError, ParameterError,
                                   UnsupportedOperation)
from simonslab.core.registry import get_all, get_class, register

logger = logging.getLogger(__name__)

# Adaptive 1-D quadrature tolerances for mass constants and moments
QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-12

# Composite Gauss-Legendre used for vectorized tail moments
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_GL_PANELS = 8


def unit_sphere_area(n):
    """H^{n-1}(S^{n-1}) = 2 pi^{n/2} / Gamma(n/2)"""
    if n < 1:
        raise ParameterError(f"dimension must be >= 1, got {n}")
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


@dataclass(frozen=True)
class RadialProfile:
    """Mollifier profile rho on [0, 1) with its derivative"""
    value: Callable
    derivative: Callable


def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


def _bump_derivative(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti ** 2)) * (-2.0 * ti / (1.0 - ti ** 2) ** 2)
    return out


BUMP_PROFILE = RadialProfile(_bump, _bump_derivative)


def _polynomial(t):
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) < 1.0, (1.0 - np.minimum(t * t, 1.0)) ** 4, 0.0)


def _polynomial_derivative(t):
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) < 1.0, -8.0 * t * (1.0 - np.minimum(t * t, 1.0)) ** 3, 0.0)


MOLLIFIER_PROFILES = {
    "bump": BUMP_PROFILE,
    "polynomial": RadialProfile(_polynomial, _polynomial_derivative),
}


def _composite_gl(fn, a, b):
    """Vectorized composite Gauss-Legendre of fn over [a_k, b_k] for every k"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    edges = np.linspace(0.0, 1.0, _GL_PANELS + 1)
    x = ((edges[:-1, None] + edges[1:, None]) / 2.0
         + (edges[1:, None] - edges[:-1, None]) / 2.0 * _GL_NODES[None, :]).ravel()
    w = np.repeat(np.diff(edges) / 2.0, len(_GL_NODES)) * np.tile(_GL_WEIGHTS, _GL_PANELS)
    span = (b - a)[..., None]
    t = a[..., None] + span * x
    return (fn(t) * w).sum(axis=-1) * (b - a)


class Kernel:
    """Base class of radial kernels in dimension n"""
    name = "kernel"
    category = "Kernels"
    properties = {}
    positional = ()       # shorthand parameter order
    integrable = False

    def __init__(self, dimension, **params):
        if int(dimension) != dimension or dimension < 1:
            raise ParameterError(f"dimension must be a positive integer, got {dimension}")
        self.dimension = int(dimension)
        self.params = resolve_properties(type(self), params, path="kernel")
        for key, value in self.params.items():
            setattr(self, key, value)
        self._validate()

    def _validate(self):
        pass

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{type(self).__name__}(n={self.dimension}, {args})"

    @property
    def family(self):
        return self.name

    def describe(self):
        """JSON-friendly description"""
        return {"family": self.name, "dimension": self.dimension, **self.params}

    # -- profile -----------------------------------------------------------

    def profile(self, r):
        raise NotImplementedError

    def profile_derivative(self, r):
        raise NotImplementedError

    def value(self, r):
        """k(r); raises DomainError at r = 0 for singular families"""
        r = np.asarray(r, dtype=float)
        if self.singularity_order > 0 and np.any(r <= 0.0):
            raise DomainError(f"{self.name} kernel is singular at the origin")
        return self.profile(r)

    def radial_derivative(self, r):
        """k'(r)"""
        r = np.asarray(r, dtype=float)
        if self.singularity_order > 0 and np.any(r <= 0.0):
            raise DomainError(f"{self.name} kernel is singular at the origin")
        return self.profile_derivative(r)

    # -- metadata ------------------------------------------------------------

    @property
    def singularity_order(self):
        return 0.0

    @property
    def decay_order(self):
        return math.inf

    @property
    def support_radius(self):
        """Radius of the support, None when unbounded"""
        return None

    def envelope(self, derivative=False):
        """(A, b) with |k(r)| <= A r^-b for all r > 0, None for profile families"""
        return None

    def truncation_radius(self, tol=1e-16):
        """Radius beyond which the kernel is negligible relative to k(0)"""
        if self.support_radius is not None:
            return self.support_radius
        raise UnsupportedOperation(f"{self.name} kernel has no truncation radius")

    @property
    def truncatable(self):
        """Integrable with a support or truncation radius, so volume integrals stop at a finite box"""
        if not self.integrable:
            return False
        try:
            self.truncation_radius()
        except UnsupportedOperation:
            return False
        return True

    @cached_property
    def mass_constant(self) -> Optional[float]:
        """C_K = 1/2 int K, None for non-integrable families"""
        if not self.integrable:
            return None
        n = self.dimension
        upper = self.support_radius if self.support_radius is not None else np.inf
        value, abserr = integrate.quad(
            lambda t: float(self.profile(np.array(t))) * t ** (n - 1), 0.0, upper,
            epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
        logger.debug("Mass integral of %r: %.16g (+- %.2g)", self, value, abserr)
        return 0.5 * unit_sphere_area(n) * value

    # -- radial moments ------------------------------------------------------

    def _quad(self, fn, a, b):
        if b <= a:
            return 0.0
        points = None
        s = self.support_radius
        if s is not None and a < s < b:
            points = [s]
        value, _ = integrate.quad(fn, a, b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL,
                                  limit=200, points=points)
        return value

    def tail_moment(self, r):
        """int_r^inf t^(n-1) k(t) dt (vectorized in r)"""
        r = np.asarray(r, dtype=float)
        s = self.support_radius
        if s is None:
            raise UnsupportedOperation(f"{self.name} kernel needs a closed-form tail moment")
        n = self.dimension
        upper = np.maximum(r, s)
        return _composite_gl(lambda t: self.profile(t) * t ** (n - 1), r, upper)

    def radial_moment(self, r, power):
        """int_0^r k(t) t^power dt"""
        return self._quad(lambda t: float(self.profile(np.array(t))) * t ** power, 0.0, float(r))

    def derivative_moment(self, r, power):
        """int_0^r k'(t) t^power dt"""
        return self._quad(lambda t: float(self.profile_derivative(np.array(t))) * t ** power,
                          0.0, float(r))

    def tail_moment_integral(self, r):
        """int_0^r tail_moment(t) dt"""
        return self._quad(lambda t: float(self.tail_moment(np.array(t))), 0.0, float(r))


@register("kernel")
class FractionalKernel(Kernel):
    """k(r) = scale * r^-(n+s); both envelope bounds hold for scale <= C/(n+s)"""
    name = "fractional"
    positional = ("s", "C")
    properties = {
        "s": {"type": "float", "default": 0.5, "doc": "fractional order in (0, 1)"},
        "C": {"type": "float", "default": 1.0, "doc": "envelope constant"},
        "scale": {"type": "float", "default": None, "optional": True,
                  "doc": "profile prefactor, defaults to C/(n+s)"},
    }

    def _validate(self):
        if not 0.0 < self.s < 1.0:
            raise ParameterError(f"fractional order must lie in (0, 1), got {self.s}")
        if self.C <= 0.0:
            raise ParameterError("envelope constant C must be positive")
        if self.scale is None:
            self.scale = self.C / (self.dimension + self.s)

    def profile(self, r):
        return self.scale * r ** -(self.dimension + self.s)

    def profile_derivative(self, r):
        a = self.dimension + self.s
        return -a * self.scale * r ** -(a + 1.0)

    @property
    def singularity_order(self):
        return self.dimension + self.s

    @property
    def decay_order(self):
        return self.dimension + self.s

    def envelope(self, derivative=False):
        a = self.dimension + self.s
        if derivative:
            return self.scale * a, a + 1.0
        return self.scale, a

    def bound_violations(self, radii):
        """Number of sampled radii violating |K| <= C r^-(n+s) or |K'| <= C r^-(n+s+1)"""
        r = np.asarray(radii, dtype=float)
        a = self.dimension + self.s
        slack = 1.0 + 1e-12
        bad = (np.abs(self.value(r)) > slack * self.C * r ** -a) | \
              (np.abs(self.radial_derivative(r)) > slack * self.C * r ** -(a + 1.0))
        return int(np.count_nonzero(bad))

    def tail_moment(self, r):
        r = np.asarray(r, dtype=float)
        return self.scale * r ** -self.s / self.s


@register("kernel")
class SimonsLimitKernel(Kernel):
    """k(r) = eps * r^-(n+1-eps), optionally capped by a C^2 quartic inside r_c"""
    name = "simons_limit"
    positional = ("eps", "cap_radius")
    properties = {
        "eps": {"type": "float", "default": 0.1, "doc": "exponent parameter in (0, 1)"},
        "cap_radius": {"type": "float", "default": 0.0,
                       "doc": "near-field smoothing radius (0 keeps the singular profile)"},
    }

    def _validate(self):
        if not 0.0 < self.eps < 1.0:
            raise ParameterError(f"eps must lie in (0, 1), got {self.eps}")
        if self.cap_radius < 0.0:
            raise ParameterError("cap_radius must be non-negative")
        self._a = self.dimension + 1.0 - self.eps
        if self.cap_radius > 0.0:
            rc = self.cap_radius
            k0 = self.eps * rc ** -self._a
            k1 = -self._a * k0 / rc
            k2 = self._a * (self._a + 1.0) * k0 / rc ** 2
            c = (k2 - k1 / rc) / (8.0 * rc ** 2)
            b = (k1 / rc - 4.0 * c * rc ** 2) / 2.0
            self._cap = (k0 - b * rc ** 2 - c * rc ** 4, b, c)

    @property
    def capped(self):
        return self.cap_radius > 0.0

    @property
    def integrable(self):
        # the tail r^(eps-2) is integrable, only the bare power fails at the origin
        return self.capped

    @cached_property
    def mass_constant(self) -> Optional[float]:
        if not self.capped:
            return None
        return 0.5 * unit_sphere_area(self.dimension) * float(self.tail_moment(0.0))

    def _power(self, r):
        return self.eps * r ** -self._a

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        if not self.capped:
            return self._power(r)
        a, b, c = self._cap
        inner = r < self.cap_radius
        safe = np.where(inner, self.cap_radius, r)
        return np.where(inner, a + b * r ** 2 + c * r ** 4, self._power(safe))

    def profile_derivative(self, r):
        r = np.asarray(r, dtype=float)
        if not self.capped:
            return -self._a * self._power(r) / r
        _, b, c = self._cap
        inner = r < self.cap_radius
        safe = np.where(inner, self.cap_radius, r)
        return np.where(inner, 2.0 * b * r + 4.0 * c * r ** 3, -self._a * self._power(safe) / safe)

    @property
    def singularity_order(self):
        return 0.0 if self.capped else self._a

    @property
    def decay_order(self):
        return self._a

    def envelope(self, derivative=False):
        if derivative:
            return self.eps * self._a, self._a + 1.0
        return self.eps, self._a

    # closed-form moments of the power profile on [lo, hi]
    def _power_moment(self, lo, hi, power):
        e = power - self._a + 1.0
        if e <= 0.0:
            raise ParameterError(f"moment of order {power} diverges at the origin")
        return self.eps * (hi ** e - lo ** e) / e

    def _poly_moment(self, r, power, derivative=False):
        a, b, c = self._cap
        if derivative:
            return 2.0 * b * r ** (power + 2) / (power + 2) + 4.0 * c * r ** (power + 4) / (power + 4)
        return a * r ** (power + 1) / (power + 1) + b * r ** (power + 3) / (power + 3) \
            + c * r ** (power + 5) / (power + 5)

    def tail_moment(self, r):
        r = np.asarray(r, dtype=float)
        n = self.dimension
        if not self.capped:
            return self.eps * r ** (self.eps - 1.0) / (1.0 - self.eps)
        rc = self.cap_radius
        outer = self.eps * np.maximum(r, rc) ** (self.eps - 1.0) / (1.0 - self.eps)
        inner = self._poly_moment(rc, n - 1) - self._poly_moment(np.minimum(r, rc), n - 1)
        return outer + np.where(r < rc, inner, 0.0)

    def radial_moment(self, r, power):
        r = float(r)
        if not self.capped:
            return self._power_moment(0.0, r, power)
        rc = self.cap_radius
        if r <= rc:
            return self._poly_moment(r, power)
        return self._poly_moment(rc, power) + self._power_moment(rc, r, power)

    def derivative_moment(self, r, power):
        r = float(r)
        e = power - self._a
        if not self.capped:
            if e <= 0.0:
                raise ParameterError(f"derivative moment of order {power} diverges at the origin")
            return -self._a * self.eps * r ** e / e
        rc = self.cap_radius
        if r <= rc:
            return self._poly_moment(r, power, derivative=True)
        return self._poly_moment(rc, power, derivative=True) \
            - self._a * self.eps * (r ** e - rc ** e) / e

    def tail_moment_integral(self, r):
        r = float(r)
        n = self.dimension
        if not self.capped:
            return r ** self.eps / (1.0 - self.eps)
        rc = self.cap_radius
        a, b, c = self._cap
        t_rc = self.eps * rc ** (self.eps - 1.0) / (1.0 - self.eps)
        base = t_rc + self._poly_moment(rc, n - 1)
        q = min(r, rc)
        inner = base * q - (a * q ** (n + 1) / (n * (n + 1))
                            + b * q ** (n + 3) / ((n + 2) * (n + 3))
                            + c * q ** (n + 5) / ((n + 4) * (n + 5)))
        if r <= rc:
            return inner
        return inner + (r ** self.eps - rc ** self.eps) / (1.0 - self.eps)


@register("kernel")
class MollifierKernel(Kernel):
    """k(r) = eps^(-n-2) rho(r/eps), supported in B_eps"""
    name = "mollifier"
    positional = ("eps", "rho")
    integrable = True
    properties = {
        "eps": {"type": "float", "default": 0.3, "doc": "support radius"},
        "rho": {"type": "string", "default": "bump", "choices": sorted(MOLLIFIER_PROFILES),
                "doc": "radial profile on [0, 1)"},
    }

    def _validate(self):
        if self.eps <= 0.0:
            raise ParameterError(f"eps must be positive, got {self.eps}")
        self.radial_profile = MOLLIFIER_PROFILES[self.rho]
        self._scale = self.eps ** -(self.dimension + 2.0)

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        t = r / self.eps
        return np.where(t < 1.0, self._scale * self.radial_profile.value(np.minimum(t, 1.0)), 0.0)

    def profile_derivative(self, r):
        r = np.asarray(r, dtype=float)
        t = r / self.eps
        return np.where(t < 1.0,
                        self._scale / self.eps * self.radial_profile.derivative(np.minimum(t, 1.0)),
                        0.0)

    @property
    def support_radius(self):
        return self.eps


@register("kernel")
class GaussianKernel(Kernel):
    """Smooth integrable kernel k(r) = A exp(-r^2 / (2 sigma^2))"""
    name = "gaussian"
    positional = ("sigma", "amplitude")
    integrable = True
    properties = {
        "sigma": {"type": "float", "default": 0.2, "doc": "width"},
        "amplitude": {"type": "float", "default": 1.0, "doc": "peak value"},
    }

    def _validate(self):
        if self.sigma <= 0.0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return self.amplitude * np.exp(-r ** 2 / (2.0 * self.sigma ** 2))

    def profile_derivative(self, r):
        r = np.asarray(r, dtype=float)
        return -r / self.sigma ** 2 * self.profile(r)

    def truncation_radius(self, tol=1e-16):
        return self.sigma * math.sqrt(2.0 * math.log(1.0 / tol))

    def tail_moment(self, r):
        r = np.asarray(r, dtype=float)
        n = self.dimension
        h = n / 2.0
        return self.amplitude * self.sigma ** n * 2.0 ** (h - 1.0) * special.gamma(h) \
            * special.gammaincc(h, r ** 2 / (2.0 * self.sigma ** 2))


KERNEL_SHORTHAND = {
    "mollifier": MollifierKernel.positional,
    "simons_limit": SimonsLimitKernel.positional,
    "fractional": FractionalKernel.positional,
    "gaussian": GaussianKernel.positional,
}


def make_kernel(dimension, spec, path="kernel"):
    """Build a kernel from ``family:params`` or a mapping with ``family``/``name``"""
    record = parse_shorthand(spec, KERNEL_SHORTHAND, path)
    family = record.pop("family", None) or record.pop("name", None)
    cls = get_class("kernel", family)
    if cls is None:
        raise ConfigError(f"{path}.family",
                          f"unknown kernel family {family!r}; known: {sorted(get_all('kernel'))}")
    return cls(dimension, **record)


def kernel_value(k, x):
    """K(x) for points x of shape (..., n); even under x -> -x"""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != k.dimension:
        raise ParameterError(f"expected points in R^{k.dimension}, got shape {x.shape}")
    return k.value(np.linalg.norm(x, axis=-1))


def kernel_gradient(k, x):
    """grad K(x) = k'(|x|) x/|x| for points x of shape (..., n)"""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != k.dimension:
        raise ParameterError(f"expected points in R^{k.dimension}, got shape {x.shape}")
    r = np.linalg.norm(x, axis=-1)
    dk = k.radial_derivative(r)
    safe = np.where(r > 0.0, r, 1.0)
    return np.where((r > 0.0)[..., None], (dk / safe)[..., None] * x, 0.0)


def kernel_mass(k):
    """C_K = 1/2 int K; UnsupportedOperation for non-integrable families"""
    if not k.integrable:
        raise UnsupportedOperation(f"{k.name} kernel is not integrable")
    return k.mass_constant
