"""Surface quadrature rules graded towards a base point.

A rule lives on a polar patch around the base point.  The radial direction
is split into an inner disk [0, A 2^-L], L dyadic layers [A 2^-k-1, A 2^-k]
and an outer band up to the patch edge; every block carries 2^(L//2)
Gauss-Legendre panels.  Angles are uniform (so phi and phi + pi are both
nodes) or Gauss-Legendre sectors between the corners of a box domain.

The exclusion disk is taken in chart radius, which keeps mirror pairs
together.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from simonslab.core.errors import ParameterError
from simonslab.core.reduction import rounding_floor, tree_sum

logger = logging.getLogger(__name__)

RADIAL_ORDER = 6
SECTOR_ORDER = 16
CLIP_TOL = 1e-12


@dataclass(frozen=True)
class GrowthCertificate:
    """Sampled area-growth bound  sum_{B_r} (|H| + 1) dA <= C r^beta"""
    beta: float
    constant: float
    R0: float
    radii: tuple
    masses: tuple
    slope: Optional[float]

    def describe(self):
        return {"beta": self.beta, "C": self.constant, "R0": self.R0,
                "radii": list(self.radii), "masses": list(self.masses), "slope": self.slope}


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Weighted nodes on the surface around ``base``"""
    surface: object
    base: object
    points: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    mean_curvature: np.ndarray
    shape: np.ndarray
    chart_radius: np.ndarray
    chart_angle: np.ndarray
    exclusion: float
    truncation: float
    level: int
    radius_limit: float
    covers: bool
    R0: Optional[float]
    growth: Optional[GrowthCertificate]
    area_estimate: float
    area_error: float

    @property
    def size(self):
        return len(self.weights)

    @property
    def innermost(self):
        """Innermost radial breakpoint A 2^-L"""
        return self.radius_limit * 2.0 ** -self.level

    @property
    def spacing(self):
        """Nominal node spacing near the base point"""
        return self.innermost / RADIAL_ORDER

    def retained(self, delta):
        return self.chart_radius >= delta

    def restrict(self, mask):
        mask = np.asarray(mask, dtype=bool)
        return replace(self, points=self.points[mask], weights=self.weights[mask],
                       normals=self.normals[mask], mean_curvature=self.mean_curvature[mask],
                       shape=self.shape[mask], chart_radius=self.chart_radius[mask],
                       chart_angle=self.chart_angle[mask])

    def outer_ring(self):
        """Nodes in the outermost tenth of the rule"""
        dist = np.linalg.norm(self.points - self.base.point, axis=1)
        return (dist >= 0.9 * self.truncation) | (self.chart_radius >= 0.9 * self.chart_radius.max())

    def at_level(self, level):
        """Same rule rebuilt at another refinement level"""
        return build_quadrature(self.surface, self.base, self.exclusion, self.truncation,
                                level, R0=self.R0)

    def describe(self):
        return {
            "nodes": self.size, "delta": self.exclusion, "R": self.truncation, "L": self.level,
            "area": self.area_estimate, "area_error": self.area_error,
            "growth": self.growth.describe() if self.growth else None,
        }


def gauss_panels(lo, hi, panels, order=RADIAL_ORDER):
    """Composite Gauss-Legendre nodes on [lo, hi] (arrays broadcast)"""
    x, w = np.polynomial.legendre.leggauss(order)
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    edges = np.linspace(0.0, 1.0, panels + 1)
    local = ((edges[:-1, None] + edges[1:, None]) / 2.0 + np.diff(edges)[:, None] / 2.0 * x).ravel()
    weights = np.repeat(np.diff(edges) / 2.0, order) * np.tile(w, panels)
    return lo + (hi - lo) * local, (hi - lo) * weights


def angular_nodes(level, sectors=None):
    m = 8 * 2 ** (level // 2)
    if sectors is None:
        return 2.0 * math.pi * np.arange(m) / m, np.full(m, 2.0 * math.pi / m)
    breaks = np.append(sectors, sectors[0] + 2.0 * math.pi)
    q = max(SECTOR_ORDER, m // len(sectors))
    phi, w = gauss_panels(breaks[:-1], breaks[1:], 1, order=q)
    return np.mod(phi.ravel(), 2.0 * math.pi), w.ravel()


def radial_breaks(radius, level):
    """[0, A 2^-L, ..., A/2, A]"""
    return np.concatenate([[0.0], radius * 2.0 ** -np.arange(level, -1, -1, dtype=float)])


def _polar_nodes(patch, level):
    panels = 2 ** (level // 2)
    phi, wphi = angular_nodes(level, patch.sectors)
    breaks = radial_breaks(patch.radius, level)
    rho, wrho = gauss_panels(breaks[:-1], breaks[1:], panels)
    rho, wrho = rho.ravel(), wrho.ravel()

    all_rho = [np.repeat(rho, len(phi))]
    all_phi = [np.tile(phi, len(rho))]
    all_w = [np.repeat(wrho, len(phi)) * np.tile(wphi, len(rho))]

    if patch.edge is not None:
        edge = np.maximum(patch.edge(phi), patch.radius)
        brho, bw = gauss_panels(np.full(len(phi), patch.radius), edge, panels)
        count = brho.shape[1]
        all_rho.append(brho.ravel())
        all_phi.append(np.repeat(phi, count))
        all_w.append((bw * wphi[:, None]).ravel())

    return np.concatenate(all_rho), np.concatenate(all_phi), np.concatenate(all_w)


def growth_certificate(points, weights, mean_curvature, x0, R, R0, beta):
    """Max over dyadic radii of sum (|H| + 1) w / r^beta, with the log-log slope"""
    dist = np.linalg.norm(points - x0, axis=1)
    mass_density = weights * (np.abs(mean_curvature) + 1.0)
    radii, masses = [], []
    r = R0
    while r <= R * (1.0 + CLIP_TOL):
        radii.append(r)
        masses.append(float(tree_sum(np.where(dist < r, mass_density, 0.0))))
        r *= 2.0
    if not radii:
        return None
    radii_arr = np.array(radii)
    masses_arr = np.array(masses)
    constant = float(np.max(masses_arr / radii_arr ** beta))
    slope = None
    if len(radii) >= 2 and np.all(masses_arr > 0.0):
        slope = float(np.polyfit(np.log(radii_arr), np.log(masses_arr), 1)[0])
    return GrowthCertificate(beta=float(beta), constant=constant, R0=float(R0),
                             radii=tuple(radii), masses=tuple(masses), slope=slope)


def build_quadrature(S, base, delta=0.0, R=None, level=6, R0=None, with_error=True):
    """Quadrature for dH^{n-1} on S near ``base`` excluding chart radius < delta"""
    level = int(level)
    if level < 0:
        raise ParameterError(f"refinement level must be >= 0, got {level}")
    if R is None:
        R = S.coverage_radius
        if not math.isfinite(R):
            raise ParameterError(f"{S.name} needs an explicit truncation radius")
    R = float(R)
    delta = float(delta)
    if R <= 0.0:
        raise ParameterError(f"truncation radius must be positive, got {R}")
    if not 0.0 <= delta < R:
        raise ParameterError(f"need 0 <= delta < R, got delta={delta}, R={R}")

    patch = S.polar_patch(base, R)
    if delta >= patch.radius:
        raise ParameterError(f"delta={delta} exceeds the chart radius {patch.radius:.6g}")

    rho, phi, wts = _polar_nodes(patch, level)
    points, density, valid = patch.embed(rho, phi)
    weights = wts * density
    dist = np.linalg.norm(points - base.point, axis=1)
    keep = valid & (weights > 0.0) & (dist <= R * (1.0 + CLIP_TOL))
    rho, phi, points, weights = rho[keep], phi[keep], points[keep], weights[keep]
    if not len(weights):
        raise ParameterError("quadrature rule is empty; increase R or the level")

    mean_curvature = S.mean_curvature(points)
    area = float(tree_sum(weights))
    R0 = R / 8.0 if R0 is None else float(R0)
    growth = growth_certificate(points, weights, mean_curvature, base.point, R, R0,
                                S.growth_exponent)

    if with_error and level > 0:
        coarse = build_quadrature(S, base, 0.0, R, level - 1, R0=R0, with_error=False)
        area_error = abs(area - coarse.area_estimate) + rounding_floor(weights)
    else:
        area_error = abs(area) if level == 0 else rounding_floor(weights)

    retained = rho >= delta
    if not np.any(retained):
        raise ParameterError("exclusion removes every node")
    points, weights, rho, phi = points[retained], weights[retained], rho[retained], phi[retained]
    mean_curvature = mean_curvature[retained]

    rule = QuadratureRule(
        surface=S, base=base, points=points, weights=weights,
        normals=S.normal(points), mean_curvature=mean_curvature,
        shape=S.shape_operator(points), chart_radius=rho, chart_angle=phi,
        exclusion=delta, truncation=R, level=level, radius_limit=float(patch.radius),
        covers=bool(patch.covers), R0=R0, growth=growth, area_estimate=area,
        area_error=float(area_error))
    logger.debug("Built %s rule: %d nodes, L=%d, delta=%g, R=%g, area=%.12g",
                 S.name, rule.size, level, delta, R, area)
    return rule
