"""Nonlocal curvature operators on hypersurfaces.

All surface integrals run on the context rule with the fixed-order tree
reduction; ``estimate`` pairs a value with its error budget (level-L versus
level-(L-1) difference, certified tail and rounding floor).
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Optional

import numpy as np

from simonslab.core.errors import (CapabilityError, ParameterError, TruncationError,
                                   UnsupportedOperation)
from simonslab.core.reduction import tree_sum
from simonslab.geometry.fields import field_gradient, field_value
from simonslab.geometry.frame import surface_frame
from simonslab.geometry.rules import build_quadrature
from simonslab.kernels import kernel_gradient, kernel_value
from simonslab.quadrature import node_sum, tail_bound

logger = logging.getLogger(__name__)

EPS = np.finfo(float).eps
PAIR_BLOCK = 512


@dataclass(frozen=True, eq=False)
class OperatorContext:
    """Standing data (E, K, x): surface, kernel, rule around the framed base"""
    surface: object
    kernel: object
    rule: object
    base: object
    coarse_rule: Optional[object] = None
    delta_schedule: Optional[tuple] = None

    def __post_init__(self):
        if self.kernel.dimension != self.surface.dimension:
            raise ParameterError(
                f"kernel dimension {self.kernel.dimension} != surface dimension {self.surface.dimension}")
        if not np.allclose(self.rule.base.point, self.base.point, atol=1e-12):
            raise ParameterError("rule is not built around the context base point")

    @property
    def dimension(self):
        return self.surface.dimension

    @cached_property
    def coarse(self):
        """Rule one level below, the quadrature error reference"""
        if self.coarse_rule is not None:
            return self.coarse_rule
        if self.rule.level == 0:
            return self.rule
        return self.rule.at_level(self.rule.level - 1)

    def with_rule(self, rule):
        return replace(self, rule=rule, coarse_rule=None)

    def with_coarse(self):
        return self.with_rule(self.coarse)


def default_truncation(surface, kernel):
    """Coverage radius for unbounded kernels, else 1.5 x support (capped by coverage)"""
    coverage = surface.coverage_radius
    support = kernel.support_radius
    if support is None:
        try:
            support = kernel.truncation_radius()
        except CapabilityError:
            support = None
    if support is not None:
        return min(coverage, 1.5 * support)
    if math.isfinite(coverage):
        return coverage
    raise ParameterError(f"{surface.name} with a {kernel.name} kernel needs an explicit R")


def make_context(surface, kernel, point=None, delta=0.0, R=None, level=6, R0=None,
                 tangents=None, delta_schedule=None):
    """Frame the point, build the rule and bundle everything"""
    x = surface.named_point(point) if point is None or isinstance(point, str) else np.asarray(point, float)
    base = surface_frame(surface, x, tangents=tangents, third_order=False)
    R = default_truncation(surface, kernel) if R is None else float(R)
    rule = build_quadrature(surface, base, delta, R, level, R0=R0)
    schedule = tuple(delta_schedule) if delta_schedule else None
    return OperatorContext(surface, kernel, rule, base, delta_schedule=schedule)


@dataclass(frozen=True)
class Estimate:
    """Operator value with its error budget"""
    value: object
    error: float
    quadrature: float = 0.0
    tail: float = 0.0

    def to_record(self):
        value = self.value.tolist() if isinstance(self.value, np.ndarray) else float(self.value)
        return {"value": value, "error": self.error, "quadrature": self.quadrature, "tail": self.tail}


def rule_tail(ctx, derivative=False, factor=1.0):
    """Tail bound beyond the truncation radius (0 when the rule covers the surface)"""
    if ctx.rule.covers:
        return 0.0
    return factor * tail_bound(ctx.rule, ctx.kernel, ctx.rule.truncation, derivative)


def estimate(ctx, op, *args, tail_factor=1.0, derivative=False, **kwargs):
    """Evaluate ``op`` at levels L and L-1 and attach the budget"""
    fine = op(ctx, *args, **kwargs)
    coarse = op(ctx.with_coarse(), *args, **kwargs)
    diff = float(np.max(np.abs(np.asarray(fine) - np.asarray(coarse))))
    tail = rule_tail(ctx, derivative, tail_factor)
    floor = 64.0 * EPS * max(1.0, float(np.max(np.abs(fine)))) * math.log2(ctx.rule.size + 1)
    return Estimate(fine, diff + tail + floor, quadrature=diff, tail=tail)


# -- node data ----------------------------------------------------------------

def kernel_at_nodes(ctx, x=None):
    x = ctx.base.point if x is None else np.asarray(x, dtype=float)
    return kernel_value(ctx.kernel, x - ctx.rule.points)


def kernel_gradient_at_nodes(ctx, x=None):
    """grad K evaluated at x - y_k"""
    x = ctx.base.point if x is None else np.asarray(x, dtype=float)
    return kernel_gradient(ctx.kernel, x - ctx.rule.points)


def _point(ctx, x):
    return ctx.base.point if x is None else np.asarray(x, dtype=float)


# -- operators -------------------------------------------------------------------

def nonlocal_mean_curvature_gradient(ctx, x=None):
    """grad H_{K,E}(x) = int nu(y) K(x - y) dA_y"""
    weights = kernel_at_nodes(ctx, x)
    return node_sum(ctx.rule, ctx.rule.normals * weights[:, None])


def total_curvature_sq(ctx):
    """c^2 = 1/2 int |nu(x) - nu(y)|^2 K dA"""
    diff = ctx.base.normal - ctx.rule.normals
    return 0.5 * node_sum(ctx.rule, np.einsum("ki,ki->k", diff, diff) * kernel_at_nodes(ctx))


def total_curvature_sq_rearranged(ctx):
    """c^2 = int K - nu(x) . int nu(y) K"""
    k = kernel_at_nodes(ctx)
    return node_sum(ctx.rule, k) - float(ctx.base.normal @ node_sum(ctx.rule, ctx.rule.normals * k[:, None]))


def lk_apply(ctx, g, x=None):
    """L_K g(x) = int (g(x) - g(y)) K(x - y) dA_y"""
    x = _point(ctx, x)
    gx = float(field_value(g, x)[0])
    gy = field_value(g, ctx.rule.points)
    return node_sum(ctx.rule, (gx - gy) * kernel_at_nodes(ctx, x))


def bilinear_form_pointwise(ctx, u, v, x=None):
    """B(u, v; x) = 1/2 int (u(x) - u(y)) (v(x) - v(y)) K dA_y"""
    x = _point(ctx, x)
    du = float(field_value(u, x)[0]) - field_value(u, ctx.rule.points)
    dv = float(field_value(v, x)[0]) - field_value(v, ctx.rule.points)
    return 0.5 * node_sum(ctx.rule, du * dv * kernel_at_nodes(ctx, x))


def check_support(rule, *fields):
    """TruncationError when a field lives outside what the rule covers"""
    if rule.covers:
        return
    ring = None
    for f in fields:
        support = getattr(f, "support", None)
        if support is not None:
            center, radius = support
            if np.linalg.norm(np.asarray(center) - rule.base.point) + radius <= rule.truncation:
                continue
        if ring is None:
            ring = rule.outer_ring()
        if np.any(field_value(f, rule.points[ring]) != 0.0):
            raise TruncationError("field support leaks outside the quadrature coverage")


def pair_matrix(kernel, points, rows):
    """W[a, b] = K(y_a - y_b) for a in rows, zero on the diagonal"""
    diff = points[rows][:, None, :] - points[None, :, :]
    r = np.linalg.norm(diff, axis=-1)
    safe = np.where(r > 0.0, r, 1.0)
    return np.where(r > 0.0, kernel.value(safe), 0.0)


def pairwise_sum(kernel, rule, fn):
    """sum_a sum_b w_a w_b K(y_a - y_b) fn(a_rows, b) in row blocks"""
    n = rule.size
    row_sums = []
    for start in range(0, n, PAIR_BLOCK):
        rows = np.arange(start, min(start + PAIR_BLOCK, n))
        w = pair_matrix(kernel, rule.points, rows) * rule.weights[rows][:, None] * rule.weights[None, :]
        row_sums.append(tree_sum(w * fn(rows), axis=1))
    return float(tree_sum(np.concatenate(row_sums))) if row_sums else 0.0


def bilinear_form_total(ctx, u, v, outer_rule=None):
    """B(u, v) = int B(u, v; x) dA_x over the outer rule (all pairs)"""
    rule = ctx.rule if outer_rule is None else outer_rule
    check_support(rule, u, v)
    uu = field_value(u, rule.points)
    vv = field_value(v, rule.points)
    return 0.5 * pairwise_sum(ctx.kernel, rule,
                              lambda rows: (uu[rows][:, None] - uu[None, :]) * (vv[rows][:, None] - vv[None, :]))


def tangential_gradient_at_nodes(rule, g):
    grad = field_gradient(g, rule.points)
    nu = rule.normals
    return grad - nu * np.einsum("ki,ki->k", nu, grad)[:, None]


def _axis(rule, j):
    n = rule.points.shape[1]
    if isinstance(j, bool) or int(j) != j or not 1 <= j <= n:
        raise ParameterError(f"axis must lie in 1..{n}, got {j}")
    return int(j) - 1


def tangential_divergence_check(ctx, g, j):
    """(int delta_j g dA, int H nu_j g dA); equal for compactly supported g"""
    rule = ctx.rule
    k = _axis(rule, j)
    check_support(rule, g)
    lhs = node_sum(rule, tangential_gradient_at_nodes(rule, g)[:, k])
    rhs = node_sum(rule, rule.mean_curvature * rule.normals[:, k] * field_value(g, rule.points))
    return lhs, rhs


def tangential_product_rule_check(ctx, g1, g2, j):
    """(int g1 delta_j g2, int H nu_j g1 g2 - int g2 delta_j g1)"""
    rule = ctx.rule
    k = _axis(rule, j)
    check_support(rule, g1, g2)
    v1 = field_value(g1, rule.points)
    v2 = field_value(g2, rule.points)
    d1 = tangential_gradient_at_nodes(rule, g1)[:, k]
    d2 = tangential_gradient_at_nodes(rule, g2)[:, k]
    lhs = node_sum(rule, v1 * d2)
    rhs = node_sum(rule, rule.mean_curvature * rule.normals[:, k] * v1 * v2) - node_sum(rule, v2 * d1)
    return lhs, rhs


# -- K-mean curvature ----------------------------------------------------------------

def _boundary_form(ctx):
    """int r^-n T(r) (y - x) . nu(y) dA with T(r) = int_r^inf t^(n-1) K"""
    n = ctx.dimension
    z = ctx.rule.points - ctx.base.point
    r = np.linalg.norm(z, axis=1)
    flux = np.einsum("ki,ki->k", z, ctx.rule.normals)
    return node_sum(ctx.rule, r ** -n * ctx.kernel.tail_moment(r) * flux)


def _support(kernel):
    s = kernel.support_radius
    return s if s is not None else kernel.truncation_radius()


def _tangent_disk(base_tangents, s, radial, angular):
    rho, wrho = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(0.0, s, radial + 1)
    r = ((edges[:-1, None] + edges[1:, None]) / 2.0 + np.diff(edges)[:, None] / 2.0 * rho).ravel()
    wr = (np.diff(edges)[:, None] / 2.0 * wrho).ravel() * r
    theta = 2.0 * math.pi * np.arange(angular) / angular
    offsets = (np.outer(r, np.cos(theta))[..., None] * base_tangents[0]
               + np.outer(r, np.sin(theta))[..., None] * base_tangents[1]).reshape(-1, 3)
    weights = np.outer(wr, np.full(angular, 2.0 * math.pi / angular)).ravel()
    heights = np.sqrt(np.maximum(s ** 2 - np.repeat(r, angular) ** 2, 0.0))
    return offsets, weights, heights


def volume_integral_inside(surface, kernel, x, normal, tangents, samples=64, radial=8, angular=32):
    """int_E K(x - y) dy by columns along ``normal`` over the tangent disk"""
    if surface.dimension != 3:
        raise CapabilityError("column integration is implemented in R^3")
    s = _support(kernel)
    offsets, weights, heights = _tangent_disk(tangents, s, radial, angular)
    t = np.linspace(-1.0, 1.0, samples + 1)
    z = heights[:, None] * t[None, :]                                    # (C, M+1)
    pts = x + offsets[:, None, :] + z[..., None] * normal
    phi = surface.level(pts.reshape(-1, 3)).reshape(z.shape)

    lo, hi = z[:, :-1], z[:, 1:]
    in_lo, in_hi = phi[:, :-1] < 0.0, phi[:, 1:] < 0.0
    crossing = in_lo != in_hi
    a, b = lo.copy(), hi.copy()
    # bisection keeps a on the side of the lower endpoint
    for _ in range(60):
        mid = 0.5 * (a + b)
        fm = surface.level((x + offsets[:, None, :] + mid[..., None] * normal).reshape(-1, 3)).reshape(mid.shape)
        same = (fm < 0.0) == in_lo
        a = np.where(crossing & same, mid, a)
        b = np.where(crossing & ~same, mid, b)
    root = 0.5 * (a + b)
    seg_a = np.where(crossing & ~in_lo, root, lo)
    seg_b = np.where(crossing & in_lo, root, hi)
    active = crossing | (in_lo & in_hi)
    seg_b = np.where(active, seg_b, seg_a)

    gz, gw = np.polynomial.legendre.leggauss(6)
    mid = 0.5 * (seg_a + seg_b)
    half = 0.5 * (seg_b - seg_a)
    zz = mid[..., None] + half[..., None] * gz                          # (C, M, q)
    r2 = np.sum(offsets ** 2, axis=1)[:, None, None] + zz ** 2
    column = np.sum(kernel.profile(np.sqrt(r2)) * gw * half[..., None], axis=(1, 2))
    return float(tree_sum(weights * column))


def _volume_form(ctx, x=None, samples=64, radial=8, angular=32):
    if not ctx.kernel.truncatable:
        raise UnsupportedOperation(f"volume form needs an integrable kernel with finite reach, not {ctx.kernel.name}")
    x = _point(ctx, x)
    inside = volume_integral_inside(ctx.surface, ctx.kernel, x, ctx.base.normal, ctx.base.tangents,
                                    samples, radial, angular)
    return ctx.kernel.mass_constant - inside


def _difference_form(ctx, order=24, cells=96, with_budget=False):
    """1/2 int_S int_0^s p(x + r w) K r^(n-1), p = +1 outside E and -1 inside.

    The direction set is antipodal, so every ray is paired with its mirror.
    """
    kernel = ctx.kernel
    if kernel.support_radius is None:
        raise CapabilityError("difference form is evaluated for compactly supported kernels only")
    if ctx.dimension != 3:
        raise CapabilityError("difference form is implemented in R^3")
    from simonslab.quadrature import sphere_product_rule

    s = kernel.support_radius
    dirs, wdir = sphere_product_rule(order)
    edges = np.linspace(0.0, s, cells + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    mass = kernel.profile(mids) * mids ** 2 * np.diff(edges)           # midpoint cell masses
    x = ctx.base.point

    def sign_at(r):
        pts = x + r[None, :, None] * dirs[:, None, :]
        return np.sign(ctx.surface.level(pts.reshape(-1, 3)).reshape(len(dirs), len(r)))

    p = sign_at(mids)
    value = 0.5 * float(tree_sum(wdir * np.sum(p * mass, axis=1)))
    if not with_budget:
        return value
    ends = sign_at(edges)
    jumps = ends[:, :-1] != ends[:, 1:]
    budget = float(np.sum(wdir[:, None] * jumps * np.abs(mass)))
    return value, budget


def nonlocal_mean_curvature(ctx, form="auto"):
    """H_{K,E} at the base point"""
    if form == "auto":
        form = "volume" if ctx.kernel.truncatable else "boundary"
    if form == "volume":
        return _volume_form(ctx)
    if form == "boundary":
        return _boundary_form(ctx)
    if form == "difference":
        return _difference_form(ctx)
    raise ParameterError(f"unknown mean-curvature form {form!r}")


def mean_curvature_estimate(ctx, form="auto"):
    """H_{K,E} with its error budget for the given form"""
    if form == "auto":
        form = "volume" if ctx.kernel.truncatable else "boundary"
    if form == "boundary":
        return estimate(ctx, nonlocal_mean_curvature, "boundary")
    if form == "volume":
        fine = _volume_form(ctx)
        half = _volume_form(ctx, samples=32, radial=4, angular=16)
        err = abs(fine - half) + 64.0 * EPS * max(1.0, abs(fine))
        return Estimate(fine, err, quadrature=abs(fine - half))
    if form == "difference":
        fine, budget = _difference_form(ctx, with_budget=True)
        half = _difference_form(ctx, order=12, cells=48)
        return Estimate(fine, budget + abs(fine - half), quadrature=abs(fine - half))
    raise ParameterError(f"unknown mean-curvature form {form!r}")


def compare_mean_curvature_forms(ctx, forms=None):
    """Evaluate every applicable form; agreement is within the summed budgets"""
    if forms is None:
        forms = ["boundary"]
        if ctx.kernel.truncatable:
            forms.append("volume")
        if ctx.kernel.support_radius is not None and ctx.dimension == 3:
            forms.append("difference")
    results = {form: mean_curvature_estimate(ctx, form) for form in forms}
    pairs = []
    names = list(results)
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            ra, rb = results[names[a]], results[names[b]]
            gap = abs(ra.value - rb.value)
            pairs.append({"forms": (names[a], names[b]), "gap": gap, "budget": ra.error + rb.error,
                          "agree": gap <= 10.0 * (ra.error + rb.error)})
    return results, pairs


def gradient_fd_check(ctx, step=1e-4):
    """Central differences of the volume form against the boundary integral gradient"""
    x0 = ctx.base.point
    n = ctx.dimension
    fd = np.empty(n)
    for l in range(n):
        e = np.zeros(n)
        e[l] = step
        fd[l] = (_volume_form(ctx, x0 + e) - _volume_form(ctx, x0 - e)) / (2.0 * step)
    grad = estimate(ctx, nonlocal_mean_curvature_gradient)
    gap = float(np.max(np.abs(fd - grad.value)))
    return {"step": step, "finite_difference": fd.tolist(), "boundary": grad.value.tolist(),
            "gap": gap, "budget": grad.error}
