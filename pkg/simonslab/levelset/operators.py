"""Function-case operators with the measure d mu_u = |grad u| dy.

    H_{K,u}(x)    = C_K - int u(y) K(x - y) dy
    c^2_{K,u}(x)  = 1/2 int |nu_u(x) - nu_u(y)|^2 K(x - y) d mu_u
    L_{K,u} g(x)  = int (g(x) - g(y)) K(x - y) d mu_u

All integrals run on a frame-aligned midpoint grid around x.  Nodes with
|grad u| < g_min are left out of the mu_u integrals and the part they would
contribute is bounded from closed-form quantities that stay finite there.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from simonslab.core.errors import (CapabilityError, DegenerateGradientError, HypothesisError,
                                   ParameterError)
from simonslab.core.reduction import tree_sum
from simonslab.geometry.fields import CoordinateField, field_value
from simonslab.geometry.frame import check_tangent_index
from simonslab.geometry.surfaces import Sphere, complete_frame
from simonslab.identities.reports import SAFETY_FACTOR, ResidualReport
from simonslab.kernels import kernel_gradient, kernel_mass, kernel_value, unit_sphere_area
from simonslab.levelset.functions import SigmoidSphere
from simonslab.levelset.grid import GRADIENT_CUTOFF, VolumeGrid, gradient_max, grid_reduce
from simonslab.nonlocal_ops import (EPS, Estimate, lk_apply, make_context, mean_curvature_estimate,
                                    total_curvature_sq)
from simonslab.quadrature import sphere_product_rule

logger = logging.getLogger(__name__)

DEFAULT_CELLS = 64
BOX_MARGIN = 1.25
FD_FACTOR = 1e-2
FIRST_DERIVATIVE = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
STEPS = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])


@dataclass(frozen=True, eq=False)
class LevelSetContext:
    """Standing data (u, K, x) with the frame at x and the volume grid"""
    function: object
    kernel: object
    point: np.ndarray
    rotation: np.ndarray
    normal: Optional[np.ndarray]
    grid: VolumeGrid
    gradient_max: float
    executor: Optional[object] = None

    @property
    def g_min(self):
        return GRADIENT_CUTOFF * self.gradient_max

    @property
    def dimension(self):
        return self.function.dimension

    @property
    def tangents(self):
        return self.rotation[:-1]

    def with_grid(self, grid):
        return LevelSetContext(self.function, self.kernel, self.point, self.rotation, self.normal,
                               grid, self.gradient_max, self.executor)

    def with_coarse(self):
        return self.with_grid(self.grid.coarser())


def kernel_reach(kernel):
    """Support radius, else the truncation radius"""
    if kernel.support_radius is not None:
        return kernel.support_radius
    return kernel.truncation_radius()


def levelset_context(u, kernel, x=None, cells=DEFAULT_CELLS, half_width=None, tangents=None,
                     require_normal=True, executor=None):
    """Frame x, lay out the grid and fix the gradient cutoff"""
    if kernel.dimension != u.dimension:
        raise ParameterError(f"kernel dimension {kernel.dimension} != function dimension {u.dimension}")
    x = u.named_point(x) if x is None or isinstance(x, str) else np.asarray(x, dtype=float)
    grad = u.gradient(x)
    norm = float(np.linalg.norm(grad))
    n = u.dimension
    if norm > 0.0:
        normal = -grad / norm
        frame = complete_frame(normal) if tangents is None else np.asarray(tangents, dtype=float)
        rotation = np.vstack([frame, normal])
    elif require_normal:
        raise DegenerateGradientError(f"grad u vanishes at {x.tolist()}")
    else:
        normal, rotation = None, np.eye(n)
    half_width = BOX_MARGIN * kernel_reach(kernel) if half_width is None else float(half_width)
    grid = VolumeGrid(x, rotation, half_width, int(cells))
    g_max = gradient_max(u, grid, executor)
    if require_normal and norm < GRADIENT_CUTOFF * g_max:
        raise DegenerateGradientError(
            f"|grad u(x)| = {norm:.3e} below the cutoff {GRADIENT_CUTOFF * g_max:.3e}")
    return LevelSetContext(u, kernel, x, rotation, normal, grid, g_max, executor)


def _floor(value, size):
    return 64.0 * EPS * max(1.0, float(np.max(np.abs(value)))) * math.log2(size + 1)


def _tail(ctx, scale):
    """scale x kernel mass outside the ball inscribed in the box"""
    if ctx.kernel.support_radius is not None and ctx.kernel.support_radius <= ctx.grid.half_width:
        return 0.0
    return scale * unit_sphere_area(ctx.dimension) * float(ctx.kernel.tail_moment(ctx.grid.half_width))


def _estimate(ctx, evaluate, tail_scale=0.0):
    fine = evaluate(ctx)
    coarse = evaluate(ctx.with_coarse())
    diff = float(np.max(np.abs(np.asarray(fine) - np.asarray(coarse))))
    tail = _tail(ctx, tail_scale) if tail_scale else 0.0
    return Estimate(fine, diff + tail + _floor(fine, ctx.grid.size), quadrature=diff, tail=tail)


class NodeData:
    """Everything the integrands need on one block of grid nodes"""

    def __init__(self, ctx, points):
        self.points = points
        u = ctx.function
        self.norm, self.nu, self.shape, self.mean, self.mask = u.level_data(points, ctx.g_min)
        self.weight = np.where(self.mask, self.norm, 0.0)
        self.excluded = np.where(self.mask, 0.0, self.norm)
        self.k = kernel_value(ctx.kernel, ctx.point - points)
        self._ctx = ctx

    @property
    def grad_k(self):
        return kernel_gradient(self._ctx.kernel, self._ctx.point - self.points)

    @property
    def excluded_hessian_norm(self):
        """|hess u|_2 on the excluded nodes, 0 elsewhere"""
        out = np.zeros(len(self.points))
        skip = ~self.mask
        if np.any(skip):
            out[skip] = np.linalg.norm(self._ctx.function.hessian(self.points[skip]), ord=2, axis=(1, 2))
        return out


def _reduce(ctx, columns):
    """Grid sum of the stacked columns returned by ``columns(NodeData)``"""
    return grid_reduce(ctx.grid, lambda p: np.column_stack(columns(NodeData(ctx, p))), ctx.executor)


# -- operators -------------------------------------------------------------------

def _h(ctx):
    values = grid_reduce(ctx.grid, lambda p: ctx.function.value(p) * kernel_value(ctx.kernel, ctx.point - p),
                         ctx.executor)
    return kernel_mass(ctx.kernel) - float(values)


def h_ku(u, kernel, x=None, cells=DEFAULT_CELLS, executor=None):
    """H_{K,u}(x) with its budget; HypothesisError when u is unbounded"""
    if u.bound is None:
        raise HypothesisError(f"{u.name} is unbounded; H_(K,u) needs a bounded u")
    ctx = levelset_context(u, kernel, x, cells, require_normal=False, executor=executor)
    return _estimate(ctx, _h, tail_scale=u.bound)


def _require_normal(ctx):
    if ctx.normal is None:
        raise DegenerateGradientError(f"grad u vanishes at {ctx.point.tolist()}")


def _c2_columns(ctx):
    nu_x = ctx.normal

    def columns(d):
        diff = nu_x - d.nu
        sq = np.einsum("ki,ki->k", diff, diff)
        return [0.5 * sq * d.k * d.weight, d.k * d.weight, *(d.nu * (d.k * d.weight)[:, None]).T,
                2.0 * d.k * d.excluded]
    return columns


def c_ku_sq_forms(ctx):
    """(direct, rearranged, excluded bound) on shared nodes"""
    _require_normal(ctx)
    sums = _reduce(ctx, _c2_columns(ctx))
    n = ctx.dimension
    direct = float(sums[0])
    rearranged = float(sums[1]) - float(ctx.normal @ sums[2:2 + n])
    return direct, rearranged, float(sums[2 + n])


def c_ku_sq(u, kernel, x=None, cells=DEFAULT_CELLS, executor=None):
    """c^2_{K,u}(x) with its budget (quadrature, tail, excluded low-gradient mass)"""
    ctx = levelset_context(u, kernel, x, cells, executor=executor)
    fine, _, excluded = c_ku_sq_forms(ctx)
    coarse = c_ku_sq_forms(ctx.with_coarse())[0]
    diff = abs(fine - coarse)
    tail = _tail(ctx, 2.0 * ctx.gradient_max)
    return Estimate(fine, diff + tail + excluded + _floor(fine, ctx.grid.size), quadrature=diff, tail=tail)


def c_ku_sq_rearranged(u, kernel, x=None, cells=DEFAULT_CELLS, executor=None):
    """int K d mu - nu_u(x) . int nu_u K d mu on the same nodes as c_ku_sq"""
    ctx = levelset_context(u, kernel, x, cells, executor=executor)
    return c_ku_sq_forms(ctx)[1]


def _lk(ctx, g):
    gx = float(field_value(g, ctx.point)[0])

    def columns(d):
        gy = field_value(g, d.points)
        return [(gx - gy) * d.k * d.weight, np.abs(gx - gy) * d.k * d.excluded]
    sums = _reduce(ctx, columns)
    return float(sums[0]), float(sums[1])


def l_ku_apply(u, kernel, g, x=None, cells=DEFAULT_CELLS, executor=None):
    """L_{K,u} g(x) with its budget; exactly 0 for constant g"""
    ctx = levelset_context(u, kernel, x, cells, require_normal=False, executor=executor)
    fine, excluded = _lk(ctx, g)
    coarse, _ = _lk(ctx.with_coarse(), g)
    diff = abs(fine - coarse)
    return Estimate(fine, diff + excluded + _floor(fine, ctx.grid.size), quadrature=diff)


# -- Simons identity for level sets ----------------------------------------------

def _gradient_field(ctx, z):
    """G(z) = grad H_{K,u}(z) = -int grad u(y) K(z - y) dy"""
    u, kernel = ctx.function, ctx.kernel
    return -grid_reduce(ctx.grid, lambda p: u.gradient(p) * kernel_value(kernel, z - p)[:, None],
                        ctx.executor)


def _tangential_component(ctx, z, t):
    g = _gradient_field(ctx, z)
    nu = ctx.function.normal(z)
    return float(t @ g - (t @ nu) * (nu @ g))


def mixed_derivative_fd(ctx, t_first, t_second, h):
    """Straight-line derivative along t_second of delta_{t_first} H_{K,u}"""
    values = np.array([_tangential_component(ctx, ctx.point + s * h * t_second, t_first) for s in STEPS])
    return float(FIRST_DERIVATIVE @ values) / h


def _simons_columns(ctx, t_i, t_j, h_ij):
    def columns(d):
        grad_u = ctx.function.gradient(d.points)
        grad_k = d.grad_k
        g_ij = np.einsum("i,kij,j->k", t_i, d.shape, t_j)
        nu_i, nu_j = d.nu @ t_i, d.nu @ t_j
        flux = np.einsum("ki,ki->k", d.nu, grad_k)
        diff = ctx.normal - d.nu
        hess = d.excluded_hessian_norm
        k_abs = np.abs(d.k)
        return [
            -(grad_u @ t_i) * (grad_k @ t_j),
            -(grad_u @ t_j) * (grad_k @ t_i),
            *(-grad_u * d.k[:, None]).T,
            (h_ij - g_ij) * d.k * d.weight,
            0.5 * np.einsum("ki,ki->k", diff, diff) * d.k * d.weight,
            (d.mean * d.k - flux) * nu_i * nu_j * d.weight,
            (abs(h_ij) * d.excluded + hess) * k_abs,
            2.0 * k_abs * d.excluded,
            (ctx.dimension - 1) * hess * k_abs + d.excluded * np.linalg.norm(grad_k, axis=1),
        ]
    return columns


def simons_u_terms(ctx, i, j):
    """Terms of the level-set Simons identity on the context grid"""
    n = ctx.dimension
    t_i, t_j = ctx.tangents[i - 1], ctx.tangents[j - 1]
    shape_x = ctx.function.shape_operator(ctx.point)
    h_ij = float(t_i @ shape_x @ t_j)
    s = _reduce(ctx, _simons_columns(ctx, t_i, t_j, h_ij))
    g = s[2:2 + n]
    lk, c2, geo = (float(v) for v in s[2 + n:5 + n])
    excl_lk, excl_c2, excl_geo = (float(v) for v in s[5 + n:8 + n])
    nu_g = float(ctx.normal @ g)
    return {
        "lhs": float(s[0]) - h_ij * nu_g,
        "lhs_swapped": float(s[1]) - h_ij * nu_g,
        "lk": -lk,
        "c2": c2 * h_ij,
        "c2_value": c2,
        "geo": -geo,
        "h_ij": h_ij,
        "excluded": {"lk": excl_lk, "c2": excl_c2 * abs(h_ij), "geo": excl_geo},
    }


def simons_u_residual(u, kernel, x=None, i=1, j=1, cells=DEFAULT_CELLS, h=None, tangents=None,
                      executor=None):
    """ResidualReport of the level-set Simons identity at x for the frame pair (i, j)"""
    n = u.dimension
    i = check_tangent_index(i, n, "i")
    j = check_tangent_index(j, n, "j")
    if kernel.singularity_order > 0 or not kernel.truncatable:
        raise CapabilityError("the level-set identity needs an integrable kernel of finite reach, smooth at the origin")
    ctx = levelset_context(u, kernel, x, cells, tangents=tangents, executor=executor)
    fine = simons_u_terms(ctx, i, j)
    coarse = simons_u_terms(ctx.with_coarse(), i, j)
    size = ctx.grid.size

    h = FD_FACTOR * kernel_reach(kernel) if h is None else float(h)
    t_i, t_j = ctx.tangents[i - 1], ctx.tangents[j - 1]
    fd = mixed_derivative_fd(ctx, t_i, t_j, h)

    tail = _tail(ctx, ctx.gradient_max)

    def quad(name):
        return abs(fine[name] - coarse[name]) + _floor(fine[name], size)

    budgets = {
        "lhs": quad("lhs") + tail,
        "lk": quad("lk") + fine["excluded"]["lk"] + tail,
        "c2": quad("c2") + fine["excluded"]["c2"] + tail,
        "geo": quad("geo") + fine["excluded"]["geo"] + tail,
    }
    swapped_gap = abs(fine["lhs"] - fine["lhs_swapped"])
    checks = {
        "finite_difference": fd,
        "finite_difference_gap": abs(fd - fine["lhs"]),
        "swapped": fine["lhs_swapped"],
        "symmetry_gap": swapped_gap,
        "symmetry_ok": swapped_gap <= SAFETY_FACTOR * 2.0 * budgets["lhs"],
        "c2": fine["c2_value"],
        "g_min": ctx.g_min,
        "excluded": fine["excluded"],
        "fd_step": h,
    }
    parameters = {"function": u.describe(), "kernel": kernel.describe(), "point": ctx.point.tolist(),
                  "i": i, "j": j, **ctx.grid.describe()}
    report = ResidualReport("simons-levelset", fine["lhs"], fine["lk"], fine["c2"], fine["geo"],
                            budgets, parameters, checks)
    logger.info("Level-set Simons (%d,%d) for %s: %s", i, j, u.name, report.summary())
    return report


# -- coarea ----------------------------------------------------------------------

def coarea_check(u, g, n_levels=128, cells=96, order=64, tol=1e-4, executor=None):
    """int g d mu_u against int (int_{u=t} g dH) dt by Gauss-Legendre slicing in t.

    Needs a radial u in R^3, so that every level set is a sphere.
    """
    if not u.radial or u.dimension != 3:
        raise CapabilityError("coarea slicing needs a radial function in R^3")
    if getattr(g, "support", None) is None:
        raise ParameterError("coarea check needs a compactly supported field")
    center, radius = g.support
    center = np.asarray(center, dtype=float)
    grid = VolumeGrid(center, np.eye(3), float(radius), int(cells))
    volume = float(grid_reduce(
        grid, lambda p: field_value(g, p) * np.linalg.norm(u.gradient(p), axis=1), executor))

    d = float(np.linalg.norm(center - u.origin))
    r_lo, r_hi = max(0.0, d - radius), d + radius
    t_hi, t_lo = float(u.profile(np.array(r_lo))), float(u.profile(np.array(r_hi)))
    nodes, weights = np.polynomial.legendre.leggauss(n_levels)
    levels = 0.5 * (t_hi - t_lo) * nodes + 0.5 * (t_hi + t_lo)
    sphere_points, sphere_weights = sphere_product_rule(order)

    def slice_integral(t):
        r = u.radius_of_level(t, r_hi)
        values = field_value(g, u.origin + r * sphere_points)
        return r ** 2 * float(tree_sum(sphere_weights * values))

    slices = np.array([slice_integral(t) for t in levels])
    sliced = 0.5 * (t_hi - t_lo) * float(tree_sum(weights * slices))
    gap = abs(volume - sliced)
    logger.info("Coarea check for %s: volume=%.10g sliced=%.10g gap=%.2e", u.name, volume, sliced, gap)
    return {"volume": volume, "sliced": sliced, "gap": gap, "tolerance": tol, "passed": gap <= tol,
            "levels": n_levels, "order": order, "cells": cells}


# -- sharp-interface limit -----------------------------------------------------

SHARP_QUANTITIES = ("h", "c2", "lk")


@dataclass(frozen=True, eq=False)
class SharpInterfaceStudy:
    """Sigmoid-sphere values by decreasing width against the sphere values"""
    widths: tuple
    rows: tuple
    geometric: dict
    extrapolated: dict
    budgets: dict

    def gap(self, quantity):
        return abs(self.extrapolated[quantity] - self.geometric[quantity])

    @property
    def checks(self):
        return {q: self.gap(q) <= SAFETY_FACTOR * self.budgets[q] for q in SHARP_QUANTITIES}

    @property
    def passed(self):
        return all(self.checks.values())

    def to_records(self):
        records = []
        for w, row in zip(self.widths, self.rows):
            record = {"width": w}
            for q in SHARP_QUANTITIES:
                record[q] = row[q].value
                record[f"{q}_error"] = row[q].error
                record[f"{q}_geometric"] = self.geometric[q]
            records.append(record)
        return records


def _richardson(widths, values):
    """Extrapolate v(w) = v0 + a w^2 from the last two widths"""
    if len(widths) < 2:
        return values[-1]
    wa, wb = widths[-2] ** 2, widths[-1] ** 2
    return (wa * values[-1] - wb * values[-2]) / (wa - wb)


def sharp_interface_study(radius, kernel, widths=(0.08, 0.04, 0.02), cells=96, level=6, g=None,
                          executor=None):
    """Sigmoid approximations of the ball B_radius against the sphere operators at the north pole"""
    widths = tuple(float(w) for w in widths)
    if any(b >= a for a, b in zip(widths, widths[1:])):
        raise ParameterError(f"widths must be strictly decreasing: {widths}")
    n = kernel.dimension
    sphere = Sphere(n, radius=radius)
    ctx = make_context(sphere, kernel, "north", level=level)
    g = CoordinateField(n - 1, n) if g is None else g
    geo_h = mean_curvature_estimate(ctx)
    geometric = {"h": geo_h.value, "c2": total_curvature_sq(ctx), "lk": lk_apply(ctx, g)}
    geometric_error = {"h": geo_h.error,
                       "c2": abs(geometric["c2"] - total_curvature_sq(ctx.with_coarse())),
                       "lk": abs(geometric["lk"] - lk_apply(ctx.with_coarse(), g))}

    x = sphere.named_point("north")
    rows = []
    for w in widths:
        u = SigmoidSphere(n, radius=radius, width=w)
        rows.append({"h": h_ku(u, kernel, x, cells, executor),
                     "c2": c_ku_sq(u, kernel, x, cells, executor),
                     "lk": l_ku_apply(u, kernel, g, x, cells, executor)})
        logger.info("Sharp interface w=%g: %s", w,
                    ", ".join(f"{q}={rows[-1][q].value:.8g}" for q in SHARP_QUANTITIES))

    extrapolated, budgets = {}, {}
    for q in SHARP_QUANTITIES:
        values = [row[q].value for row in rows]
        extrapolated[q] = _richardson(widths, values)
        budgets[q] = abs(extrapolated[q] - values[-1]) + rows[-1][q].error + geometric_error[q]
    return SharpInterfaceStudy(widths, tuple(rows), geometric, extrapolated, budgets)
