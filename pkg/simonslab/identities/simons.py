"""Residual of the nonlocal Simons identity at a framed point.

    d_i d_j H_K(x) = -L_K h_ij(x) + c_K^2(x) h_ij(x)
                     - int (H K(x-y) - nu(y) . grad K(x-y)) nu_i(y) nu_j(y) dA_y

Indices refer to the tangents of the adapted frame at the base point.
"""

import logging
import math

import numpy as np

from simonslab.core.errors import CapabilityError
from simonslab.geometry.fields import ShapeEntryField
from simonslab.geometry.frame import STEPS, check_tangent_index, surface_curve
from simonslab.identities.reports import SAFETY_FACTOR, ResidualReport
from simonslab.kernels import kernel_gradient
from simonslab.nonlocal_ops import (EPS, kernel_at_nodes, kernel_gradient_at_nodes, lk_apply,
                                    nonlocal_mean_curvature_gradient, rule_tail,
                                    total_curvature_sq)
from simonslab.quadrature import node_sum

logger = logging.getLogger(__name__)

FD_FACTOR = 1e-2
FIRST_DERIVATIVE = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0


def tangential_gradient_component(ctx, x, t):
    """delta_t H_K(x) = t . G(x) - (t . nu(x)) (nu(x) . G(x)), G = grad H_K"""
    g = nonlocal_mean_curvature_gradient(ctx, x)
    nu = ctx.surface.normal(x)
    return float(t @ g - (t @ nu) * (nu @ g))


def mixed_derivative_fd(ctx, t_first, t_second, h):
    """Derivative along t_second of delta_{t_first} H_K, fourth-order stencil"""
    points = surface_curve(ctx.surface, ctx.base.point, t_second, STEPS * h)
    values = np.array([tangential_gradient_component(ctx, p, t_first) for p in points])
    return float(FIRST_DERIVATIVE @ values) / h


def mixed_derivative_closed(ctx, t_i, t_j):
    """Closed gradient form: int (t_i . nu) (grad K . t_j) - h_ij (nu(x) . G)"""
    rule = ctx.rule
    grad_k = kernel_gradient_at_nodes(ctx)
    first = node_sum(rule, (rule.normals @ t_i) * (grad_k @ t_j))
    h_ij = float(t_i @ ctx.base.shape_ambient @ t_j)
    g = nonlocal_mean_curvature_gradient(ctx)
    return first - h_ij * float(ctx.base.normal @ g)


def correction_integral(ctx, t_i, t_j, x=None):
    """int (H(y) K(x-y) - nu(y) . grad K(x-y)) (t_i . nu(y)) (t_j . nu(y)) dA_y"""
    rule = ctx.rule
    x = ctx.base.point if x is None else x
    k = kernel_at_nodes(ctx, x)
    grad_k = kernel_gradient(ctx.kernel, x - rule.points)
    flux = np.einsum("ki,ki->k", rule.normals, grad_k)
    return node_sum(rule, (rule.mean_curvature * k - flux) * (rule.normals @ t_i) * (rule.normals @ t_j))


def default_step(ctx):
    support = ctx.kernel.support_radius
    scale = ctx.surface.length_scale if support is None else min(support, ctx.surface.length_scale)
    return FD_FACTOR * scale


def simons_terms(ctx, i, j):
    """Every term of the identity on the context rule, lhs in closed gradient form"""
    t_i = ctx.base.tangents[i - 1]
    t_j = ctx.base.tangents[j - 1]
    h_ij = float(ctx.base.shape[i - 1, j - 1])
    c2 = total_curvature_sq(ctx)
    return {
        "lhs": mixed_derivative_closed(ctx, t_i, t_j),
        "lhs_swapped": mixed_derivative_closed(ctx, t_j, t_i),
        "lk": -lk_apply(ctx, ShapeEntryField(ctx.surface, t_i, t_j)),
        "c2": c2 * h_ij,
        "c2_value": c2,
        "geo": -correction_integral(ctx, t_i, t_j),
    }


def finite_difference_lhs(ctx, i, j, h):
    """(value at h/2, |value at h - value at h/2|) of the stencil lhs"""
    t_i = ctx.base.tangents[i - 1]
    t_j = ctx.base.tangents[j - 1]
    coarse = mixed_derivative_fd(ctx, t_i, t_j, h)
    fine = mixed_derivative_fd(ctx, t_i, t_j, h / 2.0)
    return fine, abs(coarse - fine)


def _floor(value, size):
    return 64.0 * EPS * max(1.0, abs(value)) * math.log2(size + 1)


def simons_residual(ctx, i, j, h=None):
    """ResidualReport of the nonlocal Simons identity for the frame pair (i, j)

    The lhs is the closed gradient form; the stencil along surface curves is
    kept in ``checks`` with its own budget, which carries the quadrature
    error of H_K divided by the step.
    """
    n = ctx.dimension
    i = check_tangent_index(i, n, "i")
    j = check_tangent_index(j, n, "j")
    if ctx.kernel.singularity_order > 0:
        raise CapabilityError("the Simons residual needs a kernel that is smooth at the origin")
    h = default_step(ctx) if h is None else float(h)

    fine = simons_terms(ctx, i, j)
    coarse = simons_terms(ctx.with_coarse(), i, j)
    size = ctx.rule.size

    tail = rule_tail(ctx)
    dtail = rule_tail(ctx, derivative=True)
    curvature = float(np.max(np.abs(ctx.rule.mean_curvature))) if size else 0.0
    shape_max = float(np.max(np.abs(ctx.rule.shape))) if size else 0.0
    h_ij = abs(float(ctx.base.shape[i - 1, j - 1]))

    def quad(name):
        return abs(fine[name] - coarse[name]) + _floor(fine[name], size)

    budgets = {
        "lhs": quad("lhs") + dtail + h_ij * tail,
        "lk": quad("lk") + 2.0 * shape_max * tail,
        "c2": quad("c2") + 2.0 * h_ij * tail,
        "geo": quad("geo") + curvature * tail + dtail,
    }
    swapped_gap = abs(fine["lhs"] - fine["lhs_swapped"])
    swapped_budget = budgets["lhs"] + quad("lhs_swapped")

    fd, fd_step = finite_difference_lhs(ctx, i, j, h)
    fd_gap = abs(fd - fine["lhs"])
    gradient_error = float(np.linalg.norm(nonlocal_mean_curvature_gradient(ctx)
                                          - nonlocal_mean_curvature_gradient(ctx.with_coarse())))
    # quadrature error of delta H at the shifted points, amplified by the stencil
    fd_budget = fd_step + float(np.sum(np.abs(FIRST_DERIVATIVE))) * (gradient_error + tail) / (h / 2.0)
    checks = {
        "finite_difference": fd,
        "finite_difference_gap": fd_gap,
        "finite_difference_budget": fd_budget,
        "finite_difference_ok": fd_gap <= SAFETY_FACTOR * fd_budget,
        "swapped": fine["lhs_swapped"],
        "symmetry_gap": swapped_gap,
        "symmetry_ok": swapped_gap <= SAFETY_FACTOR * swapped_budget,
        "c2": fine["c2_value"],
        "fd_step": h,
    }
    parameters = {
        "surface": ctx.surface.describe(), "kernel": ctx.kernel.describe(),
        "i": i, "j": j, **ctx.rule.describe(),
    }
    report = ResidualReport("simons", fine["lhs"], fine["lk"], fine["c2"], fine["geo"],
                            budgets, parameters, checks)
    logger.info("Simons (%d,%d) on %s: %s", i, j, ctx.surface.name, report.summary())
    return report
