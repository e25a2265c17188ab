"""Small-eps study of the limit kernel eps r^-(n+1-eps).

Quadrature handles the part of the surface outside the innermost dyadic
radius r_s; the part inside is added from the local quadratic model of the
surface, using the kernel's radial moments:

    P(r) = int_0^r K t^n,   Q(r) = int_0^r K' t^(n+1),   T(r) = int_0^r tail

In ``exclusion`` mode the nodes inside r_s are dropped and the near field
of K is added.  In ``cap`` mode every node is kept with the capped kernel
and the near field of K - K_cap is added.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from simonslab.core.errors import ParameterError, ResolutionError
from simonslab.core.executor import CheckExecutor
from simonslab.geometry.fields import ShapeEntryField
from simonslab.geometry.frame import check_tangent_index, surface_frame, surface_laplacian
from simonslab.geometry.rules import build_quadrature
from simonslab.identities.reports import LIMIT_COLUMNS, LimitStudyRow, fit_rate
from simonslab.identities.simons import correction_integral
from simonslab.kernels import SimonsLimitKernel
from simonslab.nonlocal_ops import (OperatorContext, lk_apply, nonlocal_mean_curvature,
                                    total_curvature_sq)
from simonslab.quadrature import tail_bound, varpi

logger = logging.getLogger(__name__)

MODES = ("exclusion", "cap")
RESOLUTION_FLOOR = 0.1


def classical_targets(S, base, i, j):
    """-(w/2) Lap h_ij, (w/2) c^2, (w/2) H and (w/2) H (A^2)_ij + w (A^3)_ij with A = -h"""
    n = S.dimension
    w = varpi(n)
    t_i, t_j = base.tangents[i - 1], base.tangents[j - 1]
    laplacian = surface_laplacian(S, ShapeEntryField(S, t_i, t_j), base.point, frame=base)
    a = -base.shape
    a2 = a @ a
    a3 = a2 @ a
    return {
        "lk": -0.5 * w * laplacian,
        "c2": 0.5 * w * base.total_curvature_sq,
        "h": 0.5 * w * base.mean_curvature,
        "correction": 0.5 * w * base.mean_curvature * a2[i - 1, j - 1] + w * a3[i - 1, j - 1],
    }, laplacian


def resolved_fraction(kernel, r_s, R):
    """Share of the radial kernel mass on [0, R] that lies outside r_s"""
    n = kernel.dimension
    return 1.0 - kernel.radial_moment(r_s, n) / kernel.radial_moment(R, n)


def _near_moments(kernel, capped, r_s, mode):
    n = kernel.dimension
    if mode == "exclusion":
        return (kernel.radial_moment(r_s, n), kernel.derivative_moment(r_s, n + 1),
                kernel.tail_moment_integral(r_s))
    return (kernel.radial_moment(r_s, n) - capped.radial_moment(r_s, n),
            kernel.derivative_moment(r_s, n + 1) - capped.derivative_moment(r_s, n + 1),
            kernel.tail_moment_integral(r_s) - capped.tail_moment_integral(r_s))


def limit_values(S, base, rule, eps, i, j, laplacian, mode="exclusion"):
    """Column values for one eps on one rule, with the near-field budget"""
    n = S.dimension
    w = varpi(n)
    r_s = rule.innermost
    kernel = SimonsLimitKernel(n, eps=eps)
    if mode == "exclusion":
        capped = None
        ctx = OperatorContext(S, kernel, rule.restrict(rule.retained(r_s)), base)
    else:
        capped = SimonsLimitKernel(n, eps=eps, cap_radius=r_s)
        ctx = OperatorContext(S, capped, rule, base)
    p, q, tm = _near_moments(kernel, capped, r_s, mode)

    t_i, t_j = base.tangents[i - 1], base.tangents[j - 1]
    a = -base.shape
    a2 = a @ a
    a3 = a2 @ a
    h0 = base.mean_curvature
    ij = (i - 1, j - 1)

    values = {
        "lk": lk_apply(ctx, ShapeEntryField(S, t_i, t_j)) - 0.5 * w * laplacian * p,
        "c2": total_curvature_sq(ctx) + 0.5 * w * float(np.trace(a2)) * p,
        "h": nonlocal_mean_curvature(ctx, "boundary") + 0.5 * w * h0 * tm,
        "correction": correction_integral(ctx, t_i, t_j) + h0 * a2[ij] * w * p
        - 0.5 * w / (n + 1) * q * (float(np.trace(a)) * a2[ij] + 2.0 * a3[ij]),
    }
    near = w * eps * r_s ** (1.0 + eps) * (1.0 + float(np.linalg.norm(base.shape))) ** 3 \
        * (1.0 + abs(laplacian))
    return values, near, kernel


@dataclass(frozen=True, eq=False)
class LimitStudy:
    """Rows by decreasing eps with the fitted rates per column"""
    rows: tuple
    targets: dict
    rates: dict
    parameters: dict

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    def errors(self, column):
        return [row.error(column) for row in self.rows]

    def monotone(self, column):
        errors = self.errors(column)
        return all(b <= a * (1.0 + 1e-12) + 1e-14 for a, b in zip(errors, errors[1:]))

    def to_records(self):
        return [row.to_record() for row in self.rows]


def _check_schedule(eps_schedule):
    eps = [float(e) for e in eps_schedule]
    if not eps:
        raise ParameterError("empty eps schedule")
    if any(not 0.0 < e < 1.0 for e in eps):
        raise ParameterError(f"eps values must lie in (0, 1): {eps}")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ParameterError(f"eps schedule must be strictly decreasing: {eps}")
    return eps


def limit_study(S, x=None, eps_schedule=(0.4, 0.2, 0.1, 0.05), i=1, j=1, level=6,
                mode="exclusion", R=None, R0=None, executor=None):
    """Operator columns for the limit kernel against their classical targets"""
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    n = S.dimension
    i = check_tangent_index(i, n, "i")
    j = check_tangent_index(j, n, "j")
    eps_list = _check_schedule(eps_schedule)
    x = S.named_point(x) if x is None or isinstance(x, str) else np.asarray(x, dtype=float)
    base = surface_frame(S, x)
    if R is None:
        R = S.coverage_radius if math.isfinite(S.coverage_radius) else 2.0 * S.length_scale
    rule = build_quadrature(S, base, 0.0, R, level, R0=R0)
    coarse = rule.at_level(level - 1) if level > 0 else rule
    targets, laplacian = classical_targets(S, base, i, j)

    r_s = rule.innermost
    for eps in eps_list:
        fraction = resolved_fraction(SimonsLimitKernel(n, eps=eps), r_s, R)
        if fraction < RESOLUTION_FLOOR:
            raise ResolutionError(
                f"eps={eps} leaves only {fraction:.1%} of the kernel mass outside r_s={r_s:.3g}")

    def row(eps):
        fine, near, kernel = limit_values(S, base, rule, eps, i, j, laplacian, mode)
        rough, _, _ = limit_values(S, base, coarse, eps, i, j, laplacian, mode)
        tail = 0.0 if rule.covers else tail_bound(rule, kernel, R)
        dtail = 0.0 if rule.covers else tail_bound(rule, kernel, R, derivative=True)
        budgets = {
            "lk": abs(fine["lk"] - rough["lk"]) + near + 2.0 * float(np.max(np.abs(rule.shape))) * tail,
            "c2": abs(fine["c2"] - rough["c2"]) + near + 2.0 * tail,
            "h": abs(fine["h"] - rough["h"]) + near + tail,
            "correction": abs(fine["correction"] - rough["correction"]) + near + tail + dtail,
        }
        logger.info("eps=%g: %s", eps, ", ".join(f"{k}={v:.6g}" for k, v in fine.items()))
        return eps, fine, budgets

    executor = executor or CheckExecutor(1)
    results = executor.map(row, eps_list)

    rates = {}
    for column in LIMIT_COLUMNS:
        errors = [abs(values[column] - targets[column]) for _, values, _ in results]
        rates[column] = fit_rate(eps_list, errors)
    rows = tuple(LimitStudyRow(eps=eps, lk=v["lk"], c2=v["c2"], h=v["h"], correction=v["correction"],
                               targets=targets, budgets=b, rates=rates)
                 for eps, v, b in results)
    parameters = {"surface": S.describe(), "point": x.tolist(), "i": i, "j": j, "mode": mode,
                  "r_s": r_s, **rule.describe()}
    return LimitStudy(rows=rows, targets=targets, rates=rates, parameters=parameters)
