"""Algebra of the stability inequality on shared all-pairs node data.

With W_ab = w_a w_b K(y_a - y_b) and d(f) = f_a - f_b:

    B(c eta, c eta) = 1/2 sum W c_a^2 d(eta)^2 + 1/2 sum W eta_a^2 d(c)^2 + I
    I = sum W c_a eta_b d(c) d(eta)
      = 1/4 sum W d(c^2) d(eta^2) - 1/4 sum W d(c)^2 d(eta)^2

and 1/4 sum W d(c^2) d(eta^2) = 1/2 sum_a w_a eta_a^2 (L_K c^2)(y_a).
"""

import logging

import numpy as np

from simonslab.core.errors import HypothesisError, ParameterError
from simonslab.core.reduction import tree_sum
from simonslab.geometry.fields import field_value
from simonslab.identities.reports import StabilityConclusion, StabilityReport
from simonslab.nonlocal_ops import (PAIR_BLOCK, check_support, make_context, nonlocal_mean_curvature,
                                    pair_matrix, pairwise_sum)

logger = logging.getLogger(__name__)

HYPOTHESIS_TOL = 1e-8


def node_values(f, rule):
    """Field, callable or precomputed array of node values"""
    if isinstance(f, np.ndarray):
        if f.shape != (rule.size,):
            raise ParameterError(f"node data has shape {f.shape}, rule has {rule.size} nodes")
        return f.astype(float)
    return field_value(f, rule.points)


def curvature_at_nodes(kernel, rule):
    """c_K at every node: c^2(y_a) = 1/2 sum_b w_b K(y_a - y_b) |nu_a - nu_b|^2"""
    n = rule.size
    out = np.empty(n)
    for start in range(0, n, PAIR_BLOCK):
        rows = np.arange(start, min(start + PAIR_BLOCK, n))
        diff = rule.normals[rows][:, None, :] - rule.normals[None, :, :]
        sq = np.einsum("abk,abk->ab", diff, diff)
        w = pair_matrix(kernel, rule.points, rows) * rule.weights[None, :]
        out[rows] = 0.5 * tree_sum(w * sq, axis=1)
    return np.sqrt(np.maximum(out, 0.0))


def _polarization_error(c, eta):
    ce = c * eta
    worst = 0.0
    n = len(c)
    for start in range(0, n, PAIR_BLOCK):
        rows = slice(start, min(start + PAIR_BLOCK, n))
        dc = c[rows][:, None] - c[None, :]
        de = eta[rows][:, None] - eta[None, :]
        direct = (ce[rows][:, None] - ce[None, :]) ** 2
        expanded = c[rows][:, None] ** 2 * de ** 2 + eta[None, :] ** 2 * dc ** 2 \
            + 2.0 * c[rows][:, None] * eta[None, :] * dc * de
        worst = max(worst, float(np.max(np.abs(direct - expanded))) if direct.size else 0.0)
    return worst


def _pair_terms(kernel, rule, c, eta):
    def d(f, rows):
        return f[rows][:, None] - f[None, :]

    ce = c * eta
    c2 = c ** 2
    e2 = eta ** 2
    terms = {
        "b_product": 0.5 * pairwise_sum(kernel, rule, lambda r: d(ce, r) ** 2),
        "weighted_b_eta": 0.5 * pairwise_sum(kernel, rule, lambda r: c2[r][:, None] * d(eta, r) ** 2),
        "weighted_b_c": 0.5 * pairwise_sum(kernel, rule, lambda r: e2[r][:, None] * d(c, r) ** 2),
        "cross": pairwise_sum(kernel, rule, lambda r: c[r][:, None] * eta[None, :] * d(c, r) * d(eta, r)),
        "cross_symmetrized": 0.5 * pairwise_sum(
            kernel, rule,
            lambda r: (c[r][:, None] * eta[None, :] + c[None, :] * eta[r][:, None]) * d(c, r) * d(eta, r)),
        "bound": 0.25 * pairwise_sum(kernel, rule, lambda r: d(c2, r) * d(e2, r)),
        "discarded": 0.25 * pairwise_sum(kernel, rule, lambda r: d(c, r) ** 2 * d(eta, r) ** 2),
    }
    lk_c2 = np.empty(rule.size)
    for start in range(0, rule.size, PAIR_BLOCK):
        rows = np.arange(start, min(start + PAIR_BLOCK, rule.size))
        w = pair_matrix(kernel, rule.points, rows) * rule.weights[None, :]
        lk_c2[rows] = tree_sum(w * d(c2, rows), axis=1)
    terms["bound_lk"] = 0.5 * float(tree_sum(rule.weights * e2 * lk_c2))
    terms["c4_eta2"] = float(tree_sum(rule.weights * c2 ** 2 * e2))
    return terms


def _scale(terms):
    return max(abs(v) for v in terms.values())


def stability_decomposition_check(ctx, eta, c_field, outer_rule=None):
    """Steps (a) decomposition, (b) polarization and (c) inequality with its slack"""
    rule = ctx.rule if outer_rule is None else outer_rule
    check_support(rule, eta)
    eta_v = node_values(eta, rule)
    c_v = node_values(c_field, rule)
    if np.any(c_v < 0.0):
        raise ParameterError("c_field must be non-negative")
    terms = _pair_terms(ctx.kernel, rule, c_v, eta_v)
    report = StabilityReport(
        b_product=terms["b_product"], weighted_b_eta=terms["weighted_b_eta"],
        weighted_b_c=terms["weighted_b_c"], cross=terms["cross"],
        cross_symmetrized=terms["cross_symmetrized"], bound=terms["bound"],
        discarded=terms["discarded"], polarization_error=_polarization_error(c_v, eta_v),
        scale=_scale(terms), bound_lk=terms["bound_lk"])
    logger.info("Stability decomposition on %d nodes: %s", rule.size,
                ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in report.checks.items()))
    return report


def _check_minimal(ctx, points, tol):
    """Largest |H_K| over the sampled points; HypothesisError above tol"""
    worst = abs(nonlocal_mean_curvature(ctx, "boundary"))
    for p in points:
        other = make_context(ctx.surface, ctx.kernel, p, R=ctx.rule.truncation, level=ctx.rule.level)
        worst = max(worst, abs(nonlocal_mean_curvature(other, "boundary")))
    if worst > tol:
        raise HypothesisError(f"K-mean curvature {worst:.3e} exceeds {tol:.1e}; pass synthetic=True "
                              "to check the algebra on node data that is not K-minimal")
    return worst


def stability_conclusion_check(ctx, eta, c_field=None, synthetic=False, tol=HYPOTHESIS_TOL,
                               sample_points=(), outer_rule=None):
    """Both sides of -int (1/2 L_K c^2 + B(c,c;x) - c^4) eta^2 <= int c^2 B(eta,eta;x)"""
    rule = ctx.rule if outer_rule is None else outer_rule
    check_support(rule, eta)
    mean_curvature = None if synthetic else _check_minimal(ctx, sample_points, tol)
    eta_v = node_values(eta, rule)
    c_v = curvature_at_nodes(ctx.kernel, rule) if c_field is None else node_values(c_field, rule)
    terms = _pair_terms(ctx.kernel, rule, c_v, eta_v)

    lhs = -terms["bound_lk"] - terms["weighted_b_c"] + terms["c4_eta2"]
    rhs = terms["weighted_b_eta"]
    sample = terms["b_product"] - terms["c4_eta2"]
    assumed = ("stability inequality for f = c eta",)
    if synthetic:
        assumed += ("synthetic node data, K-minimality not checked",)
    conclusion = StabilityConclusion(
        lhs=lhs, rhs=rhs, stability_sample=sample, discarded=terms["discarded"],
        mean_curvature=mean_curvature, synthetic=synthetic, assumed=assumed, scale=_scale(terms))
    logger.info("Stability conclusion: lhs=%.6g rhs=%.6g gap=%.3g (sample %.3g)",
                lhs, rhs, conclusion.gap, sample)
    return conclusion
