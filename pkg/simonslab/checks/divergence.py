import logging

import numpy as np

from simonslab.checks._common import FIELDS_SCHEMA, QUADRATURE_SCHEMA, fmt, section, table
from simonslab.core.check import Check, CheckOutcome
from simonslab.core.registry import register
from simonslab.geometry.fields import random_bumps
from simonslab.geometry.surfaces import make_surface
from simonslab.kernels import kernel_value, make_kernel
from simonslab.nonlocal_ops import (compare_mean_curvature_forms, gradient_fd_check, make_context,
                                    rule_tail, tangential_divergence_check,
                                    tangential_product_rule_check)
from simonslab.quadrature import DEFAULT_SEED, pv_surface_integral

logger = logging.getLogger(__name__)

ROUNDING_TOL = 1e-12
PV_SCHEDULE = (8.0, 4.0, 2.0)


def _budget(fine, coarse):
    return abs(fine[0] - coarse[0]) + abs(fine[1] - coarse[1]) \
        + ROUNDING_TOL * max(1.0, abs(fine[0]), abs(fine[1]))


def odd_moment_integrand(ctx, axis=0):
    """K(x - y) (y - x) . t: odd in the chart, so only a principal value exists"""
    t = ctx.base.tangents[axis]

    def integrand(rule):
        z = rule.points - ctx.base.point
        return kernel_value(ctx.kernel, -z) * (z @ t)
    return integrand


@register("check")
class DivergenceCheck(Check):
    """Tangential divergence theorem, product rule and K-mean curvature consistency"""
    name = "divergence-check"
    category = "Geometry"

    properties = {
        "surface": {
            "type": "any",
            "default": "sphere:1",
        },
        "kernel": {
            "type": "any",
            "default": "mollifier:0.3",
        },
        "pv_kernel": {
            "type": "any",
            "default": "fractional:0.5",
            "doc": "singular kernel for the principal-value stability check",
        },
        "point": {
            "type": "any",
            "default": None,
            "optional": True,
        },
        "quadrature": {
            "type": "mapping",
            "schema": QUADRATURE_SCHEMA,
            "default": {},
        },
        "fields": {
            "type": "mapping",
            "schema": FIELDS_SCHEMA,
            "default": {},
        },
        "seed": {
            "type": "int",
            "default": DEFAULT_SEED,
        },
    }

    def execute(self):
        surface = make_surface(self.surface)
        kernel = make_kernel(surface.dimension, self.kernel)
        quad = section(self.config, "quadrature", QUADRATURE_SCHEMA)
        fields = section(self.config, "fields", FIELDS_SCHEMA)
        n = surface.dimension
        rng = np.random.default_rng(self.seed)

        outcomes, rows = [], []
        finest = None
        for level in sorted(quad["levels"]):
            ctx = make_context(surface, kernel, self.point, quad["delta"], quad["R"], level, quad["R0"])
            coarse = ctx.with_coarse()
            R = ctx.rule.truncation
            bumps = random_bumps(rng, ctx.base.point, fields["spread"] * R / np.sqrt(n),
                                 fields["radius"] * R, max(2, fields["bumps"]), n)
            for j in range(1, n + 1):
                for k, g in enumerate(bumps):
                    fine_pair = self._divergence(ctx, g, j)
                    budget = _budget(fine_pair, self._divergence(coarse, g, j))
                    rows.append(self._row("divergence", level, j, k, fine_pair, budget))
                g1, g2 = bumps[0], bumps[1]
                fine_pair = self._product(ctx, g1, g2, j)
                budget = _budget(fine_pair, self._product(coarse, g1, g2, j))
                rows.append(self._row("product", level, j, 0, fine_pair, budget))
            finest = ctx

        last = finest.rule.level
        for row in rows:
            if row["L"] == last:
                label = f"divergence-check[{surface.name} {row['identity']} axis {row['axis']} bump {row['bump']}]"
                outcomes.append(CheckOutcome(label, row["passed"], f"gap {fmt(row['gap'])}"))

        results, pairs = compare_mean_curvature_forms(finest)
        forms = [{"form": name, **estimate.to_record()} for name, estimate in results.items()]
        for pair in pairs:
            a, b = pair["forms"]
            outcomes.append(CheckOutcome(f"divergence-check[{surface.name} H_K {a}~{b}]", pair["agree"],
                                         f"gap {fmt(pair['gap'])} budget {fmt(10 * pair['budget'])}"))
        records = {"rows": rows, "mean_curvature_forms": forms,
                   "form_pairs": [{**p, "forms": list(p["forms"])} for p in pairs]}

        if kernel.truncatable:
            fd = gradient_fd_check(finest)
            tol = 10.0 * fd["budget"] + 1e-6 * max(1.0, float(np.max(np.abs(fd["boundary"]))))
            outcomes.append(CheckOutcome(f"divergence-check[{surface.name} grad H_K]", fd["gap"] <= tol,
                                         f"gap {fmt(fd['gap'])}"))
            records["gradient"] = fd

        pv = self._pv_stability(surface, quad)
        outcomes.append(pv[0])
        records["principal_value"] = pv[1]

        return {"outcomes": outcomes, "records": records,
                "tables": {"divergence": table(rows), "mean_curvature_forms": table(forms)}}

    @staticmethod
    def _divergence(ctx, g, j):
        return tangential_divergence_check(ctx, g, j)

    @staticmethod
    def _product(ctx, g1, g2, j):
        return tangential_product_rule_check(ctx, g1, g2, j)

    @staticmethod
    def _row(identity, level, axis, bump, pair, budget):
        gap = abs(pair[0] - pair[1])
        return {"identity": identity, "L": level, "axis": axis, "bump": bump, "lhs": pair[0],
                "rhs": pair[1], "gap": gap, "budget": budget, "passed": gap <= 10.0 * budget}

    def _pv_stability(self, surface, quad):
        """Extrapolated PV value stays put when the delta schedule is halved"""
        kernel = make_kernel(surface.dimension, self.pv_kernel, path="pv_kernel")
        level = max(quad["levels"])
        ctx = make_context(surface, kernel, self.point, quad["delta"], quad["R"], level, quad["R0"],
                           delta_schedule=quad["deltas"])
        rule = ctx.rule
        schedule = ctx.delta_schedule or tuple(f * rule.innermost for f in PV_SCHEDULE)
        halved = tuple(0.5 * d for d in schedule)
        integrand = odd_moment_integrand(ctx)
        tail = rule_tail(ctx)
        first = pv_surface_integral(integrand, rule, schedule, quad["gamma"], tail)
        second = pv_surface_integral(integrand, rule, halved, quad["gamma"], tail)
        gap = abs(first.extrapolated_value - second.extrapolated_value)
        budget = 10.0 * (first.error_estimate + second.error_estimate) + ROUNDING_TOL
        outcome = CheckOutcome(f"divergence-check[{surface.name} PV stability]", gap <= budget,
                               f"gap {fmt(gap)} budget {fmt(budget)}")
        return outcome, {"schedule": first.to_record(), "halved": second.to_record(), "gap": gap}
