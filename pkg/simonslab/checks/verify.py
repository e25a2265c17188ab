import logging

from simonslab.checks._common import QUADRATURE_SCHEMA, fmt, order_outcomes, parse_indices, section, table
from simonslab.core.check import Check, CheckOutcome
from simonslab.core.registry import register
from simonslab.geometry.surfaces import make_surface
from simonslab.identities.classical import classical_simons_terms
from simonslab.identities.simons import simons_residual
from simonslab.kernels import make_kernel
from simonslab.nonlocal_ops import make_context

logger = logging.getLogger(__name__)

CLASSICAL_TOL = 1e-6


@register("check")
class VerifyCheck(Check):
    """Nonlocal Simons identity residuals over a refinement schedule"""
    name = "verify"
    category = "Identities"

    properties = {
        "surface": {
            "type": "any",
            "default": "sphere:1",
            "doc": "surface shorthand or mapping with name",
        },
        "kernel": {
            "type": "any",
            "default": "mollifier:0.3",
            "doc": "kernel shorthand or mapping with family",
        },
        "point": {
            "type": "any",
            "default": None,
            "optional": True,
            "doc": "named point or coordinates",
        },
        "indices": {
            "type": "any",
            "default": "all",
            "doc": "'all', 'i,j' or 'i,j;k,l'",
        },
        "quadrature": {
            "type": "mapping",
            "schema": QUADRATURE_SCHEMA,
            "default": {},
        },
        "classical": {
            "type": "boolean",
            "default": False,
            "doc": "check the classical identity of a minimal surface instead",
        },
    }

    def execute(self):
        surface = make_surface(self.surface)
        if self.classical:
            return self._classical(surface)

        quad = section(self.config, "quadrature", QUADRATURE_SCHEMA)
        kernel = make_kernel(surface.dimension, self.kernel)
        pairs = parse_indices(self.indices, surface.dimension)
        levels = sorted(quad["levels"])

        contexts = [make_context(surface, kernel, self.point, quad["delta"], quad["R"], level, quad["R0"])
                    for level in levels]
        cells = [(ctx, i, j) for ctx in contexts for (i, j) in pairs]
        reports = self.executor.map(lambda cell: simons_residual(cell[0], cell[1], cell[2]), cells)

        outcomes, rows, records = [], [], []
        for (ctx, i, j), report in zip(cells, reports):
            level = ctx.rule.level
            rows.append({"L": level, "i": i, "j": j, "spacing": ctx.rule.spacing,
                         "term_lhs": report.term_lhs, "term_lk": report.term_lk,
                         "term_c2": report.term_c2, "term_geo": report.term_geo,
                         "residual": report.residual, "budget": report.budget_total,
                         "passed": report.passed})
            records.append(report.to_record())

        finest = levels[-1]
        for (ctx, i, j), report in zip(cells, reports):
            if ctx.rule.level == finest:
                outcomes.append(CheckOutcome(f"verify[{surface.name} ({i},{j}) L={finest}]", report.passed,
                                             f"residual {fmt(report.residual)} budget {fmt(10 * report.budget_total)}"))
                outcomes.append(CheckOutcome(f"verify[{surface.name} ({i},{j}) symmetry]",
                                             bool(report.checks["symmetry_ok"]),
                                             f"gap {fmt(report.checks['symmetry_gap'])}"))

        orders = {}
        if len(levels) >= 3:
            orders, order_checks = order_outcomes(f"verify[{surface.name}", rows, pairs)
            outcomes.extend(order_checks)

        return {
            "outcomes": outcomes,
            "records": {"reports": records, "orders": orders},
            "tables": {"residuals": table(rows)},
        }

    def _classical(self, surface):
        x = surface.named_point(self.point) if self.point is None or isinstance(self.point, str) else self.point
        terms = classical_simons_terms(surface, x)
        residual = terms["residual"]
        logger.info("Classical Simons residual on %s: %.3e", surface.name, residual)
        outcome = CheckOutcome(f"verify[classical {surface.name}]", abs(residual) <= CLASSICAL_TOL,
                               f"residual {fmt(residual)}")
        return {"outcomes": [outcome], "records": {"classical": terms},
                "tables": {"classical": table([terms])}}
