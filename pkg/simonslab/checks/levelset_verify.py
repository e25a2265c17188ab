import logging

import numpy as np

from simonslab.checks._common import fmt, order_outcomes, parse_indices, section, table
from simonslab.core.check import Check, CheckOutcome
from simonslab.core.registry import register
from simonslab.geometry.fields import random_bumps
from simonslab.kernels import make_kernel
from simonslab.levelset.functions import make_levelset
from simonslab.levelset.operators import (c_ku_sq_forms, coarea_check, levelset_context,
                                          sharp_interface_study, simons_u_residual)
from simonslab.quadrature import DEFAULT_SEED

logger = logging.getLogger(__name__)

REARRANGED_TOL = 1e-12
FD_RELATIVE_TOL = 1e-6
COAREA_BUMPS = 5

GRID_SCHEMA = {
    "sizes": {"type": "int_list", "default": [32, 64, 128], "doc": "grid cells per axis, doubling up to 128"},
}


@register("check")
class LevelSetVerifyCheck(Check):
    """Simons identity on the level sets of a smooth function"""
    name = "levelset-verify"
    category = "Level sets"

    properties = {
        "levelset": {
            "type": "any",
            "default": "sigmoid-sphere:1,0.1",
            "doc": "level-set function shorthand or mapping with name",
        },
        "dimension": {
            "type": "int",
            "default": 3,
        },
        "kernel": {
            "type": "any",
            "default": "gaussian:0.2",
        },
        "point": {
            "type": "any",
            "default": None,
            "optional": True,
        },
        "indices": {
            "type": "any",
            "default": "1,1;1,2",
        },
        "levelset_grid": {
            "type": "mapping",
            "schema": GRID_SCHEMA,
            "default": {},
        },
        "coarea": {
            "type": "boolean",
            "default": True,
            "doc": "coarea slicing check (radial functions in R^3 only)",
        },
        "sharp_interface": {
            "type": "boolean",
            "default": False,
            "doc": "sigmoid-sphere widths against the sphere operators",
        },
        "widths": {
            "type": "float_list",
            "default": [0.08, 0.04, 0.02],
        },
        "seed": {
            "type": "int",
            "default": DEFAULT_SEED,
        },
    }

    def execute(self):
        u = make_levelset(self.levelset, self.dimension)
        kernel = make_kernel(u.dimension, self.kernel)
        pairs = parse_indices(self.indices, u.dimension)
        cells = sorted(section(self.config, "levelset_grid", GRID_SCHEMA)["sizes"])
        label = u.name

        grid_cells = [(c, i, j) for c in cells for (i, j) in pairs]
        reports = self.executor.map(
            lambda cell: simons_u_residual(u, kernel, self.point, cell[1], cell[2], cells=cell[0]),
            grid_cells)

        outcomes, rows = [], []
        for (c, i, j), report in zip(grid_cells, reports):
            rows.append({"cells": c, "i": i, "j": j, "spacing": report.parameters["spacing"],
                         "term_lhs": report.term_lhs, "term_lk": report.term_lk,
                         "term_c2": report.term_c2, "term_geo": report.term_geo,
                         "residual": report.residual, "budget": report.budget_total,
                         "fd_gap": report.checks["finite_difference_gap"], "passed": report.passed})

        finest = cells[-1]
        for (c, i, j), report in zip(grid_cells, reports):
            if c != finest:
                continue
            outcomes.append(CheckOutcome(f"levelset-verify[{label} ({i},{j}) N={c}]", report.passed,
                                         f"residual {fmt(report.residual)} budget {fmt(10 * report.budget_total)}"))
            fd_gap = report.checks["finite_difference_gap"]
            fd_tol = 10.0 * report.budgets["lhs"] + FD_RELATIVE_TOL * max(1.0, abs(report.term_lhs))
            outcomes.append(CheckOutcome(f"levelset-verify[{label} ({i},{j}) finite difference]",
                                         fd_gap <= fd_tol, f"gap {fmt(fd_gap)}"))

        orders = {}
        if len(cells) >= 3:
            orders, order_checks = order_outcomes(f"levelset-verify[{label}", rows, pairs)
            outcomes.extend(order_checks)

        ctx = levelset_context(u, kernel, self.point, finest, executor=self.executor)
        direct, rearranged, _ = c_ku_sq_forms(ctx)
        gap = abs(direct - rearranged)
        outcomes.append(CheckOutcome(f"levelset-verify[{label} c2 forms]",
                                     gap <= REARRANGED_TOL * max(1.0, abs(direct)), f"gap {fmt(gap)}"))

        records = {"reports": [r.to_record() for r in reports], "orders": orders,
                   "c2_forms": {"direct": direct, "rearranged": rearranged}}
        tables = {"residuals": table(rows)}

        if self.coarea and u.radial and u.dimension == 3:
            coarea = self._coarea(u)
            records["coarea"] = coarea
            tables["coarea"] = table(coarea)
            outcomes.extend(CheckOutcome(f"levelset-verify[{label} coarea {k}]", row["passed"],
                                         f"gap {fmt(row['gap'])}") for k, row in enumerate(coarea))
        elif self.coarea:
            logger.info("Skipping the coarea check: %s is not radial in R^3", label)

        if self.sharp_interface:
            radius = getattr(u, "radius", 1.0)
            study = sharp_interface_study(radius, kernel, self.widths, cells=finest, executor=self.executor)
            records["sharp_interface"] = {"rows": study.to_records(), "geometric": study.geometric,
                                          "extrapolated": study.extrapolated, "budgets": study.budgets}
            tables["sharp_interface"] = table(study.to_records())
            for q, ok in study.checks.items():
                outcomes.append(CheckOutcome(f"levelset-verify[sharp interface {q}]", ok,
                                             f"gap {fmt(study.gap(q))}"))

        return {"outcomes": outcomes, "records": records, "tables": tables}

    def _coarea(self, u):
        rng = np.random.default_rng(self.seed)
        shell = u.named_point("shell")
        scale = u.level_radius
        bumps = random_bumps(rng, shell, 0.2 * scale, 0.3 * scale, COAREA_BUMPS, u.dimension)
        return self.executor.map(lambda g: coarea_check(u, g), bumps)
