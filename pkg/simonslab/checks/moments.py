import logging

from simonslab.checks._common import fmt, table
from simonslab.core.check import Check, CheckOutcome
from simonslab.core.registry import register
from simonslab.kernels import unit_sphere_area
from simonslab.quadrature import (DEFAULT_SEED, ball_moment_x1_4, mc_ball_moment_x1_4,
                                  mc_rotated_mixed_moment, moments_table, sphere_moment_theta1_4,
                                  sphere_product_rule, varpi)

logger = logging.getLogger(__name__)

ALGEBRA_TOL = 1e-12
MC_SIGMAS = 3.0


@register("check")
class MomentsCheck(Check):
    """Closed-form ball and sphere moments with quadrature and Monte-Carlo cross-checks"""
    name = "moments"
    category = "Oracles"
    config_section = "moments"

    properties = {
        "n": {
            "type": "int_list",
            "default": "2..8",
            "doc": "dimensions, list or range a..b",
        },
        "mc_samples": {
            "type": "int",
            "default": 10 ** 6,
            "doc": "Monte-Carlo samples per dimension (0 disables)",
        },
        "mc_dimensions": {
            "type": "int_list",
            "default": [2, 3, 4],
            "doc": "dimensions that get the Monte-Carlo cross-check",
        },
        "seed": {
            "type": "int",
            "default": DEFAULT_SEED,
        },
    }

    def execute(self):
        rows = moments_table(self.n)
        outcomes = []
        records = {"rows": rows, "algebra": [], "monte_carlo": []}

        for row in rows:
            n = row["n"]
            errors = {
                "Q=3D": abs(row["Q"] - 3.0 * row["D"]),
                "Q(n+4)=sphere": abs(row["Q"] * (n + 4) - row["sphere_moment"]),
                "nQ+n(n-1)D": abs(n * row["Q"] + n * (n - 1) * row["D"] - unit_sphere_area(n) / (n + 4)),
            }
            if n >= 3:
                errors["c_star=sphere(n-1)"] = abs(row["c_star"] - sphere_moment_theta1_4(n - 1))
            worst = max(errors.values())
            records["algebra"].append({"n": n, **errors})
            outcomes.append(CheckOutcome(f"moments[n={n}]", worst <= ALGEBRA_TOL,
                                         f"max algebra error {fmt(worst)}"))

        if 3 in self.n:
            points, weights = sphere_product_rule()
            estimate = float(weights @ points[:, 0] ** 4)
            gap = abs(estimate - sphere_moment_theta1_4(3))
            records["sphere_rule"] = {"estimate": estimate, "gap": gap}
            outcomes.append(CheckOutcome("moments[sphere-rule]", gap <= 1e-6, f"gap {fmt(gap)}"))

        if self.mc_samples > 0:
            mc_dims = [n for n in self.mc_dimensions if n in self.n]
            results = self.executor.map(self._monte_carlo, mc_dims)
            for record in results:
                records["monte_carlo"].append(record)
                for key in ("x1_4", "rotated"):
                    z = record[f"{key}_sigmas"]
                    outcomes.append(CheckOutcome(f"moments[mc {key} n={record['n']}]", z <= MC_SIGMAS,
                                                 f"{z:.2f} standard errors"))

        return {
            "outcomes": outcomes,
            "records": records,
            "tables": {"moments": table(rows, ("n", "Q", "D", "sphere_moment", "varpi", "c_star"))},
        }

    def _monte_carlo(self, n):
        q = ball_moment_x1_4(n)
        est, err = mc_ball_moment_x1_4(n, self.mc_samples, self.seed)
        rot, rot_err = mc_rotated_mixed_moment(n, self.mc_samples, self.seed + 1)
        exact_rot = 2.0 * q - 2.0 * q / 3.0
        logger.info("Monte-Carlo n=%d: x1^4 %.6g (exact %.6g), rotated %.6g (exact %.6g)",
                    n, est, q, rot, exact_rot)
        return {"n": n, "x1_4": est, "x1_4_stderr": err, "x1_4_sigmas": abs(est - q) / err,
                "rotated": rot, "rotated_stderr": rot_err,
                "rotated_sigmas": abs(rot - exact_rot) / rot_err, "varpi": varpi(n)}
