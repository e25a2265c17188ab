import logging

from simonslab.checks._common import fmt, parse_indices, section, table
from simonslab.core.check import Check, CheckOutcome
from simonslab.core.errors import HypothesisError
from simonslab.core.registry import register
from simonslab.geometry.surfaces import make_surface
from simonslab.identities.classical import MINIMAL_TOL, classical_simons_residual
from simonslab.identities.limit import MODES, limit_study
from simonslab.identities.reports import LIMIT_COLUMNS

logger = logging.getLogger(__name__)

CLASSICAL_TOL = 1e-6

LIMIT_SCHEMA = {
    "eps": {"type": "float_list", "default": [0.4, 0.2, 0.1, 0.05], "doc": "strictly decreasing eps schedule"},
    "mode": {"type": "string", "default": "exclusion", "choices": list(MODES)},
    "level": {"type": "int", "default": 6},
}

LIMIT_QUADRATURE_SCHEMA = {
    "R": {"type": "float", "default": None, "optional": True},
    "R0": {"type": "float", "default": None, "optional": True},
}


@register("check")
class LimitStudyCheck(Check):
    """eps -> 0 behaviour of the limit kernel against the classical quantities"""
    name = "limit-study"
    category = "Identities"

    properties = {
        "surface": {
            "type": "any",
            "default": "catenoid:1",
        },
        "point": {
            "type": "any",
            "default": None,
            "optional": True,
        },
        "indices": {
            "type": "any",
            "default": "1,1",
        },
        "limit": {
            "type": "mapping",
            "schema": LIMIT_SCHEMA,
            "default": {},
        },
        "quadrature": {
            "type": "mapping",
            "schema": LIMIT_QUADRATURE_SCHEMA,
            "default": {},
        },
    }

    def execute(self):
        surface = make_surface(self.surface)
        limit = section(self.config, "limit", LIMIT_SCHEMA)
        quad = section(self.config, "quadrature", LIMIT_QUADRATURE_SCHEMA)
        pairs = parse_indices(self.indices, surface.dimension)

        outcomes, records, tables = [], [], {}
        for i, j in pairs:
            study = limit_study(surface, self.point, limit["eps"], i, j, limit["level"], limit["mode"],
                                quad["R"], quad["R0"], executor=self.executor)
            for column in LIMIT_COLUMNS:
                outcomes.append(self._column_outcome(surface, study, column, i, j))
            records.append({"i": i, "j": j, "targets": study.targets, "rates": study.rates,
                            "rows": study.to_records(), "parameters": study.parameters})
            tables[f"limit_{i}{j}"] = table(study.to_records())

        classical = self._classical(surface)
        if classical is not None:
            outcomes.append(classical)

        return {"outcomes": outcomes, "records": {"studies": records}, "tables": tables}

    @staticmethod
    def _column_outcome(surface, study, column, i, j):
        label = f"limit-study[{surface.name} ({i},{j}) {column}]"
        rate = study.rates[column]
        errors = study.errors(column)
        if rate is None:
            # errors at rounding level: exact in the limit
            last = study.rows[-1]
            passed = errors[-1] <= 10.0 * last.budgets[column] + 1e-12
            return CheckOutcome(label, passed, f"error {fmt(errors[-1])} (exact)")
        passed = study.monotone(column) and rate > 0.0
        return CheckOutcome(label, passed, f"error {fmt(errors[-1])} rate {rate:.2f}")

    def _classical(self, surface):
        x = surface.named_point(self.point) if self.point is None or isinstance(self.point, str) else self.point
        if abs(surface.mean_curvature(x)) > MINIMAL_TOL:
            return None
        try:
            residual = classical_simons_residual(surface, x)
        except HypothesisError as e:
            logger.warning("Skipping the classical residual: %s", e)
            return None
        return CheckOutcome(f"limit-study[classical {surface.name}]", abs(residual) <= CLASSICAL_TOL,
                            f"residual {fmt(residual)}")
