import logging

import numpy as np

from simonslab.checks._common import FIELDS_SCHEMA, fmt, section, table
from simonslab.core.check import Check, CheckOutcome
from simonslab.core.errors import ConfigError
from simonslab.core.registry import register
from simonslab.geometry.fields import BumpField, ShapeNormField, field_value, random_bumps
from simonslab.geometry.surfaces import make_surface
from simonslab.identities.stability import (HYPOTHESIS_TOL, curvature_at_nodes,
                                            stability_conclusion_check, stability_decomposition_check)
from simonslab.kernels import make_kernel
from simonslab.nonlocal_ops import make_context
from simonslab.quadrature import DEFAULT_SEED

logger = logging.getLogger(__name__)

C_FIELDS = ("nonlocal", "classical", "bumps")


@register("check")
class StabilityCheck(Check):
    """Algebraic steps of the stability inequality on shared node data"""
    name = "stability-check"
    category = "Identities"

    properties = {
        "surface": {
            "type": "any",
            "default": "catenoid:1",
        },
        "kernel": {
            "type": "any",
            "default": "mollifier:0.3",
        },
        "point": {
            "type": "any",
            "default": None,
            "optional": True,
        },
        "level": {
            "type": "int",
            "default": 4,
        },
        "R": {
            "type": "float",
            "default": None,
            "optional": True,
        },
        "c_field": {
            "type": "string",
            "default": "nonlocal",
            "choices": list(C_FIELDS),
            "doc": "c_K at the nodes, the classical |A|, or random bumps",
        },
        "fields": {
            "type": "mapping",
            "schema": FIELDS_SCHEMA,
            "default": {},
        },
        "synthetic": {
            "type": "boolean",
            "default": True,
            "doc": "skip the K-minimality hypothesis and check the algebra only",
        },
        "tolerance": {
            "type": "float",
            "default": HYPOTHESIS_TOL,
            "doc": "K-minimality tolerance",
        },
        "seed": {
            "type": "int",
            "default": DEFAULT_SEED,
        },
    }

    def execute(self):
        surface = make_surface(self.surface)
        kernel = make_kernel(surface.dimension, self.kernel)
        fields = section(self.config, "fields", FIELDS_SCHEMA)
        ctx = make_context(surface, kernel, self.point, R=self.R, level=self.level)
        rule = ctx.rule
        R = rule.truncation
        rng = np.random.default_rng(self.seed)

        # eta: one centered bump plus random ones, all inside the rule coverage
        radius = fields["radius"] * R
        if radius >= R:
            raise ConfigError("fields.radius", "bump radius must stay below the truncation radius")
        spread = min(fields["spread"] * R, R - radius) / np.sqrt(surface.dimension)
        etas = [BumpField(ctx.base.point, radius)]
        etas += random_bumps(rng, ctx.base.point, spread, radius, fields["bumps"] - 1, surface.dimension)
        c_values = self._c_values(surface, kernel, rule, rng, spread, radius)

        reports = self.executor.map(lambda eta: stability_decomposition_check(ctx, eta, c_values), etas)
        outcomes, rows = [], []
        for k, report in enumerate(reports):
            for step, ok in report.checks.items():
                outcomes.append(CheckOutcome(f"stability-check[{surface.name} eta{k} {step}]", ok,
                                             self._detail(report, step)))
            rows.append({"eta": k, **{key: value for key, value in report.to_record().items()
                                      if not isinstance(value, dict)}})

        conclusion = stability_conclusion_check(ctx, etas[0], c_values, synthetic=self.synthetic,
                                                tol=self.tolerance)
        outcomes.append(CheckOutcome(
            f"stability-check[{surface.name} conclusion{' synthetic' if self.synthetic else ''}]",
            conclusion.passed, f"gap {fmt(conclusion.gap)} gap error {fmt(conclusion.gap_error)}"))

        records = {"decompositions": [r.to_record() for r in reports], "conclusion": conclusion.to_record(),
                   "c_field": self.c_field, "rule": rule.describe()}
        return {"outcomes": outcomes, "records": records,
                "tables": {"stability": table(rows), "conclusion": table([conclusion.to_record()])}}

    def _c_values(self, surface, kernel, rule, rng, spread, radius):
        if self.c_field == "nonlocal":
            return curvature_at_nodes(kernel, rule)
        if self.c_field == "classical":
            return np.sqrt(ShapeNormField(surface).value(rule.points))
        bumps = random_bumps(rng, rule.base.point, spread, radius, 2, surface.dimension)
        return sum(field_value(b, rule.points) for b in bumps)

    @staticmethod
    def _detail(report, step):
        if step == "decomposition":
            return f"error {fmt(report.decomposition_error)}"
        if step == "polarization":
            return f"error {fmt(report.polarization_error)}"
        if step == "symmetrized_cross":
            return f"gap {fmt(abs(report.cross - report.cross_symmetrized))}"
        if step == "inequality":
            return f"cross {fmt(report.cross)} bound {fmt(report.bound)}"
        if step == "bound_as_lk":
            return f"gap {fmt(abs(report.bound - report.bound_lk))}"
        return f"slack error {fmt(report.slack_error)}"
