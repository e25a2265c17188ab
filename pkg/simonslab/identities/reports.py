from dataclasses import dataclass, field

import numpy as np

SAFETY_FACTOR = 10.0


def _plain(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


@dataclass(frozen=True, eq=False)
class ResidualReport:
    """Terms of a Simons-type identity: lhs = lk + c2 + geo"""
    identity: str
    term_lhs: float
    term_lk: float
    term_c2: float
    term_geo: float
    budgets: dict
    parameters: dict
    checks: dict = field(default_factory=dict)

    @property
    def residual(self):
        return self.term_lhs - (self.term_lk + self.term_c2 + self.term_geo)

    @property
    def budget_total(self):
        return float(sum(self.budgets.values()))

    @property
    def passed(self):
        return abs(self.residual) <= SAFETY_FACTOR * self.budget_total

    def summary(self):
        return (f"{self.identity} residual={self.residual:.3e} "
                f"budget={SAFETY_FACTOR * self.budget_total:.3e}")

    def to_record(self):
        return _plain({
            "identity": self.identity,
            "term_lhs": self.term_lhs, "term_lk": self.term_lk,
            "term_c2": self.term_c2, "term_geo": self.term_geo,
            "residual": self.residual, "budgets": self.budgets,
            "budget_total": self.budget_total, "passed": self.passed,
            "parameters": self.parameters, "checks": self.checks,
        })


LIMIT_COLUMNS = ("lk", "c2", "h", "correction")


@dataclass(frozen=True, eq=False)
class LimitStudyRow:
    """Operator values for one eps against their classical targets"""
    eps: float
    lk: float
    c2: float
    h: float
    correction: float
    targets: dict
    budgets: dict
    rates: dict = field(default_factory=dict)

    def value(self, column):
        return getattr(self, column)

    def error(self, column):
        return abs(self.value(column) - self.targets[column])

    def to_record(self):
        record = {"eps": self.eps}
        for column in LIMIT_COLUMNS:
            record[column] = self.value(column)
            record[f"{column}_target"] = self.targets[column]
            record[f"{column}_error"] = self.error(column)
            record[f"{column}_budget"] = self.budgets.get(column, 0.0)
            record[f"{column}_rate"] = self.rates.get(column)
        return _plain(record)


def fit_rate(eps, errors, last=3):
    """Least-squares slope of log|error| against log eps over the last rows"""
    eps = np.asarray(eps[-last:], dtype=float)
    errors = np.abs(np.asarray(errors[-last:], dtype=float))
    if len(eps) < 2 or np.any(errors <= 1e-14):
        return None
    return float(np.polyfit(np.log(eps), np.log(errors), 1)[0])


@dataclass(frozen=True, eq=False)
class StabilityReport:
    """Algebraic steps behind the stability inequality on shared node data"""
    b_product: float
    weighted_b_eta: float
    weighted_b_c: float
    cross: float
    cross_symmetrized: float
    bound: float
    discarded: float
    polarization_error: float
    scale: float
    bound_lk: float = 0.0
    tolerance: float = 1e-12

    @property
    def decomposition_error(self):
        return abs(self.b_product - (self.weighted_b_eta + self.weighted_b_c + self.cross))

    @property
    def slack(self):
        return self.bound - self.cross

    @property
    def slack_error(self):
        return abs(self.slack - self.discarded)

    def _tol(self):
        return self.tolerance * max(1.0, self.scale)

    @property
    def checks(self):
        tol = self._tol()
        return {
            "decomposition": self.decomposition_error <= tol,
            "polarization": self.polarization_error <= tol,
            "symmetrized_cross": abs(self.cross - self.cross_symmetrized) <= tol,
            "inequality": self.cross <= self.bound + tol,
            "bound_as_lk": abs(self.bound - self.bound_lk) <= tol,
            "slack_equals_discarded": self.slack_error <= tol,
        }

    @property
    def passed(self):
        return all(self.checks.values())

    def to_record(self):
        return _plain({
            "b_product": self.b_product, "weighted_b_eta": self.weighted_b_eta,
            "weighted_b_c": self.weighted_b_c, "cross": self.cross,
            "cross_symmetrized": self.cross_symmetrized, "bound": self.bound, "bound_lk": self.bound_lk,
            "slack": self.slack, "discarded": self.discarded,
            "decomposition_error": self.decomposition_error,
            "polarization_error": self.polarization_error, "slack_error": self.slack_error,
            "checks": self.checks, "passed": self.passed,
        })


@dataclass(frozen=True, eq=False)
class StabilityConclusion:
    """Both sides of the final stability inequality and the gap between them"""
    lhs: float
    rhs: float
    stability_sample: float
    discarded: float
    mean_curvature: float
    synthetic: bool
    assumed: tuple
    scale: float
    tolerance: float = 1e-12

    @property
    def gap(self):
        return self.rhs - self.lhs

    @property
    def gap_error(self):
        return abs(self.gap - (self.stability_sample + self.discarded))

    @property
    def passed(self):
        tol = self.tolerance * max(1.0, self.scale)
        if self.synthetic:
            # only the algebra is checkable without a stable surface
            return self.gap_error <= tol
        return self.gap_error <= tol and self.lhs <= self.rhs + tol

    def to_record(self):
        return _plain({
            "lhs": self.lhs, "rhs": self.rhs, "gap": self.gap,
            "stability_sample": self.stability_sample, "discarded": self.discarded,
            "gap_error": self.gap_error, "mean_curvature": self.mean_curvature,
            "synthetic": self.synthetic, "assumed": list(self.assumed), "passed": self.passed,
        })

