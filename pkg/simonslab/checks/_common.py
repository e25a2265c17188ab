"""Section schemas and helpers shared by the check plug-ins"""

import math

import numpy as np

from simonslab.core.check import CheckOutcome, Table
from simonslab.core.config import resolve_schema
from simonslab.core.errors import ConfigError

MIN_ORDER = 1.0

QUADRATURE_SCHEMA = {
    "levels": {"type": "int_list", "default": [5, 6], "doc": "refinement levels L, ascending"},
    "delta": {"type": "float", "default": 0.0, "doc": "exclusion radius"},
    "deltas": {"type": "float_list", "default": None, "optional": True,
               "doc": "strictly decreasing PV exclusion schedule"},
    "R": {"type": "float", "default": None, "optional": True, "doc": "truncation radius"},
    "R0": {"type": "float", "default": None, "optional": True, "doc": "growth certificate base radius"},
    "gamma": {"type": "float", "default": 1.0, "doc": "Richardson exponent in delta"},
}

FIELDS_SCHEMA = {
    "bumps": {"type": "int", "default": 3, "doc": "number of random bump test fields"},
    "spread": {"type": "float", "default": 0.25, "doc": "bump offset, as a fraction of the truncation radius"},
    "radius": {"type": "float", "default": 0.3, "doc": "bump radius, as a fraction of the truncation radius"},
}


def section(config, name, schema):
    """Resolve one nested config section against its schema"""
    return resolve_schema(schema, config.get(name), path=name, owner=name)


def parse_indices(value, n, path="indices"):
    """``all``, ``i,j``, ``i,j;k,l`` or a list of pairs -> list of (i, j)"""
    if value is None or value == "all":
        return [(i, j) for i in range(1, n) for j in range(1, n)]
    if isinstance(value, str):
        items = [part.split(",") for part in value.split(";") if part.strip()]
    else:
        items = list(value)
    pairs = []
    for k, item in enumerate(items):
        try:
            i, j = (int(str(v).strip()) for v in item)
        except (TypeError, ValueError):
            raise ConfigError(f"{path}[{k}]", f"expected a pair i,j, got {item!r}") from None
        if not (1 <= i <= n - 1 and 1 <= j <= n - 1):
            raise ConfigError(f"{path}[{k}]", f"indices must lie in 1..{n - 1}, got ({i}, {j})")
        pairs.append((i, j))
    if not pairs:
        raise ConfigError(path, "no index pairs")
    return pairs


def table(records, header=None):
    """Table from a list of flat dicts (header from the first record)"""
    if not records:
        return Table(tuple(header or ()), ())
    header = tuple(header or records[0].keys())
    return Table(header, tuple(tuple(record.get(key) for key in header) for record in records))


def fitted_order(spacings, residuals, floor=1e-13):
    """Slope of log |residual| against log spacing, None when the residuals sit at the floor"""
    r = np.abs(np.asarray(residuals, dtype=float))
    if len(r) < 2 or np.any(r <= floor):
        return None
    return float(np.polyfit(np.log(np.asarray(spacings, dtype=float)), np.log(r), 1)[0])


def fmt(value):
    if value is None:
        return "n/a"
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return f"{value:.3e}"


def order_outcomes(prefix, rows, pairs):
    """Fitted residual order per index pair and one outcome each, PASS at MIN_ORDER or above.

    Residuals at the rounding floor carry no order and produce no outcome.
    """
    orders, outcomes = {}, []
    for (i, j) in pairs:
        series = [r for r in rows if (r["i"], r["j"]) == (i, j)]
        order = fitted_order([r["spacing"] for r in series], [r["residual"] for r in series])
        orders[f"{i},{j}"] = order
        if order is not None:
            outcomes.append(CheckOutcome(f"{prefix} ({i},{j}) order]", order >= MIN_ORDER,
                                         f"fitted order {order:.2f}"))
    return orders, outcomes
