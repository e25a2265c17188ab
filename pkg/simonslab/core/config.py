"""Configuration schema handling.

Every configurable class carries a class-level ``properties`` mapping::

    properties = {
        "eps": {"type": "float", "default": 0.3, "doc": "support radius"},
    }

``resolve_properties`` merges a user mapping into those defaults and
coerces the values, raising ``ConfigError`` with the dotted field path
on the first mismatch.
"""

import hashlib
import json
import logging
import os

import yaml

from simonslab.core.errors import ConfigError

logger = logging.getLogger(__name__)

OUTPUT_ENV = "SIMONSLAB_OUTPUT"
DEFAULT_OUTPUT_ROOT = "runs"


def _coerce_scalar(kind, value, path):
    try:
        if kind == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if kind == "int":
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            return int(value)
        if kind == "boolean":
            if isinstance(value, str):
                lowered = value.strip().lower()
                if lowered in ("true", "yes", "1", "on"):
                    return True
                if lowered in ("false", "no", "0", "off"):
                    return False
                raise ValueError
            return bool(value)
        if kind == "string":
            return str(value)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected {kind}, got {value!r}") from None
    raise ConfigError(path, f"unknown property type {kind!r}")


def parse_list(value, item_kind, path):
    """Accept a YAML list, a comma list ``0.4,0.2`` or a range ``2..6``"""
    if value is None:
        return None
    if isinstance(value, str):
        text = value.strip()
        if ".." in text and item_kind == "int":
            lo, hi = text.split("..", 1)
            lo = _coerce_scalar("int", lo, path)
            hi = _coerce_scalar("int", hi, path)
            if hi < lo:
                raise ConfigError(path, f"empty range {text!r}")
            return list(range(lo, hi + 1))
        items = [part for part in text.split(",") if part.strip()]
    elif isinstance(value, (list, tuple)):
        items = list(value)
    else:
        items = [value]
    return [_coerce_scalar(item_kind, item, f"{path}[{k}]") for k, item in enumerate(items)]


def coerce(config, value, path):
    """Coerce one value according to a property definition"""
    kind = config.get("type", "string")
    if value is None:
        if config.get("optional", False) or config.get("default") is None:
            return None
        raise ConfigError(path, "value required")
    if kind.endswith("_list"):
        return parse_list(value, kind[:-5], path)
    if kind == "mapping":
        if not isinstance(value, dict):
            raise ConfigError(path, f"expected mapping, got {value!r}")
        schema = config.get("schema")
        if schema is None:
            return dict(value)
        return resolve_schema(schema, value, path, owner=path)
    if kind == "any":
        return value
    result = _coerce_scalar(kind, value, path)
    choices = config.get("choices")
    if choices is not None and result not in choices:
        raise ConfigError(path, f"expected one of {sorted(choices)}, got {result!r}")
    return result


def resolve_properties(cls, values=None, path=""):
    """Merge ``values`` into the class defaults and validate them"""
    return resolve_schema(getattr(cls, "properties", {}), values, path,
                          owner=getattr(cls, "name", cls.__name__))


def resolve_schema(schema, values=None, path="", owner="section"):
    """Validate a mapping against a ``properties``-style schema"""
    if values is not None and not isinstance(values, dict):
        raise ConfigError(path, f"expected mapping, got {values!r}")
    values = dict(values or {})
    unknown = sorted(set(values) - set(schema))
    if unknown:
        where = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError(where, f"unknown field for {owner}")

    resolved = {}
    for name, config in schema.items():
        where = f"{path}.{name}" if path else name
        resolved[name] = coerce(config, values.get(name, config.get("default")), where)
    return resolved


def parse_shorthand(text, positional, path):
    """Split ``family:a,b`` into a mapping using the positional parameter names"""
    if isinstance(text, dict):
        return dict(text)
    if not isinstance(text, str) or not text.strip():
        raise ConfigError(path, f"expected 'name[:params]', got {text!r}")
    name, _, params = text.strip().partition(":")
    spec = {"name": name.strip()}
    if params:
        parts = [p.strip() for p in params.split(",") if p.strip()]
        names = positional.get(spec["name"], ())
        if len(parts) > len(names):
            raise ConfigError(path, f"too many parameters for {spec['name']!r}")
        spec.update(zip(names, parts))
    return spec


def load_config(path):
    """Read a YAML experiment config"""
    with open(path, "r", encoding="utf-8") as handle:
        data = yaml.safe_load(handle) or {}
    if not isinstance(data, dict):
        raise ConfigError("", f"{path} does not contain a mapping")
    logger.debug("Loaded config %s with sections %s", path, sorted(data))
    return data


def canonical_dump(config):
    """Deterministic YAML rendering of a resolved config"""
    return yaml.safe_dump(config, sort_keys=True, default_flow_style=False)


def config_hash(config):
    """Content hash of a resolved config"""
    payload = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def output_root(explicit=None):
    """Explicit root, else the environment default, else ``runs``"""
    if explicit:
        return explicit
    return os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT_ROOT)
