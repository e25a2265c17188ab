#!/usr/bin/env python3
"""
Command-line entry point: run one registered check from a YAML config and flags.

    simonslab verify --surface plane --kernel mollifier:0.3 --ij all
    simonslab limit-study --config catenoid.yaml --eps 0.4,0.2,0.1,0.05

Every run writes ``<root>/<command>-<hash>/`` with ``config.resolved``,
``report.json`` and ``tables/*.csv`` and prints one PASS/FAIL line per outcome.
"""

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from simonslab import __version__
from simonslab.core.config import canonical_dump, config_hash, load_config, output_root
from simonslab.core.errors import ConfigError, SimonsLabError
from simonslab.core.executor import CheckExecutor
from simonslab.core.registry import get_all, get_categories, get_class

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

# Keys of the YAML file that steer the run itself, not the check
RUN_KEYS = ("command", "output", "workers")

# flag, config path, metavar/action, help
FLAGS = (
    ("--surface", ("surface",), "SPEC", "surface shorthand, e.g. sphere:1 or catenoid:1"),
    ("--levelset", ("levelset",), "SPEC", "level-set function shorthand, e.g. sigmoid-sphere:1,0.1"),
    ("--kernel", ("kernel",), "SPEC", "kernel shorthand, e.g. mollifier:0.3"),
    ("--pv-kernel", ("pv_kernel",), "SPEC", "singular kernel for the principal-value check"),
    ("--point", ("point",), "NAME", "named point of the surface or function"),
    ("--ij", ("indices",), "PAIRS", "'all', 'i,j' or 'i,j;k,l'"),
    ("--levels", ("quadrature", "levels"), "LIST", "refinement levels, list or range a..b"),
    ("--delta", ("quadrature", "delta"), "X", "exclusion radius"),
    ("--deltas", ("quadrature", "deltas"), "LIST", "principal-value delta schedule"),
    ("--R", ("quadrature", "R"), "X", "truncation radius"),
    ("--R0", ("quadrature", "R0"), "X", "growth certificate base radius"),
    ("--eps", ("limit", "eps"), "LIST", "decreasing eps schedule"),
    ("--mode", ("limit", "mode"), "MODE", "near-field handling: exclusion or cap"),
    ("--level", ("level",), "L", "refinement level"),
    ("--grid", ("levelset_grid", "sizes"), "LIST", "grid cells per axis"),
    ("--n", ("n",), "LIST", "dimensions, list or range a..b"),
    ("--mc-samples", ("mc_samples",), "N", "Monte-Carlo samples (0 disables)"),
    ("--c-field", ("c_field",), "KIND", "nonlocal, classical or bumps"),
    ("--seed", ("seed",), "N", "random seed"),
    ("--classical", ("classical",), "store_true", "check the classical identity"),
    ("--synthetic", ("synthetic",), "store_true", "skip the K-minimality hypothesis"),
    ("--sharp-interface", ("sharp_interface",), "store_true", "run the sharp-interface study"),
)


def _accepts(check_class, path):
    return path[0] in check_class.properties


def build_parser():
    parser = argparse.ArgumentParser(prog="simonslab",
                                     description="Numerical verification of nonlocal Simons-type identities")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--list", action="store_true", help="list the available checks and exit")
    subparsers = parser.add_subparsers(dest="command")

    for name, check_class in sorted(get_all("check").items()):
        sub = subparsers.add_parser(name, help=(check_class.__doc__ or "").strip().splitlines()[0])
        sub.add_argument("--config", help="YAML experiment config")
        sub.add_argument("--output", help="output root (default $SIMONSLAB_OUTPUT or ./runs)")
        sub.add_argument("--workers", type=int, help="worker threads for independent cells")
        verbosity = sub.add_mutually_exclusive_group()
        verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
        verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings only")
        for flag, path, meta, text in FLAGS:
            if not _accepts(check_class, path):
                continue
            dest = "opt_" + "__".join(path)
            if meta == "store_true":
                sub.add_argument(flag, dest=dest, action="store_true", default=None, help=text)
            else:
                sub.add_argument(flag, dest=dest, metavar=meta, help=text)
    return parser


def setup_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def list_checks():
    for category, classes in sorted(get_categories("check").items()):
        print(category)
        for cls in sorted(classes, key=lambda c: c.name):
            doc = (cls.__doc__ or "").strip().splitlines()
            print(f"  {cls.name:<18} {doc[0] if doc else ''}")


def _known_keys():
    keys = set(RUN_KEYS)
    for cls in get_all("check").values():
        keys.update(cls.properties)
        if cls.config_section:
            keys.add(cls.config_section)
    return keys


def check_config(check_class, data):
    """Pick the check's fields out of the file; other checks' sections are ignored"""
    unknown = sorted(set(data) - _known_keys())
    if unknown:
        raise ConfigError(unknown[0], "unknown config section")
    config = {key: value for key, value in data.items() if key in check_class.properties}
    section = check_class.config_section
    if section and section in data:
        if not isinstance(data[section], dict):
            raise ConfigError(section, f"expected mapping, got {data[section]!r}")
        config.update(data[section])
    ignored = sorted(set(data) - set(config) - set(RUN_KEYS) - {section})
    if ignored:
        logger.debug("Sections not used by %s: %s", check_class.name, ignored)
    return config


def apply_flags(config, args):
    """Flags override file values"""
    for _, path, _, _ in FLAGS:
        value = getattr(args, "opt_" + "__".join(path), None)
        if value is None:
            continue
        target = config
        for key in path[:-1]:
            current = target.get(key)
            if current is None:
                current = {}
            elif not isinstance(current, dict):
                raise ConfigError(key, f"expected mapping, got {current!r}")
            target[key] = dict(current)
            target = target[key]
        target[path[-1]] = value
    return config


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, tuple):
        return list(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_run(directory, resolved, digest, command, result, success):
    """config.resolved, report.json and tables/*.csv under ``directory``"""
    tables_dir = os.path.join(directory, "tables")
    os.makedirs(tables_dir, exist_ok=True)
    with open(os.path.join(directory, "config.resolved"), "w", encoding="utf-8") as handle:
        handle.write(canonical_dump(resolved))

    report = {
        "command": command,
        "config": resolved,
        "config_hash": digest,
        "version": __version__,
        "passed": success,
        "outcomes": [{"check": o.check, "passed": o.passed, "detail": o.detail}
                     for o in result["outcomes"]],
        "records": result["records"],
    }
    with open(os.path.join(directory, "report.json"), "w", encoding="utf-8") as handle:
        json.dump(report, handle, sort_keys=True, indent=2, default=_json_default)
        handle.write("\n")

    for name, table in result["tables"].items():
        with open(os.path.join(tables_dir, f"{name}.csv"), "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(table.header)
            for row in table.rows:
                writer.writerow(["" if v is None else repr(float(v)) if isinstance(v, float) else v
                                 for v in row])


def run(args):
    """Resolve the config, run the check and write the run directory; returns the exit status"""
    check_class = get_class("check", args.command)
    data = load_config(args.config) if args.config else {}
    if data.get("command") not in (None, args.command):
        raise ConfigError("command", f"config is for {data['command']!r}, not {args.command!r}")

    config = apply_flags(check_config(check_class, data), args)
    workers = args.workers if args.workers is not None else data.get("workers", 1)
    check = check_class(config, CheckExecutor(workers))

    resolved = {"command": args.command, **check.config}
    digest = config_hash(resolved)
    output = data.get("output") or {}
    directory = os.path.join(output_root(args.output or output.get("root")),
                             output.get("name") or f"{args.command}-{digest[:12]}")
    logger.info("Running %s (config %s) into %s", args.command, digest[:12], directory)

    success, message = check.executor.execute_checks([check])
    write_run(directory, resolved, digest, args.command, check.output_cache, success)
    for outcome in check.output_cache["outcomes"]:
        print(outcome.summary_line())
    logger.info("%s: %s", args.command, message)
    return EXIT_OK if success else EXIT_FAIL


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list:
        list_checks()
        return EXIT_OK
    if not args.command:
        parser.print_help()
        return EXIT_CONFIG

    setup_logging(args.verbose, args.quiet)
    try:
        return run(args)
    except ConfigError as e:
        logger.error("Configuration error: %s", e)
        print(f"FAIL {args.command} configuration error: {e}")
        return EXIT_CONFIG
    except (SimonsLabError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        print(f"FAIL {args.command} {type(e).__name__}: {e}")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
