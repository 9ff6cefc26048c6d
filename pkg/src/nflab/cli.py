"""Command line entry point ``nfl``."""
from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigInvalid, NFLError
from .experiments import DESCRIPTIONS, load_config, run


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.output:
        from dataclasses import replace
        cfg = replace(cfg, output=args.output)
    report = run(cfg)
    for b in report.bands:
        print(f"{'PASS' if b['pass'] else 'FAIL'}  {b['name']}: {b['value']:.6g}")
    print(json.dumps(report.fitted, sort_keys=True))
    print(f"wrote {cfg.output}/{cfg.experiment}.csv and .json")
    return 0 if report.passed else 1


def _cmd_list(args) -> int:
    for name, text in DESCRIPTIONS.items():
        print(f"{name:16s} {text}")
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"ok: {cfg.experiment} on {cfg.domain.get('kind')} with {len(cfg.t_grid)} times")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nfl", description="Neumann heat flow experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run an experiment from a JSON config")
    p.add_argument("config")
    p.add_argument("--output", help="output directory (overrides the config)")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("list-experiments", help="list the available experiments")
    p.set_defaults(func=_cmd_list)
    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except (NFLError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
