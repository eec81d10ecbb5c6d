"""Command line entry point: ``run``, ``analytic`` and ``validate``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, builtin_names, builtin_path, load_config
from .report import ReportError, write_report
from .simulation import run


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.exists() or p.suffix:
        return p
    return builtin_path(path)


def _load(args):
    overrides = list(args.override or [])
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return load_config(_resolve(args.config), overrides)


def cmd_run(args) -> int:
    cfg = _load(args)
    report = run(cfg)
    out = args.out_dir or cfg.output_dir or f"runs/{cfg.name}"
    write_report(report, out)
    n = len(report.detections)
    print(f"{cfg.name}: {len(report.times)} ticks, {n} detection(s), outputs in {out}")
    for d in report.detections:
        lat = "" if d.latency is None else f" latency={d.latency:g}s"
        print(f"  {d.agent_id} t={d.time:g}s Hm={d.metric:.6g} tau={d.threshold:.6g} {d.classification}{lat}")
    return 0


def cmd_analytic(args) -> int:
    from .analytic import format_table

    cases = []
    for name in ("analytic1dof_actuator", "analytic1dof_sensor"):
        overrides = list(args.override or [])
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        cfg = load_config(builtin_path(name), overrides)
        rep = run(cfg)
        cases.append((name, rep))
        if args.out_dir:
            write_report(rep, Path(args.out_dir) / name)
    print(format_table(cases))
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args)
    print(f"{cfg.name}: ok ({cfg.mode}, {len(cfg.agents)} agent(s), {len(cfg.faults)} fault(s))")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override the scenario seed")
    common.add_argument("--out-dir", help="directory for CSV outputs")
    common.add_argument(
        "--override", action="append", metavar="KEY=VALUE",
        help="set a config value by dotted path, e.g. fdi.tick=5 or agents.0.x=-1.4",
    )
    p = argparse.ArgumentParser(prog="infofdi", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run a scenario file or built-in name")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)
    a = sub.add_parser("analytic", parents=[common], help="print the 1-DOF ratio/metric table")
    a.set_defaults(func=cmd_analytic)
    v = sub.add_parser("validate", parents=[common], help="check a config without running it")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    sub.add_parser("list", help="list built-in scenarios").set_defaults(
        func=lambda args: print("\n".join(builtin_names())) or 0
    )
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ReportError as exc:
        print(f"report error: {exc}", file=sys.stderr)
        return 3
    except RuntimeError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
