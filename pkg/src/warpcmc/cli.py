"""Command line entry point: ``warpcmc run|list-builtins|verify``."""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from pathlib import Path

from . import __version__
from .builtins import PSI_CATALOG, SCENARIOS, SUITES, TAU_CATALOG
from .config import ConfigError, load_config, parse_config
from .geometry import GeometryError
from .radial import AdmissibilityError
from .scenario import Report, run_scenario

OUT_ENV = "WARPCMC_OUT"
DEFAULT_OUT = "warpcmc-out"


def _out_dir(args, cfg) -> Path:
    if args.out:
        return Path(args.out)
    if cfg.outputs.directory:
        return Path(cfg.outputs.directory)
    return Path(os.environ.get(OUT_ENV, DEFAULT_OUT))


def _write_json(path: Path, report: Report) -> None:
    data = report.as_dict()
    data["provenance"]["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    data["provenance"]["version"] = __version__
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")


def _print_report(report: Report, stream=None) -> None:
    stream = stream or sys.stdout
    for c in report.checks:
        print(f"{c.status:<8}{c.name:<48}value={c.value:.3e}  bound={c.bound:.3e}", file=stream)
    summary = report.as_dict()["summary"]
    print(f"[{report.scenario}] PASS={summary['PASS']} FAIL={summary['FAIL']} FLAGGED={summary['FLAGGED']}",
          file=stream)


def _execute(cfg, args) -> int:
    tol = {"identity": args.tol} if args.tol is not None else None
    out = _out_dir(args, cfg)
    try:
        report = run_scenario(cfg, tolerances=tol, grid_size=args.grid, parallel=not args.serial, out_dir=out)
    except AdmissibilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GeometryError as exc:
        print(f"error: chart margin or geometry failure: {exc}", file=sys.stderr)
        return 2
    if "json" in cfg.outputs.formats:
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / f"{cfg.name}-report.json", report)
    _print_report(report)
    return 1 if report.failed else 0


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return _execute(cfg, args)


def cmd_list(args) -> int:
    print("warping functions tau:")
    for name, info in TAU_CATALOG.items():
        print(f"  {name:<15}{info['tau']}")
        print(f"  {'':<15}oracle: {info['oracle']}  [{info['provenance']}]")
        print(f"  {'':<15}dimension: {info['m_dependence']}")
    print("weights Psi:")
    for name, info in PSI_CATALOG.items():
        print(f"  {name:<15}{info['Psi']}  ({info['oracle']})  [{info['provenance']}]")
    print("scenarios:")
    for name, raw in SCENARIOS.items():
        sp = raw["space"]
        extra = f" coefficients={sp['coefficients']}" if "coefficients" in sp else ""
        print(f"  {name:<30}tau={sp['tau']} Psi={sp['Psi']} m={sp['m']} graph={raw['graph']['kind']}{extra}")
    print("suites:")
    for name, members in SUITES.items():
        print(f"  {name:<15}{', '.join(members)}")
    return 0


def cmd_verify(args) -> int:
    if args.suite not in SUITES:
        print(f"error: unknown suite {args.suite!r}; choose from {sorted(SUITES)}", file=sys.stderr)
        return 2
    worst = 0
    for name in SUITES[args.suite]:
        cfg = parse_config(SCENARIOS[name])
        worst = max(worst, _execute(cfg, args))
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="warpcmc", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", help=f"output directory (default: config, then ${OUT_ENV}, then ./{DEFAULT_OUT})")
        p.add_argument("--grid", type=int, help="spectral grid size override")
        p.add_argument("--tol", type=float, help="tolerance override for the finite-difference identity checks")
        p.add_argument("--serial", action="store_true", help="evaluate probes sequentially")

    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_list = sub.add_parser("list-builtins", help="print the builtin catalog")
    p_list.set_defaults(func=cmd_list)

    p_ver = sub.add_parser("verify", help="run a builtin suite")
    p_ver.add_argument("--suite", required=True)
    common(p_ver)
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "grid", None) is not None and args.grid < 64:
        print("error: --grid must be >= 64", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
