"""Command-line harness for scenario runs.

Exit codes: 0 success, 2 config parse/schema error, 3 state-invariant
violation at load, 4 numerical halt (a run stopped on a floor criterion or
nonfinite state before reaching t_end).  The output root is taken from
--out, then the VSHEET_OUT environment variable, then ./runs.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .runio import compare_runs, execute
from .scenarios import ScenarioError, load_scenario, packaged_scenarios

OUT_ENV = "VSHEET_OUT"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_HALT = 4


def out_root(args) -> Path:
    if args.out is not None:
        return Path(args.out)
    return Path(os.environ.get(OUT_ENV, "runs"))


def resolve_config(token: str) -> Path:
    """A path, or the name of a packaged scenario."""
    p = Path(token)
    if p.exists():
        return p
    shipped = packaged_scenarios()
    if token in shipped:
        return shipped[token]
    raise ScenarioError(token, "no such file or packaged scenario")


def cmd_run(args) -> int:
    scenario = load_scenario(resolve_config(args.config))
    manifest = execute(scenario, out_root(args))
    print(f"{scenario.name}: stop_reason={manifest.stop_reason} "
          f"t_final={manifest.t_final:.6g} -> {Path(out_root(args)) / scenario.name}")
    return EXIT_OK if manifest.stop_reason == "t_end" else EXIT_HALT


def cmd_batch(args) -> int:
    directory = Path(args.directory)
    configs = sorted(directory.glob("*.yaml"))
    if not configs:
        print(f"no scenario files in {directory}", file=sys.stderr)
        return EXIT_CONFIG
    worst = EXIT_OK
    for cfg in configs:
        scenario = load_scenario(cfg)
        manifest = execute(scenario, out_root(args))
        status = "ok" if manifest.stop_reason == "t_end" else manifest.stop_reason
        print(f"{scenario.name}: {status}")
        if manifest.stop_reason != "t_end":
            worst = EXIT_HALT
    return worst


def cmd_compare(args) -> int:
    out_dir = out_root(args) / args.name
    try:
        report = compare_runs(args.manifests, out_dir)
    except (ValueError, FileNotFoundError) as exc:
        print(f"compare error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    top = f"sobolev_w_{report['orders'][-1]:g}"
    print(f"{'n':>6} {'t_final':>12} {top:>16} {'growth':>10}")
    factors = [float("nan")] + report["growth_factors"][top]
    for row, g in zip(report["rows"], factors):
        print(f"{row['n']:>6} {row['t_final']:>12.6g} {row[top]:>16.8g} {g:>10.4g}")
    print(f"table -> {out_dir / 'refinement.csv'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = load_scenario(resolve_config(args.config))
    print(f"{scenario.name}: valid ({scenario.mode}, n={scenario.resolution}, "
          f"t_end={scenario.integrator.t_end:g})")
    return EXIT_OK


def cmd_list(args) -> int:
    for name, path in packaged_scenarios().items():
        scenario = load_scenario(path)
        print(f"{name:32s} {scenario.mode:15s} n={scenario.resolution:<5d} "
              f"t_end={scenario.integrator.t_end:g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vsheet",
        description="Pseudospectral vortex-sheet simulations and diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario file (or packaged scenario name)")
    p.add_argument("config")
    p.add_argument("--out", default=None, help=f"output root (default ${OUT_ENV} or ./runs)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("batch", help="run every scenario file in a directory")
    p.add_argument("directory")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("compare", help="cross-resolution refinement report from run manifests")
    p.add_argument("manifests", nargs="+")
    p.add_argument("--out", default=None)
    p.add_argument("--name", default="comparison", help="output subdirectory name")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="parse and validate a scenario file")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("list-scenarios", help="list packaged sample scenarios")
    p.set_defaults(func=cmd_list)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT if exc.invariant else EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
