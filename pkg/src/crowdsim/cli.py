"""Command-line entry points: validate, run, bench."""

from __future__ import annotations

import argparse
import os
import sys

from . import scenarios
from .bench import run_bench
from .errors import CrowdsimError, ScenarioSyntaxError, ValidationError
from .protocol import DEFAULT_PORT
from .scenario import ScenarioSpec, load_scenario_file
from .server import serve


def _load(ref: str) -> ScenarioSpec:
    """Load a scenario from a file path or a bundled name."""
    if os.path.exists(ref):
        return load_scenario_file(ref)
    if ref in scenarios.list_bundled():
        return scenarios.load(ref)
    raise FileNotFoundError(
        f"{ref!r} is neither a file nor a bundled scenario "
        f"(bundled: {', '.join(scenarios.list_bundled())})")


def _cmd_validate(args) -> int:
    try:
        spec = _load(args.scenario)
    except (ValidationError, ScenarioSyntaxError, FileNotFoundError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    print(f"OK: {spec.name!r}: {len(spec.agents)} agents "
          f"({len(spec.robots())} robots), {len(spec.obstacles)} wall segments, "
          f"dt={spec.config.dt}s, planner={spec.config.planner}, "
          f"avoidance={spec.config.avoidance}")
    return 0


def _cmd_run(args) -> int:
    try:
        spec = _load(args.scenario)
    except (ValidationError, ScenarioSyntaxError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    def announce(server):
        print(f"listening on {server.host}:{server.port} "
              f"(scenario {spec.name!r}, mode {args.mode}, dt {spec.config.dt})",
              flush=True)

    serve(spec, port=args.port, host=args.host, mode=args.mode,
          rate_hz=args.rate, record_path=args.record, max_steps=args.steps,
          announce=announce)
    return 0


def _cmd_bench(args) -> int:
    try:
        spec = _load(args.scenario)
        counts = [int(v) for v in args.robots.split(",") if v != ""]
    except (ValidationError, ScenarioSyntaxError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError:
        print(f"error: --robots must be a comma-separated list of integers, "
              f"got {args.robots!r}", file=sys.stderr)
        return 2
    try:
        report = run_bench(spec, counts, args.cycles)
    except CrowdsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(report.format_table())
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write(report.to_csv())
        print(f"wrote {args.csv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdsim",
        description="Deterministic 2-D crowd + robot simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario", help="scenario file path or bundled name")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("run", help="serve a scenario over TCP")
    p.add_argument("scenario")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=DEFAULT_PORT,
                   help=f"TCP port (default {DEFAULT_PORT}; 0 picks a free one)")
    p.add_argument("--mode", choices=("realtime", "lockstep"),
                   default="realtime")
    p.add_argument("--rate", type=float, default=10.0,
                   help="steps per wall-clock second in realtime mode")
    p.add_argument("--record", metavar="OUT.JSONL",
                   help="write a trajectory log line per tick")
    p.add_argument("--steps", type=int, default=None,
                   help="stop after this many ticks")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("bench", help="measure cycle times vs robot count")
    p.add_argument("scenario")
    p.add_argument("--robots", required=True,
                   help="comma-separated robot counts, e.g. 0,2,4,6,8")
    p.add_argument("--cycles", type=int, default=100)
    p.add_argument("--csv", metavar="OUT.CSV", help="also write CSV")
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
