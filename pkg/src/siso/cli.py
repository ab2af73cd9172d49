"""Command line entry point: ``siso run`` and ``siso explain``."""
from __future__ import annotations

import argparse
import os
import sys
from datetime import date

from .ingestion.items import TimePolicy
from .mapping import MappingError, compile_plan, parse_mapping, validate_plan
from .runtime.channels import DEFAULT_CAPACITY
from .runtime.pipeline import EXIT_CONFIG, FORMATS, RuntimeConfig, run_pipeline
from .window import WindowParams


def _add_mapping_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("-m", "--mapping", required=True, help="mapping document (Turtle)")
    p.add_argument("--base-iri", default=None, help="base IRI for relative templates (default http://example.com/)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="siso", description="Map JSON/CSV streams to an RDF statement stream.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a mapping")
    _add_mapping_args(run)
    run.add_argument("--parallelism", type=int, default=1)
    run.add_argument("--output", default="-", help="-, a file path or tcp://host:port")
    run.add_argument("--format", choices=FORMATS, default="ntriples")
    run.add_argument("--queue-capacity", type=int, default=DEFAULT_CAPACITY)
    run.add_argument("--base-dir", default=None,
                     help="directory for relative file: sources (default: the mapping's directory)")
    run.add_argument("--metrics-out", default=None, help="write 1 Hz process metrics CSV here")
    run.add_argument("--explain", action="store_true", help="print the operator DAG to stderr first")

    d = WindowParams()
    win = run.add_argument_group("window")
    win.add_argument("--window-initial-ms", type=int, default=d.initial_interval)
    win.add_argument("--window-min-ms", type=int, default=d.lower_bound)
    win.add_argument("--window-max-ms", type=int, default=d.upper_bound)
    win.add_argument("--cost-upper", type=float, default=d.epsilon_u)
    win.add_argument("--cost-lower", type=float, default=d.epsilon_l)
    win.add_argument("--limit-p", type=float, default=d.initial_limit_p)
    win.add_argument("--limit-c", type=float, default=d.initial_limit_c)

    tm = run.add_argument_group("event time")
    tm.add_argument("--time-mode", choices=("arrival", "field"), default="arrival")
    tm.add_argument("--time-field", default=None, help="attribute path holding the event time")
    tm.add_argument("--time-format", choices=("epoch_ms", "clock_hms"), default="epoch_ms")
    tm.add_argument("--time-date", default=None, help="YYYY-MM-DD day for clock_hms values (default today)")

    exp = sub.add_parser("explain", help="print the compiled operator DAG")
    _add_mapping_args(exp)
    return parser


def _load(args):
    with open(args.mapping, encoding="utf-8") as fh:
        text = fh.read()
    plan = parse_mapping(text, base_iri=args.base_iri) if args.base_iri else parse_mapping(text)
    for finding in validate_plan(plan).warnings:
        print(f"warning: {finding}", file=sys.stderr)
    return compile_plan(plan)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        executable = _load(args)
        if args.command == "explain":
            sys.stdout.write(executable.explain())
            return 0
        config = RuntimeConfig(
            parallelism=args.parallelism,
            window=WindowParams(
                initial_interval=args.window_initial_ms,
                epsilon_u=args.cost_upper,
                epsilon_l=args.cost_lower,
                upper_bound=args.window_max_ms,
                lower_bound=args.window_min_ms,
                initial_limit_p=args.limit_p,
                initial_limit_c=args.limit_c,
            ),
            base_iri=args.base_iri,
            output=args.output,
            format=args.format,
            time_policy=TimePolicy(
                args.time_mode,
                args.time_field,
                args.time_format,
                date.fromisoformat(args.time_date) if args.time_date else None,
            ),
            queue_capacity=args.queue_capacity,
            base_dir=args.base_dir or os.path.dirname(os.path.abspath(args.mapping)),
            metrics_out=args.metrics_out,
        )
    except (OSError, MappingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.explain:
        sys.stderr.write(executable.explain())
    return run_pipeline(executable, config)


if __name__ == "__main__":
    sys.exit(main())
