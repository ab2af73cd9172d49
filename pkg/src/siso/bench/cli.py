"""``siso-bench``: workload streamer, output monitor, datasets and full runs."""
from __future__ import annotations

import argparse
import json
import sys

from .data import DEFAULT_LANES, DEFAULT_STEPS, write_datasets
from .monitor import Monitor, MonitorError
from .report import RunReport, assess_sustainable, build_report, write_samples
from .workload import PROFILES, StreamError, Streamer, WorkloadProfile


def _profile(args) -> WorkloadProfile:
    return WorkloadProfile(
        kind=args.profile,
        duration=args.duration,
        rate=args.rate,
        burst_size=args.burst_size,
        burst_period=args.burst_period,
        background_rate=args.background_rate,
        flow=args.flow,
        speed=args.speed,
    )


def _add_profile_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", choices=PROFILES, required=True)
    p.add_argument("--rate", type=float, default=0.0, help="records/s (join: combined over both endpoints)")
    p.add_argument("--burst-size", type=int, default=0)
    p.add_argument("--burst-period", type=float, default=0.0, help="seconds")
    p.add_argument("--background-rate", type=float, default=0.0, help="records/s between bursts")
    p.add_argument("--duration", type=float, required=True, help="seconds")
    p.add_argument("--flow", help="flow dataset (ndjson or csv)")
    p.add_argument("--speed", help="speed dataset (ndjson or csv)")


def cmd_stream(args) -> int:
    try:
        streamer = Streamer(_profile(args), args.endpoint, accept_timeout=args.accept_timeout)
        streamer.listen()
        print("listening " + " ".join(args.endpoint), flush=True)
        sent = streamer.run()
    except (StreamError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            json.dump({"sent": sent, "per_endpoint": streamer.sent}, fh)
    print(f"sent={sent}", file=sys.stderr)
    return 0


def cmd_monitor(args) -> int:
    mon = Monitor()
    try:
        srv = mon.listen(args.input)
        print(f"listening {args.input}", flush=True)
        mon.serve(srv, accept_timeout=args.accept_timeout, max_seconds=args.max_seconds)
    except MonitorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    report = build_report(mon.samples, mon.dropped, args.warmup, args.rate)
    with open(args.report, "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    if args.samples:
        write_samples(mon.samples, args.samples)
    return 0


def cmd_gen_data(args) -> int:
    flow, speed = write_datasets(args.out, args.lanes, args.steps, args.seed)
    print(flow)
    print(speed)
    return 0


def cmd_assess(args) -> int:
    reports = [RunReport.load(p) for p in args.reports]
    try:
        best = assess_sustainable(reports)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print("none" if best is None else f"{best:g}")
    return 0


def cmd_run(args) -> int:
    from .harness import run_benchmark

    result = run_benchmark(_profile(args), args.workdir, args.parallelism, args.warmup, args.scheme)
    print(result.report.to_json())
    return 0 if result.engine_code == 0 else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="siso-bench", description="Benchmark harness for the siso engine.")
    sub = parser.add_subparsers(dest="command", required=True)

    st = sub.add_parser("stream", help="serve a workload to a connecting engine")
    _add_profile_args(st)
    st.add_argument("--endpoint", action="append", required=True,
                    help="tcp://host:port or ws://host:port to listen on (join: speed then flow)")
    st.add_argument("--accept-timeout", type=float, default=60.0)
    st.add_argument("--summary", help="write {'sent': N} JSON here")
    st.set_defaults(func=cmd_stream)

    mo = sub.add_parser("monitor", help="receive nquads_ts engine output and report latency")
    mo.add_argument("--input", required=True, help="tcp://host:port to listen on")
    mo.add_argument("--report", required=True)
    mo.add_argument("--samples", help="dump raw samples as CSV key,creation_ms,emission_ms")
    mo.add_argument("--warmup", type=float, default=30.0, help="seconds excluded from percentiles")
    mo.add_argument("--rate", type=float, default=None, help="target rate for the sustainability verdict")
    mo.add_argument("--accept-timeout", type=float, default=120.0)
    mo.add_argument("--max-seconds", type=float, default=None)
    mo.set_defaults(func=cmd_monitor)

    gd = sub.add_parser("gen-data", help="write synthetic flow/speed ndjson datasets")
    gd.add_argument("--out", default="data")
    gd.add_argument("--lanes", type=int, default=DEFAULT_LANES)
    gd.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    gd.add_argument("--seed", type=int, default=7)
    gd.set_defaults(func=cmd_gen_data)

    asr = sub.add_parser("assess", help="highest sustainable rate among report files")
    asr.add_argument("reports", nargs="+")
    asr.set_defaults(func=cmd_assess)

    rn = sub.add_parser("run", help="streamer + engine + monitor in separate processes")
    _add_profile_args(rn)
    rn.add_argument("--parallelism", type=int, default=1)
    rn.add_argument("--warmup", type=float, default=30.0)
    rn.add_argument("--scheme", choices=("tcp", "ws"), default="tcp")
    rn.add_argument("--workdir", default="bench-run")
    rn.set_defaults(func=cmd_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
