"""Benchmark harness: workload streamer, black-box monitor and reports."""
from .monitor import Monitor, parse_line
from .report import BurstStats, MetricSample, RunReport, assess_sustainable, build_report, burst_analysis, percentile
from .workload import StreamError, Streamer, WorkloadProfile, stream_workload

__all__ = [
    "Monitor", "parse_line", "BurstStats", "MetricSample", "RunReport", "assess_sustainable", "build_report",
    "burst_analysis", "percentile", "StreamError", "Streamer", "WorkloadProfile", "stream_workload",
]
