"""Run streamer, engine and monitor as three processes and collect the report."""
from __future__ import annotations

import csv
import json
import os
import socket
import subprocess
import sys
import time
from dataclasses import dataclass, field

from .report import RunReport, read_samples
from .workload import WorkloadProfile

PLAIN_MAPPING = """\
_:speedSource a td:Thing ;
  td:hasPropertyAffordance [ td:hasForm [
    hctl:hasTarget "{speed}" ;
    hctl:forContentType "application/json" ;
    hctl:hasOperationType "readproperty" ] ] .
<SpeedMap> a rr:TriplesMap ;
  rml:logicalSource [ rml:source _:speedSource ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$" ] ;
  rr:subjectMap [ rr:template "speed={{speed}}&time={{time}}&lane={{id}}" ] ;
  rr:predicateObjectMap [ rr:predicate <http://example.com/speed> ; rr:objectMap [ rml:reference "speed" ] ] .
"""

JOIN_MAPPING = """\
_:speedSource a td:Thing ;
  td:hasPropertyAffordance [ td:hasForm [
    hctl:hasTarget "{speed}" ;
    hctl:forContentType "application/json" ;
    hctl:hasOperationType "readproperty" ] ] .
_:flowSource a td:Thing ;
  td:hasPropertyAffordance [ td:hasForm [
    hctl:hasTarget "{flow}" ;
    hctl:forContentType "application/json" ;
    hctl:hasOperationType "readproperty" ] ] .
<JoinConfigMap> a rmls:JoinConfigMap ; rmls:joinType rmls:DynamicJoin .
<NDWSpeedMap> a rr:TriplesMap ;
  rml:logicalSource [ rml:source _:speedSource ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$" ] ;
  rr:subjectMap [ rr:template "speed={{speed}}&time={{time}}" ] ;
  rr:predicateObjectMap [
    rr:predicate <http://example.com/laneFlow> ;
    rr:objectMap [
      rr:parentTriplesMap <NDWFlowMap> ;
      rmls:joinConfig <JoinConfigMap> ;
      rmls:windowType rmls:DynamicWindow ;
      rr:joinCondition [ rr:child "id" ; rr:parent "id" ] ] ] .
<NDWFlowMap> a rr:TriplesMap ;
  rml:logicalSource [ rml:source _:flowSource ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$" ] ;
  rr:subjectMap [ rr:template "flow={{flow}}&time={{time}}" ] .
"""


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@dataclass
class BenchResult:
    report: RunReport
    samples_path: str | None
    metrics_path: str
    engine_code: int
    streamer_code: int
    monitor_code: int
    engine_stderr: str
    streamed: int | None
    metrics: list[dict] = field(default_factory=list)

    def samples(self):
        return read_samples(self.samples_path) if self.samples_path else []

    def ingest_rate(self, start_s: float, end_s: float) -> float:
        """Items/s the engine took in between two offsets from its first metrics row."""
        if not self.metrics:
            return 0.0
        t0 = self.metrics[0]["time_ms"]
        rows = [r for r in self.metrics if start_s * 1000 <= r["time_ms"] - t0 <= end_s * 1000]
        if len(rows) < 2:
            return 0.0
        return (rows[-1]["items_in"] - rows[0]["items_in"]) * 1000 / (rows[-1]["time_ms"] - rows[0]["time_ms"])


def _wait_ready(proc: subprocess.Popen, what: str, timeout: float = 30.0) -> None:
    """Block until ``proc`` prints its 'listening' line on stdout."""
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        line = proc.stdout.readline()
        if line.startswith("listening"):
            return
        if not line and proc.poll() is not None:
            raise RuntimeError(f"{what} exited early with status {proc.returncode}")
    raise RuntimeError(f"{what} did not start listening within {timeout:g}s")


def run_benchmark(
    profile: WorkloadProfile,
    workdir: str,
    parallelism: int = 1,
    warmup_s: float = 30.0,
    scheme: str = "tcp",
    engine_args: list[str] | None = None,
    keep_samples: bool = True,
    timeout_pad: float = 120.0,
) -> BenchResult:
    """Stream ``profile`` through a fresh engine process and measure it."""
    os.makedirs(workdir, exist_ok=True)
    py = sys.executable
    ports = [free_port() for _ in profile.datasets()]
    endpoints = [f"{scheme}://127.0.0.1:{p}" for p in ports]
    monitor_url = f"tcp://127.0.0.1:{free_port()}"

    mapping_path = os.path.join(workdir, "mapping.ttl")
    with open(mapping_path, "w", encoding="utf-8") as fh:
        if profile.kind == "join":
            fh.write(JOIN_MAPPING.format(speed=endpoints[0], flow=endpoints[1]))
        else:
            fh.write(PLAIN_MAPPING.format(speed=endpoints[0]))

    report_path = os.path.join(workdir, "report.json")
    samples_path = os.path.join(workdir, "samples.csv") if keep_samples else None
    metrics_path = os.path.join(workdir, "engine_metrics.csv")
    stream_out = os.path.join(workdir, "streamer.json")

    mon_cmd = [py, "-m", "siso.bench.cli", "monitor", "--input", monitor_url, "--report", report_path,
               "--warmup", str(warmup_s)]
    if profile.kind == "constant":
        # output lines track input one-to-one only without a join
        mon_cmd += ["--rate", str(profile.rate)]
    if samples_path:
        mon_cmd += ["--samples", samples_path]
    str_cmd = [py, "-m", "siso.bench.cli", "stream", "--profile", profile.kind, "--duration", str(profile.duration),
               "--summary", stream_out]
    if profile.kind == "burst":
        str_cmd += ["--burst-size", str(profile.burst_size), "--burst-period", str(profile.burst_period),
                    "--background-rate", str(profile.background_rate)]
    else:
        str_cmd += ["--rate", str(profile.rate)]
    if profile.speed:
        str_cmd += ["--speed", profile.speed]
    if profile.flow:
        str_cmd += ["--flow", profile.flow]
    for ep in endpoints:
        str_cmd += ["--endpoint", ep]
    eng_cmd = [py, "-m", "siso.cli", "run", "-m", mapping_path, "--output", monitor_url, "--format", "nquads_ts",
               "--time-mode", "field", "--time-field", "ts", "--time-format", "epoch_ms",
               "--parallelism", str(parallelism), "--metrics-out", metrics_path, *(engine_args or [])]

    monitor = subprocess.Popen(mon_cmd, stdout=subprocess.PIPE, text=True)
    streamer = engine = None
    try:
        _wait_ready(monitor, "monitor")
        streamer = subprocess.Popen(str_cmd, stdout=subprocess.PIPE, text=True)
        _wait_ready(streamer, "streamer")
        engine = subprocess.Popen(eng_cmd, stderr=subprocess.PIPE, text=True)
        limit = profile.duration + timeout_pad
        streamer_code = streamer.wait(timeout=limit)
        _, engine_err = engine.communicate(timeout=limit)
        monitor_code = monitor.wait(timeout=limit)
    finally:
        for proc in (engine, streamer, monitor):
            if proc is not None and proc.poll() is None:
                proc.kill()
                proc.wait()
    report = RunReport.load(report_path) if os.path.exists(report_path) else RunReport()
    streamed = None
    if os.path.exists(stream_out):
        with open(stream_out, encoding="utf-8") as fh:
            streamed = json.load(fh).get("sent")
    metrics = []
    if os.path.exists(metrics_path):
        with open(metrics_path, newline="") as fh:
            metrics = [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]
    return BenchResult(report, samples_path, metrics_path, engine.returncode, streamer_code, monitor_code,
                       engine_err, streamed, metrics)
