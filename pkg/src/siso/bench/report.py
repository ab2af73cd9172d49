"""Latency samples, run reports and the sustainable-throughput rule."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field


@dataclass(frozen=True, slots=True)
class MetricSample:
    key: str
    creation_ms: int
    emission_ms: int

    @property
    def latency(self) -> int:
        return self.emission_ms - self.creation_ms


@dataclass
class RunReport:
    p50: float = 0.0
    p90: float = 0.0
    p99: float = 0.0
    max: float = 0.0
    throughput: float = 0.0  # output lines per second over the measured window
    sustainable: bool | None = None  # None when no target rate was given
    samples: int = 0  # samples inside the measured window
    dropped: int = 0
    total_samples: int = 0
    rate: float | None = None
    warmup_s: float = 0.0
    middle_p99: float = 0.0
    final_p99: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(**d)

    @classmethod
    def load(cls, path: str) -> "RunReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def percentile(sorted_values, p: float):
    """Nearest-rank percentile of an ascending sequence (no interpolation)."""
    n = len(sorted_values)
    if n == 0:
        raise ValueError("percentile of an empty sample")
    rank = max(1, math.ceil(p / 100.0 * n))
    return sorted_values[min(rank, n) - 1]


def _p99(latencies: list[int]) -> float:
    return float(percentile(sorted(latencies), 99)) if latencies else 0.0


def build_report(
    samples: list[MetricSample],
    dropped: int = 0,
    warmup_s: float = 0.0,
    rate: float | None = None,
    run_start_ms: int | None = None,
) -> RunReport:
    """Summarize samples into a :class:`RunReport`.

    Percentiles and throughput cover samples created after the warm-up
    (measured from ``run_start_ms``, default the earliest creation time).
    Divergence compares the p99 of the middle and final thirds of the run by
    emission time.  With ``rate`` set, the run is sustainable when the final
    third p99 is at most twice the middle third p99 and throughput reaches
    99% of the rate.
    """
    report = RunReport(dropped=dropped, total_samples=len(samples), rate=rate, warmup_s=warmup_s)
    if not samples:
        return report
    start = run_start_ms if run_start_ms is not None else min(s.creation_ms for s in samples)
    end = max(s.emission_ms for s in samples)
    cut = start + warmup_s * 1000
    measured = [s for s in samples if s.creation_ms >= cut]
    if measured:
        lat = sorted(s.latency for s in measured)
        report.p50 = float(percentile(lat, 50))
        report.p90 = float(percentile(lat, 90))
        report.p99 = float(percentile(lat, 99))
        report.max = float(lat[-1])
        report.samples = len(lat)
        span_ms = end - min(s.creation_ms for s in measured)
        if span_ms > 0:
            report.throughput = len(lat) * 1000.0 / span_ms
    third = (end - start) / 3
    middle = [s.latency for s in samples if start + third <= s.emission_ms < start + 2 * third]
    final = [s.latency for s in samples if s.emission_ms >= start + 2 * third]
    report.middle_p99 = _p99(middle)
    report.final_p99 = _p99(final)
    if rate is not None:
        report.sustainable = is_sustainable(report, rate)
    return report


# p99 values below this are clock and scheduler jitter, not a trend
DIVERGENCE_FLOOR_MS = 10.0


def is_sustainable(report: RunReport, rate: float, floor_ms: float = DIVERGENCE_FLOOR_MS) -> bool:
    if report.samples == 0:
        return False
    non_divergent = report.final_p99 <= 2 * max(report.middle_p99, floor_ms)
    return non_divergent and report.throughput >= 0.99 * rate


def assess_sustainable(reports: list[RunReport]) -> float | None:
    """Highest rate among ``reports`` judged sustainable, or None if none is."""
    rates = {r.rate for r in reports}
    if None in rates or len(rates) < 2:
        raise ValueError("need runs at two or more distinct constant rates")
    ok = [r.rate for r in reports if is_sustainable(r, r.rate)]
    return max(ok) if ok else None


def write_samples(samples: list[MetricSample], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["key", "creation_ms", "emission_ms"])
        for s in samples:
            w.writerow([s.key, s.creation_ms, s.emission_ms])


def read_samples(path: str) -> list[MetricSample]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [MetricSample(r["key"], int(r["creation_ms"]), int(r["emission_ms"])) for r in csv.DictReader(fh)]


@dataclass
class BurstStats:
    index: int
    start_ms: int
    samples: int
    p99: float
    max: float
    settle_max: float | None  # worst latency of records created in the settle window
    drained_ms: int | None  # last emission of the period's records
    recovered: bool


def burst_analysis(
    samples: list[MetricSample],
    period_s: float,
    start_ms: int | None = None,
    settle_ms: int = 1000,
    threshold_ms: float = 100.0,
) -> list[BurstStats]:
    """Per-period stats for a periodic-burst run.

    Period ``k`` covers records created in ``[start + k*period, start +
    (k+1)*period)``.  A period has recovered when every record created in its
    last ``settle_ms`` saw latency below ``threshold_ms`` and all of its
    records were emitted before the next period began.
    """
    if not samples:
        return []
    start = start_ms if start_ms is not None else min(s.creation_ms for s in samples)
    period = int(period_s * 1000)
    groups: dict[int, list[MetricSample]] = {}
    for s in samples:
        groups.setdefault((s.creation_ms - start) // period, []).append(s)
    out = []
    for k in sorted(groups):
        group = groups[k]
        begin = start + k * period
        end = begin + period
        lat = sorted(s.latency for s in group)
        settle = [s.latency for s in group if s.creation_ms >= end - settle_ms]
        drained = max(s.emission_ms for s in group)
        recovered = drained < end and (not settle or max(settle) < threshold_ms)
        out.append(BurstStats(k, begin, len(lat), float(percentile(lat, 99)), float(lat[-1]),
                              float(max(settle)) if settle else None, drained, recovered))
    return out
