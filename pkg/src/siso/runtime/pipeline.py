"""Run a compiled plan as a set of threads joined by bounded channels.

Thread layout for parallelism P::

    reader (one per source) --> item generation (inline when P == 1, else P workers)
        --> P mapper workers (functions already applied; windows keyed by partition)
        --> sink writer

Every hop is a :class:`~siso.runtime.channels.Channel`, so a slow sink
blocks the mappers, which block ingestion, which stops reading the sources.
Shutdown is driven from the sources: when a reader ends (peer closed or stop
requested) it closes its lane downstream, and each stage closes its own
lanes once all of its inputs are drained.  Nothing in flight is lost.
"""
from __future__ import annotations

import csv
import itertools
import signal
import sys
import threading
import time
import traceback
from dataclasses import dataclass, field
from queue import Empty

from ..counters import Counters
from ..functions import apply_function
from ..ingestion.items import ItemGenerator, RawRecord, TimePolicy, now_ms
from ..ingestion.partition import key_partition
from ..ingestion.sources import Source, SourceError
from ..mapping.dag import ExecutablePlan
from ..statements import StatementGenerator, serialize
from ..window import CHILD, PARENT, WindowJoin, WindowParams
from .channels import DEFAULT_CAPACITY, Channel, ChannelClosed
from .sinks import SinkError, open_sink

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

FORMATS = ("ntriples", "nquads_ts")

SUMMARY_KEYS = (
    "records_in",
    "items_in",
    "statements_generated",
    "statements_out",
    "statements_skipped",
    "decode_errors",
    "dead_letter",
    "late_dropped",
    "late_joined",
    "timestamp_fallback",
    "function_skipped",
    "evictions",
)


@dataclass
class RuntimeConfig:
    parallelism: int = 1
    window: WindowParams = field(default_factory=WindowParams)
    base_iri: str | None = None  # None: the plan's base IRI
    output: str = "-"
    format: str = "ntriples"
    time_policy: TimePolicy = field(default_factory=TimePolicy)
    queue_capacity: int = DEFAULT_CAPACITY
    base_dir: str | None = None  # resolves relative file: sources
    metrics_out: str | None = None

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.format not in FORMATS:
            raise ValueError(f"unknown output format {self.format!r}")
        if self.queue_capacity < 1:
            raise ValueError("queue capacity must be >= 1")


class _Route:
    """Where one triples map's items go after item generation."""

    __slots__ = ("map_id", "functions", "plain", "windows")

    def __init__(self, map_id, functions, plain, windows):
        self.map_id = map_id
        self.functions = functions
        self.plain = plain  # map has a direct statement generator input
        self.windows = windows  # [(window op id, side, key attribute)]


class Pipeline:
    """One run of an :class:`ExecutablePlan`.

    ``sink`` overrides ``config.output`` with any object offering
    ``write/flush/close``.  ``window_listener`` is handed to every window
    join and called as ``listener(state, joined_items)`` on each trigger.
    """

    def __init__(self, plan: ExecutablePlan, config: RuntimeConfig | None = None, *, sink=None,
                 stdin=None, window_listener=None, counters: Counters | None = None):
        self.plan = plan
        self.config = config or RuntimeConfig()
        self.counters = counters if counters is not None else Counters()
        self.stop_event = threading.Event()
        self.failures: list[str] = []
        self._sink = sink
        self._stdin = stdin
        self._listener = window_listener
        self._threads: list[threading.Thread] = []
        self._channels: list[Channel] = []
        self._done = threading.Event()
        self._windows: list[WindowJoin] = []
        self._base_iri = self.config.base_iri or plan.plan.base_iri
        self._build_routes()

    # -- topology ---------------------------------------------------------

    def _build_routes(self) -> None:
        plan = self.plan
        self.source_ops = plan.of_kind("source")
        gens = plan.of_kind("item_generator")
        self.gens_of_source = {
            s.id: [e.dst for e in plan.successors(s.id)] for s in self.source_ops
        }
        self.gen_ops = {g.id: g for g in gens}
        heads = plan.map_heads
        self.routes_of_gen: dict[str, list[_Route]] = {g.id: [] for g in gens}
        for tm in plan.plan.triples_maps:
            head = heads[tm.id]
            gen_id = head if head in self.gen_ops else plan.predecessors(head)[0].src
            plain = False
            windows = []
            for e in plan.successors(head):
                if e.dst == f"map:{tm.id}":
                    plain = True
                elif e.role:
                    join = plan[e.dst].join
                    key = join.child_attr if e.role == CHILD else join.parent_attr
                    windows.append((e.dst, e.role, key))
            self.routes_of_gen[gen_id].append(_Route(tm.id, tm.functions, plain, windows))

    # -- lifecycle --------------------------------------------------------

    def _fail(self, where: str, exc: BaseException) -> None:
        detail = "".join(traceback.format_exception(type(exc), exc, exc.__traceback__)).rstrip()
        self.failures.append(f"{where}: {exc}\n{detail}")
        self.stop_event.set()
        for ch in self._channels:
            ch.abort()

    def request_stop(self) -> None:
        """Stop reading sources; everything already read is still processed."""
        self.stop_event.set()

    def abort(self) -> None:
        self.stop_event.set()
        for ch in self._channels:
            ch.abort()

    def _thread(self, name: str, target, *args) -> None:
        def body():
            try:
                target(*args)
            except ChannelClosed:
                pass
            except BaseException as exc:  # any operator failure ends the run
                self._fail(name, exc)

        t = threading.Thread(target=body, name=name, daemon=True)
        self._threads.append(t)

    def open(self) -> None:
        """Connect the sink, then every source; raises before any input is consumed."""
        cfg = self.config
        if self._sink is None:
            self._sink = open_sink(cfg.output)
        self.sources = []
        try:
            for i, op in enumerate(self.source_ops):
                src = Source(op.source, op.id, self.stop_event, cfg.base_dir, self._stdin)
                src.connect()
                self.sources.append(src)
        except SourceError:
            for src in self.sources:
                src.close()
            self._sink.close()
            raise

    def start(self) -> None:
        if not hasattr(self, "sources"):
            self.open()
        cfg = self.config
        p = cfg.parallelism
        cap = cfg.queue_capacity
        n_src = len(self.sources)
        self.sink_channel = Channel(p, cap)
        n_ingest = n_src if p == 1 else p
        self.mapper_channels = [Channel(n_ingest, cap) for _ in range(p)]
        self._channels = [self.sink_channel, *self.mapper_channels]
        if p > 1:
            self.itemgen_channels = [Channel(n_src, cap) for _ in range(p)]
            self._channels += self.itemgen_channels
        # one set of item generators per ingest lane; csv headers are shared
        self._gen_sets = [self._make_generators() for _ in range(n_ingest)]

        self._thread("sink", self._sink_loop)
        for w in range(p):
            self._thread(f"mapper-{w}", self._mapper_loop, w)
        if p > 1:
            for w in range(p):
                self._thread(f"items-{w}", self._itemgen_loop, w)
        for i in range(n_src):
            self._thread(f"reader-{i}", self._reader_loop, i)
        if cfg.metrics_out:
            threading.Thread(target=self._metrics_loop, name="metrics", daemon=True).start()
        self._start_time = time.monotonic()
        for t in self._threads:
            t.start()

    def wait(self, timeout: float | None = None) -> bool:
        deadline = None if timeout is None else time.monotonic() + timeout
        for t in self._threads:
            while t.is_alive():
                if deadline is not None and time.monotonic() >= deadline:
                    return False
                t.join(0.1)
        self._done.set()
        self.counters.incr("evictions", sum(w.evictions for w in self._windows))
        self._windows.clear()
        return True

    @property
    def exit_code(self) -> int:
        return EXIT_RUNTIME if self.failures else EXIT_OK

    def run(self, install_signals: bool = True) -> int:
        """Open, start and wait for the pipeline; returns the exit status."""
        handlers = {}
        if install_signals and threading.current_thread() is threading.main_thread():
            hits = itertools.count()

            def on_signal(signum, frame):
                # first signal drains gracefully, a second one aborts
                if next(hits) == 0:
                    self.request_stop()
                else:
                    self.abort()

            for sig in (signal.SIGINT, signal.SIGTERM):
                handlers[sig] = signal.signal(sig, on_signal)
        try:
            self.start()
            self.wait()
        finally:
            for sig, h in handlers.items():
                signal.signal(sig, h)
        return self.exit_code

    def summary(self) -> dict[str, int]:
        snap = self.counters.snapshot()
        out = {k: snap.get(k, 0) for k in SUMMARY_KEYS}
        out.update({k: v for k, v in sorted(snap.items()) if k not in out})
        if hasattr(self, "_start_time"):
            out["duration_ms"] = int((time.monotonic() - self._start_time) * 1000)
        w = self.config.window
        out.update(
            parallelism=self.config.parallelism,
            window_initial_ms=w.initial_interval,
            window_min_ms=w.lower_bound,
            window_max_ms=w.upper_bound,
        )
        return out

    # -- stages -----------------------------------------------------------

    def _make_generators(self) -> dict[str, ItemGenerator]:
        policy = self.config.time_policy
        return {
            g.id: ItemGenerator(g.formulation, g.iterator, policy, g.source.target, self.counters)
            for g in self.gen_ops.values()
        }

    def _reader_loop(self, idx: int) -> None:
        src = self.sources[idx]
        src_id = self.source_ops[idx].id
        gen_ids = self.gens_of_source[src_id]
        csv_gens = [g for g in gen_ids if self.gen_ops[g].formulation == "csv"]
        p = self.config.parallelism
        counters = self.counters
        seq = 0
        rr = itertools.cycle(range(p))
        try:
            for batch in src.batches():
                counters.incr("records_in", len(batch))
                if csv_gens and self._gen_sets[0][csv_gens[0]].header is None:
                    batch = self._take_header(batch, csv_gens)
                    if not batch:
                        continue
                numbered = []
                for r in batch:
                    seq += 1
                    numbered.append(RawRecord(r.payload, r.arrival_time, r.source_id, seq))
                if p == 1:
                    self._ingest(numbered, gen_ids, idx, self._gen_sets[idx])
                else:
                    self.itemgen_channels[next(rr)].put((src_id, numbered), idx, len(numbered))
        finally:
            if p == 1:
                for ch in self.mapper_channels:
                    ch.close(idx)
            else:
                for ch in self.itemgen_channels:
                    ch.close(idx)

    def _take_header(self, batch: list[RawRecord], csv_gens: list[str]) -> list[RawRecord]:
        first = batch[0].payload
        try:
            header = next(csv.reader([first.decode("utf-8").rstrip("\r\n")], strict=True))
        except (UnicodeDecodeError, csv.Error, StopIteration):
            self.counters.incr("decode_errors")
            return batch[1:]
        for gens in self._gen_sets:
            for g in csv_gens:
                gens[g].header = header
        return batch[1:]

    def _itemgen_loop(self, w: int) -> None:
        ch = self.itemgen_channels[w]
        gens = self._gen_sets[w]
        try:
            for src_id, records in ch:
                self._ingest(records, self.gens_of_source[src_id], w, gens)
        finally:
            for mc in self.mapper_channels:
                mc.close(w)

    def _ingest(self, records: list[RawRecord], gen_ids: list[str], lane: int, gens) -> None:
        """Item generation, functions and partitioning for one batch of records."""
        p = self.config.parallelism
        counters = self.counters
        tasks: list[list] = [[] for _ in range(p)]
        for gen_id in gen_ids:
            generator = gens[gen_id]
            items = []
            for rec in records:
                items.extend(generator(rec))
            if not items:
                continue
            counters.incr("items_in", len(items))
            for route in self.routes_of_gen[gen_id]:
                m_items = items
                for binding in route.functions:
                    m_items = [apply_function(binding, it, counters) for it in m_items]
                if route.plain:
                    if p == 1:
                        tasks[0].append(("plain", route.map_id, m_items))
                    else:
                        for w in range(p):
                            part = m_items[w::p]
                            if part:
                                tasks[w].append(("plain", route.map_id, part))
                for win_id, side, key_attr in route.windows:
                    parts: list[list] = [[] for _ in range(p)]
                    dead = 0
                    for it in m_items:
                        key = it.attributes.get(key_attr)
                        if key is None:
                            dead += 1
                        elif p == 1:
                            parts[0].append(it)
                        else:
                            parts[key_partition(key, p)].append(it)
                    if dead:
                        counters.incr("dead_letter", dead)
                    for w in range(p):
                        if parts[w]:
                            tasks[w].append((side, win_id, parts[w]))
        for w in range(p):
            if tasks[w]:
                weight = sum(len(t[2]) for t in tasks[w])
                self.mapper_channels[w].put(tasks[w], lane, weight)

    def _mapper_loop(self, w: int) -> None:
        plan = self.plan
        cfg = self.config
        counters = self.counters
        fmt = cfg.format
        drop_late = cfg.time_policy.mode == "field"
        generators = {
            tm.id: StatementGenerator(tm, plan.plan, self._base_iri, counters) for tm in plan.plan.triples_maps
        }
        windows = {
            op.id: WindowJoin(op.join, cfg.window, counters, drop_late, self._listener)
            for op in plan.of_kind("window")
        }
        self._windows.extend(windows.values())
        child_gen = {op.id: generators[op.map_id] for op in plan.of_kind("window")}
        joins = list(windows.values())
        ch = self.mapper_channels[w]
        out = self.sink_channel
        try:
            while True:
                timeout = None
                deadlines = [d for d in (j.next_deadline() for j in joins) if d is not None]
                if deadlines:
                    timeout = max(0.0, (min(deadlines) - now_ms()) / 1000)
                try:
                    tasks = ch.get(timeout)
                except Empty:
                    tasks = ()
                if tasks is None:
                    break
                now = now_ms()
                for j in joins:
                    j.advance(now)
                lines = []
                for kind, target, items in tasks:
                    if kind == "plain":
                        gen = generators[target]
                        if not gen.emits_plain:
                            continue
                        for it in items:
                            for st in gen.from_item(it):
                                lines.append(serialize(st, fmt))
                    else:
                        wj = windows[target]
                        gen = child_gen[target]
                        join = wj.join
                        for it in items:
                            for joined in wj.process(kind, it, now):
                                for st in gen.from_join(joined, join):
                                    lines.append(serialize(st, fmt))
                if lines:
                    out.put(["".join(lines)], w, len(lines))
        finally:
            out.close(w)

    def _sink_loop(self) -> None:
        ch = self.sink_channel
        sink = self._sink
        counters = self.counters
        try:
            while True:
                try:
                    batch = ch.get(0)
                except Empty:
                    sink.flush()
                    batch = ch.get()
                if batch is None:
                    break
                for chunk in batch:
                    sink.write(chunk)
                    counters.incr("statements_out", chunk.count("\n"))
        finally:
            sink.close()

    def _metrics_loop(self) -> None:
        import psutil

        proc = psutil.Process()
        proc.cpu_percent(None)
        with open(self.config.metrics_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time_ms", "rss_bytes", "cpu_percent", "items_in", "statements_out"])
            while not self._done.wait(1.0):
                writer.writerow([
                    now_ms(), proc.memory_info().rss, proc.cpu_percent(None),
                    self.counters["items_in"], self.counters["statements_out"],
                ])
                fh.flush()


def write_summary(summary: dict, stream=None) -> None:
    stream = stream or sys.stderr
    for k, v in summary.items():
        stream.write(f"{k}={v}\n")
    stream.flush()


def run_pipeline(plan: ExecutablePlan, config: RuntimeConfig | None = None, *, stderr=None, **kwargs) -> int:
    """Run ``plan`` to completion and print the ``key=value`` summary.

    Returns 0 on success and 2 when the sink or a source cannot be opened or
    any operator fails.
    """
    stderr = stderr or sys.stderr
    pipe = Pipeline(plan, config, **kwargs)
    try:
        pipe.open()
    except (SinkError, SourceError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_RUNTIME
    code = pipe.run()
    for failure in pipe.failures:
        stderr.write(f"error in {failure}\n")
    write_summary(pipe.summary(), stderr)
    return code
