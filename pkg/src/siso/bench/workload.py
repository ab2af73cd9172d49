"""Workload streamer: replays dataset records to connected engines on a schedule.

The streamer is the server side.  It listens on each endpoint, waits until
an engine has connected to all of them, then starts one sender thread per
endpoint on a shared clock.  Every record is stamped with its creation time
(``ts``, epoch ms) right before it is sent.
"""
from __future__ import annotations

import json
import queue
import socket
import threading
import time
from dataclasses import dataclass
from urllib.parse import urlsplit

from ..ingestion.items import now_ms

PROFILES = ("constant", "burst", "join")
# max records sent in one write when catching up with the schedule
_MAX_CHUNK = 2000


class StreamError(Exception):
    pass


@dataclass(frozen=True)
class WorkloadProfile:
    kind: str  # constant | burst | join
    duration: float  # seconds
    rate: float = 0.0  # records/s; for join the combined rate of both endpoints
    burst_size: int = 0
    burst_period: float = 0.0  # seconds
    background_rate: float = 0.0  # records/s between bursts
    flow: str | None = None
    speed: str | None = None

    def __post_init__(self):
        if self.kind not in PROFILES:
            raise ValueError(f"unknown profile {self.kind!r}")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.kind == "burst":
            if self.burst_size <= 0 or self.burst_period <= 0:
                raise ValueError("burst profile needs burst size and period > 0")
        elif self.rate <= 0:
            raise ValueError("rate must be > 0")

    def datasets(self) -> list[str]:
        if self.kind == "join":
            if not (self.flow and self.speed):
                raise ValueError("join profile needs both flow and speed datasets")
            return [self.speed, self.flow]
        path = self.speed or self.flow
        if not path:
            raise ValueError("profile needs a dataset")
        return [path]


def load_records(path: str) -> list[dict]:
    """ndjson objects, or CSV rows as dicts when the file ends in ``.csv``."""
    if path.endswith(".csv"):
        import csv

        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    else:
        with open(path, encoding="utf-8") as fh:
            rows = [json.loads(line) for line in fh if line.strip()]
    if not rows:
        raise StreamError(f"dataset {path} is empty")
    return rows


def schedule_due(profile: WorkloadProfile, elapsed: float, rate: float) -> int:
    """Records that should have been sent ``elapsed`` seconds into the run."""
    elapsed = min(elapsed, profile.duration)
    if profile.kind == "burst":
        # a burst goes out at the start of every period that began before the end
        bursts = int(elapsed // profile.burst_period) + 1
        bursts = min(bursts, _burst_count(profile))
        background = int(elapsed * profile.background_rate)
        return bursts * profile.burst_size + background
    return int(elapsed * rate)


def _burst_count(profile: WorkloadProfile) -> int:
    n = int(profile.duration // profile.burst_period)
    if profile.duration % profile.burst_period:
        n += 1
    return n


def total_records(profile: WorkloadProfile, rate: float) -> int:
    return schedule_due(profile, profile.duration, rate)


class _Endpoint:
    """Accepts one engine connection on a tcp:// or ws:// URL."""

    def __init__(self, url: str):
        parts = urlsplit(url)
        if parts.scheme not in ("tcp", "ws") or not parts.port:
            raise StreamError(f"endpoint must be tcp://host:port or ws://host:port, got {url!r}")
        self.url = url
        self.scheme = parts.scheme
        self.host = parts.hostname or "127.0.0.1"
        self.port = parts.port
        self._conns: queue.Queue = queue.Queue()
        self._done = threading.Event()
        self._server = None

    def listen(self) -> None:
        try:
            if self.scheme == "tcp":
                srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
                srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
                srv.bind((self.host, self.port))
                srv.listen(1)
                self._server = srv
            else:
                from websockets.sync.server import serve

                def handler(ws):
                    self._conns.put(ws)
                    self._done.wait()  # keep the connection open while sending

                self._server = serve(handler, self.host, self.port, max_size=None, compression=None)
                threading.Thread(target=self._server.serve_forever, daemon=True).start()
        except OSError as exc:
            raise StreamError(f"cannot listen on {self.url}: {exc}") from exc

    def accept(self, timeout: float):
        if self.scheme == "tcp":
            self._server.settimeout(timeout)
            try:
                conn, _ = self._server.accept()
            except socket.timeout:
                raise StreamError(f"no engine connected to {self.url} within {timeout:g}s") from None
            conn.settimeout(None)
            return conn
        try:
            return self._conns.get(timeout=timeout)
        except queue.Empty:
            raise StreamError(f"no engine connected to {self.url} within {timeout:g}s") from None

    def sender(self, conn):
        if self.scheme == "tcp":
            return lambda lines: conn.sendall("".join(lines).encode("utf-8"))

        def send(lines):
            for line in lines:
                conn.send(line.rstrip("\n"))

        return send

    def close(self, conn) -> None:
        self._done.set()
        try:
            if self.scheme == "tcp":
                conn.shutdown(socket.SHUT_WR)
                conn.close()
            else:
                conn.close()
        except Exception:
            pass
        if self._server is not None:
            if self.scheme == "tcp":
                self._server.close()
            else:
                self._server.shutdown()


class Streamer:
    """Streams ``profile`` to ``endpoints`` (one per dataset)."""

    def __init__(self, profile: WorkloadProfile, endpoints: list[str], accept_timeout: float = 60.0, log=None):
        datasets = profile.datasets()
        if len(endpoints) != len(datasets):
            raise StreamError(f"profile {profile.kind} needs {len(datasets)} endpoint(s), got {len(endpoints)}")
        self.profile = profile
        self.records = [load_records(p) for p in datasets]
        self.endpoints = [_Endpoint(u) for u in endpoints]
        self.accept_timeout = accept_timeout
        self.sent = [0] * len(endpoints)
        self.errors: list[BaseException] = []
        self.log = log

    def listen(self) -> None:
        for ep in self.endpoints:
            ep.listen()

    def run(self) -> int:
        """Wait for the engine, stream the whole profile, return records sent."""
        conns = [ep.accept(self.accept_timeout) for ep in self.endpoints]
        rate = self.profile.rate / len(self.endpoints)
        start = time.monotonic()
        threads = [
            threading.Thread(target=self._send_loop, args=(i, ep, conn, start, rate), daemon=True)
            for i, (ep, conn) in enumerate(zip(self.endpoints, conns))
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        for ep, conn in zip(self.endpoints, conns):
            ep.close(conn)
        if self.errors:
            raise StreamError(f"send failed: {self.errors[0]}")
        return sum(self.sent)

    def _send_loop(self, idx: int, ep: _Endpoint, conn, start: float, rate: float) -> None:
        profile = self.profile
        records = self.records[idx]
        n_rec = len(records)
        send = ep.sender(conn)
        total = total_records(profile, rate)
        sent = 0
        try:
            while sent < total:
                elapsed = time.monotonic() - start
                due = min(schedule_due(profile, elapsed, rate), total)
                if due <= sent:
                    time.sleep(self._gap(profile, rate, elapsed))
                    continue
                n = min(due - sent, _MAX_CHUNK)
                ts = now_ms()
                lines = []
                for k in range(sent, sent + n):
                    rec = dict(records[k % n_rec])  # the dataset loops when exhausted
                    rec["ts"] = ts
                    lines.append(json.dumps(rec, separators=(",", ":")) + "\n")
                send(lines)
                sent += n
                self.sent[idx] = sent
        except BaseException as exc:
            self.errors.append(exc)

    @staticmethod
    def _gap(profile: WorkloadProfile, rate: float, elapsed: float) -> float:
        if profile.kind == "burst":
            step = 1.0 / profile.background_rate if profile.background_rate > 0 else 0.05
            to_next_burst = profile.burst_period - (elapsed % profile.burst_period)
            return max(0.0005, min(step, to_next_burst, 0.05))
        return max(0.0005, min(1.0 / rate, 0.05))


def stream_workload(profile: WorkloadProfile, endpoints: list[str], accept_timeout: float = 60.0) -> int:
    streamer = Streamer(profile, endpoints, accept_timeout)
    streamer.listen()
    return streamer.run()
