"""Black-box monitor: receives engine output and turns lines into latency samples."""
from __future__ import annotations

import re
import socket
import time
from urllib.parse import urlsplit

from ..ingestion.items import now_ms
from .report import MetricSample

# subject term, then the ts graph term right before the final " ."
_LINE = re.compile(r"^(<[^>]*>|_:\S+) .* <urn:ts:(\d+)> \.$")


class MonitorError(Exception):
    pass


def parse_line(line: str, emission_ms: int) -> MetricSample | None:
    """Sample for one nquads_ts line, or None when it cannot be parsed."""
    m = _LINE.match(line.rstrip("\r\n"))
    if m is None:
        return None
    return MetricSample(m.group(1), int(m.group(2)), emission_ms)


class Monitor:
    """Collects samples from one engine connection.

    Lines are timestamped on receipt; the ``emission_ms`` of a line is the
    time its bytes were read from the socket.
    """

    def __init__(self):
        self.samples: list[MetricSample] = []
        self.dropped = 0

    def feed(self, lines, emission_ms: int | None = None) -> None:
        if emission_ms is None:
            emission_ms = now_ms()
        for line in lines:
            if not line.strip():
                continue
            s = parse_line(line, emission_ms)
            if s is None:
                self.dropped += 1
            else:
                self.samples.append(s)

    def listen(self, url: str) -> socket.socket:
        parts = urlsplit(url)
        if parts.scheme != "tcp" or not parts.port:
            raise MonitorError(f"monitor input must be tcp://host:port, got {url!r}")
        srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            srv.bind((parts.hostname or "127.0.0.1", parts.port))
        except OSError as exc:
            raise MonitorError(f"cannot listen on {url}: {exc}") from exc
        srv.listen(1)
        return srv

    def serve(self, srv: socket.socket, accept_timeout: float = 120.0, max_seconds: float | None = None) -> None:
        """Accept one connection and read until the peer closes it."""
        srv.settimeout(accept_timeout)
        try:
            conn, _ = srv.accept()
        except socket.timeout:
            raise MonitorError(f"no engine connected within {accept_timeout:g}s") from None
        finally:
            srv.close()
        deadline = None if max_seconds is None else time.monotonic() + max_seconds
        conn.settimeout(0.5)
        pending = b""
        with conn:
            while deadline is None or time.monotonic() < deadline:
                try:
                    chunk = conn.recv(1 << 16)
                except socket.timeout:
                    continue
                if not chunk:
                    break
                t = now_ms()
                data = pending + chunk
                lines = data.split(b"\n")
                pending = lines.pop()
                self.feed((ln.decode("utf-8", "replace") for ln in lines), t)
        if pending.strip():
            self.dropped += 1  # torn final line
