"""Source connectors: newline-framed tcp/file/stdin and message-framed websockets."""
from __future__ import annotations

import os
import socket
import sys
import threading
from typing import BinaryIO, Iterator
from urllib.parse import urlsplit

from ..mapping.model import SourceSpec
from .items import RawRecord, now_ms

FILE_BATCH = 512
_POLL = 0.1


class SourceError(Exception):
    pass


class Source:
    """Record stream for one :class:`SourceSpec`.

    Iterating yields :class:`RawRecord` in arrival order; :meth:`batches`
    yields them grouped as they become available.  Reading stops when the
    peer closes or ``stop`` is set.  There is no reconnection.
    """

    def __init__(
        self,
        spec: SourceSpec,
        source_id: str | None = None,
        stop: threading.Event | None = None,
        base_dir: str | None = None,
        stdin: BinaryIO | None = None,
        connect_timeout: float = 5.0,
    ):
        self.spec = spec
        self.source_id = source_id or spec.target
        self.stop = stop or threading.Event()
        self.base_dir = base_dir
        self.stdin = stdin
        self.connect_timeout = connect_timeout
        self._conn = None
        scheme = spec.scheme
        if scheme not in ("tcp", "ws", "file", "stdin"):
            raise SourceError(f"unsupported scheme {scheme!r}")

    def connect(self) -> "Source":
        """Open the underlying connection eagerly; raises :class:`SourceError`."""
        if self._conn is not None:
            return self
        parts = urlsplit(self.spec.target)
        scheme = self.spec.scheme
        try:
            if scheme == "file":
                self._conn = open(self.file_path(), "rb")
            elif scheme == "stdin":
                self._conn = self.stdin or sys.stdin.buffer
            elif scheme == "tcp":
                sock = socket.create_connection((parts.hostname, parts.port), timeout=self.connect_timeout)
                sock.settimeout(_POLL)
                self._conn = sock
            else:
                from websockets.sync.client import connect

                self._conn = connect(self.spec.target, open_timeout=self.connect_timeout, max_size=None)
        except (OSError, TimeoutError) as exc:
            raise SourceError(f"cannot open {self.spec.target}: {exc}") from exc
        except Exception as exc:  # websockets handshake failures
            raise SourceError(f"cannot open {self.spec.target}: {exc}") from exc
        return self

    def file_path(self) -> str:
        parts = urlsplit(self.spec.target)
        path = parts.path
        if parts.netloc not in ("", "localhost"):
            path = parts.netloc + path
        if self.base_dir and not os.path.isabs(path):
            path = os.path.join(self.base_dir, path)
        return path

    def __iter__(self) -> Iterator[RawRecord]:
        for batch in self.batches():
            yield from batch

    def batches(self) -> Iterator[list[RawRecord]]:
        self.connect()
        scheme = self.spec.scheme
        try:
            if scheme in ("file", "stdin"):
                yield from self._read_lines(self._conn)
            elif scheme == "tcp":
                yield from self._read_socket(self._conn)
            else:
                yield from self._read_ws(self._conn)
        finally:
            self.close()

    def close(self) -> None:
        conn, self._conn = self._conn, None
        if conn is None or conn is sys.stdin.buffer or conn is self.stdin:
            return
        try:
            conn.close()
        except Exception:
            pass

    def _read_lines(self, fh) -> Iterator[list[RawRecord]]:
        sid = self.source_id
        batch: list[RawRecord] = []
        for line in fh:
            line = line.rstrip(b"\r\n")
            if not line:
                continue
            batch.append(RawRecord(line, now_ms(), sid))
            if len(batch) >= FILE_BATCH:
                yield batch
                batch = []
                if self.stop.is_set():
                    return
        if batch:
            yield batch

    def _read_socket(self, sock: socket.socket) -> Iterator[list[RawRecord]]:
        sid = self.source_id
        pending = b""
        while not self.stop.is_set():
            try:
                chunk = sock.recv(1 << 16)
            except socket.timeout:
                continue
            except OSError:
                break
            if not chunk:
                break
            arrival = now_ms()
            data = pending + chunk
            lines = data.split(b"\n")
            pending = lines.pop()
            batch = [RawRecord(line.rstrip(b"\r"), arrival, sid) for line in lines if line.strip()]
            if batch:
                yield batch
        if pending.strip() and not self.stop.is_set():
            yield [RawRecord(pending.rstrip(b"\r"), now_ms(), sid)]

    def _read_ws(self, ws) -> Iterator[list[RawRecord]]:
        from websockets.exceptions import ConnectionClosed

        sid = self.source_id
        while not self.stop.is_set():
            try:
                msg = ws.recv(timeout=_POLL, decode=False)
            except TimeoutError:
                continue
            except ConnectionClosed:
                break
            batch = [RawRecord(msg, now_ms(), sid)]
            # drain whatever else is already buffered without blocking
            while len(batch) < FILE_BATCH:
                try:
                    msg = ws.recv(timeout=0, decode=False)
                except (TimeoutError, ConnectionClosed):
                    break
                batch.append(RawRecord(msg, now_ms(), sid))
            yield batch


def open_source(spec: SourceSpec, **kwargs) -> Source:
    return Source(spec, **kwargs)
