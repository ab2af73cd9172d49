"""Output sinks: stdout, a file, a TCP peer, or an in-process callback."""
from __future__ import annotations

import socket
import sys
from urllib.parse import urlsplit


class SinkError(Exception):
    pass


class StreamSink:
    def __init__(self, stream, owned: bool = False):
        self.stream = stream
        self.owned = owned

    def write(self, chunk: str) -> None:
        self.stream.write(chunk)

    def flush(self) -> None:
        self.stream.flush()

    def close(self) -> None:
        try:
            self.stream.flush()
        finally:
            if self.owned:
                self.stream.close()


class TcpSink:
    def __init__(self, host: str, port: int, timeout: float = 5.0):
        try:
            self.sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise SinkError(f"cannot connect to tcp://{host}:{port}: {exc}") from exc
        self.sock.settimeout(None)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def write(self, chunk: str) -> None:
        try:
            self.sock.sendall(chunk.encode("utf-8"))
        except OSError as exc:
            raise SinkError(f"sink connection lost: {exc}") from exc

    def flush(self) -> None:
        pass

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_WR)
        except OSError:
            pass
        self.sock.close()


class CallbackSink:
    """Hands every written chunk to ``callback``; used for embedding and tests."""

    def __init__(self, callback):
        self.callback = callback

    def write(self, chunk: str) -> None:
        self.callback(chunk)

    def flush(self) -> None:
        pass

    def close(self) -> None:
        pass


def open_sink(spec: str):
    """``-``/``stdout``, ``tcp://host:port``, ``file:PATH`` or a plain path."""
    if spec in ("-", "stdout", ""):
        return StreamSink(sys.stdout)
    parts = urlsplit(spec)
    if parts.scheme == "tcp":
        if not parts.hostname or not parts.port:
            raise SinkError(f"tcp sink needs host and port: {spec!r}")
        return TcpSink(parts.hostname, parts.port)
    path = spec
    if parts.scheme == "file":
        path = parts.path if parts.netloc in ("", "localhost") else parts.netloc + parts.path
    elif parts.scheme and len(parts.scheme) > 1:
        raise SinkError(f"unsupported sink {spec!r}")
    try:
        return StreamSink(open(path, "w", encoding="utf-8", newline="\n"), owned=True)
    except OSError as exc:
        raise SinkError(f"cannot open {path}: {exc}") from exc
