"""Bounded multi-producer channels with fair (round-robin) consumption."""
from __future__ import annotations

import threading
import time
from collections import deque
from queue import Empty

DEFAULT_CAPACITY = 8192


class ChannelClosed(Exception):
    pass


class Channel:
    """A bounded channel fed by ``producers`` lanes and drained by one consumer.

    Each put carries a batch (a list) and counts ``len(batch)`` units against
    ``capacity``; producers block while the channel is full.  :meth:`get`
    visits the non-empty lanes round-robin, so per-lane order is preserved
    and a quiet lane is served right after the current batch of a busy one.
    :meth:`get` returns ``None`` once every lane is closed and drained.
    """

    def __init__(self, producers: int = 1, capacity: int = DEFAULT_CAPACITY):
        if producers < 1 or capacity < 1:
            raise ValueError("producers and capacity must be >= 1")
        self.capacity = capacity
        self._lanes = [deque() for _ in range(producers)]
        self._open = [True] * producers
        self._used = 0
        self._next = 0
        self._lock = threading.Lock()
        self._not_empty = threading.Condition(self._lock)
        self._not_full = threading.Condition(self._lock)
        self._aborted = False

    @property
    def size(self) -> int:
        return self._used

    def put(self, batch: list, lane: int = 0, weight: int | None = None) -> None:
        n = len(batch) if weight is None else weight
        with self._not_full:
            if not self._open[lane]:
                raise ChannelClosed(f"lane {lane} is closed")
            # an oversized batch is admitted into an empty channel rather than deadlocking
            while self._used and self._used + n > self.capacity and not self._aborted:
                self._not_full.wait()
            if self._aborted:
                raise ChannelClosed("channel aborted")
            self._lanes[lane].append((batch, n))
            self._used += n
            self._not_empty.notify()

    def close(self, lane: int = 0) -> None:
        with self._lock:
            self._open[lane] = False
            self._not_empty.notify_all()

    def abort(self) -> None:
        """Wake and fail every blocked producer; the consumer sees end of stream."""
        with self._lock:
            self._aborted = True
            for lane in self._lanes:
                lane.clear()
            self._used = 0
            self._open = [False] * len(self._open)
            self._not_full.notify_all()
            self._not_empty.notify_all()

    def get(self, timeout: float | None = None):
        deadline = None if timeout is None else time.monotonic() + timeout
        with self._not_empty:
            while True:
                lanes = self._lanes
                n = len(lanes)
                for i in range(n):
                    idx = (self._next + i) % n
                    if lanes[idx]:
                        batch, weight = lanes[idx].popleft()
                        self._used -= weight
                        self._next = (idx + 1) % n
                        self._not_full.notify_all()
                        return batch
                if not any(self._open):
                    return None
                if deadline is None:
                    self._not_empty.wait()
                else:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0:
                        raise Empty
                    self._not_empty.wait(remaining)

    def __iter__(self):
        while True:
            batch = self.get()
            if batch is None:
                return
            yield batch


def drain(channel: Channel):
    """Yield the items of every batch in ``channel`` until it is closed."""
    for batch in channel:
        yield from batch


def combine(streams: list, capacity: int = DEFAULT_CAPACITY):
    """Fair-merge several line iterables into one stream.

    Each upstream is pumped by its own thread into a shared :class:`Channel`;
    upstream order is preserved and lines are never split.
    """
    if not streams:
        raise ValueError("combine needs at least one stream")
    if len(streams) == 1:
        yield from streams[0]
        return
    channel = Channel(len(streams), capacity)
    errors: list[BaseException] = []

    def pump(lane: int, stream) -> None:
        try:
            for line in stream:
                channel.put([line], lane)
        except ChannelClosed:
            pass
        except BaseException as exc:  # surfaced to the consumer below
            errors.append(exc)
        finally:
            channel.close(lane)

    threads = [threading.Thread(target=pump, args=(i, s), daemon=True) for i, s in enumerate(streams)]
    for t in threads:
        t.start()
    try:
        yield from drain(channel)
    finally:
        channel.abort()
    if errors:
        raise errors[0]
