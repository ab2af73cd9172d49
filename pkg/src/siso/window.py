"""Keyed two-stream window join with eager triggers.

Each join key owns a :class:`WindowState` holding the parent and child
buffers.  A record arriving on one side is joined immediately with every
record buffered on the other side.  When processing time reaches the end of
a key's window the buffers are evicted; dynamic windows also resize their
interval from the buffer occupancy (multiplicative decrease when crowded,
slow growth when sparse), tumbling windows keep a fixed interval.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .counters import Counters
from .ingestion.items import DataItem, now_ms
from .mapping.model import JoinSpec

PARENT = "parent"
CHILD = "child"


@dataclass(frozen=True)
class WindowParams:
    initial_interval: int = 2000
    epsilon_u: float = 1.2
    epsilon_l: float = 0.4
    upper_bound: int = 30000
    lower_bound: int = 250
    initial_limit_p: float = 50
    initial_limit_c: float = 50

    def __post_init__(self):
        if not 0 < self.lower_bound <= self.initial_interval <= self.upper_bound:
            raise ValueError("window bounds must satisfy 0 < L <= |W| <= U")
        if not 0 <= self.epsilon_l < self.epsilon_u:
            raise ValueError("cost thresholds must satisfy 0 <= eps_l < eps_u")
        if self.initial_limit_p < 1 or self.initial_limit_c < 1:
            raise ValueError("buffer limits must be >= 1")


@dataclass(eq=False)
class WindowState:
    key: str
    interval: int
    limit_p: float
    limit_c: float
    window_start: int
    window_end: int
    list_p: list = field(default_factory=list)
    list_c: list = field(default_factory=list)

    @classmethod
    def fresh(cls, key: str, params: WindowParams, arrival: int) -> "WindowState":
        interval = params.initial_interval
        start = arrival - arrival % interval
        return cls(key, interval, float(params.initial_limit_p), float(params.initial_limit_c), start, start + interval)


@dataclass(frozen=True, slots=True)
class JoinedItem:
    child: DataItem
    parent: DataItem
    key: str
    emit_time: int
    join: JoinSpec | None = None

    @property
    def t(self) -> int:
        return self.child.t


def on_record(state: WindowState, side: str, item: DataItem, now: int | None = None,
              join: JoinSpec | None = None) -> list[JoinedItem]:
    """Buffer ``item`` and join it eagerly against the opposite buffer.

    Returns one :class:`JoinedItem` per record on the other side, in that
    buffer's order.
    """
    if now is None:
        now = now_ms()
    key = state.key
    if side == PARENT:
        state.list_p.append(item)
        return [JoinedItem(c, item, key, now, join) for c in state.list_c]
    if side == CHILD:
        state.list_c.append(item)
        return [JoinedItem(item, p, key, now, join) for p in state.list_p]
    raise ValueError(f"side must be {PARENT!r} or {CHILD!r}")


def on_eviction(state: WindowState, params: WindowParams) -> WindowState:
    """Evict both buffers and adapt the interval and buffer limits.

    Interval arithmetic is integer milliseconds: halving truncates, growth by
    1.1 rounds half up.  Limits are floored at 1 so the next cost stays finite.
    """
    cost_p = len(state.list_p) / state.limit_p
    cost_c = len(state.list_c) / state.limit_c
    m = cost_p + cost_c
    interval = state.interval
    if m > params.epsilon_u:
        interval = interval // 2
        state.limit_p = state.limit_p * cost_p * 1.5
        state.limit_c = state.limit_c * cost_c * 1.5
    elif m < params.epsilon_l:
        interval = (interval * 11 + 5) // 10
        state.limit_p = state.limit_p * cost_p * 1.5
        state.limit_c = state.limit_c * cost_c * 1.5
    state.list_p.clear()
    state.list_c.clear()
    state.interval = min(max(interval, params.lower_bound), params.upper_bound)
    state.limit_p = max(state.limit_p, 1.0)
    state.limit_c = max(state.limit_c, 1.0)
    state.window_start = state.window_end
    state.window_end = state.window_start + state.interval
    return state


def tumbling_join_close(state: WindowState) -> WindowState:
    state.list_p.clear()
    state.list_c.clear()
    state.window_start = state.window_end
    state.window_end = state.window_start + state.interval
    return state


class WindowJoin:
    """One instance of the keyed window join for a single :class:`JoinSpec`.

    Not thread-safe: an instance is owned by one operator thread, which feeds
    it records through :meth:`process` and fires evictions with
    :meth:`advance`.

    ``drop_late`` drops records whose event time precedes their key's
    current window start instead of joining them into the current window.
    """

    def __init__(
        self,
        join: JoinSpec,
        params: WindowParams | None = None,
        counters: Counters | None = None,
        drop_late: bool = False,
        listener=None,
    ):
        self.join = join
        self.params = params or WindowParams()
        self.dynamic = join.window_type == "dynamic"
        self.counters = counters if counters is not None else Counters()
        self.drop_late = drop_late
        # called as listener(state, joined_items) after each eager trigger
        self.listener = listener
        self.states: dict[str, WindowState] = {}
        self._timers: list[tuple[int, str]] = []
        self.evictions = 0

    def key_attr(self, side: str) -> str:
        return self.join.parent_attr if side == PARENT else self.join.child_attr

    def route(self, item: DataItem, side: str, now: int | None = None) -> WindowState | None:
        """Window state for the item's join key, created on first sight."""
        key = item.attributes.get(self.key_attr(side))
        if key is None:
            self.counters.incr("dead_letter")
            return None
        state = self.states.get(key)
        if state is None:
            if now is None:
                now = now_ms()
            # arrival_time 0 means the item never went through a source
            state = WindowState.fresh(key, self.params, item.arrival_time or now)
            self.states[key] = state
            heapq.heappush(self._timers, (state.window_end, key))
        return state

    def process(self, side: str, item: DataItem, now: int | None = None) -> list[JoinedItem]:
        if now is None:
            now = now_ms()
        state = self.route(item, side, now)
        if state is None:
            return []
        if state.window_end <= now:
            self._catch_up(state, now)
        if item.t < state.window_start:
            if self.drop_late:
                self.counters.incr("late_dropped")
                return []
            self.counters.incr("late_joined")
        out = on_record(state, side, item, now, self.join)
        if self.listener is not None:
            self.listener(state, out)
        return out

    def _evict(self, state: WindowState) -> None:
        if self.dynamic:
            on_eviction(state, self.params)
        else:
            tumbling_join_close(state)
        self.evictions += 1

    def _catch_up(self, state: WindowState, now: int) -> None:
        while state.window_end <= now:
            self._evict(state)
        heapq.heappush(self._timers, (state.window_end, state.key))

    def advance(self, now: int | None = None) -> int:
        """Fire every eviction due at processing time ``now``; returns how many fired."""
        if now is None:
            now = now_ms()
        fired = 0
        timers = self._timers
        while timers and timers[0][0] <= now:
            end, key = heapq.heappop(timers)
            state = self.states[key]
            if state.window_end != end:
                continue  # superseded by a catch-up
            self._evict(state)
            fired += 1
            heapq.heappush(timers, (state.window_end, key))
        return fired

    def next_deadline(self) -> int | None:
        return self._timers[0][0] if self._timers else None
