import random
from collections import Counter
from decimal import ROUND_HALF_UP, Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siso.counters import Counters
from siso.ingestion import DataItem
from siso.mapping import JoinSpec
from siso.window import (
    CHILD,
    PARENT,
    WindowJoin,
    WindowParams,
    WindowState,
    on_eviction,
    on_record,
    tumbling_join_close,
)

JOIN = JoinSpec("Flow", "id", "id", "dynamic", "dynamic_join")
TUMBLING = JoinSpec("Flow", "id", "id", "tumbling", "tumbling_join")


def reference_eviction(interval, limit_p, limit_c, n_p, n_c, eps_u, eps_l, upper, lower):
    """Independent re-statement of the eviction routine; returns (interval, limit_p, limit_c)."""
    cost_p = n_p / limit_p
    cost_c = n_c / limit_c
    m = cost_p + cost_c
    w = Decimal(interval)
    if m > eps_u:
        w = (w / 2).to_integral_value(rounding="ROUND_FLOOR")
        limit_p = limit_p * cost_p * 1.5
        limit_c = limit_c * cost_c * 1.5
    elif m < eps_l:
        w = (w * Decimal("1.1")).quantize(Decimal(1), rounding=ROUND_HALF_UP)
        limit_p = limit_p * cost_p * 1.5
        limit_c = limit_c * cost_c * 1.5
    w = int(w)
    if w < lower:
        w = lower
    if w > upper:
        w = upper
    return w, max(limit_p, 1.0), max(limit_c, 1.0)


def state(interval=10_000, lp=100.0, lc=100.0, n_p=0, n_c=0, start=0) -> WindowState:
    s = WindowState("k", interval, lp, lc, start, start + interval)
    s.list_p.extend(DataItem({"id": "k"}, 0, sequence_no=i) for i in range(n_p))
    s.list_c.extend(DataItem({"id": "k"}, 0, sequence_no=i) for i in range(n_c))
    return s


def item(key, seq, t=0, arrival=None):
    return DataItem({"id": key}, t, "src", seq, t if arrival is None else arrival)


# -- on_eviction worked examples ---------------------------------------------------


def test_crowded_window_halves_interval_and_rescales_limits():
    s = on_eviction(state(n_p=120, n_c=30), WindowParams(initial_interval=2000))
    assert s.interval == 5000
    assert (s.limit_p, s.limit_c) == (180.0, 45.0)
    assert s.list_p == [] and s.list_c == []
    assert (s.window_start, s.window_end) == (10_000, 15_000)


def test_stable_zone_keeps_interval_and_limits():
    s = on_eviction(state(n_p=50, n_c=50), WindowParams())
    assert s.interval == 10_000
    assert (s.limit_p, s.limit_c) == (100.0, 100.0)
    assert s.list_p == s.list_c == []


def test_empty_window_at_upper_bound_clips_and_floors_limits():
    s = on_eviction(state(interval=30_000), WindowParams())
    assert s.interval == 30_000
    assert (s.limit_p, s.limit_c) == (1.0, 1.0)


def test_integer_interval_rounding():
    p = WindowParams(initial_interval=1000, lower_bound=1, upper_bound=10**9)
    assert on_eviction(state(interval=1001, n_p=1000), p).interval == 500  # truncates
    assert on_eviction(state(interval=15), p).interval == 17  # 16.5 rounds half up
    assert on_eviction(state(interval=14), p).interval == 15  # 15.4 rounds down


@settings(max_examples=300, deadline=None)
@given(
    interval=st.integers(250, 30_000),
    lp=st.floats(1, 500),
    lc=st.floats(1, 500),
    n_p=st.integers(0, 600),
    n_c=st.integers(0, 600),
)
def test_eviction_matches_reference(interval, lp, lc, n_p, n_c):
    params = WindowParams()
    s = on_eviction(state(interval, lp, lc, n_p, n_c), params)
    expected = reference_eviction(interval, lp, lc, n_p, n_c, 1.2, 0.4, 30_000, 250)
    assert (s.interval, s.limit_p, s.limit_c) == expected
    assert 250 <= s.interval <= 30_000 and s.limit_p >= 1 and s.limit_c >= 1


@settings(max_examples=100, deadline=None)
@given(counts=st.lists(st.tuples(st.integers(0, 2000), st.integers(0, 2000)), min_size=1, max_size=60))
def test_boundedness_under_random_rates(counts):
    params = WindowParams()
    s = WindowState.fresh("k", params, 0)
    for n_p, n_c in counts:
        s.list_p.extend([None] * n_p)
        s.list_c.extend([None] * n_c)
        on_eviction(s, params)
        assert params.lower_bound <= s.interval <= params.upper_bound
        assert s.limit_p >= 1 and s.limit_c >= 1


def test_sustained_load_halves_until_lower_bound():
    params = WindowParams()
    s = WindowState.fresh("k", params, 0)
    seen = [s.interval]
    for _ in range(10):
        # refill so m stays above the upper threshold whatever the limits became
        s.list_p.extend([None] * int(s.limit_p * 2))
        on_eviction(s, params)
        seen.append(s.interval)
    assert seen[:4] == [2000, 1000, 500, 250]
    assert seen[-1] == params.lower_bound


def test_sustained_quiet_grows_until_upper_bound():
    params = WindowParams()
    s = WindowState.fresh("k", params, 0)
    prev = s.interval
    for _ in range(60):
        on_eviction(s, params)
        assert s.interval == min((prev * 11 + 5) // 10, params.upper_bound)
        prev = s.interval
    assert s.interval == params.upper_bound


def test_tumbling_close_keeps_interval():
    s = state(interval=5000, n_p=5, n_c=5)
    tumbling_join_close(s)
    assert s.list_p == s.list_c == []
    assert (s.interval, s.limit_p, s.limit_c) == (5000, 100.0, 100.0)
    assert s.window_end == 10_000
    tumbling_join_close(s)
    assert s.window_end == 15_000


def test_params_validation():
    with pytest.raises(ValueError):
        WindowParams(initial_interval=100)  # below L
    with pytest.raises(ValueError):
        WindowParams(epsilon_l=2.0)
    with pytest.raises(ValueError):
        WindowParams(initial_limit_p=0)


# -- on_record --------------------------------------------------------------------


def test_child_joins_buffered_parent_immediately():
    s = state()
    flow = DataItem({"id": "lane1", "flow": "1680"}, 1)
    assert on_record(s, PARENT, flow, now=5) == []
    speed = DataItem({"id": "lane1", "speed": "123.0"}, 2)
    (j,) = on_record(s, CHILD, speed, now=6)
    assert (j.child, j.parent, j.emit_time, j.t) == (speed, flow, 6, 2)
    assert len(s.list_p) == len(s.list_c) == 1


def test_child_meets_three_parents_in_buffer_order():
    s = state()
    parents = [item("k", i) for i in range(3)]
    for p in parents:
        on_record(s, PARENT, p, now=0)
    out = on_record(s, CHILD, item("k", 9), now=0)
    assert [j.parent for j in out] == parents


def test_bad_side():
    with pytest.raises(ValueError):
        on_record(state(), "left", item("k", 0), now=0)


# -- routing and the keyed operator ---------------------------------------------------


def test_route_same_key_same_state_distinct_keys_distinct():
    wj = WindowJoin(JOIN)
    a = wj.route(item("lane1", 1, arrival=1234), CHILD)
    b = wj.route(item("lane1", 2, arrival=1300), PARENT)
    c = wj.route(item("lane2", 3, arrival=1300), PARENT)
    assert a is b and a is not c
    assert (a.window_start, a.window_end) == (0, 2000)  # truncated to the interval grid


def test_thousand_keys_thousand_states():
    wj = WindowJoin(JOIN)
    for k in range(1000):
        wj.process(CHILD, item(f"k{k}", k, arrival=10), now=10)
    assert len(wj.states) == 1000


def test_missing_key_goes_to_dead_letter_counter():
    c = Counters()
    wj = WindowJoin(JOIN, counters=c)
    assert wj.process(CHILD, DataItem({}, 0), now=0) == []
    assert c["dead_letter"] == 1


def test_timers_evict_and_no_join_across_boundary():
    wj = WindowJoin(TUMBLING, WindowParams(initial_interval=5000, lower_bound=250))
    wj.process(PARENT, item("k", 1, arrival=100), now=100)
    assert wj.next_deadline() == 5000
    assert wj.advance(4999) == 0
    assert wj.advance(5000) == 1
    assert wj.process(CHILD, item("k", 2, arrival=5001), now=5001) == []
    assert wj.states["k"].window_end == 10_000


def test_catch_up_after_idle_period():
    wj = WindowJoin(TUMBLING, WindowParams(initial_interval=1000, lower_bound=250))
    wj.process(PARENT, item("k", 1, arrival=10), now=10)
    # no timers fired for a long time; the next record catches the window up first
    assert wj.process(CHILD, item("k", 2, arrival=5500), now=5500) == []
    s = wj.states["k"]
    assert (s.window_start, s.window_end) == (5000, 6000)
    assert wj.evictions == 5
    assert wj.advance(5999) == 0  # the stale timer at 1000 is skipped


def test_late_items_joined_in_arrival_mode_dropped_in_field_mode():
    c = Counters()
    keep = WindowJoin(TUMBLING, counters=c)
    keep.process(PARENT, item("k", 1, t=3000, arrival=3000), now=3000)
    assert len(keep.process(CHILD, item("k", 2, t=100, arrival=3001), now=3001)) == 1
    assert c["late_joined"] == 1
    drop = WindowJoin(TUMBLING, counters=c, drop_late=True)
    drop.process(PARENT, item("k", 1, t=3000, arrival=3000), now=3000)
    assert drop.process(CHILD, item("k", 2, t=100, arrival=3001), now=3001) == []
    assert c["late_dropped"] == 1


def test_dynamic_operator_shrinks_under_load():
    wj = WindowJoin(JOIN)
    for i in range(200):
        wj.process(PARENT, item("k", i, arrival=0), now=0)
    wj.advance(2000)
    assert wj.states["k"].interval == 1000


# -- join invariants against a brute-force oracle --------------------------------------


def brute_force(events):
    parents = [it for side, it in events if side == PARENT]
    children = [it for side, it in events if side == CHILD]
    return Counter(
        (c.sequence_no, p.sequence_no) for c in children for p in parents if c.attributes["id"] == p.attributes["id"]
    )


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([PARENT, CHILD]), st.sampled_from("abc")), max_size=40))
def test_emitted_pairs_equal_brute_force_within_one_window(trace):
    events = [(side, item(key, i, arrival=10)) for i, (side, key) in enumerate(trace)]
    listener_log = []
    wj = WindowJoin(JOIN, listener=lambda s, out: listener_log.append((s.window_end, out)))
    emitted = []
    for side, it in events:
        emitted += wj.process(side, it, now=10)
    pairs = Counter((j.child.sequence_no, j.parent.sequence_no) for j in emitted)
    assert pairs == brute_force(events)
    assert all(n == 1 for n in pairs.values())  # no duplicates
    assert all(j.emit_time < end for end, out in listener_log for j in out)  # eager
    assert all(j.child.attributes["id"] == j.parent.attributes["id"] == j.key for j in emitted)


def test_per_window_completeness_across_evictions():
    rng = random.Random(3)
    wj = WindowJoin(TUMBLING, WindowParams(initial_interval=1000, lower_bound=250))
    windows: dict[int, list] = {}
    emitted: dict[int, list] = {}
    now = 0
    for i in range(3000):
        now += rng.randint(0, 3)
        wj.advance(now)
        side = rng.choice([PARENT, CHILD])
        it = item(rng.choice("abcd"), i, arrival=now)
        out = wj.process(side, it, now=now)
        w = wj.states[it.attributes["id"]].window_start
        windows.setdefault(w, []).append((side, it))
        emitted.setdefault(w, []).extend(out)
    for w, events in windows.items():
        got = Counter((j.child.sequence_no, j.parent.sequence_no) for j in emitted[w])
        assert got == brute_force(events)
