"""Raw records, data items and the item generator."""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, replace
from datetime import date, datetime

from ..counters import Counters
from .jsonpath import compile_path, evaluate


def now_ms() -> int:
    return time.time_ns() // 1_000_000


@dataclass(frozen=True, slots=True)
class RawRecord:
    payload: bytes
    arrival_time: int
    source_id: str
    # per-source record number assigned by the reader; 0 means unassigned
    seq: int = 0


@dataclass(frozen=True, slots=True)
class DataItem:
    attributes: dict
    t: int
    source_id: str = ""
    sequence_no: int = 0
    arrival_time: int = 0

    def get(self, path: str, default=None):
        return self.attributes.get(path, default)

    def __getitem__(self, path: str) -> str:
        return self.attributes[path]


@dataclass(frozen=True)
class TimePolicy:
    mode: str = "arrival"  # arrival | field
    field_path: str | None = None
    field_format: str = "epoch_ms"  # epoch_ms | clock_hms
    reference_date: date | None = None  # clock_hms day; None means today

    def __post_init__(self):
        if self.mode not in ("arrival", "field"):
            raise ValueError(f"unknown time mode {self.mode!r}")
        if self.mode == "field" and not self.field_path:
            raise ValueError("time mode 'field' needs a field path")
        if self.field_format not in ("epoch_ms", "clock_hms"):
            raise ValueError(f"unknown time format {self.field_format!r}")


def render_scalar(value) -> str | None:
    """JSON scalar to its attribute string; floats use the shortest round-trip form."""
    if value is None:
        return None
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def flatten(value, prefix: str = "", out: dict | None = None) -> dict:
    """Flatten nested JSON into ``{"a.b": "1", "list[0]": "x"}`` style paths.

    A scalar at the top level is stored under ``"$"``.
    """
    if out is None:
        out = {}
    if isinstance(value, dict):
        for k, v in value.items():
            key = f"{prefix}.{k}" if prefix else k
            if isinstance(v, str):
                out[key] = v
            elif isinstance(v, (dict, list)):
                flatten(v, key, out)
            else:
                s = render_scalar(v)
                if s is not None:
                    out[key] = s
    elif isinstance(value, list):
        for i, v in enumerate(value):
            key = f"{prefix}[{i}]"
            if isinstance(v, (dict, list)):
                flatten(v, key, out)
            else:
                _put(out, key, v)
    else:
        _put(out, prefix or "$", value)
    return out


def _put(out: dict, key: str, value) -> None:
    s = render_scalar(value)
    if s is not None:
        out[key] = s


def parse_clock(value: str, day: date) -> int:
    """``HH:MM:SS[.fff]`` on ``day`` in local time, as epoch milliseconds."""
    parsed = datetime.strptime(value.strip(), "%H:%M:%S.%f" if "." in value else "%H:%M:%S").time()
    return int(round(datetime.combine(day, parsed).timestamp() * 1000))


def assign_timestamp(item: DataItem, policy: TimePolicy, counters: Counters | None = None) -> DataItem:
    """Return ``item`` with its event time set according to ``policy``.

    An unparseable or missing time field falls back to the arrival time and
    bumps the ``timestamp_fallback`` counter.
    """
    if policy.mode == "arrival":
        return replace(item, t=item.arrival_time)
    raw = item.attributes.get(policy.field_path)
    t = None
    if raw is not None:
        try:
            if policy.field_format == "epoch_ms":
                t = int(raw)
            else:
                t = parse_clock(raw, policy.reference_date or date.today())
        except ValueError:
            t = None
    if t is None or t <= 0:
        if counters is not None:
            counters.incr("timestamp_fallback")
        t = item.arrival_time
    return replace(item, t=t)


class ItemGenerator:
    """Splits records of one source into data items.

    For ``jsonpath`` each iterator match becomes one item.  For ``csv`` the
    first record seen is the header and every later record one item.
    Malformed records yield no items and bump ``decode_errors``.
    """

    def __init__(
        self,
        formulation: str,
        iterator: str = "$",
        policy: TimePolicy | None = None,
        source_id: str = "",
        counters: Counters | None = None,
    ):
        if formulation not in ("jsonpath", "csv"):
            raise ValueError(f"unknown reference formulation {formulation!r}")
        self.formulation = formulation
        self.iterator = iterator or "$"
        if formulation == "jsonpath":
            compile_path(self.iterator)
        self.policy = policy or TimePolicy()
        self.source_id = source_id
        self.counters = counters if counters is not None else Counters()
        self.header: list[str] | None = None
        self._seq = 0

    def generate_items(self, record: RawRecord) -> list[DataItem]:
        if self.formulation == "jsonpath":
            matches = self._json_matches(record.payload)
        else:
            matches = self._csv_matches(record.payload)
        if not matches:
            return []
        items = []
        policy = self.policy
        for k, attrs in enumerate(matches):
            if record.seq:
                # record number in the high bits keeps order across parallel generators
                seq = (record.seq << 32) | k
            else:
                self._seq += 1
                seq = self._seq
            item = DataItem(attrs, record.arrival_time, self.source_id, seq, record.arrival_time)
            if policy.mode != "arrival":
                item = assign_timestamp(item, policy, self.counters)
            items.append(item)
        return items

    __call__ = generate_items

    def _json_matches(self, payload: bytes) -> list[dict]:
        try:
            doc = json.loads(payload)
            if self.iterator == "$":
                return [flatten(doc)]
            return [flatten(v) for v in evaluate(self.iterator, doc)]
        except (ValueError, UnicodeDecodeError, RecursionError):
            self.counters.incr("decode_errors")
            return []

    def _csv_matches(self, payload: bytes) -> list[dict]:
        try:
            text = payload.decode("utf-8")
            rows = list(csv.reader([text.rstrip("\r\n")], strict=True))
        except (UnicodeDecodeError, csv.Error):
            self.counters.incr("decode_errors")
            return []
        if not rows or rows[0] == [] or rows[0] == [""]:
            return []
        row = rows[0]
        if self.header is None:
            self.header = row
            return []
        if len(row) != len(self.header):
            self.counters.incr("decode_errors")
            return []
        return [dict(zip(self.header, row))]
