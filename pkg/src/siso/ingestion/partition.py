"""Stream partitioning: keyed (stable hash) or round-robin."""
from __future__ import annotations

import itertools
import zlib

from ..counters import Counters
from .items import DataItem

DEAD_LETTER = -1


def key_partition(key: str, parallelism: int) -> int:
    # crc32 rather than hash(): str hashing is salted per process.
    # surrogatepass: JSON escapes can yield lone surrogates in key values
    return zlib.crc32(key.encode("utf-8", "surrogatepass")) % parallelism


class Partitioner:
    """Assigns items to one of ``parallelism`` downstream instances.

    With a ``key_attr`` equal key values always land on the same index; items
    missing the key go to :data:`DEAD_LETTER`.  Without one, items are dealt
    round-robin.
    """

    def __init__(self, key_attr: str | None, parallelism: int, counters: Counters | None = None):
        if parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        self.key_attr = key_attr
        self.parallelism = parallelism
        self.counters = counters if counters is not None else Counters()
        self._rr = itertools.cycle(range(parallelism))

    def partition(self, item: DataItem) -> int:
        if self.parallelism == 1 and self.key_attr is None:
            return 0
        if self.key_attr is None:
            return next(self._rr)
        key = item.attributes.get(self.key_attr)
        if key is None:
            self.counters.incr("dead_letter")
            return DEAD_LETTER
        return key_partition(key, self.parallelism)

    __call__ = partition


def partition(item: DataItem, key_attr: str, parallelism: int, counters: Counters | None = None) -> int:
    """Keyed partition index for ``item``; pure in (key value, parallelism)."""
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    key = item.attributes.get(key_attr)
    if key is None:
        if counters is not None:
            counters.incr("dead_letter")
        return DEAD_LETTER
    return key_partition(key, parallelism)
