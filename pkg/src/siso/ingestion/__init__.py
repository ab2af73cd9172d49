"""Source connectors, item generation, timestamps and partitioning."""
from .items import DataItem, ItemGenerator, RawRecord, TimePolicy, assign_timestamp, flatten, now_ms
from .jsonpath import JSONPathError, compile_path, evaluate
from .partition import DEAD_LETTER, Partitioner, key_partition, partition
from .sources import Source, SourceError, open_source

__all__ = [
    "DEAD_LETTER",
    "DataItem",
    "ItemGenerator",
    "JSONPathError",
    "Partitioner",
    "RawRecord",
    "Source",
    "SourceError",
    "TimePolicy",
    "assign_timestamp",
    "compile_path",
    "evaluate",
    "flatten",
    "key_partition",
    "now_ms",
    "open_source",
    "partition",
]
