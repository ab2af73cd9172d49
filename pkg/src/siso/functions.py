"""Named pre-mapping functions applied to data items before windowing and mapping."""
from __future__ import annotations

from dataclasses import replace
from typing import Callable

from .counters import Counters
from .ingestion.items import DataItem
from .mapping.model import FunctionBinding

REGISTRY: dict[str, Callable[..., str]] = {
    "uppercase": lambda value: value.upper(),
    "lowercase": lambda value: value.lower(),
    "concat": lambda *values: "".join(values),
}

# number of parameters each function accepts: (min, max or None)
ARITY = {"uppercase": (1, 1), "lowercase": (1, 1), "concat": (1, None)}


def register(name: str, fn: Callable[..., str], min_args: int = 1, max_args: int | None = None) -> None:
    REGISTRY[name] = fn
    ARITY[name] = (min_args, max_args)


def apply_function(binding: FunctionBinding, item: DataItem, counters: Counters | None = None) -> DataItem:
    """Return ``item`` with ``binding.output`` set to the function result.

    When a parameter attribute is missing the item passes through unchanged
    and ``function_skipped`` is bumped.
    """
    values = []
    for attr in binding.params:
        value = item.attributes.get(attr)
        if value is None:
            if counters is not None:
                counters.incr("function_skipped")
            return item
        values.append(value)
    result = REGISTRY[binding.name](*values)
    attrs = dict(item.attributes)
    attrs[binding.output] = result
    return replace(item, attributes=attrs)
