"""A small JSONPath evaluator: ``$``, dot names, bracketed names, ``[*]``, ``[n]``, ``.*``.

Filters, slices, unions and recursive descent are rejected at compile time.
"""
from __future__ import annotations

import re
from functools import lru_cache

WILDCARD = object()

_NAME = re.compile(r"[A-Za-z_$@\-][\w$@\-]*")
_BRACKET = re.compile(r"""\[\s*(?:'((?:[^'\\]|\\.)*)'|"((?:[^"\\]|\\.)*)"|(\*)|(-?\d+))\s*\]""")


class JSONPathError(ValueError):
    pass


@lru_cache(maxsize=256)
def compile_path(expr: str) -> tuple:
    """Compile ``expr`` into a tuple of steps (str name, int index or WILDCARD)."""
    expr = expr.strip()
    if not expr.startswith("$"):
        raise JSONPathError(f"JSONPath must start with '$': {expr!r}")
    steps: list = []
    pos = 1
    while pos < len(expr):
        if expr.startswith("..", pos):
            raise JSONPathError("recursive descent is not supported")
        if expr[pos] == ".":
            pos += 1
            if expr.startswith("*", pos):
                steps.append(WILDCARD)
                pos += 1
                continue
            m = _NAME.match(expr, pos)
            if not m:
                raise JSONPathError(f"expected a name at offset {pos} in {expr!r}")
            steps.append(m.group())
            pos = m.end()
        elif expr[pos] == "[":
            m = _BRACKET.match(expr, pos)
            if not m:
                raise JSONPathError(f"unsupported bracket expression at offset {pos} in {expr!r}")
            single, double, star, index = m.groups()
            if star:
                steps.append(WILDCARD)
            elif index is not None:
                steps.append(int(index))
            else:
                raw = single if single is not None else double
                steps.append(re.sub(r"\\(.)", r"\1", raw))
            pos = m.end()
        else:
            raise JSONPathError(f"unexpected {expr[pos]!r} at offset {pos} in {expr!r}")
    return tuple(steps)


def evaluate(expr: str, document) -> list:
    """Return every value ``expr`` selects in ``document``, in document order."""
    current = [document]
    for step in compile_path(expr):
        nxt = []
        for value in current:
            if step is WILDCARD:
                if isinstance(value, list):
                    nxt.extend(value)
                elif isinstance(value, dict):
                    nxt.extend(value.values())
            elif isinstance(step, int):
                if isinstance(value, list) and -len(value) <= step < len(value):
                    nxt.append(value[step])
            elif isinstance(value, dict) and step in value:
                nxt.append(value[step])
        current = nxt
    return current
