"""Term expansion, statement generation and line serialization."""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from .counters import Counters
from .ingestion.items import DataItem
from .mapping.model import DEFAULT_BASE_IRI, JoinSpec, MappingPlan, TermMap, TriplesMapSpec
from .window import JoinedItem

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
FORMATS = ("ntriples", "nquads_ts")

_PLACEHOLDER = re.compile(r"\\[{}]|\{([^{}]*)\}")
_ABSOLUTE = re.compile(r"[A-Za-z][A-Za-z0-9+.\-]*:")
_BAD_IRI_CHARS = re.compile(r'[\x00-\x20<>"{}|^`\\\ud800-\udfff]')
_LITERAL_SPECIAL = re.compile(r'[\x00-\x1f"\\\ud800-\udfff]')
_LITERAL_ESCAPES = {'"': '\\"', "\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t"}
_NEEDS_ENCODING = re.compile(r"[^A-Za-z0-9\-._~]")
_UNRESERVED = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-._~")


class TermError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class RDFTerm:
    kind: str  # iri | literal | blank
    lexical: str


@dataclass(frozen=True, slots=True)
class RDFStatement:
    subject: RDFTerm
    predicate: RDFTerm
    object: RDFTerm
    t: int = 0


def _keep_ucs(ch: str) -> bool:
    o = ord(ch)
    # unicode whitespace is legal in IRIs but trips common line parsers
    return o >= 0xA0 and not 0xD800 <= o <= 0xDFFF and o not in (0xFFFE, 0xFFFF) and not ch.isspace()


def iri_safe(value: str) -> str:
    """Percent-encode every character outside iunreserved (non-space UCS chars are kept)."""
    if not _NEEDS_ENCODING.search(value):
        return value
    out = []
    for ch in value:
        if ch in _UNRESERVED or _keep_ucs(ch):
            out.append(ch)
        else:
            out.extend(f"%{b:02X}" for b in ch.encode("utf-8", "surrogatepass"))
    return "".join(out)


@lru_cache(maxsize=1024)
def template_parts(template: str) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """Split ``template`` into literal chunks and placeholder names.

    ``len(chunks) == len(names) + 1``.  Raises :class:`TermError` on unbalanced
    braces or empty placeholders.  ``\\{`` and ``\\}`` are literal braces.
    """
    chunks, names = [], []
    pos = 0
    buf = []
    for m in _PLACEHOLDER.finditer(template):
        between = template[pos : m.start()]
        if "{" in between or "}" in between:
            raise TermError(f"unbalanced template braces in {template!r}")
        buf.append(between)
        if m.group(1) is None:
            buf.append(m.group()[1])
        else:
            name = m.group(1).strip()
            if not name:
                raise TermError(f"empty template placeholder in {template!r}")
            chunks.append("".join(buf))
            buf = []
            names.append(name)
        pos = m.end()
    tail = template[pos:]
    if "{" in tail or "}" in tail:
        raise TermError(f"unbalanced template braces in {template!r}")
    buf.append(tail)
    chunks.append("".join(buf))
    return tuple(chunks), tuple(names)


def resolve_iri(value: str, base_iri: str) -> str:
    if not _ABSOLUTE.match(value):
        value = base_iri + value
    if _BAD_IRI_CHARS.search(value):
        raise TermError(f"invalid IRI {value!r}")
    return value


def expand_template(template: str, item: DataItem, term_kind: str = "iri",
                    base_iri: str = DEFAULT_BASE_IRI) -> RDFTerm:
    """Fill ``{attr}`` placeholders from ``item``.

    IRI templates percent-encode substituted values and resolve against
    ``base_iri`` when the result is relative.  A missing attribute raises
    :class:`TermError`.
    """
    chunks, names = template_parts(template)
    attrs = item.attributes
    parts = [chunks[0]]
    encode = term_kind == "iri"
    for name, chunk in zip(names, chunks[1:]):
        value = attrs.get(name)
        if value is None:
            raise TermError(f"missing attribute {name!r}")
        parts.append(iri_safe(value) if encode else value)
        parts.append(chunk)
    lexical = "".join(parts)
    if encode:
        return RDFTerm("iri", resolve_iri(lexical, base_iri))
    return RDFTerm("literal", lexical)


def expand_term(tm: TermMap, item: DataItem, base_iri: str = DEFAULT_BASE_IRI) -> RDFTerm:
    if tm.kind == "template":
        return expand_template(tm.value, item, tm.term_kind, base_iri)
    if tm.kind == "reference":
        value = item.attributes.get(tm.value)
        if value is None:
            raise TermError(f"missing attribute {tm.value!r}")
    else:
        value = tm.value
    if tm.term_kind == "iri":
        return RDFTerm("iri", resolve_iri(value, base_iri))
    return RDFTerm("literal", value)


class StatementGenerator:
    """Generates statements for one triples map.

    Plain items go through :meth:`from_item` (class statements plus every
    non-join predicate-object map).  Joined items go through
    :meth:`from_join`, which pairs the child subject with the parent map's
    subject expanded over the parent item.  A term that cannot be built skips
    only its statement and bumps ``statements_skipped``.
    """

    def __init__(self, tmap: TriplesMapSpec, plan: MappingPlan | None = None,
                 base_iri: str | None = None, counters: Counters | None = None):
        self.tmap = tmap
        self.base_iri = base_iri if base_iri is not None else (plan.base_iri if plan else DEFAULT_BASE_IRI)
        self.counters = counters if counters is not None else Counters()
        self._plain = [(pom.predicate, pom.object) for pom in tmap.plain_poms]
        self._classes = [RDFTerm("iri", c) for c in tmap.classes]
        self._joins: dict[JoinSpec, list] = {}
        for pom in tmap.predicate_object_maps:
            if pom.is_join:
                parent = plan[pom.object.parent_map_id] if plan is not None else None
                self._joins.setdefault(pom.object, []).append((pom.predicate, parent))
        self._const_preds = {}
        for pred, _ in self._plain:
            if pred.kind == "constant":
                self._const_preds[pred] = RDFTerm("iri", pred.value)

    @property
    def emits_plain(self) -> bool:
        return bool(self._plain or self._classes)

    def _subject(self, item: DataItem) -> RDFTerm | None:
        try:
            return expand_term(self.tmap.subject, item, self.base_iri)
        except TermError:
            return None

    def from_item(self, item: DataItem) -> list[RDFStatement]:
        n = len(self._plain) + len(self._classes)
        if not n:
            return []
        subject = self._subject(item)
        if subject is None:
            self.counters.incr("statements_skipped", n)
            self.counters.incr("statements_generated", n)
            return []
        t = item.t
        out = [RDFStatement(subject, RDFTerm("iri", RDF_TYPE), c, t) for c in self._classes]
        base = self.base_iri
        const_preds = self._const_preds
        skipped = 0
        for pred_map, obj_map in self._plain:
            try:
                pred = const_preds.get(pred_map) or expand_term(pred_map, item, base)
                obj = expand_term(obj_map, item, base)
            except TermError:
                skipped += 1
                continue
            out.append(RDFStatement(subject, pred, obj, t))
        if skipped:
            self.counters.incr("statements_skipped", skipped)
        self.counters.incr("statements_generated", n)
        return out

    def from_join(self, joined: JoinedItem, join: JoinSpec | None = None) -> list[RDFStatement]:
        join = join or joined.join
        if join is None:
            targets = [x for pairs in self._joins.values() for x in pairs]
        else:
            targets = self._joins.get(join, [])
        if not targets:
            return []
        subject = self._subject(joined.child)
        self.counters.incr("statements_generated", len(targets))
        if subject is None:
            self.counters.incr("statements_skipped", len(targets))
            return []
        out = []
        t = joined.child.t
        for pred_map, parent_map in targets:
            try:
                if parent_map is None:
                    raise TermError("parent triples map unknown")
                pred = expand_term(pred_map, joined.child, self.base_iri)
                obj = expand_term(parent_map.subject, joined.parent, self.base_iri)
            except TermError:
                self.counters.incr("statements_skipped")
                continue
            out.append(RDFStatement(subject, pred, obj, t))
        return out

    def generate(self, input) -> list[RDFStatement]:
        if isinstance(input, JoinedItem):
            return self.from_join(input)
        return self.from_item(input)

    __call__ = generate


def generate_statements(tmap: TriplesMapSpec, input, plan: MappingPlan | None = None,
                        base_iri: str | None = None, counters: Counters | None = None) -> list[RDFStatement]:
    return StatementGenerator(tmap, plan, base_iri, counters).generate(input)


def _escape_char(m: re.Match) -> str:
    ch = m.group()
    esc = _LITERAL_ESCAPES.get(ch)
    if esc is not None:
        return esc
    if ch >= "\ud800":
        return "\\uFFFD"  # lone surrogate cannot be encoded
    return f"\\u{ord(ch):04X}"


def _escape_literal(value: str) -> str:
    return _LITERAL_SPECIAL.sub(_escape_char, value)


def format_term(term: RDFTerm) -> str:
    if term.kind == "iri":
        return f"<{term.lexical}>"
    if term.kind == "blank":
        return f"_:{term.lexical}"
    return f'"{_escape_literal(term.lexical)}"'


def serialize(stmt: RDFStatement, format: str = "ntriples") -> str:
    """One newline-terminated N-Triples line, or N-Quads with a ``<urn:ts:T>`` graph."""
    body = f"{format_term(stmt.subject)} {format_term(stmt.predicate)} {format_term(stmt.object)}"
    if format == "ntriples":
        return body + " .\n"
    if format == "nquads_ts":
        return f"{body} <urn:ts:{stmt.t}> .\n"
    raise ValueError(f"unknown output format {format!r}")
