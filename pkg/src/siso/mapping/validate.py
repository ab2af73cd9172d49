"""Structural checks on a :class:`MappingPlan`; findings are data, never raised."""
from __future__ import annotations

from dataclasses import dataclass, field

from .model import (
    CONTENT_TYPES,
    FORMULATIONS,
    JOIN_TYPES,
    SUPPORTED_SCHEMES,
    WINDOW_TYPES,
    MappingPlan,
    TermMap,
)

_FORMULATION_FOR = {"json": "jsonpath", "csv": "csv"}


@dataclass(frozen=True)
class Finding:
    severity: str  # error | warn
    message: str
    where: str = ""

    def __str__(self) -> str:
        return f"{self.severity}: {self.message}" + (f" [{self.where}]" if self.where else "")


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "warn"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def error(self, message: str, where: str = "") -> None:
        self.findings.append(Finding("error", message, where))

    def warn(self, message: str, where: str = "") -> None:
        self.findings.append(Finding("warn", message, where))


def _check_term(report: ValidationReport, tm: TermMap, where: str) -> None:
    from ..statements import TermError, template_parts

    if tm.kind == "template":
        try:
            template_parts(tm.value)
        except TermError as exc:
            msg = str(exc).split(" in ")[0]
            report.error(msg, where)
    elif tm.kind == "reference":
        if not tm.value:
            report.error("empty attribute reference", where)
    elif tm.kind == "constant":
        if tm.term_kind == "iri" and ":" not in tm.value:
            report.error(f"constant IRI {tm.value!r} is not absolute", where)
    else:
        report.error(f"unknown term map kind {tm.kind!r}", where)
    if tm.term_kind not in ("iri", "literal"):
        report.error(f"unknown term kind {tm.term_kind!r}", where)


def validate_plan(plan: MappingPlan, functions: dict | None = None) -> ValidationReport:
    """Check every plan invariant and return the findings.

    ``functions`` maps names to callables; defaults to the built-in registry.
    """
    from ..functions import ARITY, REGISTRY
    from ..ingestion.jsonpath import JSONPathError, compile_path

    registry = REGISTRY if functions is None else functions
    report = ValidationReport()
    if not plan.triples_maps:
        report.error("no triples map found")
        return report

    ids = [tm.id for tm in plan.triples_maps]
    for dup in sorted({i for i in ids if ids.count(i) > 1}):
        report.error(f"duplicate triples map id {dup!r}", dup)

    for tm in plan.triples_maps:
        src = tm.source
        if src.scheme not in SUPPORTED_SCHEMES:
            report.error(f"unsupported source scheme {src.scheme!r}", tm.id)
        if src.content_type not in CONTENT_TYPES:
            report.error(f"unsupported content type {src.content_type!r}", tm.id)
        if tm.reference_formulation not in FORMULATIONS:
            report.error(f"unsupported reference formulation {tm.reference_formulation!r}", tm.id)
        elif _FORMULATION_FOR.get(src.content_type) != tm.reference_formulation:
            report.error(
                f"reference formulation {tm.reference_formulation!r} cannot read {src.content_type!r} content",
                tm.id,
            )
        if tm.reference_formulation == "jsonpath":
            if not tm.iterator:
                report.error("JSONPath logical source needs a non-empty iterator", tm.id)
            else:
                try:
                    compile_path(tm.iterator)
                except JSONPathError as exc:
                    report.error(f"unsupported iterator: {exc}", tm.id)

        _check_term(report, tm.subject, f"{tm.id} subject")
        if tm.subject.term_kind != "iri":
            report.error("subject map must produce IRIs", tm.id)
        for i, pom in enumerate(tm.predicate_object_maps):
            where = f"{tm.id} predicateObjectMap[{i}]"
            _check_term(report, pom.predicate, where)
            if pom.predicate.term_kind != "iri":
                report.error("predicate map must produce IRIs", where)
            if not pom.is_join:
                _check_term(report, pom.object, where)
                continue
            join = pom.object
            parent = plan.get(join.parent_map_id)
            if parent is None:
                report.error(f"dangling parentTriplesMap reference <{join.parent_map_id}>", where)
            elif parent.source == tm.source:
                report.error("join parent must read a distinct logical source", where)
            if not join.child_attr or not join.parent_attr:
                report.error("join condition attributes must be non-empty", where)
            if join.window_type not in WINDOW_TYPES:
                report.error(f"unknown window type {join.window_type!r}", where)
            if join.join_type not in JOIN_TYPES:
                report.error(f"unknown join type {join.join_type!r}", where)
            elif join.window_type in WINDOW_TYPES and join.join_type != join.window_type + "_join":
                report.error(f"window type {join.window_type!r} does not match join type {join.join_type!r}", where)
        for fb in tm.functions:
            if fb.name not in registry:
                report.error(f"unknown function {fb.name!r}", tm.id)
            elif fb.name in ARITY:
                lo, hi = ARITY[fb.name]
                if len(fb.params) < lo or (hi is not None and len(fb.params) > hi):
                    report.error(f"function {fb.name!r} called with {len(fb.params)} parameters", tm.id)
            if not fb.output:
                report.error("function output attribute must be non-empty", tm.id)

    for cycle in _join_cycles(plan):
        report.error("cyclic join dependency", " -> ".join(cycle + [cycle[0]]))

    used = set(plan.sources)
    for src in plan.declared_sources:
        if src not in used:
            report.warn(f"logical source {src.target!r} is not used by any triples map", src.target)
    return report


def _join_cycles(plan: MappingPlan) -> list[list[str]]:
    """One representative per cycle in the child -> parent join graph."""
    edges: dict[str, list[str]] = {tm.id: [] for tm in plan.triples_maps}
    for child, join in plan.joins:
        if join.parent_map_id in edges:
            edges[child].append(join.parent_map_id)
    cycles: list[list[str]] = []
    seen_cycles: set[frozenset] = set()
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(node: str) -> None:
        state[node] = 1
        stack.append(node)
        for nxt in edges[node]:
            if state.get(nxt) == 1:
                cyc = stack[stack.index(nxt):]
                sig = frozenset(cyc)
                if sig not in seen_cycles:
                    seen_cycles.add(sig)
                    cycles.append(list(cyc))
            elif nxt not in state:
                visit(nxt)
        stack.pop()
        state[node] = 2

    for node in edges:
        if node not in state:
            visit(node)
    return cycles
