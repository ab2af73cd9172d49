"""Serialize a :class:`MappingPlan` back into a mapping document."""
from __future__ import annotations

from . import vocab as V
from .model import JoinSpec, MappingPlan, SourceSpec, TermMap

_MIME = {"json": "application/json", "csv": "text/csv"}


def _lit(value: str) -> str:
    escaped = (
        value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")
    )
    return f'"{escaped}"'


def _ref(map_id: str) -> str:
    return map_id if map_id.startswith("_:") else f"<{map_id}>"


def _term(tm: TermMap, role: str) -> str:
    if tm.kind == "constant":
        value = f"<{tm.value}>" if tm.term_kind == "iri" else _lit(tm.value)
        return f"[ rr:constant {value} ]"
    pred = "rr:template" if tm.kind == "template" else "rml:reference"
    default = "literal" if role == "object" and tm.kind == "reference" else "iri"
    term_type = ""
    if tm.term_kind != default:
        term_type = " ; rr:termType " + ("rr:IRI" if tm.term_kind == "iri" else "rr:Literal")
    return f"[ {pred} {_lit(tm.value)}{term_type} ]"


def _join(join: JoinSpec, configs: dict[str, str]) -> str:
    window = {"tumbling": "rmls:TumblingWindow", "dynamic": "rmls:DynamicWindow"}[join.window_type]
    return (
        f"[ rr:parentTriplesMap {_ref(join.parent_map_id)} ;\n"
        f"        rmls:joinConfig {configs[join.join_type]} ;\n"
        f"        rmls:windowType {window} ;\n"
        f"        rr:joinCondition [ rr:child {_lit(join.child_attr)} ; rr:parent {_lit(join.parent_attr)} ] ]"
    )


def dump_mapping(plan: MappingPlan, rmls_namespace: str = V.RMLS_DEFAULT) -> str:
    out = ["\n".join(f"@prefix {p}: <{ns}> ." for p, ns in V.default_prefixes(rmls_namespace).items())]
    sources: dict[SourceSpec, str] = {}
    for i, src in enumerate(dict.fromkeys(list(plan.sources) + list(plan.declared_sources))):
        sources[src] = f"_:source{i}"
        out.append(
            f"_:source{i} a td:Thing ;\n"
            f"  td:hasPropertyAffordance [ td:hasForm [\n"
            f"    hctl:hasTarget {_lit(src.target)} ;\n"
            f"    hctl:forContentType {_lit(_MIME[src.content_type])} ;\n"
            f"    hctl:hasOperationType {_lit(src.operation)} ] ] ."
        )
    configs = {"tumbling_join": "_:tumblingJoin", "dynamic_join": "_:dynamicJoin"}
    out.append("_:tumblingJoin a rmls:JoinConfigMap ; rmls:joinType rmls:TumblingJoin .")
    out.append("_:dynamicJoin a rmls:JoinConfigMap ; rmls:joinType rmls:DynamicJoin .")

    for tm in plan.triples_maps:
        formulation = "ql:JSONPath" if tm.reference_formulation == "jsonpath" else "ql:CSV"
        lines = [f"{_ref(tm.id)} a rr:TriplesMap ;"]
        iterator = f" ;\n    rml:iterator {_lit(tm.iterator)}" if tm.iterator else ""
        lines.append(
            f"  rml:logicalSource [\n    rml:source {sources[tm.source]} ;\n"
            f"    rml:referenceFormulation {formulation}{iterator} ] ;"
        )
        subject = _term(tm.subject, "subject")
        if tm.classes:
            classes = ", ".join(f"<{c}>" for c in tm.classes)
            subject = subject[:-2] + f" ; rr:class {classes} ]"
        parts = [f"  rr:subjectMap {subject}"]
        for pom in tm.predicate_object_maps:
            pred = _term(pom.predicate, "predicate")
            if pom.is_join:
                obj = _join(pom.object, configs)
            else:
                obj = _term(pom.object, "object")
            parts.append(f"  rr:predicateObjectMap [\n    rr:predicateMap {pred} ;\n    rr:objectMap {obj} ]")
        for fb in tm.functions:
            params = "".join(f" ; rmls:parameter {_lit(p)}" for p in fb.params)
            parts.append(
                f"  rmls:function [ rmls:functionName {_lit(fb.name)}{params} ; rmls:output {_lit(fb.output)} ]"
            )
        lines.append(" ;\n".join(parts) + " .")
        out.append("\n".join(lines))
    return "\n\n".join(out) + "\n"
