"""Namespaces and the set of terms a mapping document may use."""
from __future__ import annotations

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RR = "http://www.w3.org/ns/r2rml#"
RML = "http://semweb.mmlab.be/ns/rml#"
QL = "http://semweb.mmlab.be/ns/ql#"
TD = "https://www.w3.org/2019/wot/td#"
HCTL = "https://www.w3.org/2019/wot/hypermedia#"
# Unconfirmed; overridable through parse_mapping(rmls_namespace=...).
RMLS_DEFAULT = "http://semweb.mmlab.be/ns/rmls#"

RR_TERMS = {
    "subjectMap", "subject", "predicateObjectMap", "predicate", "predicateMap",
    "object", "objectMap", "template", "constant", "termType", "class",
    "parentTriplesMap", "joinCondition", "child", "parent",
}
RML_TERMS = {"logicalSource", "source", "referenceFormulation", "iterator", "reference"}
TD_TERMS = {"hasPropertyAffordance", "hasForm"}
HCTL_TERMS = {"hasTarget", "forContentType", "hasOperationType"}
RMLS_TERMS = {
    "joinConfig", "windowType", "joinType",
    "function", "functionName", "parameter", "output",
}

CONTENT_TYPES = {
    "application/json": "json",
    "application/x-ndjson": "json",
    "application/ndjson": "json",
    "text/json": "json",
    "text/csv": "csv",
    "application/csv": "csv",
}
FORMULATIONS = {QL + "JSONPath": "jsonpath", QL + "CSV": "csv"}
FORMULATION_FOR_CONTENT = {"json": "jsonpath", "csv": "csv"}


def default_prefixes(rmls_namespace: str = RMLS_DEFAULT) -> dict[str, str]:
    return {
        "rdf": RDF,
        "rr": RR,
        "rml": RML,
        "ql": QL,
        "td": TD,
        "hctl": HCTL,
        "rmls": rmls_namespace,
    }


def supported_predicates(rmls_namespace: str = RMLS_DEFAULT) -> set[str]:
    preds = {RDF + "type"}
    preds |= {RR + t for t in RR_TERMS}
    preds |= {RML + t for t in RML_TERMS}
    preds |= {TD + t for t in TD_TERMS}
    preds |= {HCTL + t for t in HCTL_TERMS}
    preds |= {rmls_namespace + t for t in RMLS_TERMS}
    return preds
