"""Immutable plan types produced by :func:`siso.mapping.parse_mapping`."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union
from urllib.parse import urlsplit

SUPPORTED_SCHEMES = ("tcp", "ws", "file", "stdin")
CONTENT_TYPES = ("json", "csv")
FORMULATIONS = ("jsonpath", "csv")
WINDOW_TYPES = ("tumbling", "dynamic")
JOIN_TYPES = ("tumbling_join", "dynamic_join")
DEFAULT_BASE_IRI = "http://example.com/"


def url_scheme(target: str) -> str:
    return urlsplit(target).scheme.lower()


@dataclass(frozen=True)
class SourceSpec:
    target: str
    content_type: str = "json"
    operation: str = "readproperty"

    @property
    def scheme(self) -> str:
        return url_scheme(self.target)


@dataclass(frozen=True)
class TermMap:
    kind: str  # template | reference | constant
    value: str
    term_kind: str = "iri"  # iri | literal


@dataclass(frozen=True)
class JoinSpec:
    parent_map_id: str
    child_attr: str
    parent_attr: str
    window_type: str = "dynamic"
    join_type: str = "dynamic_join"


@dataclass(frozen=True)
class PredicateObjectMap:
    predicate: TermMap
    object: Union[TermMap, JoinSpec]

    @property
    def is_join(self) -> bool:
        return isinstance(self.object, JoinSpec)


@dataclass(frozen=True)
class FunctionBinding:
    name: str
    params: tuple[str, ...]
    output: str


@dataclass(frozen=True)
class TriplesMapSpec:
    id: str
    source: SourceSpec
    iterator: str
    reference_formulation: str
    subject: TermMap
    predicate_object_maps: tuple[PredicateObjectMap, ...] = ()
    classes: tuple[str, ...] = ()
    functions: tuple[FunctionBinding, ...] = ()

    @property
    def joins(self) -> tuple[JoinSpec, ...]:
        return tuple(pom.object for pom in self.predicate_object_maps if pom.is_join)

    @property
    def plain_poms(self) -> tuple[PredicateObjectMap, ...]:
        return tuple(pom for pom in self.predicate_object_maps if not pom.is_join)


@dataclass(frozen=True)
class MappingPlan:
    triples_maps: tuple[TriplesMapSpec, ...]
    base_iri: str = DEFAULT_BASE_IRI
    # sources declared in the document; lets validation flag unreferenced ones
    declared_sources: tuple[SourceSpec, ...] = field(default=(), compare=False)

    def get(self, map_id: str) -> TriplesMapSpec | None:
        for tm in self.triples_maps:
            if tm.id == map_id:
                return tm
        return None

    def __getitem__(self, map_id: str) -> TriplesMapSpec:
        tm = self.get(map_id)
        if tm is None:
            raise KeyError(map_id)
        return tm

    @property
    def joins(self) -> list[tuple[str, JoinSpec]]:
        return [(tm.id, j) for tm in self.triples_maps for j in tm.joins]

    @property
    def function_calls(self) -> list[tuple[str, FunctionBinding]]:
        return [(tm.id, fb) for tm in self.triples_maps for fb in tm.functions]

    @property
    def sources(self) -> list[SourceSpec]:
        seen: dict[SourceSpec, None] = {}
        for tm in self.triples_maps:
            seen.setdefault(tm.source)
        return list(seen)
