"""Mapping documents: parsing, validation and compilation to an operator DAG."""
from .dag import Edge, ExecutablePlan, Operator, PlanError, compile_plan
from .model import (
    DEFAULT_BASE_IRI,
    FunctionBinding,
    JoinSpec,
    MappingPlan,
    PredicateObjectMap,
    SourceSpec,
    TermMap,
    TriplesMapSpec,
)
from .parser import parse_mapping
from .turtle import MappingError, TurtleSyntaxError
from .validate import Finding, ValidationReport, validate_plan
from .writer import dump_mapping

__all__ = [
    "DEFAULT_BASE_IRI",
    "Edge",
    "ExecutablePlan",
    "Finding",
    "FunctionBinding",
    "JoinSpec",
    "MappingError",
    "MappingPlan",
    "Operator",
    "PlanError",
    "PredicateObjectMap",
    "SourceSpec",
    "TermMap",
    "TriplesMapSpec",
    "TurtleSyntaxError",
    "ValidationReport",
    "compile_plan",
    "dump_mapping",
    "parse_mapping",
    "validate_plan",
]
