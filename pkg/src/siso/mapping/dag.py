"""Compile a validated plan into the logical operator DAG the runtime executes."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from .model import FunctionBinding, JoinSpec, MappingPlan, SourceSpec
from .turtle import MappingError
from .validate import validate_plan

KIND_ORDER = ("source", "item_generator", "function", "window", "statement_generator", "combiner", "sink")


class PlanError(MappingError):
    def __init__(self, findings):
        self.findings = list(findings)
        super().__init__("invalid mapping plan: " + "; ".join(str(f) for f in self.findings))


@dataclass(frozen=True)
class Operator:
    id: str
    kind: str
    source: SourceSpec | None = None
    formulation: str | None = None
    iterator: str | None = None
    map_id: str | None = None
    join: JoinSpec | None = None
    parent_map_id: str | None = None
    functions: tuple[FunctionBinding, ...] = ()

    def describe(self) -> str:
        if self.kind == "source":
            return f"source {self.source.target} ({self.source.content_type})"
        if self.kind == "item_generator":
            return f"item generator {self.formulation} iterator {self.iterator!r}"
        if self.kind == "function":
            calls = ", ".join(f"{b.output}={b.name}({', '.join(b.params)})" for b in self.functions)
            return f"pre-mapping functions for {self.map_id}: {calls}"
        if self.kind == "window":
            j = self.join
            return (
                f"{j.window_type} window, {j.join_type} keyed on child {j.child_attr!r} = parent {j.parent_attr!r}"
                f" ({self.map_id} <- {self.parent_map_id})"
            )
        if self.kind == "statement_generator":
            return f"statement generator {self.map_id}"
        return self.kind


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    role: str = ""  # "child" / "parent" on edges into a window


@dataclass
class ExecutablePlan:
    plan: MappingPlan
    operators: list[Operator]
    edges: list[Edge]
    # triples map id -> id of the operator whose output feeds it (item generator or function)
    map_heads: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self._by_id = {op.id: op for op in self.operators}
        self._out: dict[str, list[Edge]] = defaultdict(list)
        self._in: dict[str, list[Edge]] = defaultdict(list)
        for e in self.edges:
            self._out[e.src].append(e)
            self._in[e.dst].append(e)

    def __getitem__(self, op_id: str) -> Operator:
        return self._by_id[op_id]

    def of_kind(self, kind: str) -> list[Operator]:
        return [op for op in self.operators if op.kind == kind]

    def successors(self, op_id: str) -> list[Edge]:
        return list(self._out.get(op_id, ()))

    def predecessors(self, op_id: str) -> list[Edge]:
        return list(self._in.get(op_id, ()))

    def explain(self) -> str:
        lines = []
        for op in self.operators:
            lines.append(f"{op.id}: {op.describe()}")
            for e in self._out.get(op.id, ()):
                role = f" [{e.role}]" if e.role else ""
                lines.append(f"    -> {e.dst}{role}")
        return "\n".join(lines) + "\n"


def compile_plan(plan: MappingPlan) -> ExecutablePlan:
    """Build the operator DAG.

    One source and item generator per distinct (source, iterator) input, an
    optional function stage per triples map, one window per join placed
    before the child map's statement generator, one statement generator per
    triples map, and a single combiner feeding the sink.  Raises
    :class:`PlanError` when validation reports errors.
    """
    report = validate_plan(plan)
    if not report.ok:
        raise PlanError(report.errors)

    ops: list[Operator] = []
    edges: list[Edge] = []
    src_ids: dict[SourceSpec, str] = {}
    gen_ids: dict[tuple, str] = {}
    heads: dict[str, str] = {}

    for tm in plan.triples_maps:
        if tm.source not in src_ids:
            src_ids[tm.source] = f"source{len(src_ids)}"
            ops.append(Operator(src_ids[tm.source], "source", source=tm.source))
        gkey = (tm.source, tm.reference_formulation, tm.iterator)
        if gkey not in gen_ids:
            gen_ids[gkey] = f"items{len(gen_ids)}"
            ops.append(
                Operator(gen_ids[gkey], "item_generator", source=tm.source,
                         formulation=tm.reference_formulation, iterator=tm.iterator)
            )
            edges.append(Edge(src_ids[tm.source], gen_ids[gkey]))
        head = gen_ids[gkey]
        if tm.functions:
            fid = f"fn:{tm.id}"
            ops.append(Operator(fid, "function", map_id=tm.id, functions=tm.functions))
            edges.append(Edge(head, fid))
            head = fid
        heads[tm.id] = head

    n_windows = 0
    for tm in plan.triples_maps:
        gid = f"map:{tm.id}"
        ops.append(Operator(gid, "statement_generator", map_id=tm.id))
        if tm.plain_poms or tm.classes or not tm.joins:
            edges.append(Edge(heads[tm.id], gid))
        for join in tm.joins:
            wid = f"window{n_windows}"
            n_windows += 1
            ops.append(Operator(wid, "window", map_id=tm.id, join=join, parent_map_id=join.parent_map_id))
            edges.append(Edge(heads[tm.id], wid, "child"))
            edges.append(Edge(heads[join.parent_map_id], wid, "parent"))
            edges.append(Edge(wid, gid))
        edges.append(Edge(gid, "combiner"))
    ops.append(Operator("combiner", "combiner"))
    ops.append(Operator("sink", "sink"))
    edges.append(Edge("combiner", "sink"))

    rank = {k: i for i, k in enumerate(KIND_ORDER)}
    ops.sort(key=lambda op: rank[op.kind])  # stable: keeps document order within a kind
    return ExecutablePlan(plan, ops, edges, heads)
