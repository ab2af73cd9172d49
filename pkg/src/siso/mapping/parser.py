"""Build a :class:`MappingPlan` from mapping document text."""
from __future__ import annotations

from collections import defaultdict

from . import vocab as V
from .model import (
    DEFAULT_BASE_IRI,
    SUPPORTED_SCHEMES,
    FunctionBinding,
    JoinSpec,
    MappingPlan,
    PredicateObjectMap,
    SourceSpec,
    TermMap,
    TriplesMapSpec,
    url_scheme,
)
from .turtle import MappingError, Node, Triple, parse_turtle


class _Graph:
    def __init__(self, triples: list[Triple]):
        self.by_subject: dict[Node, list[Triple]] = defaultdict(list)
        for t in triples:
            self.by_subject[t.subject].append(t)

    def values(self, node: Node, pred: str) -> list[Triple]:
        return [t for t in self.by_subject.get(node, ()) if t.predicate.value == pred]

    def one(self, node: Node, pred: str, what: str, required: bool = True) -> Triple | None:
        found = self.values(node, pred)
        if len(found) > 1:
            t = found[1]
            raise MappingError(f"more than one {what}", t.line, t.col)
        if not found:
            if required:
                raise MappingError(f"missing {what} on {node}")
            return None
        return found[0]

    def types(self, node: Node) -> set[str]:
        return {t.object.value for t in self.values(node, V.RDF + "type")}


def _node_id(node: Node) -> str:
    return node.value if node.kind == "iri" else "_:" + node.value


class _Builder:
    def __init__(self, triples: list[Triple], base_iri: str, rmls: str):
        self.g = _Graph(triples)
        self.base_iri = base_iri
        self.rmls = rmls
        self._sources: dict[Node, SourceSpec] = {}

    def build(self) -> MappingPlan:
        map_nodes: list[Node] = []
        for node, triples in self.g.by_subject.items():
            preds = {t.predicate.value for t in triples}
            if V.RR + "TriplesMap" in self.g.types(node) or V.RML + "logicalSource" in preds:
                map_nodes.append(node)
        if not map_nodes:
            raise MappingError("no triples map found")
        ids = {_node_id(n) for n in map_nodes}
        maps = tuple(self._triples_map(n, ids) for n in map_nodes)
        declared = []
        for node in self.g.by_subject:
            if V.TD + "Thing" in self.g.types(node):
                declared.append(self._source_from_thing(node))
        return MappingPlan(maps, base_iri=self.base_iri, declared_sources=tuple(declared))

    def _triples_map(self, node: Node, ids: set[str]) -> TriplesMapSpec:
        ls_t = self.g.one(node, V.RML + "logicalSource", "rml:logicalSource")
        ls = ls_t.object
        src_t = self.g.one(ls, V.RML + "source", "rml:source")
        source = self._source(src_t)

        rf_t = self.g.one(ls, V.RML + "referenceFormulation", "rml:referenceFormulation", required=False)
        if rf_t is None:
            formulation = V.FORMULATION_FOR_CONTENT[source.content_type]
        else:
            formulation = V.FORMULATIONS.get(rf_t.object.value)
            if formulation is None:
                raise MappingError(f"unsupported reference formulation {rf_t.object}", rf_t.line, rf_t.col)
        if src_t.object.kind == "literal" and rf_t is not None:
            source = SourceSpec(source.target, "csv" if formulation == "csv" else "json")
        it_t = self.g.one(ls, V.RML + "iterator", "rml:iterator", required=False)
        iterator = it_t.object.value if it_t is not None else ""

        subjects = self.g.values(node, V.RR + "subjectMap") + self.g.values(node, V.RR + "subject")
        if len(subjects) != 1:
            where = subjects[1] if subjects else None
            raise MappingError(
                f"triples map {node} must have exactly one subject map",
                where.line if where else None,
                where.col if where else None,
            )
        st = subjects[0]
        classes: tuple[str, ...] = ()
        if st.predicate.value == V.RR + "subject":
            subject = self._constant(st.object, default_kind="iri")
        else:
            subject = self._term_map(st.object, default_kind="iri", role="subject")
            classes = tuple(t.object.value for t in self.g.values(st.object, V.RR + "class"))

        poms = []
        for pt in self.g.values(node, V.RR + "predicateObjectMap"):
            poms.extend(self._pom(pt.object, ids))

        functions = tuple(self._function(t) for t in self.g.values(node, self.rmls + "function"))
        return TriplesMapSpec(
            id=_node_id(node),
            source=source,
            iterator=iterator,
            reference_formulation=formulation,
            subject=subject,
            predicate_object_maps=tuple(poms),
            classes=classes,
            functions=functions,
        )

    def _source(self, t: Triple) -> SourceSpec:
        node = t.object
        if node.kind == "literal":
            target = node.value
            if not url_scheme(target) or len(url_scheme(target)) == 1:
                target = "file:" + target
            spec = SourceSpec(target, _content_type_for_path(target))
            self._check_scheme(spec, t)
            return spec
        if node not in self._sources:
            self._sources[node] = self._source_from_thing(node)
        return self._sources[node]

    def _source_from_thing(self, node: Node) -> SourceSpec:
        forms = []
        for aff in self.g.values(node, V.TD + "hasPropertyAffordance"):
            forms.extend(self.g.values(aff.object, V.TD + "hasForm"))
        forms.extend(self.g.values(node, V.TD + "hasForm"))
        if not forms:
            raise MappingError(f"source {node} has no td:hasForm description")
        form = forms[0].object
        target_t = self.g.one(form, V.HCTL + "hasTarget", "hctl:hasTarget")
        ct_t = self.g.one(form, V.HCTL + "forContentType", "hctl:forContentType", required=False)
        op_t = self.g.one(form, V.HCTL + "hasOperationType", "hctl:hasOperationType", required=False)
        if ct_t is None:
            content_type = _content_type_for_path(target_t.object.value)
        else:
            mime = ct_t.object.value.split(";")[0].strip().lower()
            content_type = V.CONTENT_TYPES.get(mime)
            if content_type is None:
                raise MappingError(f"unsupported content type {ct_t.object.value!r}", ct_t.line, ct_t.col)
        operation = "readproperty"
        if op_t is not None:
            operation = op_t.object.value.rsplit("#", 1)[-1].lower()
            if operation != "readproperty":
                raise MappingError(f"unsupported operation type {op_t.object.value!r}", op_t.line, op_t.col)
        spec = SourceSpec(target_t.object.value, content_type, operation)
        self._check_scheme(spec, target_t)
        return spec

    @staticmethod
    def _check_scheme(spec: SourceSpec, t: Triple) -> None:
        if spec.scheme not in SUPPORTED_SCHEMES:
            raise MappingError(
                f"unsupported source scheme {spec.scheme or '(none)'!r} in {spec.target!r}", t.line, t.col
            )

    def _term_map(self, node: Node, default_kind: str, role: str) -> TermMap:
        if node.kind == "literal":
            raise MappingError(f"{role} map must be a node, found literal {node}")
        found = []
        for pred, kind in (("template", "template"), ("constant", "constant")):
            found += [(kind, t) for t in self.g.values(node, V.RR + pred)]
        found += [("reference", t) for t in self.g.values(node, V.RML + "reference")]
        if len(found) != 1:
            where = found[1][1] if found else None
            raise MappingError(
                f"{role} map {node} needs exactly one of rr:template, rml:reference, rr:constant",
                where.line if where else None,
                where.col if where else None,
            )
        kind, t = found[0]
        if kind == "constant":
            term = self._constant(t.object, default_kind)
        else:
            if t.object.kind != "literal":
                raise MappingError(f"{kind} value must be a string literal", t.line, t.col)
            if role == "object" and kind == "reference":
                default_kind = "literal"
            term = TermMap(kind, t.object.value, default_kind)
        tt = self.g.one(node, V.RR + "termType", "rr:termType", required=False)
        if tt is not None:
            term_kind = {V.RR + "IRI": "iri", V.RR + "Literal": "literal"}.get(tt.object.value)
            if term_kind is None:
                raise MappingError(f"unsupported term type {tt.object}", tt.line, tt.col)
            if term_kind == "literal" and role != "object":
                raise MappingError(f"{role} map cannot be a literal", tt.line, tt.col)
            term = TermMap(term.kind, term.value, term_kind)
        return term

    @staticmethod
    def _constant(node: Node, default_kind: str) -> TermMap:
        if node.kind == "literal":
            return TermMap("constant", node.value, "literal")
        if node.kind == "bnode":
            raise MappingError("blank node constants are not supported")
        return TermMap("constant", node.value, "iri")

    def _pom(self, node: Node, ids: set[str]) -> list[PredicateObjectMap]:
        preds = [self._constant(t.object, "iri") for t in self.g.values(node, V.RR + "predicate")]
        preds += [
            self._term_map(t.object, "iri", "predicate") for t in self.g.values(node, V.RR + "predicateMap")
        ]
        objs: list = [self._constant(t.object, "iri") for t in self.g.values(node, V.RR + "object")]
        for t in self.g.values(node, V.RR + "objectMap"):
            if self.g.values(t.object, V.RR + "parentTriplesMap"):
                objs.append(self._join(t.object, ids))
            else:
                objs.append(self._term_map(t.object, "iri", "object"))
        if not preds or not objs:
            raise MappingError(f"predicate-object map {node} needs a predicate and an object")
        return [PredicateObjectMap(p, o) for p in preds for o in objs]

    def _join(self, node: Node, ids: set[str]) -> JoinSpec:
        ptm = self.g.one(node, V.RR + "parentTriplesMap", "rr:parentTriplesMap")
        parent_id = _node_id(ptm.object)
        if ptm.object.kind == "literal" or parent_id not in ids:
            raise MappingError(f"dangling parentTriplesMap reference {ptm.object}", ptm.line, ptm.col)
        conds = self.g.values(node, V.RR + "joinCondition")
        if len(conds) != 1:
            where = conds[1] if conds else ptm
            raise MappingError("a join needs exactly one rr:joinCondition", where.line, where.col)
        cond = conds[0].object
        child = self.g.one(cond, V.RR + "child", "rr:child")
        parent = self.g.one(cond, V.RR + "parent", "rr:parent")

        window_type = join_type = None
        wt = self.g.one(node, self.rmls + "windowType", "rmls:windowType", required=False)
        if wt is not None:
            window_type = {self.rmls + "TumblingWindow": "tumbling", self.rmls + "DynamicWindow": "dynamic"}.get(
                wt.object.value
            )
            if window_type is None:
                raise MappingError(f"unknown window type {wt.object}", wt.line, wt.col)
        jc = self.g.one(node, self.rmls + "joinConfig", "rmls:joinConfig", required=False)
        if jc is not None:
            jt = self.g.one(jc.object, self.rmls + "joinType", "rmls:joinType", required=False)
            if jt is not None:
                join_type = {self.rmls + "TumblingJoin": "tumbling_join", self.rmls + "DynamicJoin": "dynamic_join"}.get(
                    jt.object.value
                )
                if join_type is None:
                    raise MappingError(f"unknown join type {jt.object}", jt.line, jt.col)
        if window_type is None and join_type is None:
            window_type, join_type = "dynamic", "dynamic_join"
        elif window_type is None:
            window_type = join_type.split("_")[0]
        elif join_type is None:
            join_type = window_type + "_join"
        return JoinSpec(parent_id, child.object.value, parent.object.value, window_type, join_type)

    def _function(self, t: Triple) -> FunctionBinding:
        node = t.object
        name = self.g.one(node, self.rmls + "functionName", "rmls:functionName")
        out = self.g.one(node, self.rmls + "output", "rmls:output")
        params = tuple(p.object.value for p in self.g.values(node, self.rmls + "parameter"))
        return FunctionBinding(name.object.value, params, out.object.value)


def _content_type_for_path(target: str) -> str:
    return "csv" if target.lower().endswith(".csv") else "json"


def parse_mapping(
    document_text: str,
    base_iri: str = DEFAULT_BASE_IRI,
    rmls_namespace: str = V.RMLS_DEFAULT,
    document_base: str = "",
) -> MappingPlan:
    """Parse a mapping document into a :class:`MappingPlan`.

    The well-known prefixes ``rr rml ql td hctl rmls rdf`` are predeclared,
    so documents may omit them.  Raises :class:`MappingError` (with line and
    column where available) for syntax errors, terms outside the supported
    vocabulary, dangling ``rr:parentTriplesMap`` references and unsupported
    source schemes or content types.
    """
    triples = parse_turtle(document_text, V.default_prefixes(rmls_namespace), document_base)
    allowed = V.supported_predicates(rmls_namespace)
    for t in triples:
        if t.predicate.value not in allowed:
            raise MappingError(f"unknown vocabulary term {t.predicate}", t.line, t.col)
    return _Builder(triples, base_iri, rmls_namespace).build()
