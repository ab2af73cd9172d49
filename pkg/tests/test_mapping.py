import pytest
import rdflib
from rdflib.compare import isomorphic

from siso.mapping import (
    JoinSpec,
    MappingError,
    MappingPlan,
    PlanError,
    PredicateObjectMap,
    SourceSpec,
    TermMap,
    TriplesMapSpec,
    TurtleSyntaxError,
    compile_plan,
    dump_mapping,
    parse_mapping,
    validate_plan,
)
from siso.mapping.turtle import parse_turtle
from siso.mapping.vocab import default_prefixes

# -- parse_mapping -------------------------------------------------------------


def test_join_mapping_parses_to_two_maps_and_one_join(join_mapping_text):
    plan = parse_mapping(join_mapping_text)
    assert [tm.id for tm in plan.triples_maps] == ["NDWSpeedMap", "NDWFlowMap"]
    speed, flow = plan.triples_maps
    assert speed.source == SourceSpec("ws://data-streamer:9001", "json", "readproperty")
    assert flow.source == SourceSpec("ws://data-streamer:9000", "json", "readproperty")
    assert speed.iterator == flow.iterator == "$"
    assert speed.reference_formulation == "jsonpath"
    assert speed.subject == TermMap("template", "speed={speed}&time={time}", "iri")
    assert flow.subject == TermMap("template", "flow={flow}&time={time}", "iri")
    assert flow.predicate_object_maps == ()
    assert plan.joins == [("NDWSpeedMap", JoinSpec("NDWFlowMap", "id", "id", "tumbling", "tumbling_join"))]
    (pom,) = speed.predicate_object_maps
    assert pom.predicate == TermMap("constant", "http://example.com/laneFlow", "iri")
    assert [s.target for s in plan.sources] == ["ws://data-streamer:9001", "ws://data-streamer:9000"]


def test_empty_document_has_no_triples_map():
    with pytest.raises(MappingError, match="no triples map found"):
        parse_mapping("")


def test_dangling_parent_reference_is_named(join_mapping_text):
    text = join_mapping_text.replace("rr:parentTriplesMap <NDWFlowMap>", "rr:parentTriplesMap <Missing>")
    with pytest.raises(MappingError, match="dangling parentTriplesMap reference <Missing>") as exc:
        parse_mapping(text)
    assert exc.value.line is not None and exc.value.col is not None


def test_unknown_predicate_is_rejected_with_position(join_mapping_text):
    text = join_mapping_text.replace("rml:iterator \"$\" ] ; # one item", "rml:iterate \"$\" ] ; # Iterates")
    with pytest.raises(MappingError, match="unknown vocabulary term") as exc:
        parse_mapping(text)
    assert exc.value.line == 18


def test_syntax_error_reports_line_and_col():
    with pytest.raises(TurtleSyntaxError) as exc:
        parse_mapping("<A> a rr:TriplesMap ;\n  rr:subjectMap [ rr:template \"x\" .\n")
    assert exc.value.line == 2


def test_unknown_prefix():
    with pytest.raises(TurtleSyntaxError, match="unknown prefix 'zz:'"):
        parse_mapping("<A> zz:p <B> .")


def test_unsupported_scheme_and_content_type(join_mapping_text):
    with pytest.raises(MappingError, match="scheme"):
        parse_mapping(join_mapping_text.replace("ws://data-streamer:9001", "http://data-streamer:9001"))
    with pytest.raises(MappingError, match="unsupported content type"):
        parse_mapping(join_mapping_text.replace('"application/json" ; # payload is JSON', '"text/xml" ;'))


def test_numeric_and_typed_literals_are_rejected():
    with pytest.raises(TurtleSyntaxError, match="numeric"):
        parse_mapping("<A> rr:template 12 .")
    with pytest.raises(TurtleSyntaxError, match="datatyped"):
        parse_mapping('<A> rr:template "x"@en .')


def test_dynamic_window_types(join_mapping_text):
    text = join_mapping_text.replace("rmls:TumblingJoin", "rmls:DynamicJoin").replace(
        "rmls:TumblingWindow", "rmls:DynamicWindow"
    )
    (_, join), = parse_mapping(text).joins
    assert (join.window_type, join.join_type) == ("dynamic", "dynamic_join")


def test_functions_and_classes_parse():
    text = """
    _:s a td:Thing ; td:hasPropertyAffordance [ td:hasForm [ hctl:hasTarget "tcp://localhost:1" ;
        hctl:forContentType "application/json" ; hctl:hasOperationType "readproperty" ] ] .
    <M> a rr:TriplesMap ;
      rml:logicalSource [ rml:source _:s ; rml:referenceFormulation ql:JSONPath ; rml:iterator "$.list[*]" ] ;
      rr:subjectMap [ rr:template "lane/{ID}" ; rr:class <http://example.com/Lane> ] ;
      rr:predicateObjectMap [ rr:predicate <http://example.com/v> ; rr:objectMap [ rml:reference "v" ] ] ;
      rmls:function [ rmls:functionName "uppercase" ; rmls:parameter "id" ; rmls:output "ID" ] .
    """
    plan = parse_mapping(text)
    (tm,) = plan.triples_maps
    assert tm.iterator == "$.list[*]"
    assert tm.classes == ("http://example.com/Lane",)
    assert tm.predicate_object_maps[0].object == TermMap("reference", "v", "literal")
    assert [(m, f.name, f.params, f.output) for m, f in plan.function_calls] == [("M", "uppercase", ("id",), "ID")]


# -- turtle subset vs an independent parser ------------------------------------


def _to_graph(triples) -> rdflib.Graph:
    g = rdflib.Graph()

    def conv(n):
        if n.kind == "iri":
            return rdflib.URIRef(n.value)
        if n.kind == "bnode":
            return rdflib.BNode(n.value)
        return rdflib.Literal(n.value)

    for t in triples:
        g.add((conv(t.subject), conv(t.predicate), conv(t.object)))
    return g


def test_turtle_subset_agrees_with_rdflib(join_mapping_text):
    base = "http://example.org/doc/"
    prefixes = default_prefixes()
    header = "".join(f"@prefix {p}: <{ns}> .\n" for p, ns in prefixes.items())
    ours = _to_graph(parse_turtle(join_mapping_text, prefixes, base))
    theirs = rdflib.Graph().parse(data=header + join_mapping_text, format="turtle", publicID=base)
    assert len(ours) == len(theirs) > 30
    assert isomorphic(ours, theirs)


def test_turtle_escapes_and_long_strings_agree_with_rdflib():
    text = '<s> <p> "a\\"b\\\\c\\n" , \'single\' , """long\n"quoted" text""" , "\\u00e9" .\n'
    ours = _to_graph(parse_turtle(text, {}, "http://x/"))
    theirs = rdflib.Graph().parse(data=text, format="turtle", publicID="http://x/")
    assert isomorphic(ours, theirs)


# -- validate_plan ---------------------------------------------------------------


def _map(mid, target, template="x={id}", poms=(), functions=()):
    return TriplesMapSpec(mid, SourceSpec(target), "$", "jsonpath", TermMap("template", template), tuple(poms),
                          (), tuple(functions))


def _join_pom(parent):
    return PredicateObjectMap(TermMap("constant", "http://example.com/p"), JoinSpec(parent, "id", "id"))


def test_join_mapping_validates_clean(join_mapping_text):
    report = validate_plan(parse_mapping(join_mapping_text))
    assert report.errors == []


def test_join_cycle_is_one_error():
    a = _map("A", "tcp://h:1", poms=[_join_pom("B")])
    b = _map("B", "tcp://h:2", poms=[_join_pom("A")])
    report = validate_plan(MappingPlan((a, b)))
    cyc = [f for f in report.errors if "cyclic join dependency" in f.message]
    assert len(cyc) == 1


def test_unbalanced_template_braces():
    report = validate_plan(MappingPlan((_map("A", "tcp://h:1", template="speed={speed"),)))
    assert [f.message for f in report.errors] == ["unbalanced template braces"]


def test_empty_placeholder_and_relative_constant():
    pom = PredicateObjectMap(TermMap("constant", "relative/iri"), TermMap("reference", "v", "literal"))
    report = validate_plan(MappingPlan((_map("A", "tcp://h:1", template="a={}", poms=[pom]),)))
    msgs = " | ".join(f.message for f in report.errors)
    assert "empty template placeholder" in msgs
    assert "absolute" in msgs


def test_join_needs_distinct_source():
    a = _map("A", "tcp://h:1", poms=[_join_pom("B")])
    b = _map("B", "tcp://h:1")
    report = validate_plan(MappingPlan((a, b)))
    assert any("distinct" in f.message for f in report.errors)


def test_unknown_function_is_rejected_at_validation():
    from siso.mapping.model import FunctionBinding

    fb = FunctionBinding("reverse", ("id",), "out")
    report = validate_plan(MappingPlan((_map("A", "tcp://h:1", functions=[fb]),)))
    assert any("reverse" in f.message for f in report.errors)


def test_unused_declared_source_is_a_warning(join_mapping_text):
    extra = '_:unused a td:Thing ; td:hasPropertyAffordance [ td:hasForm [ hctl:hasTarget "tcp://h:9" ; ' \
            'hctl:forContentType "application/json" ; hctl:hasOperationType "readproperty" ] ] .\n'
    report = validate_plan(parse_mapping(extra + join_mapping_text))
    assert report.ok
    assert len(report.warnings) == 1


# -- compile_plan ------------------------------------------------------------------


def test_join_mapping_dag_shape(join_mapping_text):
    ex = compile_plan(parse_mapping(join_mapping_text))
    kinds = [op.kind for op in ex.operators]
    assert kinds.count("source") == 2
    assert kinds.count("item_generator") == 2
    assert kinds.count("window") == 1
    assert kinds.count("statement_generator") == 2
    assert kinds.count("combiner") == kinds.count("sink") == 1
    (win,) = ex.of_kind("window")
    assert win.join.child_attr == win.join.parent_attr == "id"
    roles = {e.role: e.src for e in ex.predecessors(win.id)}
    assert set(roles) == {"child", "parent"}
    assert ex[roles["child"]].source.target.endswith(":9001")
    assert [e.dst for e in ex.successors(win.id)] == ["map:NDWSpeedMap"]
    # the speed map only emits through the join; the flow map is subject-only
    assert [e.src for e in ex.predecessors("map:NDWSpeedMap")] == [win.id]
    assert [e.dst for e in ex.successors("combiner")] == ["sink"]
    text = ex.explain()
    assert "window0: tumbling window" in text and "-> map:NDWSpeedMap" in text


def test_join_free_dag_has_no_window():
    ex = compile_plan(MappingPlan((_map("A", "tcp://h:1"),)))
    assert ex.of_kind("window") == []
    assert [e.dst for e in ex.successors("items0")] == ["map:A"]


def test_two_independent_joins_get_two_windows():
    maps = (
        _map("A", "tcp://h:1", poms=[_join_pom("B")]),
        _map("B", "tcp://h:2"),
        _map("C", "tcp://h:3", poms=[_join_pom("D")]),
        _map("D", "tcp://h:4"),
    )
    ex = compile_plan(MappingPlan(maps))
    wins = ex.of_kind("window")
    assert len(wins) == 2
    assert {w.map_id for w in wins} == {"A", "C"}
    assert {w.join.parent_map_id for w in wins} == {"B", "D"}
    assert wins[0].id != wins[1].id


def test_compile_propagates_validation_errors():
    with pytest.raises(PlanError, match="unbalanced template braces"):
        compile_plan(MappingPlan((_map("A", "tcp://h:1", template="{x"),)))


def test_shared_source_reuses_ingestion_chain():
    maps = (_map("A", "tcp://h:1"), _map("B", "tcp://h:1", template="y={id}"))
    ex = compile_plan(MappingPlan(maps))
    assert len(ex.of_kind("source")) == 1
    assert len(ex.of_kind("item_generator")) == 1


# -- writer round trip ---------------------------------------------------------------


def test_dump_then_parse_round_trips(join_mapping_text):
    plan = parse_mapping(join_mapping_text)
    again = parse_mapping(dump_mapping(plan))
    assert again == plan


def test_round_trip_with_functions_literals_and_classes():
    from siso.mapping.model import FunctionBinding

    tm = TriplesMapSpec(
        "http://example.com/M",
        SourceSpec("file:data/x.csv", "csv"),
        "",
        "csv",
        TermMap("template", 'a\\{b}={v}"q"'),
        (PredicateObjectMap(TermMap("constant", "http://example.com/p"), TermMap("constant", "lit\n", "literal")),
         PredicateObjectMap(TermMap("template", "http://example.com/{p}"), TermMap("reference", "v", "iri"))),
        ("http://example.com/C",),
        (FunctionBinding("concat", ("a", "b"), "ab"),),
    )
    plan = MappingPlan((tm,))
    assert parse_mapping(dump_mapping(plan)) == plan
