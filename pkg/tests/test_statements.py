import pytest
import rdflib
from hypothesis import given, settings
from hypothesis import strategies as st

from siso.counters import Counters
from siso.ingestion import DataItem, ItemGenerator, RawRecord
from siso.mapping import PredicateObjectMap, SourceSpec, TermMap, TriplesMapSpec, parse_mapping
from siso.statements import (
    RDFStatement,
    RDFTerm,
    StatementGenerator,
    TermError,
    expand_template,
    generate_statements,
    iri_safe,
    serialize,
)
from siso.window import JoinedItem

SPEED = DataItem({"speed": "123.0", "time": "14:42:00", "id": "lane1"}, 7)
FLOW = DataItem({"flow": "1680", "time": "14:42:00", "id": "lane1"}, 9)
GOLDEN = (
    "<http://example.com/speed=123.0&time=14%3A42%3A00> <http://example.com/laneFlow> "
    "<http://example.com/flow=1680&time=14%3A42%3A00> .\n"
)


def test_templates_expand_with_encoding():
    assert expand_template("speed={speed}&time={time}", SPEED).lexical == "http://example.com/speed=123.0&time=14%3A42%3A00"
    assert expand_template("flow={flow}&time={time}", FLOW).lexical == "http://example.com/flow=1680&time=14%3A42%3A00"


def test_constant_template_literal_is_unchanged():
    assert expand_template("constant", SPEED, "literal") == RDFTerm("literal", "constant")


def test_literal_templates_are_not_encoded_and_absolute_iris_not_rebased():
    assert expand_template("at {time}", SPEED, "literal").lexical == "at 14:42:00"
    assert expand_template("http://x.org/{id}", SPEED).lexical == "http://x.org/lane1"


def test_missing_attribute_raises_term_error():
    with pytest.raises(TermError):
        expand_template("{nope}", SPEED)


def test_iri_safe_keeps_unreserved_and_ucs():
    assert iri_safe("a-b._~Z9") == "a-b._~Z9"
    assert iri_safe("é/ä b") == "é%2Fä%20b"
    assert iri_safe("\ud800") == "%ED%A0%80"
    assert iri_safe("a\u00a0b\u3000") == "a%C2%A0b%E3%80%80"


def test_joined_pair_gives_exactly_the_golden_line(join_mapping_text):
    plan = parse_mapping(join_mapping_text)
    speed_map, flow_map = plan.triples_maps
    (_, join), = plan.joins
    c = Counters()
    stmts = StatementGenerator(speed_map, plan, counters=c).from_join(JoinedItem(SPEED, FLOW, "lane1", 0, join))
    assert [serialize(s) for s in stmts] == [GOLDEN]
    assert stmts[0].t == SPEED.t  # event time follows the child
    assert generate_statements(flow_map, FLOW, plan) == []  # subject-only map
    assert generate_statements(speed_map, SPEED, plan) == []  # join-only map
    assert c["statements_generated"] == 1


def _map(poms, classes=()):
    return TriplesMapSpec("M", SourceSpec("tcp://h:1"), "$", "jsonpath", TermMap("template", "lane/{id}"),
                          tuple(poms), tuple(classes))


def test_two_poms_share_one_subject():
    poms = [
        PredicateObjectMap(TermMap("constant", "http://example.com/speed"), TermMap("reference", "speed", "literal")),
        PredicateObjectMap(TermMap("constant", "http://example.com/time"), TermMap("reference", "time", "literal")),
    ]
    a, b = generate_statements(_map(poms), SPEED)
    assert a.subject == b.subject == RDFTerm("iri", "http://example.com/lane/lane1")
    assert (a.object.lexical, b.object.lexical) == ("123.0", "14:42:00")


def test_count_law_with_skips():
    poms = [
        PredicateObjectMap(TermMap("constant", "http://example.com/speed"), TermMap("reference", "speed", "literal")),
        PredicateObjectMap(TermMap("constant", "http://example.com/x"), TermMap("reference", "missing", "literal")),
    ]
    c = Counters()
    gen = StatementGenerator(_map(poms), counters=c)
    items = [SPEED, DataItem({"speed": "1"}, 0), DataItem({"id": "x"}, 0)]
    out = [s for it in items for s in gen(it)]
    assert c["statements_generated"] == len(items) * len(poms)
    assert len(out) == c["statements_generated"] - c["statements_skipped"]
    assert c["statements_skipped"] == 5


def test_class_statements():
    (st_,) = generate_statements(_map([], ["http://example.com/Lane"]), SPEED)
    assert serialize(st_) == (
        "<http://example.com/lane/lane1> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> "
        "<http://example.com/Lane> .\n"
    )


def test_literal_escaping():
    stmt = RDFStatement(RDFTerm("iri", "http://s"), RDFTerm("iri", "http://p"), RDFTerm("literal", 'sa"y'))
    assert serialize(stmt) == '<http://s> <http://p> "sa\\"y" .\n'
    stmt = RDFStatement(RDFTerm("iri", "http://s"), RDFTerm("iri", "http://p"), RDFTerm("literal", "a\\b\nc\td\x01"))
    assert serialize(stmt) == '<http://s> <http://p> "a\\\\b\\nc\\td\\u0001" .\n'


def test_nquads_ts_graph_term():
    stmt = RDFStatement(RDFTerm("iri", "http://s"), RDFTerm("iri", "http://p"), RDFTerm("iri", "http://o"),
                        1700000000000)
    assert serialize(stmt, "nquads_ts").endswith("<urn:ts:1700000000000> .\n")


def test_unknown_format():
    with pytest.raises(ValueError):
        serialize(RDFStatement(RDFTerm("iri", "a:"), RDFTerm("iri", "a:"), RDFTerm("iri", "a:")), "turtle")


def test_determinism():
    poms = [PredicateObjectMap(TermMap("constant", "http://example.com/p"), TermMap("reference", "speed", "literal"))]
    a = [serialize(s) for s in generate_statements(_map(poms), SPEED)]
    b = [serialize(s) for s in generate_statements(_map(poms), SPEED)]
    assert a == b


@settings(max_examples=300, deadline=None)
@given(value=st.text(max_size=30), key=st.text(min_size=1, max_size=10))
def test_every_line_parses_under_independent_ntriples_and_nquads_parsers(value, key):
    poms = [PredicateObjectMap(TermMap("constant", "http://example.com/v"), TermMap("reference", "v", "literal"))]
    tm = TriplesMapSpec("M", SourceSpec("tcp://h:1"), "$", "jsonpath", TermMap("template", "k/{id}"), tuple(poms))
    (stmt,) = generate_statements(tm, DataItem({"id": key, "v": value}, 42))
    line = serialize(stmt)
    g = rdflib.Graph().parse(data=line, format="nt")
    ((s, p, o),) = list(g)
    assert str(o) == "".join("\ufffd" if 0xD800 <= ord(ch) <= 0xDFFF else ch for ch in value)
    ds = rdflib.Dataset().parse(data=serialize(stmt, "nquads_ts"), format="nquads")
    assert [str(q[3]) for q in ds.quads()] == ["urn:ts:42"]


def test_items_from_generator_to_lines(speed_record):
    (it,) = ItemGenerator("jsonpath")(RawRecord(speed_record, 5, "s"))
    poms = [PredicateObjectMap(TermMap("constant", "http://example.com/speed"), TermMap("reference", "speed", "literal"))]
    (stmt,) = generate_statements(_map(poms), it)
    assert serialize(stmt) == '<http://example.com/lane/lane1> <http://example.com/speed> "123.0" .\n'
