import io
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from walkvec.graph import (
    RDF_TYPE,
    Literal,
    ParseError,
    Triple,
    build_graph,
    compute_stats,
    graph_to_triples,
    load_graph,
    parse_ntriples,
    save_graph,
    write_ntriples,
)


def parse_all(text, **kw):
    return list(parse_ntriples(text, **kw))


class TestParseNTriples:
    def test_single_statement(self):
        assert parse_all("<a> <p> <b> .") == [Triple("a", "p", "b")]

    def test_typed_literal(self):
        [t] = parse_all('<a> <p> "5"^^<xsd:int> .')
        assert t == Triple("a", "p", Literal("5", "xsd:int"))

    def test_plain_literal(self):
        [t] = parse_all('<a> <p> "hello world" .')
        assert t.object == Literal("hello world", None)

    def test_missing_object_is_error(self):
        with pytest.raises(ParseError) as exc:
            parse_all("<a> <p>")
        assert exc.value.lineno == 1
        assert "<a> <p>" in str(exc.value)

    def test_error_carries_line_number(self):
        text = "<a> <p> <b> .\n\n# comment\nnot a triple\n"
        with pytest.raises(ParseError) as exc:
            parse_all(text)
        assert exc.value.lineno == 4

    def test_lenient_skips_bad_lines(self):
        text = "<a> <p> <b> .\nbroken\n<b> <q> <c> .\n"
        triples = parse_all(text, lenient=True)
        assert [t.subject for t in triples] == ["a", "b"]

    def test_comments_and_blanks_ignored(self):
        text = "# header\n\n  \n<a> <p> <b> .\n"
        assert len(parse_all(text)) == 1

    def test_escapes_in_literal(self):
        [t] = parse_all(r'<a> <p> "line\nbreak \"quoted\" tab\t" .')
        assert t.object.value == 'line\nbreak "quoted" tab\t'

    def test_empty_iri_rejected(self):
        with pytest.raises(ParseError):
            parse_all("<> <p> <b> .")

    def test_trailing_garbage_rejected(self):
        with pytest.raises(ParseError):
            parse_all("<a> <p> <b> . extra")

    def test_accepts_stream(self):
        triples = list(parse_ntriples(io.StringIO("<a> <p> <b> .\n")))
        assert len(triples) == 1


class TestBuildGraph:
    def test_type_triple_populates_types_no_edge(self):
        g = build_graph([Triple("a", RDF_TYPE, "Person")])
        assert g.num_nodes == 1
        assert g.num_edges == 0
        assert g.types(g.node_id("a")) == {"Person"}

    def test_object_triple_creates_edge(self):
        g = build_graph([Triple("a", "member", "b")])
        assert g.num_nodes == 2
        [e] = g.edges
        assert (g.iri(e.start), e.label, g.iri(e.end)) == ("a", "member", "b")

    def test_literal_dropped_by_default(self):
        g = build_graph([Triple("a", "name", Literal("x"))])
        assert g.num_nodes == 1
        assert g.num_edges == 0

    def test_literal_as_terminal_node(self):
        g = build_graph([Triple("a", "name", Literal("x"))], literal_policy="as-terminal-node")
        assert g.num_edges == 1
        end = g.edges[0].end
        assert g.literals[end] == Literal("x")
        assert g.iri(end) == '"x"'

    def test_literal_terminal_token_has_no_whitespace(self):
        g = build_graph([Triple("a", "name", Literal("two words"))], literal_policy="as-terminal-node")
        assert " " not in g.iri(g.edges[0].end)

    def test_multiple_types_accumulate(self):
        g = build_graph([Triple("a", RDF_TYPE, "Person"), Triple("a", RDF_TYPE, "Student")])
        assert g.types(g.node_id("a")) == {"Person", "Student"}

    def test_custom_type_predicates(self):
        g = build_graph([Triple("a", "isA", "Person")], type_predicates={"isA"})
        assert g.num_edges == 0
        assert g.types(g.node_id("a")) == {"Person"}

    def test_empty_type_predicates_rejected(self):
        with pytest.raises(ValueError):
            build_graph([], type_predicates=set())

    def test_adjacency_matches_edges(self):
        g = build_graph([Triple("a", "p", "b"), Triple("a", "q", "c"), Triple("b", "p", "a")])
        a = g.node_id("a")
        assert [g.edges[i].label for i in g.adjacency[a]] == ["p", "q"]

    def test_self_loop_allowed(self):
        g = build_graph([Triple("a", "p", "a")])
        assert g.num_edges == 1
        assert g.edges[0].start == g.edges[0].end


class TestComputeStats:
    def test_example_counts(self):
        g = build_graph([Triple("a", "p", "b"), Triple("a", "p", "c"), Triple("b", "q", "c")])
        stats = compute_stats(g)
        assert stats.predicate_freq == {"p": 2, "q": 1}
        assert stats.in_degree == {g.node_id("b"): 1, g.node_id("c"): 2}

    def test_empty_graph(self):
        stats = compute_stats(build_graph([]))
        assert stats.predicate_freq == {}
        assert stats.in_degree == {}

    def test_self_loop(self):
        g = build_graph([Triple("a", "p", "a")])
        stats = compute_stats(g)
        assert stats.predicate_freq == {"p": 1}
        assert stats.in_degree == {g.node_id("a"): 1}

    def test_totals_equal_edge_count(self):
        rng = random.Random(5)
        triples = [
            Triple(f"n{rng.randrange(20)}", f"p{rng.randrange(4)}", f"n{rng.randrange(20)}")
            for _ in range(80)
        ]
        g = build_graph(triples)
        stats = compute_stats(g)
        assert sum(stats.predicate_freq.values()) == g.num_edges
        assert sum(stats.in_degree.values()) == g.num_edges

    def test_against_brute_force_on_random_graphs(self):
        # independent oracle: count by looping over the original triples
        for trial in range(20):
            rng = random.Random(trial)
            triples = [
                Triple(f"n{rng.randrange(30)}", f"p{rng.randrange(5)}", f"n{rng.randrange(30)}")
                for _ in range(rng.randrange(1, 100))
            ]
            g = build_graph(triples)
            freq: dict[str, int] = {}
            indeg: dict[int, int] = {}
            for t in triples:
                freq[t.predicate] = freq.get(t.predicate, 0) + 1
                obj = g.node_id(t.object)
                indeg[obj] = indeg.get(obj, 0) + 1
            stats = compute_stats(g)
            assert stats.predicate_freq == freq
            assert stats.in_degree == indeg


def canonical(graph):
    out = []
    for t in graph_to_triples(graph):
        obj = t.object if isinstance(t.object, str) else ("lit", t.object.value, t.object.datatype)
        out.append((t.subject, t.predicate, obj))
    return sorted(out, key=repr)


iri_chars = st.text(alphabet="abcdefgh:/._-", min_size=1, max_size=12).filter(lambda s: s.strip())


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(iri_chars, iri_chars, iri_chars, st.booleans()),
        min_size=0,
        max_size=40,
    )
)
def test_roundtrip_serialize_reparse(rows):
    triples = [
        Triple(s, RDF_TYPE if is_type else p, o if not is_type else o)
        for s, p, o, is_type in rows
    ]
    g = build_graph(triples)
    buf = io.StringIO()
    write_ntriples(graph_to_triples(g), buf)
    g2 = build_graph(parse_ntriples(buf.getvalue()))
    assert canonical(g) == canonical(g2)
    assert g.num_edges == g2.num_edges


def test_roundtrip_with_literals(tmp_path):
    triples = [
        Triple("a", "p", "b"),
        Triple("a", RDF_TYPE, "Person"),
        Triple("b", "note", Literal('says "hi"\nthere', "xsd:string")),
    ]
    g = build_graph(triples, literal_policy="as-terminal-node")
    buf = io.StringIO()
    write_ntriples(graph_to_triples(g), buf)
    g2 = build_graph(parse_ntriples(buf.getvalue()), literal_policy="as-terminal-node")
    assert canonical(g) == canonical(g2)


def test_out_in_degree_sums():
    rng = random.Random(9)
    triples = [
        Triple(f"n{rng.randrange(15)}", "p", f"n{rng.randrange(15)}") for _ in range(60)
    ]
    g = build_graph(triples)
    assert sum(g.out_degree(n) for n in g.nodes()) == g.num_edges
    stats = compute_stats(g)
    assert sum(stats.in_degree.values()) == g.num_edges


class TestSnapshot:
    def test_save_load_roundtrip(self, tmp_path):
        triples = [
            Triple("a", RDF_TYPE, "Person"),
            Triple("a", "member", "b"),
            Triple("b", "note", Literal("x y", "t")),
        ]
        g = build_graph(triples, literal_policy="as-terminal-node")
        path = str(tmp_path / "graph.bin")
        save_graph(g, path)
        g2 = load_graph(path)
        assert canonical(g) == canonical(g2)
        assert g2.adjacency == g.adjacency

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "not_a_graph.bin"
        path.write_bytes(b"nope" + b"\0" * 10)
        with pytest.raises(ValueError, match="not a graph snapshot"):
            load_graph(str(path))
