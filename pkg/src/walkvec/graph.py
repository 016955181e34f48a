"""Property graphs built from RDF triples.

The graph model is a directed multigraph: nodes are interned IRIs, edges
carry a predicate label, and nodes may have any number of type labels.
Triples whose predicate is a *type predicate* contribute type labels
instead of edges.
"""

from __future__ import annotations

import logging
import pickle
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, TextIO

logger = logging.getLogger(__name__)

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"

_SNAPSHOT_MAGIC = b"WVPG"
_SNAPSHOT_VERSION = 1


class ParseError(ValueError):
    """Malformed N-Triples input, carrying the line number and text."""

    def __init__(self, lineno: int, line: str, reason: str = "malformed statement"):
        super().__init__(f"line {lineno}: {reason}: {line.strip()!r}")
        self.lineno = lineno
        self.line = line


@dataclass(frozen=True)
class Literal:
    value: str
    datatype: str | None = None


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: str | Literal


class Edge(NamedTuple):
    start: int
    label: str
    end: int


# N-Triples subset: IRI refs, plain or datatyped string literals, whole-line
# comments. No blank nodes, language tags, or other serializations.
_IRI = r"<([^<>\s\"{}|^`\\]+)>"
_LIT = r'"((?:[^"\\\n\r]|\\.)*)"(?:\^\^<([^<>\s\"{}|^`\\]+)>)?'
_STATEMENT_RE = re.compile(
    rf"^[ \t]*{_IRI}[ \t]+{_IRI}[ \t]+(?:{_IRI}|{_LIT})[ \t]*\.[ \t]*$"
)

_UNESCAPE_RE = re.compile(r"\\(?:u([0-9A-Fa-f]{4})|U([0-9A-Fa-f]{8})|(.))")
_SIMPLE_ESCAPES = {
    "t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f",
    '"': '"', "'": "'", "\\": "\\",
}
_ESCAPE_MAP = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _unescape(raw: str) -> str:
    def sub(m: re.Match) -> str:
        if m.group(1) is not None:
            return chr(int(m.group(1), 16))
        if m.group(2) is not None:
            return chr(int(m.group(2), 16))
        ch = _SIMPLE_ESCAPES.get(m.group(3))
        if ch is None:
            raise ValueError(f"invalid escape: \\{m.group(3)}")
        return ch

    return _UNESCAPE_RE.sub(sub, raw)


def escape_literal(value: str) -> str:
    return "".join(_ESCAPE_MAP.get(ch, ch) for ch in value)


def parse_ntriples(source: str | TextIO | Iterable[str], lenient: bool = False) -> Iterator[Triple]:
    """Parse an N-Triples stream, yielding one Triple per statement line.

    In strict mode (default) a malformed line raises ParseError; in lenient
    mode it is skipped with a logged warning.
    """
    lines = source.splitlines() if isinstance(source, str) else source
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _STATEMENT_RE.match(line)
        if m is None:
            err = ParseError(lineno, line)
            if lenient:
                logger.warning("skipping %s", err)
                continue
            raise err
        subj, pred, obj_iri, lit_raw, lit_dt = m.groups()
        if obj_iri is not None:
            obj: str | Literal = obj_iri
        else:
            try:
                obj = Literal(_unescape(lit_raw), lit_dt)
            except ValueError as exc:
                err = ParseError(lineno, line, str(exc))
                if lenient:
                    logger.warning("skipping %s", err)
                    continue
                raise err from exc
        yield Triple(subj, pred, obj)


def _literal_node_name(lit: Literal) -> str:
    # Quoted form keeps literal nodes distinct from IRI nodes; whitespace is
    # folded so the name survives the space-separated corpus format.
    name = f'"{escape_literal(lit.value)}"'
    if lit.datatype:
        name += f"^^<{lit.datatype}>"
    return re.sub(r"\s", "_", name)


class PropertyGraph:
    """Directed multigraph with interned node IRIs and labeled edges.

    Immutable by convention once built; builders are the only writers.
    """

    def __init__(self) -> None:
        self._iris: list[str] = []
        self._ids: dict[str, int] = {}
        self.node_types: dict[int, set[str]] = {}
        self.edges: list[Edge] = []
        self.adjacency: list[list[int]] = []
        self.literals: dict[int, Literal] = {}

    @property
    def num_nodes(self) -> int:
        return len(self._iris)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def nodes(self) -> range:
        return range(len(self._iris))

    def iri(self, node: int) -> str:
        return self._iris[node]

    def node_id(self, iri: str) -> int:
        return self._ids[iri]

    def __contains__(self, iri: str) -> bool:
        return iri in self._ids

    def intern(self, iri: str) -> int:
        node = self._ids.get(iri)
        if node is None:
            node = len(self._iris)
            self._ids[iri] = node
            self._iris.append(iri)
            self.adjacency.append([])
        return node

    def add_type(self, node: int, label: str) -> None:
        self.node_types.setdefault(node, set()).add(label)

    def add_edge(self, start: int, label: str, end: int) -> int:
        idx = len(self.edges)
        self.edges.append(Edge(start, label, end))
        self.adjacency[start].append(idx)
        return idx

    def types(self, node: int) -> set[str]:
        return self.node_types.get(node, set())

    def out_edges(self, node: int) -> list[Edge]:
        return [self.edges[i] for i in self.adjacency[node]]

    def out_degree(self, node: int) -> int:
        return len(self.adjacency[node])


@dataclass(frozen=True)
class GraphStats:
    predicate_freq: dict[str, int] = field(default_factory=dict)
    in_degree: dict[int, int] = field(default_factory=dict)


def build_graph(
    triples: Iterable[Triple],
    type_predicates: set[str] | None = None,
    literal_policy: str = "drop",
) -> PropertyGraph:
    """Assemble a walkable property graph from triples.

    Type-predicate triples populate node types and create no edge. Literal
    objects are dropped (default) or kept as terminal nodes
    (``literal_policy="as-terminal-node"``).
    """
    if type_predicates is None:
        type_predicates = {RDF_TYPE}
    if not type_predicates:
        raise ValueError("type_predicates must be non-empty")
    if literal_policy not in ("drop", "as-terminal-node"):
        raise ValueError(f"unknown literal_policy: {literal_policy!r}")

    graph = PropertyGraph()
    for t in triples:
        subj = graph.intern(t.subject)
        if isinstance(t.object, Literal):
            if literal_policy == "drop":
                continue
            obj = graph.intern(_literal_node_name(t.object))
            graph.literals.setdefault(obj, t.object)
            graph.add_edge(subj, t.predicate, obj)
        elif t.predicate in type_predicates:
            graph.add_type(subj, t.object)
        else:
            graph.add_edge(subj, t.predicate, graph.intern(t.object))
    return graph


def compute_stats(graph: PropertyGraph) -> GraphStats:
    """Edge-label frequencies and node in-degrees over the whole graph."""
    predicate_freq: Counter[str] = Counter()
    in_degree: Counter[int] = Counter()
    for edge in graph.edges:
        predicate_freq[edge.label] += 1
        in_degree[edge.end] += 1
    return GraphStats(dict(predicate_freq), dict(in_degree))


def graph_to_triples(graph: PropertyGraph, type_predicate: str = RDF_TYPE) -> Iterator[Triple]:
    """Serialize a graph back to triples (type triples first, then edges)."""
    for node in graph.nodes():
        for label in sorted(graph.types(node)):
            yield Triple(graph.iri(node), type_predicate, label)
    for edge in graph.edges:
        lit = graph.literals.get(edge.end)
        obj: str | Literal = lit if lit is not None else graph.iri(edge.end)
        yield Triple(graph.iri(edge.start), edge.label, obj)


def write_ntriples(triples: Iterable[Triple], sink: TextIO) -> None:
    for t in triples:
        if isinstance(t.object, Literal):
            obj = f'"{escape_literal(t.object.value)}"'
            if t.object.datatype:
                obj += f"^^<{t.object.datatype}>"
        else:
            obj = f"<{t.object}>"
        sink.write(f"<{t.subject}> <{t.predicate}> {obj} .\n")


def save_graph(graph: PropertyGraph, path: str) -> None:
    """Write a versioned binary snapshot of the graph."""
    payload = {
        "iris": graph._iris,
        "types": {n: sorted(ts) for n, ts in graph.node_types.items()},
        "edges": [tuple(e) for e in graph.edges],
        "literals": {n: (lit.value, lit.datatype) for n, lit in graph.literals.items()},
    }
    with open(path, "wb") as fh:
        fh.write(_SNAPSHOT_MAGIC)
        fh.write(_SNAPSHOT_VERSION.to_bytes(2, "little"))
        pickle.dump(payload, fh, protocol=4)


def load_graph(path: str) -> PropertyGraph:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not a graph snapshot")
        version = int.from_bytes(fh.read(2), "little")
        if version != _SNAPSHOT_VERSION:
            raise ValueError(f"{path}: unsupported snapshot version {version}")
        payload = pickle.load(fh)
    graph = PropertyGraph()
    for iri in payload["iris"]:
        graph.intern(iri)
    for node, labels in payload["types"].items():
        for label in labels:
            graph.add_type(node, label)
    for start, label, end in payload["edges"]:
        graph.add_edge(start, label, end)
    for node, (value, datatype) in payload["literals"].items():
        graph.literals[node] = Literal(value, datatype)
    return graph
