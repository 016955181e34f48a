"""Weighted random-walk corpus generation.

Walks are rooted at every node. Each hop selects an outgoing edge with
probability proportional to its weight (normalized over the current
node's out-edges). Every walk owns an RNG stream derived from
(seed, root, walk index), so corpora are byte-identical for a fixed seed
regardless of how walks are scheduled across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

from .graph import Edge, PropertyGraph
from .weighting import WeightFn

_SEED_MASK = (1 << 64) - 1

DEPTH_MODES = ("uniform_1_to_max", "fixed")


@dataclass(frozen=True)
class WalkConfig:
    walks_per_node: int = 100
    max_depth: int = 4
    depth_mode: str = "uniform_1_to_max"
    emit_edge_labels: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.walks_per_node < 1:
            raise ValueError("walks_per_node must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.depth_mode not in DEPTH_MODES:
            raise ValueError(f"depth_mode must be one of {DEPTH_MODES}")


@dataclass(frozen=True)
class Walk:
    root: int
    tokens: tuple[str, ...]


class WalkCorpus:
    def __init__(self, walks: list[Walk]):
        self.walks = walks

    def __len__(self) -> int:
        return len(self.walks)

    def __iter__(self) -> Iterator[Walk]:
        return iter(self.walks)

    def sentences(self) -> Iterator[Sequence[str]]:
        for walk in self.walks:
            yield walk.tokens


def _choose(rng: np.random.Generator, cumweights: np.ndarray) -> int:
    """Index drawn with probability proportional to the weight increments."""
    u = rng.random() * cumweights[-1]
    return int(np.searchsorted(cumweights, u, side="right"))


def sample_next_edge(
    rng: np.random.Generator, out_edges: Sequence[Edge], weights: Sequence[float]
) -> Edge:
    """Select one edge with probability weight / sum(weights)."""
    if len(out_edges) == 0:
        raise ValueError("sample_next_edge requires a non-empty edge list")
    if len(out_edges) != len(weights):
        raise ValueError("edges and weights must have equal length")
    w = np.asarray(weights, dtype=float)
    if not (np.all(w > 0) and np.all(np.isfinite(w))):
        raise ValueError("all weights must be positive and finite")
    return out_edges[_choose(rng, np.cumsum(w))]


class _WeightCache:
    """Per-node cumulative weights, computed on first visit.

    Weight functions are pure by contract, so memoization is unobservable.
    Shared across worker threads; a duplicated computation is benign.
    """

    def __init__(self, graph: PropertyGraph, weight_fn: WeightFn):
        self.graph = graph
        self.weight_fn = weight_fn
        self._cum: dict[int, np.ndarray] = {}

    def cumweights(self, node: int) -> np.ndarray:
        cum = self._cum.get(node)
        if cum is None:
            edges = self.graph.out_edges(node)
            w = np.array([self.weight_fn(e, self.graph) for e in edges], dtype=float)
            if w.size and not (np.all(w > 0) and np.all(np.isfinite(w))):
                bad = edges[int(np.argmin((w > 0) & np.isfinite(w)))]
                raise ValueError(f"weight function returned a non-positive or non-finite weight for {bad}")
            cum = np.cumsum(w)
            self._cum[node] = cum
        return cum

    def precompute(self) -> None:
        for node in self.graph.nodes():
            self.cumweights(node)


def _walk_rng(seed: int, root: int, walk_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed & _SEED_MASK, root, walk_index)))


def _one_walk(
    graph: PropertyGraph, cache: _WeightCache, config: WalkConfig, root: int, walk_index: int
) -> Walk:
    rng = _walk_rng(config.seed, root, walk_index)
    if config.depth_mode == "fixed":
        target = config.max_depth
    else:
        target = int(rng.integers(1, config.max_depth + 1))
    tokens = [graph.iri(root)]
    node = root
    for _ in range(target):
        out = graph.adjacency[node]
        if not out:
            break
        idx = out[_choose(rng, cache.cumweights(node))]
        edge = graph.edges[idx]
        if config.emit_edge_labels:
            tokens.append(edge.label)
        tokens.append(graph.iri(edge.end))
        node = edge.end
    return Walk(root, tuple(tokens))


def _walks_for_roots(
    graph: PropertyGraph, cache: _WeightCache, config: WalkConfig, roots: Sequence[int]
) -> list[Walk]:
    walks: list[Walk] = []
    for root in roots:
        if not graph.adjacency[root]:
            # A rootless sink still needs a vocabulary entry: emit one
            # single-token walk instead of walks_per_node copies.
            walks.append(Walk(root, (graph.iri(root),)))
            continue
        for i in range(config.walks_per_node):
            walks.append(_one_walk(graph, cache, config, root, i))
    return walks


def generate_walks(
    graph: PropertyGraph,
    weight_fn: WeightFn,
    config: WalkConfig,
    workers: int = 1,
    precompute_weights: bool = False,
) -> WalkCorpus:
    """Generate up to walks_per_node walks rooted at every node.

    Output order is (root, walk index), independent of worker count.
    """
    if graph.num_nodes == 0:
        raise ValueError("graph is empty")
    cache = _WeightCache(graph, weight_fn)
    if precompute_weights:
        cache.precompute()
    roots = list(graph.nodes())
    if workers <= 1 or graph.num_nodes < 2:
        return WalkCorpus(_walks_for_roots(graph, cache, config, roots))
    chunk = math.ceil(len(roots) / workers)
    chunks = [roots[i : i + chunk] for i in range(0, len(roots), chunk)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda rs: _walks_for_roots(graph, cache, config, rs), chunks))
    walks: list[Walk] = []
    for part in parts:
        walks.extend(part)
    return WalkCorpus(walks)


def write_corpus(corpus: WalkCorpus, sink: TextIO) -> None:
    """One walk per line, tokens single-space separated."""
    for walk in corpus:
        sink.write(" ".join(walk.tokens))
        sink.write("\n")


def read_corpus(source: str | TextIO | Iterable[str]) -> Iterator[list[str]]:
    """Token lists from a corpus file or stream; blank lines are skipped."""
    lines = source.splitlines() if isinstance(source, str) else source
    for line in lines:
        tokens = line.split()
        if tokens:
            yield tokens
