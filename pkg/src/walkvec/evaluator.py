"""k-Nearest-Neighbor evaluation of node embeddings.

Nodes are classified by majority vote among the k nearest labeled train
vectors. Ties are deterministic: equal distances order by ascending node
IRI, vote ties fall back to the nearest neighbor's label and then to the
ascending label string.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .embedder import EmbeddingMatrix

METRICS = ("euclidean", "cosine")


@dataclass(frozen=True)
class EvalConfig:
    k: int = 4
    metric: str = "euclidean"

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")


@dataclass(frozen=True)
class LabeledDataset:
    train: tuple[tuple[str, str], ...]
    test: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        train_nodes = {n for n, _ in self.train}
        overlap = train_nodes & {n for n, _ in self.test}
        if overlap:
            raise ValueError(f"nodes in both train and test: {sorted(overlap)[:5]}")
        if any(not lbl for _, lbl in self.train + self.test):
            raise ValueError("labels must be non-empty")
        if len({lbl for _, lbl in self.train}) < 2:
            raise ValueError("train split needs at least two distinct labels")


def _vectors(embeddings: EmbeddingMatrix, nodes: Sequence[str]) -> np.ndarray:
    rows = []
    for node in nodes:
        if node not in embeddings:
            raise ValueError(f"node not in embedding vocabulary: {node!r}")
        rows.append(embeddings.vector(node))
    return np.asarray(rows)


def _distances(train_mat: np.ndarray, query: np.ndarray, metric: str) -> np.ndarray:
    if metric == "euclidean":
        diff = train_mat - query
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    norms = np.linalg.norm(train_mat, axis=1) * np.linalg.norm(query)
    sims = np.where(norms > 0, train_mat @ query / np.where(norms > 0, norms, 1.0), 0.0)
    return 1.0 - sims


def _predict(
    train_mat: np.ndarray,
    train_labels: Sequence[str],
    iri_rank: np.ndarray,
    query: np.ndarray,
    config: EvalConfig,
) -> str:
    dists = _distances(train_mat, query, config.metric)
    order = np.lexsort((iri_rank, dists))
    nearest = order[: config.k]
    votes = Counter(train_labels[i] for i in nearest)
    top = max(votes.values())
    tied = [lbl for lbl, n in votes.items() if n == top]
    if len(tied) == 1:
        return tied[0]
    nearest_label = train_labels[nearest[0]]
    if nearest_label in tied:
        return nearest_label
    return min(tied)


def knn_predict(
    embeddings: EmbeddingMatrix,
    train: Sequence[tuple[str, str]],
    query_node: str,
    config: EvalConfig,
) -> str:
    """Majority label among the k nearest train vectors to the query node."""
    train_nodes = [n for n, _ in train]
    train_labels = [lbl for _, lbl in train]
    train_mat = _vectors(embeddings, train_nodes)
    iri_rank = np.argsort(np.argsort(np.array(train_nodes)))
    query = _vectors(embeddings, [query_node])[0]
    return _predict(train_mat, train_labels, iri_rank, query, config)


def predictions(
    embeddings: EmbeddingMatrix, dataset: LabeledDataset, config: EvalConfig
) -> list[tuple[str, str, str]]:
    """(node, true label, predicted label) for every test item, in order."""
    if not dataset.test:
        raise ValueError("test set is empty")
    train_nodes = [n for n, _ in dataset.train]
    train_labels = [lbl for _, lbl in dataset.train]
    train_mat = _vectors(embeddings, train_nodes)
    iri_rank = np.argsort(np.argsort(np.array(train_nodes)))
    out = []
    for node, true_label in dataset.test:
        query = _vectors(embeddings, [node])[0]
        out.append((node, true_label, _predict(train_mat, train_labels, iri_rank, query, config)))
    return out


def evaluate(embeddings: EmbeddingMatrix, dataset: LabeledDataset, config: EvalConfig) -> float:
    """Percentage of correctly classified test nodes, in [0, 100]."""
    preds = predictions(embeddings, dataset, config)
    correct = sum(1 for _, true, pred in preds if true == pred)
    return 100.0 * correct / len(preds)


def confusion_summary(preds: Iterable[tuple[str, str, str]]) -> dict[tuple[str, str], int]:
    counts: Counter[tuple[str, str]] = Counter()
    for _, true, pred in preds:
        counts[(true, pred)] += 1
    return dict(counts)


def read_labels_tsv(source: str | TextIO | Iterable[str]) -> list[tuple[str, str]]:
    """node-IRI<TAB>label rows; blank lines ignored."""
    lines = source.splitlines() if isinstance(source, str) else source
    out = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.rstrip("\n")
        if not stripped.strip():
            continue
        parts = stripped.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise ValueError(f"labels line {lineno}: expected 'node<TAB>label', got {stripped!r}")
        out.append((parts[0], parts[1]))
    return out


def write_labels_tsv(rows: Iterable[tuple[str, str]], sink: TextIO) -> None:
    for node, label in rows:
        sink.write(f"{node}\t{label}\n")
