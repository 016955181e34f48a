"""CBOW and skip-gram embedding training with negative sampling.

SGD over walk sentences, one center position at a time, exactly the
update scheme of the classic word2vec trainers: gradients are applied
immediately, so later positions see earlier updates. Both modes share
the same negative-sampling objective: observed (center, context) pairs
are contrasted against tokens drawn from a unigram^0.75 noise
distribution. Within one center's update the drawn negatives are shared
across that center's context pairs; the per-pair sample count is
unchanged.

The hot loop is numba-compiled over float32 matrices. The pure
loss_and_gradients operation is plain numpy and works in whatever dtype
the given matrices carry, so gradient checks can run in float64.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np
from numba import njit

_SEED_MASK = (1 << 64) - 1

MODES = ("cbow", "skipgram")


@dataclass(frozen=True)
class TrainConfig:
    mode: str = "cbow"
    dim: int = 200
    window: int = 5
    epochs: int = 10
    negatives: int = 25
    lr_start: float = 0.025
    lr_end: float = 0.0001
    min_count: int = 1
    subsample: float = 0.0
    deterministic: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.dim < 1 or self.window < 1 or self.negatives < 1:
            raise ValueError("dim, window and negatives must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.min_count < 0:
            raise ValueError("min_count must be >= 0")
        if not (0 < self.lr_end < self.lr_start):
            raise ValueError("require 0 < lr_end < lr_start")
        if self.subsample < 0:
            raise ValueError("subsample must be >= 0")


class Vocabulary:
    """Corpus tokens ordered by (descending count, token string).

    noise_cdf is the cumulative noise distribution for negative sampling,
    proportional to count^0.75.
    """

    def __init__(self, tokens: list[str], counts: np.ndarray):
        self.tokens = tokens
        self.counts = counts
        self.index = {tok: i for i, tok in enumerate(tokens)}
        p = counts.astype(float) ** 0.75
        cdf = np.cumsum(p / p.sum())
        cdf[-1] = 1.0
        self.noise_cdf = cdf

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def id(self, token: str) -> int:
        try:
            return self.index[token]
        except KeyError:
            raise ValueError(f"token not in vocabulary: {token!r}") from None


Corpus = Iterable[Sequence[str]]


def _sentences(corpus) -> list[Sequence[str]]:
    if hasattr(corpus, "sentences"):
        return list(corpus.sentences())
    return [list(s) for s in corpus]


def build_vocab(corpus: Corpus, min_count: int = 1) -> Vocabulary:
    counts: Counter[str] = Counter()
    for sentence in _sentences(corpus):
        counts.update(sentence)
    kept = sorted(
        ((tok, n) for tok, n in counts.items() if n >= max(min_count, 1)),
        key=lambda item: (-item[1], item[0]),
    )
    if not kept:
        raise ValueError("empty corpus (or min_count filtered every token)")
    return Vocabulary([tok for tok, _ in kept], np.array([n for _, n in kept], dtype=np.int64))


@dataclass
class EmbeddingMatrix:
    input_vectors: np.ndarray
    output_vectors: np.ndarray
    vocab: Vocabulary
    epoch_losses: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def vector(self, token: str) -> np.ndarray:
        return self.input_vectors[self.vocab.id(token)]


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # Overflow-safe: never exponentiates a positive argument.
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


# ---------------------------------------------------------------------------
# Single-center gradient math (the pure operation; index space).


def _cbow_one(v_in, v_out, ctx: np.ndarray, center: int, negs: np.ndarray):
    """Loss and gradients for one averaged-context -> center prediction."""
    h = v_in[ctx].mean(axis=0)
    targets = np.concatenate(([center], negs))
    x = v_out[targets] @ h
    loss = float(_softplus(-x[0]) + _softplus(x[1:]).sum())
    g = _sigmoid(x)
    g[0] -= 1.0
    grad_targets = np.outer(g, h)
    grad_ctx_each = (g @ v_out[targets]) / len(ctx)
    return loss, grad_ctx_each, targets, grad_targets


def _sg_one(v_in, v_out, ctx: np.ndarray, center: int, negs: np.ndarray):
    """Loss and gradients for one center predicting each context token.

    The negatives are shared across the center's pairs, so their loss and
    gradient terms carry multiplicity len(ctx).
    """
    v = v_in[center]
    x_pos = v_out[ctx] @ v
    x_neg = v_out[negs] @ v
    n = len(ctx)
    loss = float(_softplus(-x_pos).sum() + n * _softplus(x_neg).sum())
    g_pos = _sigmoid(x_pos) - 1.0
    g_neg = n * _sigmoid(x_neg)
    grad_center = g_pos @ v_out[ctx] + g_neg @ v_out[negs]
    out_idx = np.concatenate((ctx, negs))
    grad_out = np.concatenate((np.outer(g_pos, v), np.outer(g_neg, v)))
    return loss, grad_center, out_idx, grad_out


@dataclass
class GradientUpdates:
    """Analytic gradients keyed by token; duplicates already accumulated."""

    input_grads: dict[str, np.ndarray]
    output_grads: dict[str, np.ndarray]


def _accumulate(ids: Iterable[int], grads: Iterable[np.ndarray], vocab: Vocabulary) -> dict[str, np.ndarray]:
    acc: dict[str, np.ndarray] = {}
    for i, g in zip(ids, grads):
        tok = vocab.tokens[i]
        if tok in acc:
            acc[tok] = acc[tok] + g
        else:
            acc[tok] = np.array(g, dtype=float)
    return acc


def loss_and_gradients(
    center: str,
    contexts: Sequence[str],
    negatives: Sequence[str],
    matrix: EmbeddingMatrix,
    mode: str,
) -> tuple[float, GradientUpdates]:
    """Negative-sampling loss and exact gradients for one training example.

    Pure: gradients are returned, not applied. Unknown tokens raise.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not contexts:
        raise ValueError("contexts must be non-empty")
    vocab = matrix.vocab
    c = vocab.id(center)
    ctx = np.array([vocab.id(t) for t in contexts], dtype=np.int64)
    negs = np.array([vocab.id(t) for t in negatives], dtype=np.int64)
    if mode == "cbow":
        loss, grad_ctx_each, out_idx, grad_out = _cbow_one(
            matrix.input_vectors, matrix.output_vectors, ctx, c, negs
        )
        in_grads = _accumulate(ctx, [grad_ctx_each] * len(ctx), vocab)
    else:
        loss, grad_center, out_idx, grad_out = _sg_one(
            matrix.input_vectors, matrix.output_vectors, ctx, c, negs
        )
        in_grads = _accumulate([c], [grad_center], vocab)
    out_grads = _accumulate(out_idx, grad_out, vocab)
    return loss, GradientUpdates(in_grads, out_grads)


def apply_updates(matrix: EmbeddingMatrix, updates: GradientUpdates, lr: float) -> None:
    """One SGD step: subtract lr * grad from the touched rows."""
    for tok, g in updates.input_grads.items():
        matrix.input_vectors[matrix.vocab.id(tok)] -= lr * g
    for tok, g in updates.output_grads.items():
        matrix.output_vectors[matrix.vocab.id(tok)] -= lr * g


# ---------------------------------------------------------------------------
# Compiled training loops. Per center position: the same gradients as the
# single-center functions above (asserted by the test suite), applied in
# place before the next position is processed. Windows, negatives, and
# learning rates are pre-drawn per epoch so the RNG stream lives outside
# the compiled code.


@njit(cache=True, nogil=True, fastmath=True)
def _run_epoch_cbow(v_in, v_out, flat, sent_start, sent_end, windows, negs, lrs, begin, end):  # pragma: no cover
    dim = v_in.shape[1]
    n_negs = negs.shape[1]
    h = np.empty(dim, v_in.dtype)
    gh = np.empty(dim, v_in.dtype)
    total_loss = 0.0
    for t in range(begin, end):
        lo = max(sent_start[t], t - windows[t])
        hi = min(sent_end[t], t + windows[t])
        nctx = hi - lo  # the span includes the center slot
        if nctx <= 0:
            continue
        lr = lrs[t]
        for j in range(dim):
            h[j] = 0.0
            gh[j] = 0.0
        for s in range(lo, hi + 1):
            if s == t:
                continue
            row = flat[s]
            for j in range(dim):
                h[j] += v_in[row, j]
        inv = 1.0 / nctx
        for j in range(dim):
            h[j] *= inv
        for m in range(-1, n_negs):
            tgt = flat[t] if m < 0 else negs[t, m]
            f = 0.0
            for j in range(dim):
                f += v_out[tgt, j] * h[j]
            if f >= 0.0:
                e = math.exp(-f)
                sig = 1.0 / (1.0 + e)
                lse = math.log1p(e)  # softplus(-f)
            else:
                e = math.exp(f)
                sig = e / (1.0 + e)
                lse = -f + math.log1p(e)
            if m < 0:
                total_loss += lse
                g = sig - 1.0
            else:
                total_loss += f + lse  # softplus(f)
                g = sig
            glr = g * lr
            for j in range(dim):
                gh[j] += g * v_out[tgt, j]
                v_out[tgt, j] -= glr * h[j]
        step = lr * inv
        for s in range(lo, hi + 1):
            if s == t:
                continue
            row = flat[s]
            for j in range(dim):
                v_in[row, j] -= step * gh[j]
    return total_loss


@njit(cache=True, nogil=True, fastmath=True)
def _run_epoch_sg(v_in, v_out, flat, sent_start, sent_end, windows, negs, lrs, begin, end):  # pragma: no cover
    dim = v_in.shape[1]
    n_negs = negs.shape[1]
    gc = np.empty(dim, v_in.dtype)
    total_loss = 0.0
    for t in range(begin, end):
        lo = max(sent_start[t], t - windows[t])
        hi = min(sent_end[t], t + windows[t])
        nctx = hi - lo
        if nctx <= 0:
            continue
        lr = lrs[t]
        center = flat[t]
        for j in range(dim):
            gc[j] = 0.0
        for s in range(lo, hi + 1):
            if s == t:
                continue
            tgt = flat[s]
            f = 0.0
            for j in range(dim):
                f += v_out[tgt, j] * v_in[center, j]
            if f >= 0.0:
                e = math.exp(-f)
                sig = 1.0 / (1.0 + e)
                total_loss += math.log1p(e)  # softplus(-f)
            else:
                e = math.exp(f)
                sig = e / (1.0 + e)
                total_loss += -f + math.log1p(e)
            g = sig - 1.0
            glr = g * lr
            for j in range(dim):
                gc[j] += g * v_out[tgt, j]
                v_out[tgt, j] -= glr * v_in[center, j]
        for m in range(n_negs):
            tgt = negs[t, m]
            f = 0.0
            for j in range(dim):
                f += v_out[tgt, j] * v_in[center, j]
            if f >= 0.0:
                e = math.exp(-f)
                sig = 1.0 / (1.0 + e)
                total_loss += nctx * (f + math.log1p(e))  # softplus(f)
            else:
                e = math.exp(f)
                sig = e / (1.0 + e)
                total_loss += nctx * math.log1p(e)
            g = nctx * sig
            glr = g * lr
            for j in range(dim):
                gc[j] += g * v_out[tgt, j]
                v_out[tgt, j] -= glr * v_in[center, j]
        for j in range(dim):
            v_in[center, j] -= lr * gc[j]
    return total_loss


@dataclass
class _EpochLayout:
    """Sentences concatenated into one flat array, with per-position
    sentence bounds (inclusive) for window clamping."""

    flat: np.ndarray
    sent_start: np.ndarray
    sent_end: np.ndarray

    @property
    def positions(self) -> int:
        return len(self.flat)


def _layout(sentences: list[np.ndarray]) -> _EpochLayout | None:
    usable = [s for s in sentences if len(s) >= 2]
    if not usable:
        return None
    lens = np.array([len(s) for s in usable])
    ends = np.cumsum(lens)
    starts = ends - lens
    return _EpochLayout(np.concatenate(usable), np.repeat(starts, lens), np.repeat(ends - 1, lens))


def _keep_probabilities(vocab: Vocabulary, subsample: float) -> np.ndarray | None:
    if subsample <= 0:
        return None
    freq = vocab.counts / vocab.counts.sum()
    return np.minimum(1.0, (np.sqrt(freq / subsample) + 1.0) * subsample / freq)


def _epoch_draws(layout: _EpochLayout, vocab, config: TrainConfig, rng, done: int, total: int):
    npos = layout.positions
    windows = rng.integers(1, config.window + 1, size=npos)
    negs = np.searchsorted(vocab.noise_cdf, rng.random((npos, config.negatives)))
    span = config.lr_end - config.lr_start
    lrs = (config.lr_start + span * np.minimum(1.0, (done + np.arange(npos)) / total)).astype(np.float32)
    return windows, negs, lrs


def train(corpus: Corpus, config: TrainConfig, workers: int = 1) -> EmbeddingMatrix:
    """Train embeddings over the corpus.

    Deterministic mode (default) runs a single sequential update stream:
    identical seeds give bitwise-identical matrices regardless of the
    workers argument. With deterministic=False and workers > 1, shards
    train concurrently on the shared matrices without locks; torn reads
    are tolerated.
    """
    sentences_tok = _sentences(corpus)
    vocab = build_vocab(sentences_tok, config.min_count)
    rng = np.random.default_rng(config.seed & _SEED_MASK)
    v_in = rng.uniform(-0.5 / config.dim, 0.5 / config.dim, size=(len(vocab), config.dim)).astype(np.float32)
    v_out = np.zeros((len(vocab), config.dim), dtype=np.float32)
    sentences = [
        arr
        for s in sentences_tok
        if len(arr := np.array([vocab.index[t] for t in s if t in vocab.index], dtype=np.int64)) > 0
    ]
    matrix = EmbeddingMatrix(v_in, v_out, vocab)
    keep_prob = _keep_probabilities(vocab, config.subsample)
    run = _run_epoch_cbow if config.mode == "cbow" else _run_epoch_sg

    def subsampled(sents: list[np.ndarray], epoch_rng) -> _EpochLayout | None:
        kept = [s[epoch_rng.random(len(s)) < keep_prob[s]] for s in sents]
        return _layout(kept)

    base_layout = _layout(sentences)
    if base_layout is None:
        return matrix
    total = base_layout.positions * max(config.epochs, 1)

    if config.deterministic or workers <= 1:
        done = 0
        for _ in range(config.epochs):
            layout = base_layout if keep_prob is None else subsampled(sentences, rng)
            if layout is None:
                matrix.epoch_losses.append(0.0)
                continue
            windows, negs, lrs = _epoch_draws(layout, vocab, config, rng, done, total)
            loss = run(v_in, v_out, layout.flat, layout.sent_start, layout.sent_end,
                       windows, negs, lrs, 0, layout.positions)
            done += layout.positions
            matrix.epoch_losses.append(loss / layout.positions)
        return matrix

    shards = [s for s in (sentences[i::workers] for i in range(workers)) if s]
    layouts = [_layout(shard) for shard in shards]
    rngs = [np.random.default_rng(np.random.SeedSequence((config.seed & _SEED_MASK, i))) for i in range(len(shards))]
    for epoch in range(config.epochs):
        def run_shard(i: int) -> tuple[float, int]:
            layout = layouts[i] if keep_prob is None else subsampled(shards[i], rngs[i])
            if layout is None:
                return 0.0, 0
            windows, negs, lrs = _epoch_draws(
                layout, vocab, config, rngs[i], epoch * base_layout.positions, total
            )
            loss = run(v_in, v_out, layout.flat, layout.sent_start, layout.sent_end,
                       windows, negs, lrs, 0, layout.positions)
            return loss, layout.positions

        with ThreadPoolExecutor(max_workers=len(shards)) as pool:
            results = list(pool.map(run_shard, range(len(shards))))
        total_loss = sum(r[0] for r in results)
        total_pos = sum(r[1] for r in results)
        matrix.epoch_losses.append(total_loss / max(total_pos, 1))
    return matrix


# ---------------------------------------------------------------------------
# Text I/O: header line "|V| dim", then one token and dim reals per line.


def write_embeddings(matrix: EmbeddingMatrix, sink: TextIO) -> None:
    vecs = matrix.input_vectors
    sink.write(f"{len(matrix.vocab)} {matrix.dim}\n")
    for i, tok in enumerate(matrix.vocab.tokens):
        sink.write(tok)
        for x in vecs[i]:
            sink.write(f" {x:.17g}")
        sink.write("\n")


def read_embeddings(source: str | TextIO | Iterable[str]) -> EmbeddingMatrix:
    lines = iter(source.splitlines() if isinstance(source, str) else source)
    try:
        header = next(lines)
    except StopIteration:
        raise ValueError("empty embeddings input") from None
    n, dim = (int(x) for x in header.split())
    tokens: list[str] = []
    rows: list[list[float]] = []
    for line in lines:
        if not line.strip():
            continue
        parts = line.rstrip("\n").split(" ")
        if len(parts) != dim + 1:
            raise ValueError(f"expected {dim + 1} fields, got {len(parts)}: {line[:60]!r}")
        tokens.append(parts[0])
        rows.append([float(x) for x in parts[1:]])
    if len(tokens) != n:
        raise ValueError(f"header promised {n} rows, found {len(tokens)}")
    vocab = Vocabulary(tokens, np.ones(len(tokens), dtype=np.int64))
    vecs = np.array(rows, dtype=float)
    return EmbeddingMatrix(vecs, np.zeros_like(vecs), vocab)
