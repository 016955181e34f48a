import io
import math

import numpy as np
import pytest

from walkvec.embedder import (
    EmbeddingMatrix,
    TrainConfig,
    Vocabulary,
    _cbow_one,
    _run_epoch_cbow,
    _run_epoch_sg,
    _sg_one,
    apply_updates,
    build_vocab,
    loss_and_gradients,
    read_embeddings,
    train,
    write_embeddings,
)


def make_matrix(vocab_size, dim, seed=0, zero=False):
    rng = np.random.default_rng(seed)
    tokens = [f"t{i:02d}" for i in range(vocab_size)]
    vocab = Vocabulary(tokens, rng.integers(1, 50, size=vocab_size))
    if zero:
        v_in = np.zeros((vocab_size, dim))
        v_out = np.zeros((vocab_size, dim))
    else:
        v_in = rng.normal(scale=0.5, size=(vocab_size, dim))
        v_out = rng.normal(scale=0.5, size=(vocab_size, dim))
    return EmbeddingMatrix(v_in, v_out, vocab)


class TestBuildVocab:
    def test_single_sentence(self):
        vocab = build_vocab([["a", "p", "b"]])
        assert sorted(vocab.tokens) == ["a", "b", "p"]
        assert all(c == 1 for c in vocab.counts)

    def test_counts_and_order(self):
        vocab = build_vocab([["a", "p", "b"], ["a", "q", "c"]])
        assert vocab.tokens[0] == "a"
        assert vocab.counts[0] == 2
        # count ties break by token string
        assert vocab.tokens[1:] == ["b", "c", "p", "q"]

    def test_min_count_threshold(self):
        vocab = build_vocab([["a", "p", "b"], ["a", "q", "c"]], min_count=2)
        assert vocab.tokens == ["a"]

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="empty corpus"):
            build_vocab([])

    def test_noise_table_unigram_power(self):
        vocab = build_vocab([["a"] * 16 + ["b"] * 4 + ["c"]])
        p = vocab.counts.astype(float) ** 0.75
        p /= p.sum()
        assert np.allclose(np.diff(vocab.noise_cdf, prepend=0.0), p, atol=1e-12)
        assert vocab.noise_cdf[-1] == 1.0

    def test_accepts_walk_corpus_object(self):
        class FakeCorpus:
            def sentences(self):
                yield ["x", "y"]

        vocab = build_vocab(FakeCorpus())
        assert sorted(vocab.tokens) == ["x", "y"]


def fd_loss(matrix, center, ctx, negs, mode):
    return loss_and_gradients(center, ctx, negs, matrix, mode)[0]


def max_fd_error(matrix, center, ctx, negs, mode, step=1e-4):
    """Central finite differences over every touched coordinate."""
    loss, grads = loss_and_gradients(center, ctx, negs, matrix, mode)
    worst = 0.0
    for grad_dict, field in ((grads.input_grads, "input_vectors"), (grads.output_grads, "output_vectors")):
        vectors = getattr(matrix, field)
        for tok, grad in grad_dict.items():
            row = matrix.vocab.id(tok)
            for j in range(vectors.shape[1]):
                orig = vectors[row, j]
                vectors[row, j] = orig + step
                up = fd_loss(matrix, center, ctx, negs, mode)
                vectors[row, j] = orig - step
                down = fd_loss(matrix, center, ctx, negs, mode)
                vectors[row, j] = orig
                fd = (up - down) / (2 * step)
                err = abs(grad[j] - fd) / max(1.0, abs(grad[j]), abs(fd))
                worst = max(worst, err)
    return worst


class TestLossAndGradients:
    @pytest.mark.parametrize("mode", ["cbow", "skipgram"])
    def test_gradients_match_finite_differences(self, mode):
        rng = np.random.default_rng(7)
        for trial in range(10):
            vocab_size = int(rng.integers(6, 20))
            dim = int(rng.integers(2, 8))
            matrix = make_matrix(vocab_size, dim, seed=trial)
            tokens = matrix.vocab.tokens
            center = tokens[int(rng.integers(vocab_size))]
            ctx = [tokens[int(rng.integers(vocab_size))] for _ in range(int(rng.integers(1, 5)))]
            negs = [tokens[int(rng.integers(vocab_size))] for _ in range(int(rng.integers(1, 6)))]
            assert max_fd_error(matrix, center, ctx, negs, mode) < 1e-5

    def test_zero_vectors_skipgram_loss_value(self):
        matrix = make_matrix(8, 4, zero=True)
        toks = matrix.vocab.tokens
        k = 3
        loss, _ = loss_and_gradients(toks[0], [toks[1]], toks[2 : 2 + k], matrix, "skipgram")
        assert loss == pytest.approx((1 + k) * math.log(2), rel=1e-12)
        # per-pair scaling: two context pairs double the loss
        loss2, _ = loss_and_gradients(toks[0], [toks[1], toks[4]], toks[2 : 2 + k], matrix, "skipgram")
        assert loss2 == pytest.approx(2 * (1 + k) * math.log(2), rel=1e-12)

    def test_zero_vectors_cbow_loss_value(self):
        matrix = make_matrix(8, 4, zero=True)
        toks = matrix.vocab.tokens
        loss, _ = loss_and_gradients(toks[0], [toks[1], toks[2]], toks[3:6], matrix, "cbow")
        assert loss == pytest.approx(4 * math.log(2), rel=1e-12)

    @pytest.mark.parametrize("mode", ["cbow", "skipgram"])
    def test_identical_positive_and_negative_token(self, mode):
        matrix = make_matrix(10, 5, seed=3)
        toks = matrix.vocab.tokens
        # the same token appears as context and as negative: contributions
        # partially cancel but gradients must still match finite differences
        assert max_fd_error(matrix, toks[1], [toks[2]], [toks[2], toks[4]], mode) < 1e-5

    def test_unknown_token_rejected(self):
        matrix = make_matrix(4, 3)
        with pytest.raises(ValueError, match="ghost"):
            loss_and_gradients("ghost", [matrix.vocab.tokens[0]], [matrix.vocab.tokens[1]], matrix, "cbow")

    def test_pure_no_mutation(self):
        matrix = make_matrix(6, 4, seed=2)
        before_in = matrix.input_vectors.copy()
        before_out = matrix.output_vectors.copy()
        toks = matrix.vocab.tokens
        loss_and_gradients(toks[0], [toks[1]], [toks[2]], matrix, "skipgram")
        assert np.array_equal(matrix.input_vectors, before_in)
        assert np.array_equal(matrix.output_vectors, before_out)

    def test_duplicate_context_tokens_accumulate(self):
        matrix = make_matrix(6, 4, seed=4)
        toks = matrix.vocab.tokens
        _, g1 = loss_and_gradients(toks[0], [toks[1], toks[1]], [toks[2]], matrix, "cbow")
        # same token twice in the context: one accumulated gradient entry
        assert set(g1.input_grads) == {toks[1]}


class TestTrainerMatchesOperation:
    """The compiled epoch runners must apply exactly the per-center
    gradients of loss_and_gradients, sequentially."""

    @pytest.mark.parametrize("mode", ["cbow", "skipgram"])
    def test_epoch_equals_sequential_single_center_updates(self, mode):
        rng = np.random.default_rng(11)
        vocab_size, dim, length = 40, 6, 9
        matrix = make_matrix(vocab_size, dim, seed=5)
        # distinct tokens and disjoint negatives keep both routes identical
        # even update-order-wise (no row is touched twice in one center)
        sent = np.arange(length, dtype=np.int64)
        windows = rng.integers(1, 4, size=length)
        negs = np.stack(
            [rng.choice(np.arange(20, 40), size=4, replace=False) for _ in range(length)]
        ).astype(np.int64)
        lr = 0.0625  # exactly representable, so both routes use the same value
        lrs = np.full(length, lr)

        jit_in = matrix.input_vectors.copy()
        jit_out = matrix.output_vectors.copy()
        run = _run_epoch_cbow if mode == "cbow" else _run_epoch_sg
        jit_loss = run(
            jit_in, jit_out, sent,
            np.zeros(length, dtype=np.int64), np.full(length, length - 1, dtype=np.int64),
            windows, negs, lrs, 0, length,
        )

        ref = EmbeddingMatrix(matrix.input_vectors.copy(), matrix.output_vectors.copy(), matrix.vocab)
        toks = matrix.vocab.tokens
        ref_loss = 0.0
        for t in range(length):
            lo = max(0, t - windows[t])
            hi = min(length - 1, t + windows[t])
            ctx = [toks[sent[s]] for s in range(lo, hi + 1) if s != t]
            loss, grads = loss_and_gradients(toks[sent[t]], ctx, [toks[n] for n in negs[t]], ref, mode)
            apply_updates(ref, grads, 0.05)
            ref_loss += loss

        assert jit_loss == pytest.approx(ref_loss, rel=1e-9)
        assert np.allclose(jit_in, ref.input_vectors, rtol=1e-9, atol=1e-11)
        assert np.allclose(jit_out, ref.output_vectors, rtol=1e-9, atol=1e-11)


def planted_corpus(n_sentences=300, seed=0):
    rng = np.random.default_rng(seed)
    communities = [[f"a{i}" for i in range(8)], [f"b{i}" for i in range(8)]]
    sentences = []
    for s in range(n_sentences):
        comm = communities[s % 2]
        sentences.append([comm[i] for i in rng.integers(0, 8, size=5)])
    return communities, sentences


class TestTrain:
    def test_planted_communities_separate(self):
        # oracle: mean intra-community cosine must exceed inter-community
        communities, sentences = planted_corpus()
        cfg = TrainConfig(mode="cbow", dim=16, window=3, epochs=5, negatives=5, seed=1)
        matrix = train(sentences, cfg)
        vecs = {t: matrix.vector(t) for c in communities for t in c}
        cos = lambda u, v: float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
        intra, inter = [], []
        for ci, comm in enumerate(communities):
            for i, u in enumerate(comm):
                for v in comm[i + 1:]:
                    intra.append(cos(vecs[u], vecs[v]))
                for v in communities[1 - ci]:
                    inter.append(cos(vecs[u], vecs[v]))
        assert np.mean(intra) > np.mean(inter)

    def test_epoch_loss_non_increasing_within_tolerance(self):
        _, sentences = planted_corpus()
        cfg = TrainConfig(mode="skipgram", dim=16, window=3, epochs=6, negatives=5, seed=2)
        losses = train(sentences, cfg).epoch_losses
        assert len(losses) == 6
        for prev, cur in zip(losses, losses[1:]):
            assert cur <= prev * 1.05

    def test_no_nan_or_inf_after_training(self):
        _, sentences = planted_corpus()
        for mode in ("cbow", "skipgram"):
            matrix = train(sentences, TrainConfig(mode=mode, dim=12, epochs=3, negatives=4, seed=3))
            assert np.all(np.isfinite(matrix.input_vectors))
            assert np.all(np.isfinite(matrix.output_vectors))

    def test_epochs_zero_equals_initialization(self):
        _, sentences = planted_corpus(n_sentences=20)
        cfg = TrainConfig(dim=8, epochs=0, seed=9)
        matrix = train(sentences, cfg)
        rng = np.random.default_rng(9)
        expected = rng.uniform(-0.5 / 8, 0.5 / 8, size=(len(matrix.vocab), 8)).astype(np.float32)
        assert np.array_equal(matrix.input_vectors, expected)
        assert np.array_equal(matrix.output_vectors, np.zeros_like(expected))

    def test_deterministic_bitwise_reproducible(self):
        _, sentences = planted_corpus(n_sentences=60)
        cfg = TrainConfig(mode="cbow", dim=10, epochs=3, negatives=4, seed=5)
        m1 = train(sentences, cfg)
        m2 = train(sentences, cfg)
        assert np.array_equal(m1.input_vectors, m2.input_vectors)
        assert np.array_equal(m1.output_vectors, m2.output_vectors)

    def test_deterministic_mode_ignores_worker_count(self):
        _, sentences = planted_corpus(n_sentences=60)
        cfg = TrainConfig(mode="skipgram", dim=10, epochs=2, negatives=4, seed=6)
        m1 = train(sentences, cfg, workers=1)
        m4 = train(sentences, cfg, workers=4)
        assert np.array_equal(m1.input_vectors, m4.input_vectors)

    def test_fast_mode_trains_and_stays_finite(self):
        _, sentences = planted_corpus(n_sentences=80)
        cfg = TrainConfig(mode="cbow", dim=8, epochs=2, negatives=3, seed=7, deterministic=False)
        matrix = train(sentences, cfg, workers=3)
        assert np.all(np.isfinite(matrix.input_vectors))
        assert len(matrix.epoch_losses) == 2

    def test_min_count_filters_tokens(self):
        sentences = [["a", "b"], ["a", "c"], ["a", "b"]]
        matrix = train(sentences, TrainConfig(dim=4, epochs=1, min_count=2, seed=0))
        assert set(matrix.vocab.tokens) == {"a", "b"}

    def test_subsample_flag_runs(self):
        _, sentences = planted_corpus(n_sentences=60)
        cfg = TrainConfig(dim=8, epochs=2, negatives=3, seed=8, subsample=1e-2)
        matrix = train(sentences, cfg)
        assert np.all(np.isfinite(matrix.input_vectors))

    def test_single_token_sentences_only_init(self):
        matrix = train([["solo"]], TrainConfig(dim=4, epochs=2, seed=1))
        assert matrix.vocab.tokens == ["solo"]
        assert matrix.epoch_losses == []

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(mode="glove")
        with pytest.raises(ValueError):
            TrainConfig(lr_start=0.001, lr_end=0.01)
        with pytest.raises(ValueError):
            TrainConfig(dim=0)
        with pytest.raises(ValueError):
            TrainConfig(epochs=-1)


class TestEmbeddingIO:
    def test_single_token_format(self):
        vocab = Vocabulary(["z"], np.array([1]))
        matrix = EmbeddingMatrix(np.zeros((1, 2)), np.zeros((1, 2)), vocab)
        buf = io.StringIO()
        write_embeddings(matrix, buf)
        assert buf.getvalue() == "1 2\nz 0 0\n"

    def test_header_first_line(self):
        _, sentences = planted_corpus(n_sentences=10)
        matrix = train(sentences, TrainConfig(dim=6, epochs=1, seed=0))
        buf = io.StringIO()
        write_embeddings(matrix, buf)
        header = buf.getvalue().splitlines()[0]
        assert header == f"{len(matrix.vocab)} 6"

    def test_roundtrip_to_printed_precision(self):
        _, sentences = planted_corpus(n_sentences=30)
        matrix = train(sentences, TrainConfig(dim=6, epochs=2, seed=4))
        buf = io.StringIO()
        write_embeddings(matrix, buf)
        back = read_embeddings(buf.getvalue())
        assert back.vocab.tokens == matrix.vocab.tokens
        assert np.array_equal(back.input_vectors, matrix.input_vectors.astype(np.float64))

    def test_malformed_rows_rejected(self):
        with pytest.raises(ValueError, match="fields"):
            read_embeddings("1 3\nz 0 0\n")
        with pytest.raises(ValueError, match="promised"):
            read_embeddings("2 2\nz 0 0\n")
        with pytest.raises(ValueError, match="empty"):
            read_embeddings("")
