import numpy as np
import pytest

from botsift.embedding import (EMBEDDING_DIM, EmbeddingConfig, EmbeddingTable,
                               sgns_gradients, sgns_loss, train_embeddings)

RNG = np.random.default_rng(7)


def _fixture_sentences(n=120):
    # two coherent blocks: (p, q) always together, (r, s) always together
    sentences = []
    for i in range(n):
        if i % 2 == 0:
            sentences.append(["p", "q", "p", "q"])
        else:
            sentences.append(["r", "s", "r", "s"])
    return sentences


def test_vectors_have_dimension_ten():
    table = train_embeddings(_fixture_sentences(), EmbeddingConfig(epochs=1))
    for term in table.vocab:
        assert table.lookup(term).shape == (EMBEDDING_DIM,)


def test_training_is_deterministic_bitwise():
    config = EmbeddingConfig(epochs=2, seed=42)
    t1 = train_embeddings(_fixture_sentences(), config)
    t2 = train_embeddings(_fixture_sentences(), config)
    assert t1.vocab == t2.vocab
    assert np.array_equal(t1.vectors, t2.vectors)
    assert t1.epoch_losses == t2.epoch_losses


def test_different_seed_changes_vectors():
    t1 = train_embeddings(_fixture_sentences(), EmbeddingConfig(epochs=1, seed=1))
    t2 = train_embeddings(_fixture_sentences(), EmbeddingConfig(epochs=1, seed=2))
    assert not np.array_equal(t1.vectors, t2.vectors)


def _cosine(a, b):
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


def test_cooccurring_tokens_end_up_closer():
    table = train_embeddings(_fixture_sentences(200),
                             EmbeddingConfig(epochs=10, seed=3))
    p, q, r = table.lookup("p"), table.lookup("q"), table.lookup("r")
    assert _cosine(p, q) > _cosine(p, r)


def test_lookup_missing_cases():
    sentences = [["common", "common", "word"], ["common", "word"]]
    table = train_embeddings(sentences, EmbeddingConfig(min_count=2, epochs=1))
    assert table.lookup("common") is not None
    assert table.lookup("word") is not None
    assert table.lookup("never-seen") is None


def test_min_frequency_filters_rare_terms():
    sentences = [["a", "b"], ["a", "b"], ["a", "rare"]]
    table = train_embeddings(sentences, EmbeddingConfig(min_count=2, epochs=1))
    assert table.lookup("rare") is None  # frequency 1 below min_count 2


def test_empty_vocabulary_raises():
    with pytest.raises(ValueError, match="vocabulary"):
        train_embeddings([["one"], ["two"]], EmbeddingConfig(min_count=5))


def test_epoch_loss_non_increasing_at_small_learning_rate():
    config = EmbeddingConfig(epochs=6, learning_rate=0.01, seed=5)
    table = train_embeddings(_fixture_sentences(150), config)
    losses = table.epoch_losses
    assert len(losses) == 6
    for earlier, later in zip(losses, losses[1:]):
        assert later <= earlier + 1e-12


def test_sgns_gradient_matches_finite_differences():
    """Central finite differences vs the analytic gradient, 50 random cases."""
    eps = 1e-5
    for case in range(50):
        rng = np.random.default_rng(1000 + case)
        k = int(rng.integers(1, 6))
        center = rng.normal(size=EMBEDDING_DIM)
        context = rng.normal(size=EMBEDDING_DIM)
        negatives = rng.normal(size=(k, EMBEDDING_DIM))
        g_center, g_context, g_negatives = sgns_gradients(center, context, negatives)

        def num_grad(array, setter):
            grad = np.zeros_like(array)
            flat = array.reshape(-1)
            out = grad.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                up = sgns_loss(center, context, negatives)
                flat[i] = orig - eps
                down = sgns_loss(center, context, negatives)
                flat[i] = orig
                out[i] = (up - down) / (2 * eps)
            return grad

        for analytic, array in ((g_center, center), (g_context, context),
                                (g_negatives, negatives)):
            numeric = num_grad(array, None)
            denom = max(np.abs(numeric).max(), 1e-8)
            assert np.abs(analytic - numeric).max() / denom < 1e-4


def test_table_roundtrip(tmp_path):
    table = train_embeddings(_fixture_sentences(), EmbeddingConfig(epochs=1))
    table.fitted_window = ("2020-09-01T00:00:00+00:00", "2020-09-30T00:00:00+00:00")
    path = tmp_path / "emb.json"
    table.save(path)
    loaded = EmbeddingTable.load(path)
    assert loaded.vocab == table.vocab
    assert np.array_equal(loaded.vectors, table.vectors)
    assert loaded.fitted_window == table.fitted_window
    assert loaded.config == table.config
