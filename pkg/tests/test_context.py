import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from botsift.embedding import EMBEDDING_DIM, EmbeddingConfig, EmbeddingTable
from botsift.features.context import (CONTEXT_FEATURE_NAMES, CorpusStats,
                                      extract_context, fit_corpus_stats,
                                      tfidf, top_k)
from botsift.textproc import tokenize

from conftest import corpus_of, make_account, make_retweet, make_tweet, ts


def test_dimension_identity():
    # 2 streams x (6 tf-idf + 3 ranks x 3 blocks x 10 dims) + 12 count stats
    assert len(CONTEXT_FEATURE_NAMES) == 2 * (6 + 90) + 12 == 204
    assert len(set(CONTEXT_FEATURE_NAMES)) == 204


def test_tokenize_examples():
    assert tokenize("Vote NOW!!!", frozenset({"now"})) == ["vote"]
    assert tokenize("", frozenset()) == []
    assert tokenize("the the the", frozenset({"the"})) == []


def test_tokenize_strips_entities_and_urls():
    text = "Check https://example.com @Bob #Vote rain"
    assert tokenize(text, frozenset()) == ["check", "rain"]


def test_top_k_examples():
    assert top_k(Counter({"a": 3, "b": 2, "c": 1})) == ["a", "b", "c"]
    assert top_k(Counter({"a": 2, "b": 2}), k=1) == ["a"]  # lexicographic tie
    assert top_k(Counter()) == []
    assert top_k(Counter({"a": 1, "b": 2}), k=5) == ["b", "a"]


@given(st.lists(st.sampled_from("abcdef"), max_size=30))
def test_top_k_permutation_invariant(tokens):
    forward = top_k(Counter(tokens))
    backward = top_k(Counter(reversed(tokens)))
    assert forward == backward


def test_tfidf_examples():
    assert tfidf("x", {"y": 2}, 10, 3) == 0.0              # absent term
    assert tfidf("x", {"x": 5}, 3, 3) == pytest.approx(0.0)  # df == N
    assert tfidf("x", {"x": 2}, 1, 1) == pytest.approx(0.0)
    assert tfidf("x", {"x": 2}, 3, 1) == pytest.approx(2 * math.log(2.0))
    assert tfidf("x", {"x": 2}, 3, 1) == pytest.approx(1.3862943611, abs=1e-9)


def _toy_table() -> EmbeddingTable:
    vocab = {"rain": 0, "storm": 1, "@bob": 2, "#rain": 3, "#vote": 4}
    vectors = np.arange(len(vocab) * EMBEDDING_DIM, dtype=float).reshape(
        len(vocab), EMBEDDING_DIM)
    return EmbeddingTable(vocab=vocab, vectors=vectors, config=EmbeddingConfig())


def _toy_corpus():
    accounts = [make_account("u1"), make_account("u2")]
    tweets = [
        make_tweet("t1", "u1", ts(1), text="rain rain today",
                   hashtags=("Vote", "Rain"), mentions=("Bob",), urls=()),
        make_tweet("t2", "u1", ts(2), text="rain storm",
                   hashtags=(), mentions=("bob", "Ann"),
                   urls=("http://a", "http://b")),
        make_retweet("r1", "u1", ts(3), "v", text="storm watch",
                     hashtags=("Vote",), mentions=(), urls=()),
        make_tweet("t3", "u2", ts(4), text="sunny day",
                   hashtags=("vote",), mentions=("Bob",), urls=()),
    ]
    return corpus_of(accounts, tweets)


def test_fit_corpus_stats_documents_per_user_per_stream():
    stats = fit_corpus_stats(_toy_corpus())
    assert stats.n_docs["tweet"] == 2    # u1 and u2 both tweet
    assert stats.n_docs["retweet"] == 1  # only u1 retweets
    assert stats.df["tweet"]["mention"] == {"bob": 2, "ann": 1}
    assert stats.df["tweet"]["hashtag"] == {"vote": 2, "rain": 1}
    assert stats.df["retweet"]["hashtag"] == {"vote": 1}
    assert stats.df["retweet"]["mention"] == {}


def test_extract_context_full_hand_oracle():
    corpus = _toy_corpus()
    stats = fit_corpus_stats(corpus)
    table = _toy_table()
    values = extract_context(corpus.tweets_of("u1"), stats, table)
    assert set(values) == set(CONTEXT_FEATURE_NAMES)

    # tweet stream of u1: mentions {bob:2, ann:1}, hashtags {vote:1, rain:1}
    # N_tweet=2; df(bob)=2, df(ann)=1, df(vote)=2, df(rain)=1
    assert values["N1_tweet_mentioned_tfidf"] == pytest.approx(
        2 * math.log(3 / 3))                      # bob: tf 2, df 2
    assert values["N2_tweet_mentioned_tfidf"] == pytest.approx(
        1 * math.log(3 / 2))                      # ann
    assert math.isnan(values["N3_tweet_mentioned_tfidf"])
    # hashtag tie at count 1: lexicographic -> rain first
    assert values["N1_tweet_hashtags_tfidf"] == pytest.approx(
        1 * math.log(3 / 2))                      # rain: df 1
    assert values["N2_tweet_hashtags_tfidf"] == pytest.approx(0.0)  # vote: df 2

    # embeddings: N1 tweet mention = @bob -> row 2; N1 tweet hashtag = #rain
    for d in range(EMBEDDING_DIM):
        assert values[f"N1_tweet_mentioned_word_{d}"] == 2 * EMBEDDING_DIM + d
        assert values[f"N1_tweet_hashtags_word_{d}"] == 3 * EMBEDDING_DIM + d
        assert values[f"N1_tweet_word_{d}"] == 0 * EMBEDDING_DIM + d  # "rain"
        assert values[f"N2_tweet_word_{d}"] == 1 * EMBEDDING_DIM + d  # "storm"
        assert math.isnan(values[f"N3_tweet_mentioned_word_{d}"])
    # "today" is not in the embedding vocabulary -> missing marker
    for d in range(EMBEDDING_DIM):
        assert math.isnan(values[f"N3_tweet_word_{d}"])

    # count stats, tweet stream: urls per post (0, 2), hashtags (2, 0),
    # mentions (1, 2); population std
    assert values["tweet_number_of_urls_avg"] == pytest.approx(1.0)
    assert values["tweet_number_of_urls_std"] == pytest.approx(1.0)
    assert values["tweet_number_of_hashtags_avg"] == pytest.approx(1.0)
    assert values["tweet_number_of_hashtags_std"] == pytest.approx(1.0)
    assert values["tweet_number_of_mentions_avg"] == pytest.approx(1.5)
    assert values["tweet_number_of_mentions_std"] == pytest.approx(0.5)

    # retweet stream: one post, hashtag vote (df 1 of N 1 -> 0), no mentions
    assert values["N1_retweet_hashtags_tfidf"] == pytest.approx(0.0)
    assert math.isnan(values["N1_retweet_mentioned_tfidf"])
    assert values["retweet_number_of_urls_avg"] == pytest.approx(0.0)
    assert values["retweet_number_of_urls_std"] == pytest.approx(0.0)
    for d in range(EMBEDDING_DIM):
        assert values[f"N1_retweet_hashtags_word_{d}"] == 4 * EMBEDDING_DIM + d


def test_extract_context_empty_stream_all_missing():
    corpus = corpus_of([make_account("u1")],
                       [make_tweet("t1", "u1", ts(1), text="a b")])
    stats = fit_corpus_stats(corpus)
    values = extract_context(corpus.tweets_of("u1"), stats, _toy_table())
    retweet_slots = [n for n in CONTEXT_FEATURE_NAMES
                     if "_retweet_" in n or n.startswith("retweet_")]
    assert len(retweet_slots) == 102
    assert all(math.isnan(values[n]) for n in retweet_slots)


def test_count_stats_invariant_to_post_order():
    corpus = _toy_corpus()
    stats = fit_corpus_stats(corpus)
    table = _toy_table()
    tweets = list(corpus.tweets_of("u1"))
    forward = extract_context(tweets, stats, table)
    backward = extract_context(list(reversed(tweets)), stats, table)
    for name in CONTEXT_FEATURE_NAMES:
        if math.isnan(forward[name]):
            assert math.isnan(backward[name])
        else:
            assert forward[name] == backward[name]


def test_tfidf_vanishes_when_term_everywhere():
    stats = fit_corpus_stats(_toy_corpus())
    # bob appears in every tweet-stream document (df == N == 2)
    assert stats.tfidf("tweet", "mention", "bob", {"bob": 7}) == pytest.approx(0.0)


def test_corpus_stats_roundtrip(tmp_path):
    stats = fit_corpus_stats(_toy_corpus())
    stats.fitted_window = ("2020-09-01T00:00:00+00:00", "2020-09-30T00:00:00+00:00")
    path = tmp_path / "stats.json"
    stats.save(path)
    loaded = CorpusStats.load(path)
    assert loaded.n_docs == stats.n_docs
    assert loaded.df == stats.df
    assert loaded.fitted_window == stats.fitted_window
