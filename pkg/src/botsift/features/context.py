"""The 204 context features: TF-IDF scores and embedding vectors of each
user's top-3 mentions/hashtags/words, split by tweet vs retweet stream, plus
per-post URL/hashtag/mention count statistics.

Documents for the TF-IDF statistics are per user, per stream, per field:
a user's lowercased mention (or hashtag) multiset over their tweets, and a
second document over their retweets. The document count of a stream is the
number of users with at least one post in it.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..corpus import CorpusView, TweetRecord
from ..embedding import EMBEDDING_DIM, EmbeddingTable
from ..textproc import (STOPWORDS_VERSION, TOKENIZER_VERSION, hashtag_token,
                        mention_token, tokenize)

STREAMS = ("tweet", "retweet")
TFIDF_FIELDS = ("mention", "hashtag")
RANKS = (1, 2, 3)
COUNT_KINDS = ("urls", "hashtags", "mentions")


def _build_names() -> tuple[str, ...]:
    names: list[str] = []
    for stream in STREAMS:
        for rank in RANKS:
            names.append(f"N{rank}_{stream}_mentioned_tfidf")
        for rank in RANKS:
            names.append(f"N{rank}_{stream}_hashtags_tfidf")
        for block in ("mentioned_word", "hashtags_word", "word"):
            for rank in RANKS:
                for d in range(EMBEDDING_DIM):
                    names.append(f"N{rank}_{stream}_{block}_{d}")
    for stream in STREAMS:
        for kind in COUNT_KINDS:
            names.append(f"{stream}_number_of_{kind}_avg")
            names.append(f"{stream}_number_of_{kind}_std")
    return tuple(names)


CONTEXT_FEATURE_NAMES: tuple[str, ...] = _build_names()
assert len(CONTEXT_FEATURE_NAMES) == 204

_STREAM_SLOTS: dict[str, tuple[str, ...]] = {
    stream: tuple(n for n in CONTEXT_FEATURE_NAMES
                  if n.startswith(f"{stream}_number_of_") or f"_{stream}_" in n)
    for stream in STREAMS
}
assert all(len(slots) == 102 for slots in _STREAM_SLOTS.values())


def tfidf(term: str, doc: Mapping[str, int], n_docs: int, df_count: int) -> float:
    """Raw term count in the document times ln((1 + N) / (1 + df))."""
    tf = doc.get(term, 0)
    if tf == 0:
        return 0.0
    return tf * math.log((1.0 + n_docs) / (1.0 + df_count))


def top_k(terms: Mapping[str, int], k: int = 3) -> list[str]:
    """The k most frequent terms, ties broken lexicographically."""
    ranked = sorted(terms.items(), key=lambda kv: (-kv[1], kv[0]))
    return [t for t, _ in ranked[:k]]


@dataclass
class CorpusStats:
    """Corpus-level document frequencies backing the TF-IDF slots."""

    n_docs: dict[str, int] = field(default_factory=lambda: {s: 0 for s in STREAMS})
    df: dict[str, dict[str, dict[str, int]]] = field(
        default_factory=lambda: {s: {f: {} for f in TFIDF_FIELDS} for s in STREAMS})
    stopwords_version: str = STOPWORDS_VERSION
    tokenizer_version: str = TOKENIZER_VERSION
    fitted_window: tuple[str, str] | None = None

    def idf(self, stream: str, field_name: str, term: str) -> float:
        n = self.n_docs[stream]
        df_count = self.df[stream][field_name].get(term, 0)
        return math.log((1.0 + n) / (1.0 + df_count))

    def tfidf(self, stream: str, field_name: str, term: str,
              doc: Mapping[str, int]) -> float:
        return tfidf(term, doc, self.n_docs[stream],
                     self.df[stream][field_name].get(term, 0))

    def save(self, path: str | Path) -> None:
        payload = {
            "format_version": 1,
            "n_docs": self.n_docs,
            "df": self.df,
            "stopwords_version": self.stopwords_version,
            "tokenizer_version": self.tokenizer_version,
            "fitted_window": list(self.fitted_window) if self.fitted_window else None,
        }
        Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "CorpusStats":
        payload = json.loads(Path(path).read_text("utf-8"))
        fitted = payload.get("fitted_window")
        return cls(n_docs=payload["n_docs"], df=payload["df"],
                   stopwords_version=payload["stopwords_version"],
                   tokenizer_version=payload["tokenizer_version"],
                   fitted_window=tuple(fitted) if fitted else None)


def split_streams(tweets: Sequence[TweetRecord]) -> dict[str, list[TweetRecord]]:
    return {
        "tweet": [t for t in tweets if not t.is_retweet],
        "retweet": [t for t in tweets if t.is_retweet],
    }


def stream_docs(posts: Sequence[TweetRecord]) -> dict[str, Counter]:
    """Mention/hashtag/word term multisets of one user's stream."""
    mentions: Counter = Counter()
    hashtags: Counter = Counter()
    words: Counter = Counter()
    for post in posts:
        mentions.update(m.lower() for m in post.mentions)
        hashtags.update(h.lower() for h in post.hashtags)
        words.update(tokenize(post.text))
    return {"mention": mentions, "hashtag": hashtags, "word": words}


def fit_corpus_stats(corpus: CorpusView) -> CorpusStats:
    stats = CorpusStats()
    for user_id in sorted(corpus.accounts):
        streams = split_streams(corpus.tweets_of(user_id))
        for stream, posts in streams.items():
            if not posts:
                continue
            stats.n_docs[stream] += 1
            docs = stream_docs(posts)
            for field_name in TFIDF_FIELDS:
                for term in docs[field_name]:
                    bucket = stats.df[stream][field_name]
                    bucket[term] = bucket.get(term, 0) + 1
    return stats


def _embed(table: EmbeddingTable, term: str | None) -> np.ndarray:
    if term is not None:
        vec = table.lookup(term)
        if vec is not None:
            return np.asarray(vec, dtype=float)
    return np.full(EMBEDDING_DIM, np.nan)


def _count_stats(posts: Sequence[TweetRecord], kind: str) -> tuple[float, float]:
    counts = np.array([len(getattr(t, kind)) for t in posts], dtype=float)
    return float(counts.mean()), float(counts.std())


def extract_context(tweets: Sequence[TweetRecord], stats: CorpusStats,
                    table: EmbeddingTable) -> dict[str, float]:
    """All 204 context slots for one user; empty streams carry NaN markers."""
    values: dict[str, float] = {}
    streams = split_streams(tweets)
    for stream, posts in streams.items():
        if not posts:
            for name in _STREAM_SLOTS[stream]:
                values[name] = math.nan
            continue
        docs = stream_docs(posts)
        top = {f: top_k(docs[f]) for f in ("mention", "hashtag", "word")}
        for rank in RANKS:
            mention = top["mention"][rank - 1] if len(top["mention"]) >= rank else None
            hashtag = top["hashtag"][rank - 1] if len(top["hashtag"]) >= rank else None
            word = top["word"][rank - 1] if len(top["word"]) >= rank else None
            values[f"N{rank}_{stream}_mentioned_tfidf"] = (
                stats.tfidf(stream, "mention", mention, docs["mention"])
                if mention is not None else math.nan)
            values[f"N{rank}_{stream}_hashtags_tfidf"] = (
                stats.tfidf(stream, "hashtag", hashtag, docs["hashtag"])
                if hashtag is not None else math.nan)
            blocks = {
                "mentioned_word": _embed(table, mention_token(mention) if mention else None),
                "hashtags_word": _embed(table, hashtag_token(hashtag) if hashtag else None),
                "word": _embed(table, word),
            }
            for block, vec in blocks.items():
                for d in range(EMBEDDING_DIM):
                    values[f"N{rank}_{stream}_{block}_{d}"] = float(vec[d])
        for kind in COUNT_KINDS:
            avg, std = _count_stats(posts, kind)
            values[f"{stream}_number_of_{kind}_avg"] = avg
            values[f"{stream}_number_of_{kind}_std"] = std
    assert set(values) == set(CONTEXT_FEATURE_NAMES)
    return values
