"""Fixed-order 335-slot feature space and the full extraction pipeline.

The canonical order is profile (26), context (204), time (99), graph (6).
Missing values are NaN in memory and empty cells in the CSV matrix format.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..corpus import CorpusView, format_timestamp
from ..embedding import EmbeddingConfig, EmbeddingTable, train_embeddings
from ..textproc import hashtag_token, mention_token, tokenize
from .context import (CONTEXT_FEATURE_NAMES, CorpusStats, extract_context,
                      fit_corpus_stats)
from .graph import (GRAPH_FEATURE_NAMES, RetweetGraph, build_graph,
                    node_stats)
from .profile import (PROFILE_FEATURE_NAMES, PROFILE_GENERAL_NAMES,
                      BigramModel, extract_profile)
from .temporal import TEMPORAL_FEATURE_NAMES, extract_temporal

CATEGORY_NAMES: dict[str, tuple[str, ...]] = {
    "profile": PROFILE_FEATURE_NAMES,
    "context": CONTEXT_FEATURE_NAMES,
    "time": TEMPORAL_FEATURE_NAMES,
    "graph": GRAPH_FEATURE_NAMES,
}

TOTAL_FEATURES = 335


@dataclass(frozen=True)
class FeatureSpec:
    """Canonical feature ordering with category tags and a selection mask."""

    names: tuple[str, ...]
    categories: tuple[str, ...]
    selected: tuple[bool, ...]

    def __post_init__(self):
        if not (len(self.names) == len(self.categories) == len(self.selected)):
            raise ValueError("names, categories and selected must align")

    @property
    def n_selected(self) -> int:
        return sum(self.selected)

    def category_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for cat in self.categories:
            counts[cat] = counts.get(cat, 0) + 1
        return counts

    def selected_mask(self) -> np.ndarray:
        return np.asarray(self.selected, dtype=bool)

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def with_selected(self, mask: Sequence[bool]) -> "FeatureSpec":
        if len(mask) != len(self.names):
            raise ValueError("mask length mismatch")
        return FeatureSpec(names=self.names, categories=self.categories,
                           selected=tuple(bool(m) for m in mask))

    def restrict_to_category(self, category: str) -> "FeatureSpec":
        return self.with_selected(tuple(c == category for c in self.categories))


def build_feature_spec() -> FeatureSpec:
    names: list[str] = []
    categories: list[str] = []
    for cat, cat_names in CATEGORY_NAMES.items():
        names.extend(cat_names)
        categories.extend([cat] * len(cat_names))
    assert len(names) == TOTAL_FEATURES
    return FeatureSpec(names=tuple(names), categories=tuple(categories),
                       selected=(True,) * len(names))


@dataclass
class FittedStats:
    """Everything fitted on a training corpus that featurization reuses."""

    corpus_stats: CorpusStats
    embeddings: EmbeddingTable
    bigram: BigramModel
    fitted_window: tuple[str, str]


def corpus_sentences(corpus: CorpusView) -> list[list[str]]:
    """Embedding training text: word tokens plus mention/hashtag tokens per post."""
    sentences: list[list[str]] = []
    for user_id in sorted(corpus.accounts):
        for tweet in corpus.tweets_of(user_id):
            sentence = tokenize(tweet.text)
            sentence.extend(mention_token(m) for m in tweet.mentions)
            sentence.extend(hashtag_token(h) for h in tweet.hashtags)
            if sentence:
                sentences.append(sentence)
    return sentences


def fit_stats(corpus: CorpusView,
              embed_config: EmbeddingConfig | None = None) -> FittedStats:
    """Fit TF-IDF statistics, embeddings and the bigram model on one corpus."""
    window = (format_timestamp(corpus.window[0]), format_timestamp(corpus.window[1]))
    stats = fit_corpus_stats(corpus)
    stats.fitted_window = window
    table = train_embeddings(corpus_sentences(corpus), embed_config)
    table.fitted_window = window
    bigram = BigramModel.fit(a.screen_name for a in corpus.accounts.values())
    bigram.fitted_window = window
    return FittedStats(corpus_stats=stats, embeddings=table, bigram=bigram,
                       fitted_window=window)


@dataclass
class FeatureMatrix:
    """Per-user rows over the 335 canonical columns, NaN marking missing."""

    user_ids: list[str]
    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.user_ids), len(self.names)):
            raise ValueError("matrix shape must be (n_users, n_features)")

    def row(self, user_id: str) -> np.ndarray:
        return self.values[self.user_ids.index(user_id)]

    def save_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["user_id", *self.names])
            for uid, row in zip(self.user_ids, self.values):
                cells = ["" if math.isnan(v) else repr(v) for v in row.tolist()]
                writer.writerow([uid, *cells])

    @classmethod
    def load_csv(cls, path: str | Path) -> "FeatureMatrix":
        with Path(path).open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            names = tuple(header[1:])
            user_ids: list[str] = []
            rows: list[list[float]] = []
            for record in reader:
                user_ids.append(record[0])
                rows.append([math.nan if cell == "" else float(cell)
                             for cell in record[1:]])
        values = np.asarray(rows, dtype=float) if rows else np.empty((0, len(names)))
        return cls(user_ids=user_ids, names=names, values=values)


def extract_features(corpus: CorpusView, stats: FittedStats,
                     user_ids: Sequence[str] | None = None,
                     spec: FeatureSpec | None = None) -> FeatureMatrix:
    """Extract the full 335-column matrix for the given users (default: all).

    The retweet graph is built from the corpus being featurized; TF-IDF,
    embeddings and the bigram model come from ``stats``.
    """
    spec = spec or build_feature_spec()
    ids = sorted(corpus.accounts) if user_ids is None else list(user_ids)
    unknown = [u for u in ids if u not in corpus.accounts]
    if unknown:
        raise KeyError(f"users not in corpus: {unknown[:5]}")
    graph = build_graph(corpus)
    rows = np.empty((len(ids), len(spec.names)))
    col = {name: i for i, name in enumerate(spec.names)}
    for r, uid in enumerate(ids):
        account = corpus.accounts[uid]
        tweets = corpus.tweets_of(uid)
        values: dict[str, float] = {}
        values.update(extract_profile(account, tweets, stats.bigram,
                                      corpus.reference_date))
        values.update(extract_context(tweets, stats.corpus_stats, stats.embeddings))
        values.update(extract_temporal(tweets, corpus.window))
        values.update(node_stats(graph, uid))
        for name, value in values.items():
            rows[r, col[name]] = value
    return FeatureMatrix(user_ids=ids, names=spec.names, values=rows)
