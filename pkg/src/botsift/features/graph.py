"""Retweet interaction graph and its six per-node degree statistics.

A directed edge i -> j means user i retweeted user j; the weight counts the
retweet events between the pair. Retweeted authors outside the corpus are
kept as nodes so popular accounts get correct in-degrees.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..corpus import CorpusView

GRAPH_FEATURE_NAMES: tuple[str, ...] = (
    "in_degree",
    "out_degree",
    "degree",
    "weighted_in_degree",
    "weighted_out_degree",
    "weighted_degree",
)


@dataclass
class RetweetGraph:
    nodes: set[str] = field(default_factory=set)
    out_weights: dict[str, dict[str, int]] = field(default_factory=dict)
    in_weights: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def n_edges(self) -> int:
        return sum(len(targets) for targets in self.out_weights.values())

    @property
    def total_weight(self) -> int:
        return sum(w for targets in self.out_weights.values() for w in targets.values())

    def add_edge(self, src: str, dst: str, weight: int = 1) -> None:
        self.nodes.add(src)
        self.nodes.add(dst)
        out_row = self.out_weights.setdefault(src, {})
        out_row[dst] = out_row.get(dst, 0) + weight
        in_row = self.in_weights.setdefault(dst, {})
        in_row[src] = in_row.get(src, 0) + weight

    def edge_list(self) -> list[tuple[str, str, int]]:
        edges = [(src, dst, w)
                 for src, row in self.out_weights.items()
                 for dst, w in row.items()]
        return sorted(edges)


def build_graph(corpus: CorpusView) -> RetweetGraph:
    """Aggregate one weighted edge per ordered retweeting pair.

    Corpus accounts all appear as nodes, isolated or not; retweets without a
    recorded original author contribute no edge.
    """
    graph = RetweetGraph()
    graph.nodes.update(corpus.accounts)
    for tweet in corpus.iter_tweets():
        if tweet.is_retweet and tweet.retweeted_author_id is not None:
            graph.add_edge(tweet.author_id, tweet.retweeted_author_id)
    return graph


def node_stats(graph: RetweetGraph, user_id: str) -> dict[str, float]:
    """The six degree statistics; unknown or isolated users get all zeros."""
    out_row = graph.out_weights.get(user_id, {})
    in_row = graph.in_weights.get(user_id, {})
    out_degree = len(out_row)
    in_degree = len(in_row)
    weighted_out = sum(out_row.values())
    weighted_in = sum(in_row.values())
    return {
        "in_degree": float(in_degree),
        "out_degree": float(out_degree),
        "degree": float(in_degree + out_degree),
        "weighted_in_degree": float(weighted_in),
        "weighted_out_degree": float(weighted_out),
        "weighted_degree": float(weighted_in + weighted_out),
    }


def export_edge_list(graph: RetweetGraph, path: str | Path) -> None:
    """(source, target, weight) rows for external graph tools."""
    lines = [f"{src}\t{dst}\t{w}" for src, dst, w in graph.edge_list()]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
