"""Skip-gram word embeddings with negative sampling, trained by plain SGD.

Vectors are fixed at 10 dimensions. Training walks the corpus in order, one
(center, context) pair per gradient step, with negatives drawn from the
unigram^(3/4) distribution. Everything is seeded and sequential, so a given
corpus and seed always produce bitwise-identical tables.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

EMBEDDING_DIM = 10


@dataclass(frozen=True)
class EmbeddingConfig:
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_count: int = 2
    seed: int = 0


def _log_sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    return -np.logaddexp(0.0, -np.asarray(x, dtype=float))


def _sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    # clip keeps exp() finite; the error below 1e-26 is irrelevant here
    x = np.clip(np.asarray(x, dtype=float), -60.0, 60.0)
    return 1.0 / (1.0 + np.exp(-x))


def sgns_loss(center: np.ndarray, context: np.ndarray, negatives: np.ndarray) -> float:
    """Negative-sampling loss of one step: -log s(v.u_o) - sum log s(-v.u_n)."""
    pos = float(_log_sigmoid(center @ context))
    neg = float(np.sum(_log_sigmoid(-(negatives @ center))))
    return -(pos + neg)


def sgns_gradients(center: np.ndarray, context: np.ndarray,
                   negatives: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of `sgns_loss` w.r.t. center, context and each negative row."""
    g_pos = float(_sigmoid(center @ context)) - 1.0
    g_neg = np.asarray(_sigmoid(negatives @ center), dtype=float)
    grad_center = g_pos * context + negatives.T @ g_neg
    grad_context = g_pos * center
    grad_negatives = g_neg[:, None] * center[None, :]
    return grad_center, grad_context, grad_negatives


@dataclass
class EmbeddingTable:
    """Trained term -> 10-vector lookup with its training config and loss trace."""

    vocab: dict[str, int]
    vectors: np.ndarray
    config: EmbeddingConfig
    epoch_losses: list[float] = field(default_factory=list)
    fitted_window: tuple[str, str] | None = None

    def lookup(self, term: str) -> np.ndarray | None:
        idx = self.vocab.get(term)
        if idx is None:
            return None
        return self.vectors[idx]

    def save(self, path: str | Path) -> None:
        payload = {
            "format_version": 1,
            "dim": EMBEDDING_DIM,
            "config": self.config.__dict__,
            "terms": sorted(self.vocab, key=self.vocab.get),
            "vectors": self.vectors.tolist(),
            "epoch_losses": self.epoch_losses,
            "fitted_window": list(self.fitted_window) if self.fitted_window else None,
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingTable":
        payload = json.loads(Path(path).read_text("utf-8"))
        terms = payload["terms"]
        fitted = payload.get("fitted_window")
        return cls(
            vocab={t: i for i, t in enumerate(terms)},
            vectors=np.asarray(payload["vectors"], dtype=float),
            config=EmbeddingConfig(**payload["config"]),
            epoch_losses=list(payload.get("epoch_losses", [])),
            fitted_window=tuple(fitted) if fitted else None,
        )


def _build_pairs(sentences: Sequence[Sequence[str]], vocab: dict[str, int],
                 window: int) -> tuple[np.ndarray, np.ndarray]:
    centers: list[int] = []
    contexts: list[int] = []
    for sentence in sentences:
        idx = [vocab[t] for t in sentence if t in vocab]
        n = len(idx)
        for i in range(n):
            lo = max(0, i - window)
            hi = min(n, i + window + 1)
            for j in range(lo, hi):
                if j != i:
                    centers.append(idx[i])
                    contexts.append(idx[j])
    return np.asarray(centers, dtype=np.int64), np.asarray(contexts, dtype=np.int64)


def _eval_loss(w_in: np.ndarray, w_out: np.ndarray, centers: np.ndarray,
               contexts: np.ndarray, negatives: np.ndarray) -> float:
    v = w_in[centers]
    pos = _log_sigmoid(np.einsum("id,id->i", v, w_out[contexts]))
    neg = _log_sigmoid(-np.einsum("ikd,id->ik", w_out[negatives], v))
    return float(-(pos.sum() + neg.sum()) / len(centers))


def train_embeddings(sentences: Iterable[Sequence[str]],
                     config: EmbeddingConfig | None = None) -> EmbeddingTable:
    """Train a 10-dimensional SGNS table over tokenized sentences.

    Raises ValueError when no term survives the min-frequency filter or no
    training pair exists. Served vectors are the input (target) vectors.
    """
    config = config or EmbeddingConfig()
    sents = [list(s) for s in sentences]
    counts = Counter(t for s in sents for t in s)
    kept = sorted((t for t, c in counts.items() if c >= config.min_count),
                  key=lambda t: (-counts[t], t))
    if not kept:
        raise ValueError("vocabulary empty after min-frequency filtering")
    vocab = {t: i for i, t in enumerate(kept)}
    centers, contexts = _build_pairs(sents, vocab, config.window)
    n_pairs = len(centers)
    if n_pairs == 0:
        raise ValueError("no (center, context) pairs after filtering")

    vsize = len(vocab)
    noise = np.array([counts[t] for t in kept], dtype=float) ** 0.75
    noise /= noise.sum()

    rng = np.random.default_rng(config.seed)
    w_in = (rng.random((vsize, EMBEDDING_DIM)) - 0.5) / EMBEDDING_DIM
    w_out = np.zeros((vsize, EMBEDDING_DIM))

    eval_rng = np.random.default_rng([config.seed, 0x5eed])
    eval_negs = eval_rng.choice(vsize, size=(n_pairs, config.negatives), p=noise)

    lr0 = config.learning_rate
    lr_floor = lr0 * 1e-4
    total_steps = config.epochs * n_pairs
    k = config.negatives
    center_list = centers.tolist()
    context_list = contexts.tolist()
    epoch_losses: list[float] = []
    # exp may overflow to inf inside the loop; 1/(1+inf) is exactly 0
    with np.errstate(over="ignore"):
        for epoch in range(config.epochs):
            negs = rng.choice(vsize, size=(n_pairs, k), p=noise)
            sorted_negs = np.sort(negs, axis=1)
            has_dup = (sorted_negs[:, 1:] == sorted_negs[:, :-1]).any(axis=1).tolist()
            done = epoch * n_pairs
            lrs = np.maximum(
                lr_floor,
                lr0 * (1.0 - (done + np.arange(n_pairs)) / total_steps)).tolist()
            for i in range(n_pairs):
                lr = lrs[i]
                c = center_list[i]
                o = context_list[i]
                sample = negs[i]
                v = w_in[c]
                u_o = w_out[o]
                u_n = w_out[sample]
                s_pos = v @ u_o
                if s_pos > 60.0:
                    g_pos = 0.0
                elif s_pos < -60.0:
                    g_pos = -1.0
                else:
                    g_pos = 1.0 / (1.0 + math.exp(-s_pos)) - 1.0
                g_neg = 1.0 / (1.0 + np.exp(-(u_n @ v)))
                grad_v = g_pos * u_o + u_n.T @ g_neg
                w_out[o] -= lr * g_pos * v
                update = (lr * g_neg)[:, None] * v[None, :]
                if has_dup[i]:
                    np.subtract.at(w_out, sample, update)  # duplicates accumulate
                else:
                    w_out[sample] -= update
                w_in[c] -= lr * grad_v
            epoch_losses.append(_eval_loss(w_in, w_out, centers, contexts, eval_negs))

    return EmbeddingTable(vocab=vocab, vectors=w_in, config=config,
                          epoch_losses=epoch_losses)
