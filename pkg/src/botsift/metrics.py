"""Ranking metrics, stratified splitting and cross-validation.

ROC-AUC is the Mann-Whitney rank statistic (exact under ties); PR-AUC is
average precision with step interpolation and tied scores grouped.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class MetricError(Exception):
    pass


def _as_arrays(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels, dtype=int)
    if s.shape != y.shape or s.ndim != 1:
        raise MetricError("scores and labels must be 1-d and aligned")
    return s, y


def roc_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """(concordant pairs + half the ties) / (positives * negatives)."""
    s, y = _as_arrays(scores, labels)
    pos = int(y.sum())
    neg = len(y) - pos
    if pos == 0 or neg == 0:
        raise MetricError("roc_auc needs both classes")
    order = np.argsort(s, kind="mergesort")
    sorted_scores = s[order]
    ranks = np.empty(len(s))
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum_pos = float(ranks[y == 1].sum())
    return (rank_sum_pos - pos * (pos + 1) / 2.0) / (pos * neg)


def pr_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Average precision over descending-score thresholds, ties grouped."""
    s, y = _as_arrays(scores, labels)
    pos = int(y.sum())
    if pos == 0:
        raise MetricError("pr_auc needs at least one positive")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    ap = 0.0
    tp = fp = 0
    prev_recall = 0.0
    i = 0
    n = len(s)
    while i < n:
        j = i
        while j + 1 < n and s[j + 1] == s[i]:
            j += 1
        tp += int(y[i:j + 1].sum())
        fp += (j - i + 1) - int(y[i:j + 1].sum())
        recall = tp / pos
        precision = tp / (tp + fp)
        ap += (recall - prev_recall) * precision
        prev_recall = recall
        i = j + 1
    return ap


def f1_at(scores: Sequence[float], labels: Sequence[int],
          threshold: float = 0.5) -> tuple[float, float, float]:
    """(precision, recall, F1) with score >= threshold predicting positive.

    Empty denominators follow the usual conventions: precision is 0 with no
    predicted positives, recall is 0 with no actual positives, F1 is 0 when
    precision + recall is 0.
    """
    s, y = _as_arrays(scores, labels)
    pred = s >= threshold
    tp = int(np.sum(pred & (y == 1)))
    fp = int(np.sum(pred & (y == 0)))
    fn = int(np.sum(~pred & (y == 1)))
    precision = tp / (tp + fp) if (tp + fp) else 0.0
    recall = tp / (tp + fn) if (tp + fn) else 0.0
    f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
    return precision, recall, f1


def roc_curve_points(scores: Sequence[float], labels: Sequence[int]) -> list[tuple[float, float]]:
    """(FPR, TPR) points at each distinct threshold, for external plotting."""
    s, y = _as_arrays(scores, labels)
    pos = int(y.sum())
    neg = len(y) - pos
    if pos == 0 or neg == 0:
        raise MetricError("roc curve needs both classes")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and s[j + 1] == s[i]:
            j += 1
        tp += int(y[i:j + 1].sum())
        fp += (j - i + 1) - int(y[i:j + 1].sum())
        points.append((fp / neg, tp / pos))
        i = j + 1
    return points


def pr_curve_points(scores: Sequence[float], labels: Sequence[int]) -> list[tuple[float, float]]:
    """(recall, precision) points at each distinct threshold."""
    s, y = _as_arrays(scores, labels)
    pos = int(y.sum())
    if pos == 0:
        raise MetricError("pr curve needs at least one positive")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    points = []
    tp = fp = 0
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and s[j + 1] == s[i]:
            j += 1
        tp += int(y[i:j + 1].sum())
        fp += (j - i + 1) - int(y[i:j + 1].sum())
        points.append((tp / pos, tp / (tp + fp)))
        i = j + 1
    return points


def stratified_split(labels: Sequence[int], fractions: Sequence[float],
                     seed: int) -> list[np.ndarray]:
    """Partition indices into parts preserving class ratios within one sample.

    Largest-remainder allocation per class over seeded shuffles; every index
    lands in exactly one part.
    """
    y = np.asarray(labels, dtype=int)
    fracs = np.asarray(fractions, dtype=float)
    if abs(fracs.sum() - 1.0) > 1e-9:
        raise MetricError("fractions must sum to 1")
    classes = np.unique(y)
    if len(classes) < 2:
        raise MetricError("both classes must be present")
    rng = np.random.default_rng(seed)
    parts: list[list[int]] = [[] for _ in fracs]
    for cls in classes:
        idx = np.flatnonzero(y == cls)
        if len(idx) < len(fracs):
            raise MetricError(f"class {cls} has fewer samples than parts")
        rng.shuffle(idx)
        quota = fracs * len(idx)
        base = np.floor(quota).astype(int)
        remainder = quota - base
        short = len(idx) - base.sum()
        # deterministic largest-remainder rounding, index order breaking ties
        extra_order = sorted(range(len(fracs)), key=lambda i: (-remainder[i], i))
        for i in extra_order[:short]:
            base[i] += 1
        offset = 0
        for part, size in zip(parts, base):
            part.extend(idx[offset:offset + size].tolist())
            offset += size
    return [np.array(sorted(p), dtype=int) for p in parts]


def stratified_folds(labels: Sequence[int], k: int, seed: int) -> list[np.ndarray]:
    """k disjoint, exhaustive validation folds, stratified within one sample."""
    if k < 2:
        raise MetricError("k must be at least 2")
    return stratified_split(labels, [1.0 / k] * k, seed)


@dataclass
class EvalReport:
    """Metrics of one evaluation run, with per-fold detail and curve points."""

    f1: float = 0.0
    precision: float = 0.0
    recall: float = 0.0
    pr_auc: float = 0.0
    roc_auc: float = 0.0
    per_fold: list[dict[str, float]] = field(default_factory=list)
    mean: dict[str, float] = field(default_factory=dict)
    std: dict[str, float] = field(default_factory=dict)
    roc_points: list[tuple[float, float]] = field(default_factory=list)
    pr_points: list[tuple[float, float]] = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "f1": self.f1, "precision": self.precision, "recall": self.recall,
            "pr_auc": self.pr_auc, "roc_auc": self.roc_auc,
            "per_fold": self.per_fold, "mean": self.mean, "std": self.std,
            "roc_points": self.roc_points, "pr_points": self.pr_points,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def evaluate_scores(scores: Sequence[float], labels: Sequence[int],
                    threshold: float = 0.5) -> dict[str, float]:
    precision, recall, f1 = f1_at(scores, labels, threshold)
    return {
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "pr_auc": pr_auc(scores, labels),
        "roc_auc": roc_auc(scores, labels),
    }


def kfold_cv(x: np.ndarray, y: Sequence[int], k: int,
             pipeline: Callable[[np.ndarray, np.ndarray, np.ndarray, int], np.ndarray],
             seed: int) -> list[dict[str, float]]:
    """Stratified k-fold CV. ``pipeline(x_train, y_train, x_val, fold_seed)``
    returns validation scores; any resampling happens inside the pipeline and
    never touches the validation fold, which stays a slice of the originals.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    folds = stratified_folds(y, k, seed)
    covered = np.concatenate(folds)
    if len(np.unique(covered)) != len(y) or len(covered) != len(y):
        raise MetricError("folds must partition the sample set")
    reports = []
    for fold_idx, val_idx in enumerate(folds):
        if len(np.unique(y[val_idx])) < 2:
            raise MetricError(f"fold {fold_idx} lacks one of the classes")
        train_idx = np.setdiff1d(np.arange(len(y)), val_idx)
        scores = pipeline(x[train_idx], y[train_idx], x[val_idx], seed + fold_idx)
        reports.append(evaluate_scores(scores, y[val_idx]))
    return reports


def summarize_folds(per_fold: list[dict[str, float]]) -> tuple[dict[str, float], dict[str, float]]:
    keys = per_fold[0].keys()
    mean = {k: float(np.mean([r[k] for r in per_fold])) for k in keys}
    std = {k: float(np.std([r[k] for r in per_fold])) for k in keys}
    return mean, std
