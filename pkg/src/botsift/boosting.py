"""Second-order gradient-boosted regression trees for binary classification.

Trees are grown by exact greedy split search over sorted feature values with
sparsity-aware handling of missing cells: both missing-goes-left and
missing-goes-right are scanned and the better direction is stored as the
split's default. Split quality is the structure-score gain
0.5 * [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma and only
strictly positive gains are accepted. Predictions are
sigmoid(base_margin + eta * sum of tree outputs).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .metrics import kfold_cv, summarize_folds
from .resample import ResampleConfig, resample


class BoosterError(Exception):
    pass


@dataclass(frozen=True)
class BoosterConfig:
    learning_rate: float = 0.1
    max_depth: int = 6
    num_rounds: int = 100
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0
    subsample: float = 1.0
    colsample: float = 1.0
    base_score: float | None = None  # prior probability; None -> positive rate
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.learning_rate <= 1.0):
            raise BoosterError("learning_rate must be in (0, 1]")
        if self.max_depth < 1:
            raise BoosterError("max_depth must be >= 1")
        if self.num_rounds < 0:
            raise BoosterError("num_rounds must be >= 0")
        if self.reg_lambda < 0 or self.gamma < 0 or self.min_child_weight < 0:
            raise BoosterError("reg_lambda, gamma and min_child_weight must be >= 0")
        if not (0.0 < self.subsample <= 1.0 and 0.0 < self.colsample <= 1.0):
            raise BoosterError("subsample and colsample must be in (0, 1]")

    def sort_key(self) -> tuple:
        return (self.learning_rate, self.max_depth, self.num_rounds,
                self.reg_lambda, self.gamma, self.min_child_weight,
                self.subsample, self.colsample,
                -1.0 if self.base_score is None else self.base_score, self.seed)


def sigmoid(x: np.ndarray | float) -> np.ndarray | float:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60.0, 60.0)))


def logistic_grad_hess(y: np.ndarray, margin: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivatives of logloss w.r.t. the margin: (p - y, p(1-p))."""
    p = sigmoid(np.asarray(margin, dtype=float))
    y = np.asarray(y, dtype=float)
    return p - y, p * (1.0 - p)


def leaf_weight(g_sum: float, h_sum: float, reg_lambda: float) -> float:
    """Closed-form optimal leaf value -G / (H + lambda)."""
    denom = h_sum + reg_lambda
    if denom <= 0:
        raise BoosterError("H + lambda must be positive")
    return -g_sum / denom


def split_gain(gl: float, hl: float, gr: float, hr: float,
               reg_lambda: float, gamma: float) -> float:
    lam = reg_lambda
    return 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam)
                  - (gl + gr) ** 2 / (hl + hr + lam)) - gamma


def logloss(y: np.ndarray, prob: np.ndarray) -> float:
    p = np.clip(np.asarray(prob, dtype=float), 1e-15, 1.0 - 1e-15)
    y = np.asarray(y, dtype=float)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


@dataclass
class Tree:
    """Flat node arrays; feature -1 marks a leaf, value holds leaf weights."""

    feature: np.ndarray
    threshold: np.ndarray
    default_left: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty(x.shape[0])
        node = np.zeros(x.shape[0], dtype=np.int64)
        active = np.arange(x.shape[0])
        while active.size:
            feats = self.feature[node[active]]
            at_leaf = feats < 0
            leaf_rows = active[at_leaf]
            out[leaf_rows] = self.value[node[leaf_rows]]
            active = active[~at_leaf]
            if not active.size:
                break
            cur = node[active]
            vals = x[active, self.feature[cur]]
            go_left = np.where(np.isnan(vals), self.default_left[cur],
                               vals < self.threshold[cur])
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
        return out

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "default_left": self.default_left.astype(int).tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Tree":
        return cls(
            feature=np.asarray(payload["feature"], dtype=np.int64),
            threshold=np.asarray(payload["threshold"], dtype=float),
            default_left=np.asarray(payload["default_left"], dtype=bool),
            left=np.asarray(payload["left"], dtype=np.int64),
            right=np.asarray(payload["right"], dtype=np.int64),
            value=np.asarray(payload["value"], dtype=float),
        )


class _TreeBuilder:
    """Accumulates nodes while a tree is grown recursively."""

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.default_left: list[bool] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def add(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.default_left.append(True)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def finish(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=float),
            default_left=np.asarray(self.default_left, dtype=bool),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            value=np.asarray(self.value, dtype=float),
        )


def _best_split(x: np.ndarray, g: np.ndarray, h: np.ndarray,
                order_matrix: np.ndarray, cols: np.ndarray,
                config: BoosterConfig) -> tuple[int, float, bool, float] | None:
    """Exact greedy scan over all candidate (feature, threshold) pairs.

    ``order_matrix`` is feature-major (n_cols, m): row c holds the node's row
    ids sorted by feature cols[c], missing values last. Missing-goes-right
    and missing-goes-left are both evaluated; the best strictly positive gain
    wins, ties broken by feature index then scan position.
    """
    m = order_matrix.shape[1]
    if m < 2:
        return None
    sorted_vals = x[order_matrix, cols[:, None]]
    sorted_g = g[order_matrix]
    sorted_h = h[order_matrix]
    nonmiss = ~np.isnan(sorted_vals)
    counts = nonmiss.sum(axis=1)

    g_total = float(sorted_g[0].sum())
    h_total = float(sorted_h[0].sum())
    lam = config.reg_lambda
    mcw = config.min_child_weight
    parent_score = g_total * g_total / (h_total + lam)

    np.copyto(sorted_g, 0.0, where=~nonmiss)
    np.copyto(sorted_h, 0.0, where=~nonmiss)
    g_prefix = sorted_g.cumsum(axis=1)
    h_prefix = sorted_h.cumsum(axis=1)
    g_miss = g_total - g_prefix[:, -1]
    h_miss = h_total - h_prefix[:, -1]

    next_vals = np.full_like(sorted_vals, np.nan)
    next_vals[:, :-1] = sorted_vals[:, 1:]
    positions = np.arange(m)[None, :]
    candidate = (positions < (counts - 1)[:, None]) & (sorted_vals < next_vals)

    def direction_score(gl: np.ndarray, hl: np.ndarray) -> np.ndarray:
        # structure score gl^2/(hl+lam) + gr^2/(hr+lam); invalid -> -inf
        gr = g_total - gl
        hr = h_total - hl
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = gl * gl / (hl + lam) + gr * gr / (hr + lam)
        raw[(hl < mcw) | (hr < mcw) | ~np.isfinite(raw)] = -np.inf
        return raw

    score_right = direction_score(g_prefix, h_prefix)               # missing -> right
    score_left = direction_score(g_prefix + g_miss[:, None],
                                 h_prefix + h_miss[:, None])        # missing -> left
    default_left = score_left >= score_right
    scores = np.maximum(score_left, score_right)
    scores[~candidate] = -np.inf

    flat = int(np.argmax(scores))  # C-order: feature index breaks ties first
    col_idx, pos = divmod(flat, m)
    best_gain = 0.5 * (float(scores[col_idx, pos]) - parent_score) - config.gamma
    if not np.isfinite(best_gain) or best_gain <= 0.0:
        return None
    lo = float(sorted_vals[col_idx, pos])
    hi = float(sorted_vals[col_idx, pos + 1])
    threshold = (lo + hi) / 2.0
    if not (lo < threshold):  # midpoint rounded onto lo: fall back to hi
        threshold = hi
    return int(cols[col_idx]), threshold, bool(default_left[col_idx, pos]), best_gain


def _compress_order(order_matrix: np.ndarray, member: np.ndarray,
                    size: int) -> np.ndarray:
    """Restrict the per-feature sorted row ids to a subset, keeping order."""
    mask = member[order_matrix]
    return order_matrix[mask].reshape(order_matrix.shape[0], size)


def _grow_tree(x: np.ndarray, g: np.ndarray, h: np.ndarray, rows: np.ndarray,
               cols: np.ndarray, config: BoosterConfig,
               gain_accumulator: np.ndarray) -> Tree:
    builder = _TreeBuilder()
    # sort each scanned column once; children reuse the order via compression
    xs = np.ascontiguousarray(x[np.ix_(rows, cols)].T)
    root_order = rows[np.argsort(xs, axis=1, kind="stable")]  # NaNs sort last

    def build(order_matrix: np.ndarray, depth: int) -> int:
        idx = builder.add()
        node_rows = order_matrix[0]
        g_sum = float(g[node_rows].sum())
        h_sum = float(h[node_rows].sum())
        split = None
        if depth < config.max_depth and len(node_rows) >= 2:
            split = _best_split(x, g, h, order_matrix, cols, config)
        if split is None:
            builder.value[idx] = leaf_weight(g_sum, h_sum, config.reg_lambda)
            return idx
        feature, threshold, default_left, gain = split
        gain_accumulator[feature] += gain
        vals = x[node_rows, feature]
        go_left = np.where(np.isnan(vals), default_left, vals < threshold)
        member_left = np.zeros(x.shape[0], dtype=bool)
        member_left[node_rows[go_left]] = True
        n_left = int(go_left.sum())
        left_order = _compress_order(order_matrix, member_left, n_left)
        member_right = np.zeros(x.shape[0], dtype=bool)
        member_right[node_rows[~go_left]] = True
        right_order = _compress_order(order_matrix, member_right,
                                      len(node_rows) - n_left)
        left_idx = build(left_order, depth + 1)
        right_idx = build(right_order, depth + 1)
        builder.feature[idx] = feature
        builder.threshold[idx] = threshold
        builder.default_left[idx] = default_left
        builder.left[idx] = left_idx
        builder.right[idx] = right_idx
        return idx

    build(root_order, 0)
    return builder.finish()


@dataclass
class TreeEnsemble:
    """Additive model: margin = base_margin + learning_rate * sum(tree outputs)."""

    base_margin: float
    learning_rate: float
    trees: list[Tree]
    feature_names: tuple[str, ...]
    config: BoosterConfig
    gain_by_feature: np.ndarray
    training_loss: list[float] = field(default_factory=list)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def predict_margin(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.n_features:
            raise BoosterError(
                f"expected {self.n_features} features, got {x.shape[1]}")
        margin = np.full(x.shape[0], self.base_margin)
        for tree in self.trees:
            margin += self.learning_rate * tree.predict(x)
        return margin

    def predict(self, x: np.ndarray) -> np.ndarray:
        return sigmoid(self.predict_margin(x))

    def feature_importance(self) -> np.ndarray:
        """Total accepted split gain per feature."""
        return self.gain_by_feature.copy()

    def referenced_features(self) -> list[int]:
        used: set[int] = set()
        for tree in self.trees:
            used.update(int(f) for f in tree.feature if f >= 0)
        return sorted(used)

    def save(self, path: str | Path) -> None:
        payload = {
            "format_version": 1,
            "base_margin": self.base_margin,
            "learning_rate": self.learning_rate,
            "feature_names": list(self.feature_names),
            "config": self.config.__dict__,
            "gain_by_feature": self.gain_by_feature.tolist(),
            "training_loss": self.training_loss,
            "trees": [t.to_dict() for t in self.trees],
        }
        Path(path).write_text(json.dumps(payload), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "TreeEnsemble":
        payload = json.loads(Path(path).read_text("utf-8"))
        return cls(
            base_margin=float(payload["base_margin"]),
            learning_rate=float(payload["learning_rate"]),
            trees=[Tree.from_dict(t) for t in payload["trees"]],
            feature_names=tuple(payload["feature_names"]),
            config=BoosterConfig(**payload["config"]),
            gain_by_feature=np.asarray(payload["gain_by_feature"], dtype=float),
            training_loss=list(payload.get("training_loss", [])),
        )


def train(x: np.ndarray, y: Sequence[int], config: BoosterConfig | None = None,
          feature_names: Sequence[str] | None = None,
          selected: Sequence[bool] | None = None) -> TreeEnsemble:
    """Fit ``config.num_rounds`` trees by exact greedy boosting.

    ``selected`` masks the feature columns the trees may split on. Training
    logloss after every round is recorded on the returned ensemble.
    """
    config = config or BoosterConfig()
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise BoosterError("x must be 2-d")
    y = np.asarray(y, dtype=int)
    if len(y) != x.shape[0]:
        raise BoosterError("labels must align with rows")
    if len(y) < 2:
        raise BoosterError("need at least two samples")
    if len(np.unique(y)) < 2:
        raise BoosterError("training data must contain both classes")
    n, n_features = x.shape
    if feature_names is None:
        feature_names = tuple(f"f{i}" for i in range(n_features))
    feature_names = tuple(feature_names)
    if len(feature_names) != n_features:
        raise BoosterError("feature_names must match columns")
    if selected is None:
        active = np.arange(n_features)
    else:
        mask = np.asarray(selected, dtype=bool)
        if mask.shape != (n_features,):
            raise BoosterError("selected mask must match columns")
        active = np.flatnonzero(mask)
    if active.size == 0:
        raise BoosterError("feature mask selects nothing")

    prior = config.base_score if config.base_score is not None else float(y.mean())
    prior = min(max(prior, 1e-6), 1.0 - 1e-6)
    base_margin = math.log(prior / (1.0 - prior))

    rng = np.random.default_rng(config.seed)
    margins = np.full(n, base_margin)
    gain_by_feature = np.zeros(n_features)
    trees: list[Tree] = []
    losses: list[float] = []
    for _ in range(config.num_rounds):
        g, h = logistic_grad_hess(y, margins)
        if config.subsample < 1.0:
            size = max(2, int(round(config.subsample * n)))
            rows = np.sort(rng.choice(n, size=size, replace=False))
        else:
            rows = np.arange(n)
        if config.colsample < 1.0:
            size = max(1, int(round(config.colsample * active.size)))
            cols = np.sort(rng.choice(active, size=size, replace=False))
        else:
            cols = active
        tree = _grow_tree(x, g, h, rows, cols, config, gain_by_feature)
        trees.append(tree)
        margins = margins + config.learning_rate * tree.predict(x)
        losses.append(logloss(y, sigmoid(margins)))

    return TreeEnsemble(base_margin=base_margin, learning_rate=config.learning_rate,
                        trees=trees, feature_names=feature_names, config=config,
                        gain_by_feature=gain_by_feature, training_loss=losses)


def select_features(model: TreeEnsemble,
                    threshold: float | str = "mean") -> tuple[np.ndarray, int]:
    """Keep features whose total-gain importance reaches the threshold.

    ``"mean"`` (default) uses the mean importance over all columns. Returns
    (mask, retained count).
    """
    importance = model.feature_importance()
    cutoff = float(importance.mean()) if threshold == "mean" else float(threshold)
    mask = importance >= cutoff
    return mask, int(mask.sum())


@dataclass
class TuneResult:
    best_config: BoosterConfig
    best_score: float
    table: list[dict]

    def to_json(self) -> str:
        rows = []
        for entry in self.table:
            row = dict(entry)
            row["config"] = entry["config"].__dict__
            rows.append(row)
        return json.dumps({
            "metric": "roc_auc",
            "best_config": self.best_config.__dict__,
            "best_score": self.best_score,
            "table": rows,
        }, indent=2, sort_keys=True)


def expand_grid(**axes: Sequence) -> list[BoosterConfig]:
    """Cartesian grid of BoosterConfig overrides, in lexicographic axis order."""
    configs = [BoosterConfig()]
    for name in sorted(axes):
        configs = [replace(cfg, **{name: value})
                   for cfg in configs for value in axes[name]]
    return configs


def tune(x: np.ndarray, y: Sequence[int], grid: Sequence[BoosterConfig],
         resample_config: ResampleConfig | None = None, k: int = 5,
         seed: int = 0) -> TuneResult:
    """Grid search by stratified k-fold CV with per-fold training resampling.

    Selection is by mean validation ROC-AUC; ties prefer fewer rounds, then
    the lexicographic config order.
    """
    if not grid:
        raise BoosterError("tuning grid is empty")
    resample_config = resample_config or ResampleConfig()
    y = np.asarray(y, dtype=int)
    table: list[dict] = []
    for config in grid:
        def pipeline(x_train, y_train, x_val, fold_seed,
                     _config=config) -> np.ndarray:
            balanced = resample(x_train, y_train,
                                replace(resample_config, seed=fold_seed))
            model = train(balanced.x, balanced.y, replace(_config, seed=fold_seed))
            return model.predict(x_val)

        per_fold = kfold_cv(x, y, k, pipeline, seed)
        mean, std = summarize_folds(per_fold)
        table.append({"config": config, "per_fold": per_fold,
                      "mean": mean, "std": std})
    best = max(table, key=lambda e: (e["mean"]["roc_auc"],))
    tied = [e for e in table if e["mean"]["roc_auc"] == best["mean"]["roc_auc"]]
    winner = min(tied, key=lambda e: (e["config"].num_rounds, e["config"].sort_key()))
    return TuneResult(best_config=winner["config"],
                      best_score=winner["mean"]["roc_auc"], table=table)
