"""Shapley-value explanations of ensemble predictions, in margin space.

Coalition values are interventional: features inside the coalition keep the
instance's values, the rest are substituted from a background sample set and
the model margin is averaged. Two routes compute the same quantity: an
exponential brute-force enumeration (the oracle, feasible to ~15 features)
and a polynomial per-leaf path decomposition used for real models.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .boosting import Tree, TreeEnsemble


class ExplainError(Exception):
    pass


@dataclass
class Explanation:
    """Per-feature margin contributions for one prediction.

    base_value + sum(contributions) reconstructs the margin (local accuracy).
    """

    user_id: str | None
    base_value: float
    contributions: np.ndarray
    margin: float
    instance: np.ndarray

    def residual(self) -> float:
        return float(self.margin - self.base_value - self.contributions.sum())


def coalition_value(model: TreeEnsemble, instance: np.ndarray,
                    subset: Sequence[int], background: np.ndarray) -> float:
    """Expected margin with ``subset`` features pinned to the instance and the
    rest marginalized over the background rows."""
    x = np.asarray(instance, dtype=float)
    bg = np.atleast_2d(np.asarray(background, dtype=float))
    if bg.shape[0] == 0:
        raise ExplainError("background must be non-empty")
    z = bg.copy()
    idx = list(subset)
    if idx:
        z[:, idx] = x[idx]
    return float(model.predict_margin(z).mean())


def _subset_values(model: TreeEnsemble, x: np.ndarray, refs: list[int],
                   bg: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Margin expectation for every coalition bitmask over ``refs``."""
    m = len(refs)
    n_subsets = 1 << m
    nb = bg.shape[0]
    values = np.empty(n_subsets)
    ref_cols = np.asarray(refs, dtype=int)
    for start in range(0, n_subsets, chunk):
        stop = min(start + chunk, n_subsets)
        block = np.tile(bg, (stop - start, 1))
        for offset, mask in enumerate(range(start, stop)):
            rows = slice(offset * nb, (offset + 1) * nb)
            bits = ref_cols[[j for j in range(m) if (mask >> j) & 1]]
            if bits.size:
                block[rows, bits] = x[bits]
        margins = model.predict_margin(block)
        values[start:stop] = margins.reshape(stop - start, nb).mean(axis=1)
    return values


def shapley_exact(model: TreeEnsemble, instance: np.ndarray,
                  background: np.ndarray, max_features: int = 15) -> Explanation:
    """Brute-force Shapley values over the model's referenced features.

    Features never split on are exact dummies with zero contribution, so the
    enumeration runs over the referenced set only; it errors beyond
    ``max_features`` (cost 2^M coalition evaluations).
    """
    x = np.asarray(instance, dtype=float)
    bg = np.atleast_2d(np.asarray(background, dtype=float))
    if bg.shape[0] == 0:
        raise ExplainError("background must be non-empty")
    refs = model.referenced_features()
    m = len(refs)
    if m > max_features:
        raise ExplainError(f"{m} active features exceed the 2^M oracle limit "
                           f"of {max_features}")
    phi = np.zeros(model.n_features)
    base_value = float(model.predict_margin(bg).mean())
    margin = float(model.predict_margin(x[None, :])[0])
    if m > 0:
        values = _subset_values(model, x, refs, bg)
        fact = [math.factorial(i) for i in range(m + 1)]
        weights = np.array([fact[s] * fact[m - s - 1] / fact[m] for s in range(m)])
        all_masks = np.arange(1 << m)
        popcount = np.array([bin(mask).count("1") for mask in all_masks])
        for j in range(m):
            without = all_masks[(all_masks >> j) & 1 == 0]
            gains = values[without | (1 << j)] - values[without]
            phi[refs[j]] = float(np.sum(weights[popcount[without]] * gains))
    return Explanation(user_id=None, base_value=base_value, contributions=phi,
                       margin=margin, instance=x)


@dataclass
class _LeafPath:
    weight: float
    features: np.ndarray            # unique feature ids on the path
    nodes_by_feature: list[list[tuple[float, bool, bool]]]
    # per unique feature: (threshold, default_left, went_left) of its nodes
    background_pass: np.ndarray | None = None  # (n_features_on_path, n_background)


def _tree_paths(tree: Tree) -> list[_LeafPath]:
    paths: list[_LeafPath] = []

    def walk(node: int, trail: list[tuple[int, float, bool, bool]]):
        if tree.feature[node] < 0:
            by_feature: dict[int, list[tuple[float, bool, bool]]] = {}
            for feat, thr, dleft, went_left in trail:
                by_feature.setdefault(feat, []).append((thr, dleft, went_left))
            feats = sorted(by_feature)
            paths.append(_LeafPath(
                weight=float(tree.value[node]),
                features=np.asarray(feats, dtype=int),
                nodes_by_feature=[by_feature[f] for f in feats],
            ))
            return
        feat = int(tree.feature[node])
        thr = float(tree.threshold[node])
        dleft = bool(tree.default_left[node])
        walk(int(tree.left[node]), trail + [(feat, thr, dleft, True)])
        walk(int(tree.right[node]), trail + [(feat, thr, dleft, False)])

    walk(0, [])
    return paths


def _satisfies(values: np.ndarray, nodes: list[tuple[float, bool, bool]]) -> np.ndarray:
    """Whether each value follows every branch of one feature's path nodes."""
    ok = np.ones(values.shape, dtype=bool)
    missing = np.isnan(values)
    for thr, dleft, went_left in nodes:
        goes_left = np.where(missing, dleft, values < thr)
        ok &= goes_left == went_left
    return ok


class TreeShapExplainer:
    """Polynomial interventional Shapley values for a tree ensemble.

    Each leaf contributes an indicator game over its path features: the leaf
    is reached iff every feature the instance side satisfies is in the
    coalition and every feature only the background side satisfies is out.
    The Shapley value of that game has the closed form
    w * (a-1)! r! / (a+r)! for required-in features and
    -w * a! (r-1)! / (a+r)! for required-out ones; summing over leaves, trees
    and background rows gives the exact interventional attribution.
    """

    def __init__(self, model: TreeEnsemble, background: np.ndarray):
        self.model = model
        self.background = np.atleast_2d(np.asarray(background, dtype=float))
        if self.background.shape[0] == 0:
            raise ExplainError("background must be non-empty")
        if self.background.shape[1] != model.n_features:
            raise ExplainError("background width must match the model")
        self.base_value = float(model.predict_margin(self.background).mean())
        max_path = 1
        self._paths: list[list[_LeafPath]] = []
        for tree in model.trees:
            paths = _tree_paths(tree)
            for path in paths:
                n_feats = len(path.features)
                max_path = max(max_path, n_feats)
                if n_feats:
                    path.background_pass = np.vstack([
                        _satisfies(self.background[:, feat], nodes)
                        for feat, nodes in zip(path.features, path.nodes_by_feature)
                    ])
            self._paths.append(paths)
        self._fact = np.array([math.factorial(i) for i in range(max_path + 1)],
                              dtype=float)

    def explain(self, instance: np.ndarray, user_id: str | None = None) -> Explanation:
        x = np.asarray(instance, dtype=float)
        if x.shape != (self.model.n_features,):
            raise ExplainError("instance width must match the model")
        nb = self.background.shape[0]
        eta = self.model.learning_rate
        fact = self._fact
        phi = np.zeros(self.model.n_features)
        for paths in self._paths:
            for path in paths:
                if len(path.features) == 0:
                    continue  # constant path: no player, no contribution
                x_pass = np.array([
                    bool(_satisfies(np.array([x[feat]]), nodes)[0])
                    for feat, nodes in zip(path.features, path.nodes_by_feature)
                ])
                b_pass = path.background_pass
                required_in = x_pass[:, None] & ~b_pass        # (nf, nb)
                required_out = ~x_pass[:, None] & b_pass
                dead = ~x_pass[:, None] & ~b_pass
                feasible = ~dead.any(axis=0)
                if not feasible.any():
                    continue
                a = required_in.sum(axis=0)
                r = required_out.sum(axis=0)
                total = fact[a + r]
                w_in = np.where(feasible & (a > 0),
                                fact[np.maximum(a - 1, 0)] * fact[r] / total, 0.0)
                w_out = np.where(feasible & (r > 0),
                                 fact[a] * fact[np.maximum(r - 1, 0)] / total, 0.0)
                scale = eta * path.weight / nb
                contrib = (required_in * w_in[None, :]
                           - required_out * w_out[None, :]).sum(axis=1)
                phi[path.features] += scale * contrib
        margin = float(self.model.predict_margin(x[None, :])[0])
        return Explanation(user_id=user_id, base_value=self.base_value,
                           contributions=phi, margin=margin, instance=x)


def shapley_tree(model: TreeEnsemble, instance: np.ndarray,
                 background: np.ndarray) -> Explanation:
    return TreeShapExplainer(model, background).explain(instance)


def explain_batch(model: TreeEnsemble, instances: np.ndarray,
                  background: np.ndarray,
                  user_ids: Sequence[str] | None = None) -> list[Explanation]:
    """Explain many rows with the per-tree path structures built once."""
    explainer = TreeShapExplainer(model, background)
    instances = np.atleast_2d(np.asarray(instances, dtype=float))
    ids = list(user_ids) if user_ids is not None else [None] * len(instances)
    if len(ids) != len(instances):
        raise ExplainError("user_ids must align with instances")
    return [explainer.explain(row, uid) for row, uid in zip(instances, ids)]


@dataclass
class SummaryData:
    """Mean-|phi| feature ranking plus beeswarm-style per-account points."""

    ranking: list[tuple[str, float]]
    points: dict[str, list[tuple[float, float, str]]]
    top_k: int = 20

    def to_json(self) -> str:
        payload = {
            "top_k": self.top_k,
            "ranking": [{"feature": n, "rank": i + 1, "mean_abs_phi": v}
                        for i, (n, v) in enumerate(self.ranking)],
            "points": {
                name: [{"phi": p, "standardized_value": None if math.isnan(z) else z,
                        "user_id": uid} for p, z, uid in pts]
                for name, pts in self.points.items()
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def summarize(explanations: Sequence[Explanation],
              feature_names: Sequence[str], top_k: int = 20) -> SummaryData:
    """Rank features by mean |phi| and collect per-account plot points.

    Point colors follow the standardized (z-scored within the explained
    batch) feature values; missing values stay NaN.
    """
    if not explanations:
        raise ExplainError("summarize needs at least one explanation")
    names = list(feature_names)
    phi = np.vstack([e.contributions for e in explanations])
    inst = np.vstack([e.instance for e in explanations])
    if phi.shape[1] != len(names):
        raise ExplainError("feature_names must match the contribution width")
    mean_abs = np.abs(phi).mean(axis=0)
    order = sorted(range(len(names)), key=lambda i: (-mean_abs[i], names[i]))
    chosen = order[:top_k]
    with np.errstate(invalid="ignore"):
        mu = np.nanmean(inst, axis=0)
        sd = np.nanstd(inst, axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    z = (inst - mu) / sd
    ids = [e.user_id or f"row{i}" for i, e in enumerate(explanations)]
    points = {
        names[i]: [(float(phi[row, i]), float(z[row, i]), ids[row])
                   for row in range(phi.shape[0])]
        for i in chosen
    }
    ranking = [(names[i], float(mean_abs[i])) for i in chosen]
    return SummaryData(ranking=ranking, points=points, top_k=top_k)


def write_summary(summary: SummaryData, path: str | Path) -> None:
    Path(path).write_text(summary.to_json() + "\n", encoding="utf-8")


def write_explanations(explanations: Sequence[Explanation],
                       feature_names: Sequence[str], path: str | Path) -> None:
    """Per-instance contributions keyed by user_id, one CSV column per feature."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "base_value", "margin",
                         *[f"phi_{n}" for n in feature_names]])
        ordered = sorted(explanations, key=lambda e: e.user_id or "")
        for e in ordered:
            writer.writerow([e.user_id, repr(e.base_value), repr(e.margin),
                             *[repr(float(v)) for v in e.contributions]])
