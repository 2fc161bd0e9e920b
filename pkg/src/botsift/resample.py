"""Training-fold rebalancing: SMOTE oversampling of the minority class
followed by Tomek-link cleaning.

Neighbor searches run in a standardized space with missing values imputed by
column medians; the interpolation itself happens in the original feature
space, and a synthetic point copies the missing pattern of its base point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ResampleError(Exception):
    pass


@dataclass(frozen=True)
class ResampleConfig:
    k_neighbors: int = 5
    target_ratio: float = 1.0            # minority : majority after SMOTE
    tomek_removal: str = "majority_only"  # or "both"
    seed: int = 0

    def __post_init__(self):
        if self.k_neighbors < 1:
            raise ResampleError("k_neighbors must be >= 1")
        if not (0.0 < self.target_ratio <= 1.0):
            raise ResampleError("target_ratio must be in (0, 1]")
        if self.tomek_removal not in ("majority_only", "both"):
            raise ResampleError("tomek_removal must be majority_only or both")


def standardize_for_distance(x: np.ndarray) -> np.ndarray:
    """Median-impute missing cells, then z-score per column (std 0 -> 1).

    Used only for neighbor geometry, never for the returned samples.
    """
    x = np.asarray(x, dtype=float)
    out = x.copy()
    for col in range(x.shape[1]):
        column = out[:, col]
        missing = np.isnan(column)
        if missing.all():
            column[:] = 0.0
            continue
        median = np.median(column[~missing])
        column[missing] = median
        std = column.std()
        column -= column.mean()
        if std > 0:
            column /= std
    return out


def _pairwise_sq_dists(z: np.ndarray) -> np.ndarray:
    sq = np.sum(z * z, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (z @ z.T)
    np.fill_diagonal(d, np.inf)
    return np.maximum(d, 0.0)


def _nearest_neighbors(z: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest rows for each row, ties broken by index."""
    d = _pairwise_sq_dists(z)
    order = np.argsort(d, axis=1, kind="stable")  # stable: ties keep low index
    return order[:, :k]


def smote(minority: np.ndarray, config: ResampleConfig, n_synthetic: int,
          rng: np.random.Generator | None = None,
          imputed: np.ndarray | None = None) -> np.ndarray:
    """Synthesize points on segments between minority samples and their
    k nearest minority neighbors: s = x + lambda * (n - x), lambda ~ U[0, 1].

    Bases cycle through the minority rows in order; where the base is
    observed but the neighbor is missing, the neighbor's imputed value is
    interpolated toward; where the base is missing the synthetic is missing.
    """
    minority = np.asarray(minority, dtype=float)
    m = minority.shape[0]
    if m < 2:
        raise ResampleError("SMOTE needs at least two minority samples")
    if n_synthetic <= 0:
        return np.empty((0, minority.shape[1]))
    rng = rng or np.random.default_rng(config.seed)
    if imputed is None:
        imputed = standardize_for_distance(minority)
    k_eff = min(config.k_neighbors, m - 1)
    neighbors = _nearest_neighbors(imputed, k_eff)

    filled = minority.copy()
    for col in range(filled.shape[1]):
        column = filled[:, col]
        missing = np.isnan(column)
        if missing.all():
            column[missing] = 0.0
        elif missing.any():
            column[missing] = np.median(column[~missing])

    synthetic = np.empty((n_synthetic, minority.shape[1]))
    for i in range(n_synthetic):
        base = i % m
        pick = neighbors[base, int(rng.integers(k_eff))]
        lam = float(rng.random())
        x = minority[base]
        n_val = np.where(np.isnan(minority[pick]), filled[pick], minority[pick])
        row = x + lam * (n_val - x)
        row[np.isnan(x)] = np.nan
        synthetic[i] = row
    return synthetic


def _majority_class(y: np.ndarray) -> int:
    ones = int(y.sum())
    zeros = len(y) - ones
    # tie: treat the bot class (1) as minority
    return 0 if zeros >= ones else 1


def tomek_links(z: np.ndarray, y: np.ndarray) -> list[tuple[int, int]]:
    """Pairs of opposite-class points that are mutual nearest neighbors."""
    nn = _nearest_neighbors(z, 1)[:, 0]
    links = []
    for i in range(len(y)):
        j = int(nn[i])
        if j > i and int(nn[j]) == i and y[i] != y[j]:
            links.append((i, j))
    return links


def tomek_clean(x: np.ndarray, y: Sequence[int],
                config: ResampleConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Drop Tomek-link members (majority side, or both per config).

    Returns (x_kept, y_kept, kept_index_mask).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if len(y) < 2 or len(np.unique(y)) < 2:
        raise ResampleError("tomek_clean needs both classes")
    z = standardize_for_distance(x)
    majority = _majority_class(y)
    drop = np.zeros(len(y), dtype=bool)
    for i, j in tomek_links(z, y):
        if config.tomek_removal == "both":
            drop[i] = drop[j] = True
        else:
            drop[i if y[i] == majority else j] = True
    keep = ~drop
    return x[keep], y[keep], keep


@dataclass
class ResampleResult:
    x: np.ndarray
    y: np.ndarray
    is_synthetic: np.ndarray
    n_synthetic: int
    n_removed: int


def resample(x: np.ndarray, y: Sequence[int], config: ResampleConfig | None = None,
             ids: Sequence | None = None) -> ResampleResult:
    """SMOTE then Tomek cleaning of one training fold.

    Rows are pre-sorted by ``ids`` (default: row position) before any random
    draw, so the result is invariant to input ordering under a fixed seed.
    """
    config = config or ResampleConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if len(np.unique(y)) < 2:
        raise ResampleError("resample needs both classes in the fold")
    if ids is None:
        order = np.arange(len(y))
    else:
        if len(ids) != len(y):
            raise ResampleError("ids must align with rows")
        order = np.argsort(np.asarray(ids), kind="stable")
    x = x[order]
    y = y[order]

    ones = int(y.sum())
    zeros = len(y) - ones
    minority_label = 1 if ones <= zeros else 0
    minority_mask = y == minority_label
    n_min = int(minority_mask.sum())
    n_maj = len(y) - n_min
    n_needed = max(0, int(round(config.target_ratio * n_maj)) - n_min)

    rng = np.random.default_rng(config.seed)
    if n_needed > 0:
        synthetic = smote(x[minority_mask], config, n_needed, rng=rng)
    else:
        synthetic = np.empty((0, x.shape[1]))
    x_all = np.vstack([x, synthetic])
    y_all = np.concatenate([y, np.full(len(synthetic), minority_label, dtype=int)])
    is_synth = np.concatenate([np.zeros(len(y), bool), np.ones(len(synthetic), bool)])

    x_kept, y_kept, keep = tomek_clean(x_all, y_all, config)
    return ResampleResult(x=x_kept, y=y_kept, is_synthetic=is_synth[keep],
                          n_synthetic=len(synthetic), n_removed=int((~keep).sum()))
