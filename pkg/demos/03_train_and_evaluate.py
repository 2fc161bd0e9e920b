# Rebalancing, boosted-tree training, feature selection and evaluation.
#
# The training folds are rebalanced with SMOTE + Tomek cleaning, the booster
# fits second-order trees with exact greedy splits, importance-based
# selection prunes the feature set, and stratified protocols report
# F1 / PR-AUC / ROC-AUC.

import numpy as np

from botsift.boosting import BoosterConfig, select_features, train
from botsift.embedding import EmbeddingConfig
from botsift.features import build_feature_spec, extract_features, fit_stats
from botsift.metrics import evaluate_scores, kfold_cv, stratified_split
from botsift.resample import ResampleConfig, resample
from botsift.simulate import generate_corpus

sim = generate_corpus(n_bots=45, n_humans=105, seed=33, posts_range=(10, 16))
stats = fit_stats(sim.view, EmbeddingConfig(epochs=3, seed=4))
matrix = extract_features(sim.view, stats)
y = np.array([sim.truth[uid] for uid in matrix.user_ids])
print(f"{len(y)} labeled users, {y.sum()} bots / {len(y) - y.sum()} humans")

# --- 80/20 stratified holdout ---------------------------------------------
train_idx, test_idx = stratified_split(y, [0.8, 0.2], seed=1)
print(f"holdout: {len(train_idx)} train / {len(test_idx)} test "
      f"({y[test_idx].sum()} bots in test)")

# --- rebalance the training part only --------------------------------------
balanced = resample(matrix.values[train_idx], y[train_idx],
                    ResampleConfig(seed=1))
print(f"after SMOTE+Tomek: {len(balanced.y)} rows "
      f"({balanced.n_synthetic} synthetic, {balanced.n_removed} Tomek-removed)")

# --- train on all 335 features, then keep the high-importance ones ---------
config = BoosterConfig(num_rounds=30, max_depth=3, learning_rate=0.3, seed=1)
full_model = train(balanced.x, balanced.y, config, matrix.names)
mask, retained = select_features(full_model)
print(f"importance selection keeps {retained} of {len(mask)} features")

spec = build_feature_spec().with_selected(mask.tolist())
by_cat = {}
for name, cat, sel in zip(spec.names, spec.categories, spec.selected):
    if sel:
        by_cat[cat] = by_cat.get(cat, 0) + 1
print(f"retained by category: {by_cat}")

model = train(balanced.x, balanced.y, config, matrix.names, selected=mask)
report = evaluate_scores(model.predict(matrix.values[test_idx]), y[test_idx])
print("\nholdout metrics:", {k: round(v, 3) for k, v in report.items()})

# --- 5-fold cross-validation with per-fold resampling ----------------------
def pipeline(x_train, y_train, x_val, fold_seed):
    fold = resample(x_train, y_train, ResampleConfig(seed=fold_seed))
    fold_model = train(fold.x, fold.y,
                       BoosterConfig(num_rounds=20, max_depth=3,
                                     learning_rate=0.3, seed=fold_seed))
    return fold_model.predict(x_val)

per_fold = kfold_cv(matrix.values, y, 5, pipeline, seed=9)
print("\n5-fold CV:")
for metric in ("f1", "pr_auc", "roc_auc"):
    values = [fold[metric] for fold in per_fold]
    print(f"  {metric:8s} mean {np.mean(values):.3f}  std {np.std(values):.3f}")

# --- training loss is non-increasing round over round ----------------------
drops = sum(1 for a, b in zip(model.training_loss, model.training_loss[1:])
            if b > a + 1e-12)
print(f"\ntraining-loss increases across {len(model.training_loss)} rounds: {drops}")
