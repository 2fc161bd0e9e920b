"""End-to-end batch pipeline: configuration, stage functions, the temporal
generalization protocol with its leakage guard, and artifact provenance.

Every stage is deterministic given the config and root seed. Per-stage seeds
derive from the root via a hash so reordering stages cannot shift randomness.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .boosting import BoosterConfig, TreeEnsemble, expand_grid, select_features, train, tune
from .corpus import CorpusView, IngestSchema, export_corpus, ingest, parse_timestamp, split_by_window
from .embedding import EmbeddingConfig
from .explain import explain_batch, summarize, write_explanations, write_summary
from .features import (FeatureMatrix, FittedStats, build_feature_spec,
                       extract_features, fit_stats)
from .labeling import (BOT, NORMAL, SCORER_A, SCORER_B, FusionPolicy,
                       RecordedScorerClient, load_score_file,
                       load_suspension_file, plan_labeling, run_funnel,
                       write_label_table)
from .metrics import evaluate_scores, pr_curve_points, roc_curve_points, stratified_split
from .resample import ResampleConfig, resample


class PipelineError(Exception):
    """Config or dependency problem; maps to the validation exit code."""


class LeakageError(PipelineError):
    """A corpus statistic was fitted on data from the evaluation window."""


def stage_seed(root_seed: int, stage: str) -> int:
    digest = hashlib.sha256(f"{root_seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def file_sha256(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class PipelineConfig:
    corpus_path: str = ""
    scores_path: str = ""
    suspension_path: str = ""
    out_dir: str = "out"
    window_boundary: str | None = None
    seed: int = 0
    threads: int = 1
    top_k: int = 20
    test_fraction: float = 0.2
    repetitions: int = 10
    cv_folds: int = 5
    background_size: int = 200
    quotas: dict[str, float | None] = field(
        default_factory=lambda: {SCORER_A: None, SCORER_B: 2000.0})
    survivor_ratio: float | None = None
    fusion: FusionPolicy = field(default_factory=FusionPolicy)
    resample: ResampleConfig = field(default_factory=ResampleConfig)
    booster: BoosterConfig = field(default_factory=BoosterConfig)
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    grid: list[BoosterConfig] | None = None

    ENV_PATHS = {
        "BOTSIFT_CORPUS": "corpus_path",
        "BOTSIFT_SCORES": "scores_path",
        "BOTSIFT_SUSPENDED": "suspension_path",
        "BOTSIFT_OUT": "out_dir",
    }

    @classmethod
    def from_file(cls, path: str | Path,
                  env: Mapping[str, str] | None = None) -> "PipelineConfig":
        try:
            raw = json.loads(Path(path).read_text("utf-8"))
        except OSError as exc:
            raise PipelineError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise PipelineError(f"config {path} is not valid JSON: {exc}") from exc
        cfg = cls()
        plain = {f for f in cfg.__dataclass_fields__
                 if f not in ("fusion", "resample", "booster", "embedding", "grid")}
        for key, value in raw.items():
            if key in plain:
                setattr(cfg, key, value)
            elif key == "fusion":
                cfg.fusion = FusionPolicy(**value)
            elif key == "resample":
                cfg.resample = ResampleConfig(**value)
            elif key == "booster":
                cfg.booster = BoosterConfig(**value)
            elif key == "embedding":
                cfg.embedding = EmbeddingConfig(**value)
            elif key == "grid":
                cfg.grid = expand_grid(**value) if value else None
            else:
                raise PipelineError(f"unknown config key {key!r}")
        env = os.environ if env is None else env
        for var, attr in cls.ENV_PATHS.items():
            if env.get(var):
                setattr(cfg, attr, env[var])
        if cfg.quotas is not None:
            cfg.quotas = {k: (None if v is None else float(v))
                          for k, v in cfg.quotas.items()}
        return cfg

    def require_paths(self, *attrs: str) -> None:
        for attr in attrs:
            value = getattr(self, attr)
            if not value:
                raise PipelineError(f"config field {attr} is not set")
            if attr != "out_dir" and not Path(value).exists():
                raise PipelineError(f"{attr} path does not exist: {value}")

    def out_path(self, name: str) -> Path:
        out = Path(self.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        return out / name


def write_manifest(cfg: PipelineConfig, command: str,
                   inputs: Sequence[str | Path],
                   outputs: Sequence[str | Path]) -> Path:
    manifest = {
        "command": command,
        "seed": cfg.seed,
        "inputs": {str(p): file_sha256(p) for p in inputs if Path(p).exists()},
        "outputs": {str(p): file_sha256(p) for p in outputs},
    }
    path = cfg.out_path(f"manifest_{command}.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
    return path


def require_artifact(cfg: PipelineConfig, name: str, produced_by: str) -> Path:
    path = Path(cfg.out_dir) / name
    if not path.exists():
        raise PipelineError(
            f"missing upstream artifact {name}: run the {produced_by} command first")
    return path


# ---------------------------------------------------------------- stages


def stage_ingest(cfg: PipelineConfig) -> CorpusView:
    cfg.require_paths("corpus_path")
    result = ingest(cfg.corpus_path, IngestSchema())
    report_path = cfg.out_path("ingest_report.json")
    report_path.write_text(result.report.to_json() + "\n", encoding="utf-8")
    export_path = cfg.out_path("corpus_export.jsonl")
    export_corpus(result.view, export_path)
    write_manifest(cfg, "ingest", [cfg.corpus_path], [report_path, export_path])
    return result.view


def _load_corpus(cfg: PipelineConfig) -> CorpusView:
    cfg.require_paths("corpus_path")
    return ingest(cfg.corpus_path, IngestSchema()).view


def stage_label(cfg: PipelineConfig) -> Path:
    cfg.require_paths("corpus_path", "scores_path", "suspension_path")
    view = _load_corpus(cfg)
    by_scorer = load_score_file(cfg.scores_path)
    suspended = load_suspension_file(cfg.suspension_path)
    clients = [RecordedScorerClient(sid, by_scorer.get(sid, {}),
                                    daily_quota=cfg.quotas.get(sid))
               for sid in (SCORER_A, SCORER_B)]
    labels, report = run_funnel(view, clients[0], clients[1], suspended,
                                cfg.fusion)
    labels_path = cfg.out_path("labels.csv")
    write_label_table(labels_path, labels)
    funnel_path = cfg.out_path("funnel_report.json")
    funnel_path.write_text(report.to_json() + "\n", encoding="utf-8")
    write_manifest(cfg, "label",
                   [cfg.corpus_path, cfg.scores_path, cfg.suspension_path],
                   [labels_path, funnel_path])
    return labels_path


def load_binary_labels(labels_path: str | Path) -> dict[str, int]:
    from .labeling import load_label_table
    out: dict[str, int] = {}
    for label in load_label_table(labels_path):
        if label.verdict == BOT:
            out[label.user_id] = 1
        elif label.verdict == NORMAL:
            out[label.user_id] = 0
    return out


def stage_featurize(cfg: PipelineConfig) -> Path:
    """Fit statistics on the (training-window) corpus and extract features.

    With a window boundary configured, statistics are fitted on the early
    window only and the late window is featurized against them into a
    separate matrix for the generalization protocol.
    """
    cfg.require_paths("corpus_path")
    labels_path = require_artifact(cfg, "labels.csv", "label")
    labels = load_binary_labels(labels_path)
    view = _load_corpus(cfg)
    test_view = None
    if cfg.window_boundary:
        boundary = parse_timestamp(cfg.window_boundary)
        view, test_view = split_by_window(view, boundary)

    embed_cfg = replace(cfg.embedding, seed=stage_seed(cfg.seed, "embedding"))
    stats = fit_stats(view, embed_cfg)
    train_users = sorted(uid for uid in labels if uid in view.accounts)
    if not train_users:
        raise PipelineError("no labeled users in the training window")
    matrix = extract_features(view, stats, train_users)
    features_path = cfg.out_path("features.csv")
    matrix.save_csv(features_path)

    stats_paths = [cfg.out_path("corpus_stats.json"), cfg.out_path("embeddings.json"),
                   cfg.out_path("bigram.json")]
    stats.corpus_stats.save(stats_paths[0])
    stats.embeddings.save(stats_paths[1])
    stats.bigram.save(stats_paths[2])

    outputs = [features_path, *stats_paths]
    if test_view is not None:
        test_users = sorted(uid for uid in labels if uid in test_view.accounts)
        test_matrix = extract_features(test_view, stats, test_users)
        test_path = cfg.out_path("features_test.csv")
        test_matrix.save_csv(test_path)
        outputs.append(test_path)
    write_manifest(cfg, "featurize", [cfg.corpus_path, labels_path], outputs)
    return features_path


def _load_training_data(cfg: PipelineConfig) -> tuple[FeatureMatrix, np.ndarray]:
    features_path = require_artifact(cfg, "features.csv", "featurize")
    labels_path = require_artifact(cfg, "labels.csv", "label")
    matrix = FeatureMatrix.load_csv(features_path)
    labels = load_binary_labels(labels_path)
    y = np.array([labels[uid] for uid in matrix.user_ids], dtype=int)
    return matrix, y


def _booster_config(cfg: PipelineConfig) -> BoosterConfig:
    """The configured booster, or the tuned one when `tune` already ran."""
    best_path = Path(cfg.out_dir) / "best_config.json"
    if best_path.exists():
        return BoosterConfig(**json.loads(best_path.read_text("utf-8")))
    return cfg.booster


def stage_train(cfg: PipelineConfig) -> Path:
    """Resample, fit on all 335 features, select by importance, refit, save."""
    matrix, y = _load_training_data(cfg)
    seed = stage_seed(cfg.seed, "train")
    booster_cfg = replace(_booster_config(cfg), seed=seed)

    balanced = resample(matrix.values, y, replace(cfg.resample, seed=seed),
                        ids=None)
    full_model = train(balanced.x, balanced.y, booster_cfg, matrix.names)
    mask, retained = select_features(full_model)
    final_model = train(balanced.x, balanced.y, booster_cfg, matrix.names,
                        selected=mask)
    model_path = cfg.out_path("model.json")
    final_model.save(model_path)
    selection_path = cfg.out_path("feature_selection.json")
    spec = build_feature_spec().with_selected(mask.tolist())
    selection_path.write_text(json.dumps({
        "retained": retained,
        "total": len(mask),
        "retained_by_category": {
            cat: int(sum(1 for n, c, s in zip(spec.names, spec.categories, spec.selected)
                         if c == cat and s))
            for cat in ("profile", "context", "time", "graph")
        },
        "selected_names": [n for n, s in zip(spec.names, spec.selected) if s],
    }, indent=2, sort_keys=True), encoding="utf-8")
    write_manifest(cfg, "train",
                   [Path(cfg.out_dir) / "features.csv", Path(cfg.out_dir) / "labels.csv"],
                   [model_path, selection_path])
    return model_path


def stage_tune(cfg: PipelineConfig) -> Path:
    matrix, y = _load_training_data(cfg)
    grid = cfg.grid or expand_grid(
        learning_rate=[0.05, 0.1, 0.3], max_depth=[3, 6, 10],
        num_rounds=[100, 300], subsample=[0.8, 1.0])
    seed = stage_seed(cfg.seed, "tune")
    result = tune(matrix.values, y, grid, cfg.resample, k=cfg.cv_folds, seed=seed)
    tune_path = cfg.out_path("tune_report.json")
    tune_path.write_text(result.to_json() + "\n", encoding="utf-8")
    best_path = cfg.out_path("best_config.json")
    best_path.write_text(json.dumps(result.best_config.__dict__, indent=2,
                                    sort_keys=True), encoding="utf-8")
    write_manifest(cfg, "tune",
                   [Path(cfg.out_dir) / "features.csv", Path(cfg.out_dir) / "labels.csv"],
                   [tune_path, best_path])
    return best_path


def holdout_evaluation(x: np.ndarray, y: np.ndarray, cfg: PipelineConfig,
                       selected: np.ndarray | None = None) -> dict:
    """Repeated stratified holdout: resample+train on the train part, score
    the untouched test part; mean and std over repetitions."""
    seed = stage_seed(cfg.seed, "evaluate")
    booster_cfg = _booster_config(cfg)
    runs = []
    curves = None
    for rep in range(cfg.repetitions):
        rep_seed = seed + rep
        train_idx, test_idx = stratified_split(
            y, [1.0 - cfg.test_fraction, cfg.test_fraction], rep_seed)
        balanced = resample(x[train_idx], y[train_idx],
                            replace(cfg.resample, seed=rep_seed))
        model = train(balanced.x, balanced.y,
                      replace(booster_cfg, seed=rep_seed),
                      selected=selected)
        scores = model.predict(x[test_idx])
        runs.append(evaluate_scores(scores, y[test_idx]))
        if rep == cfg.repetitions - 1:
            curves = {
                "roc_points": roc_curve_points(scores, y[test_idx]),
                "pr_points": pr_curve_points(scores, y[test_idx]),
            }
    keys = runs[0].keys()
    return {
        "repetitions": cfg.repetitions,
        "per_run": runs,
        "mean": {k: float(np.mean([r[k] for r in runs])) for k in keys},
        "std": {k: float(np.std([r[k] for r in runs])) for k in keys},
        "curves": curves,
    }


def stage_evaluate(cfg: PipelineConfig) -> Path:
    matrix, y = _load_training_data(cfg)
    report = {"holdout": holdout_evaluation(matrix.values, y, cfg)}
    test_path = Path(cfg.out_dir) / "features_test.csv"
    if test_path.exists():
        test_matrix = FeatureMatrix.load_csv(test_path)
        labels = load_binary_labels(Path(cfg.out_dir) / "labels.csv")
        y_test = np.array([labels[uid] for uid in test_matrix.user_ids], dtype=int)
        report["cross_window"] = cross_window_evaluation(
            matrix.values, y, test_matrix.values, y_test, cfg)
    eval_path = cfg.out_path("eval_report.json")
    eval_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
    curves = report["holdout"]["curves"]
    roc_path = cfg.out_path("roc_curve.csv")
    roc_path.write_text("fpr,tpr\n" + "".join(
        f"{fpr},{tpr}\n" for fpr, tpr in curves["roc_points"]), encoding="utf-8")
    pr_path = cfg.out_path("pr_curve.csv")
    pr_path.write_text("recall,precision\n" + "".join(
        f"{r},{p}\n" for r, p in curves["pr_points"]), encoding="utf-8")
    write_manifest(cfg, "evaluate",
                   [Path(cfg.out_dir) / "features.csv", Path(cfg.out_dir) / "labels.csv"],
                   [eval_path, roc_path, pr_path])
    return eval_path


def cross_window_evaluation(x_train: np.ndarray, y_train: np.ndarray,
                            x_test: np.ndarray, y_test: np.ndarray,
                            cfg: PipelineConfig) -> dict:
    """70/30 in-window protocol plus scoring of the late-window matrix."""
    seed = stage_seed(cfg.seed, "cross_window")
    fit_idx, holdout_idx = stratified_split(y_train, [0.7, 0.3], seed)
    balanced = resample(x_train[fit_idx], y_train[fit_idx],
                        replace(cfg.resample, seed=seed))
    model = train(balanced.x, balanced.y, replace(_booster_config(cfg), seed=seed))
    in_window = evaluate_scores(model.predict(x_train[holdout_idx]),
                                y_train[holdout_idx])
    cross = evaluate_scores(model.predict(x_test), y_test)
    return {"in_window": in_window, "cross_window": cross,
            "train_fraction": 0.7}


def assert_no_leakage(fitted_window: tuple[str, str] | None,
                      test_window: tuple) -> None:
    """Error unless the statistics were fitted strictly before the test window."""
    if fitted_window is None:
        raise LeakageError("statistics carry no fitted-window provenance")
    fitted_end = parse_timestamp(fitted_window[1])
    test_start = test_window[0]
    if fitted_end > test_start:
        raise LeakageError(
            f"statistics fitted through {fitted_end.isoformat()} overlap the "
            f"evaluation window starting {test_start.isoformat()}")


def temporal_generalization(train_view: CorpusView, test_view: CorpusView,
                            labels: Mapping[str, int], cfg: PipelineConfig,
                            stats: FittedStats | None = None) -> dict:
    """Train on the early window (70/30 internally), evaluate on the late one.

    Every fitted statistic (TF-IDF document frequencies, embeddings, the
    screen-name bigram model) must come from the early window; a statistic
    fitted on or past the test window raises LeakageError.
    """
    if train_view.window[1] > test_view.window[0]:
        raise PipelineError("views must be disjoint in time")
    if stats is None:
        embed_cfg = replace(cfg.embedding, seed=stage_seed(cfg.seed, "embedding"))
        stats = fit_stats(train_view, embed_cfg)
    assert_no_leakage(stats.fitted_window, test_view.window)
    assert_no_leakage(stats.corpus_stats.fitted_window, test_view.window)
    assert_no_leakage(stats.embeddings.fitted_window, test_view.window)
    assert_no_leakage(stats.bigram.fitted_window, test_view.window)

    train_users = sorted(u for u in labels if u in train_view.accounts)
    test_users = sorted(u for u in labels if u in test_view.accounts)
    if not train_users or not test_users:
        raise PipelineError("both windows need labeled users")
    m_train = extract_features(train_view, stats, train_users)
    m_test = extract_features(test_view, stats, test_users)
    y_train = np.array([labels[u] for u in train_users], dtype=int)
    y_test = np.array([labels[u] for u in test_users], dtype=int)
    return cross_window_evaluation(m_train.values, y_train,
                                   m_test.values, y_test, cfg)


def stage_explain(cfg: PipelineConfig) -> Path:
    matrix, _ = _load_training_data(cfg)
    model_path = require_artifact(cfg, "model.json", "train")
    model = TreeEnsemble.load(model_path)
    rng = np.random.default_rng(stage_seed(cfg.seed, "explain"))
    n = len(matrix.user_ids)
    size = min(cfg.background_size, n)
    background = matrix.values[np.sort(rng.choice(n, size=size, replace=False))]
    explanations = explain_batch(model, matrix.values, background,
                                 user_ids=matrix.user_ids)
    summary = summarize(explanations, matrix.names, top_k=cfg.top_k)
    summary_path = cfg.out_path("shap_summary.json")
    write_summary(summary, summary_path)
    detail_path = cfg.out_path("explanations.csv")
    write_explanations(explanations, matrix.names, detail_path)
    write_manifest(cfg, "explain",
                   [Path(cfg.out_dir) / "features.csv", model_path],
                   [summary_path, detail_path])
    return summary_path


def stage_schedule(cfg: PipelineConfig) -> Path:
    """Quota-aware labeling schedule from the corpus size and funnel ratio."""
    cfg.require_paths("corpus_path")
    view = _load_corpus(cfg)
    n_users = view.n_accounts
    ratio = cfg.survivor_ratio
    funnel_path = Path(cfg.out_dir) / "funnel_report.json"
    if ratio is None and funnel_path.exists():
        funnel = json.loads(funnel_path.read_text("utf-8"))
        ratio = funnel["forwarded"] / max(funnel["input_users"], 1)
    if ratio is None:
        ratio = 1.0
    plan = plan_labeling(n_users, cfg.quotas, ratio)
    plan_path = cfg.out_path("quota_plan.json")
    plan_path.write_text(plan.to_json() + "\n", encoding="utf-8")
    write_manifest(cfg, "schedule-labels", [cfg.corpus_path], [plan_path])
    return plan_path


def stage_report(cfg: PipelineConfig) -> Path:
    """Human-readable roll-up of whatever stages have run."""
    spec = build_feature_spec()
    counts = spec.category_counts()
    lines = [
        "botsift pipeline report",
        "=======================",
        "",
        "feature space: "
        f"profile {counts['profile']} / context {counts['context']} / "
        f"time {counts['time']} / graph {counts['graph']} / "
        f"total {len(spec.names)}",
    ]
    out = Path(cfg.out_dir)
    for name in ("ingest_report.json", "funnel_report.json", "eval_report.json",
                 "feature_selection.json", "quota_plan.json"):
        path = out / name
        if path.exists():
            lines.append("")
            lines.append(f"--- {name} ---")
            lines.append(path.read_text("utf-8").strip())
    report_path = cfg.out_path("report.txt")
    report_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    write_manifest(cfg, "report", [], [report_path])
    return report_path
