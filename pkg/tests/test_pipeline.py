import json
from datetime import timedelta
from pathlib import Path

import pytest

from botsift import cli
from botsift.corpus import split_by_window
from botsift.embedding import EmbeddingConfig
from botsift.features import fit_stats
from botsift.pipeline import (LeakageError, PipelineConfig, PipelineError,
                              assert_no_leakage, stage_seed,
                              temporal_generalization)
from botsift.simulate import generate_corpus, write_fixture


@pytest.fixture(scope="module")
def fixture_run(tmp_path_factory):
    """Shared corpus fixture + config for CLI runs."""
    root = tmp_path_factory.mktemp("cli")
    sim = generate_corpus(22, 36, seed=11, posts_range=(8, 14))
    paths = write_fixture(sim, root / "fixture")
    config = {
        "corpus_path": str(paths["corpus"]),
        "scores_path": str(paths["scores"]),
        "suspension_path": str(paths["suspended"]),
        "out_dir": str(root / "out"),
        "seed": 7,
        "repetitions": 2,
        "background_size": 40,
        "booster": {"num_rounds": 15, "max_depth": 3, "learning_rate": 0.3},
        "embedding": {"epochs": 2},
        "resample": {"k_neighbors": 3},
    }
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(config))
    return {"root": root, "config_path": cfg_path, "config": config, "sim": sim}


def test_full_pipeline_exits_zero_and_populates_report(fixture_run):
    cfg_path = str(fixture_run["config_path"])
    for command in ("ingest", "label", "featurize", "train", "evaluate",
                    "explain", "schedule-labels", "report"):
        assert cli.main([command, "--config", cfg_path]) == 0, command
    out = Path(fixture_run["config"]["out_dir"])
    report = json.loads((out / "eval_report.json").read_text())
    for key in ("f1", "precision", "recall", "pr_auc", "roc_auc"):
        assert key in report["holdout"]["mean"]
    assert (out / "model.json").exists()
    assert (out / "shap_summary.json").exists()


def test_report_displays_category_counts(fixture_run):
    out = Path(fixture_run["config"]["out_dir"])
    text = (out / "report.txt").read_text()
    assert "profile 26 / context 204 / time 99 / graph 6 / total 335" in text


def test_featurize_before_label_dependency_error(tmp_path, fixture_run):
    config = dict(fixture_run["config"])
    config["out_dir"] = str(tmp_path / "fresh_out")
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    rc = cli.main(["featurize", "--config", str(cfg_path)])
    assert rc == cli.EXIT_VALIDATION


def test_usage_error_exit_code():
    assert cli.main(["no-such-command", "--config", "x"]) == cli.EXIT_USAGE
    assert cli.main(["train"]) == cli.EXIT_USAGE  # missing --config


def test_missing_config_file_is_validation_error(tmp_path):
    rc = cli.main(["ingest", "--config", str(tmp_path / "absent.json")])
    assert rc == cli.EXIT_VALIDATION


def test_runtime_error_exit_code(tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    corpus.write_text('{"broken json\n' * 10)
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({"corpus_path": str(corpus),
                               "out_dir": str(tmp_path / "out")}))
    rc = cli.main(["ingest", "--config", str(cfg)])
    assert rc == cli.EXIT_RUNTIME


def test_train_rerun_is_byte_identical(fixture_run, tmp_path):
    cfg_path = str(fixture_run["config_path"])
    out = Path(fixture_run["config"]["out_dir"])
    model_first = (out / "model.json").read_bytes()
    features_first = (out / "features.csv").read_bytes()
    assert cli.main(["featurize", "--config", cfg_path]) == 0
    assert cli.main(["train", "--config", cfg_path]) == 0
    assert (out / "features.csv").read_bytes() == features_first
    assert (out / "model.json").read_bytes() == model_first


def test_seed_override_changes_model(fixture_run, tmp_path):
    cfg_path = str(fixture_run["config_path"])
    out_dir = str(tmp_path / "seed_out")
    assert cli.main(["label", "--config", cfg_path, "--out", out_dir]) == 0
    assert cli.main(["featurize", "--config", cfg_path, "--out", out_dir,
                     "--seed", "99"]) == 0
    assert cli.main(["train", "--config", cfg_path, "--out", out_dir,
                     "--seed", "99"]) == 0
    base = Path(fixture_run["config"]["out_dir"])
    assert (Path(out_dir) / "model.json").read_bytes() != (base / "model.json").read_bytes()


def test_manifests_carry_hashes(fixture_run):
    out = Path(fixture_run["config"]["out_dir"])
    manifest = json.loads((out / "manifest_train.json").read_text())
    assert manifest["command"] == "train"
    for digest in manifest["outputs"].values():
        assert len(digest) == 64


def test_schedule_labels_report(fixture_run):
    out = Path(fixture_run["config"]["out_dir"])
    plan = json.loads((out / "quota_plan.json").read_text())
    assert plan["recommended"].startswith("scorer_A")
    assert plan["recommended_days"] >= 0


def test_stage_seed_is_stable_per_stage():
    assert stage_seed(7, "train") == stage_seed(7, "train")
    assert stage_seed(7, "train") != stage_seed(7, "explain")
    assert stage_seed(7, "train") != stage_seed(8, "train")


def test_env_override_for_paths(tmp_path, fixture_run):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"corpus_path": "/nope"}))
    cfg = PipelineConfig.from_file(
        cfg_file, env={"BOTSIFT_CORPUS": fixture_run["config"]["corpus_path"]})
    assert cfg.corpus_path == fixture_run["config"]["corpus_path"]


def test_unknown_config_key_rejected(tmp_path):
    cfg_file = tmp_path / "cfg.json"
    cfg_file.write_text(json.dumps({"corups_path": "typo"}))
    with pytest.raises(PipelineError, match="unknown config key"):
        PipelineConfig.from_file(cfg_file, env={})


def _two_window_sim():
    # one stationary population active across both months
    sim = generate_corpus(20, 32, seed=23, days=60, posts_range=(12, 18))
    boundary = sim.view.window[0] + timedelta(days=30)
    train_view, test_view = split_by_window(sim.view, boundary)
    return sim, train_view, test_view


def test_temporal_generalization_stationary_behavior():
    sim, train_view, test_view = _two_window_sim()
    cfg = PipelineConfig(seed=3, repetitions=2)
    cfg.booster = cfg.booster.__class__(num_rounds=15, max_depth=3,
                                        learning_rate=0.3)
    cfg.embedding = EmbeddingConfig(epochs=2)
    report = temporal_generalization(train_view, test_view, sim.truth, cfg)
    assert report["cross_window"]["roc_auc"] >= report["in_window"]["roc_auc"] - 0.05
    assert report["cross_window"]["f1"] > 0.8


def test_leakage_guard_rejects_test_fitted_statistics():
    sim, train_view, test_view = _two_window_sim()
    cfg = PipelineConfig(seed=3)
    cfg.embedding = EmbeddingConfig(epochs=1)
    # deliberately broken: statistics fitted on the evaluation window
    leaky_stats = fit_stats(test_view, EmbeddingConfig(epochs=1))
    with pytest.raises(LeakageError):
        temporal_generalization(train_view, test_view, sim.truth, cfg,
                                stats=leaky_stats)


def test_leakage_guard_rejects_missing_provenance():
    _, _, test_view = _two_window_sim()
    with pytest.raises(LeakageError, match="provenance"):
        assert_no_leakage(None, test_view.window)


def test_leakage_guard_checks_each_statistic(tmp_path):
    # a bundle that is clean except for one statistic must still fail
    sim, train_view, test_view = _two_window_sim()
    cfg = PipelineConfig(seed=3)
    cfg.embedding = EmbeddingConfig(epochs=1)
    stats = fit_stats(train_view, EmbeddingConfig(epochs=1))
    from botsift.corpus import format_timestamp
    stats.bigram.fitted_window = (format_timestamp(test_view.window[0]),
                                  format_timestamp(test_view.window[1]))
    with pytest.raises(LeakageError):
        temporal_generalization(train_view, test_view, sim.truth, cfg,
                                stats=stats)


def test_temporal_generalization_requires_disjoint_windows():
    sim, train_view, test_view = _two_window_sim()
    cfg = PipelineConfig(seed=3)
    with pytest.raises(PipelineError, match="disjoint"):
        temporal_generalization(test_view, train_view, sim.truth, cfg)


def test_tune_command_writes_best_config(tmp_path):
    sim = generate_corpus(14, 22, seed=31, posts_range=(8, 12))
    paths = write_fixture(sim, tmp_path / "fixture")
    config = {
        "corpus_path": str(paths["corpus"]),
        "scores_path": str(paths["scores"]),
        "suspension_path": str(paths["suspended"]),
        "out_dir": str(tmp_path / "out"),
        "seed": 5,
        "cv_folds": 2,
        "embedding": {"epochs": 1},
        "resample": {"k_neighbors": 3},
        "grid": {"num_rounds": [4, 8], "max_depth": [2]},
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    for command in ("label", "featurize", "tune"):
        assert cli.main([command, "--config", str(cfg_path)]) == 0, command
    best = json.loads((tmp_path / "out" / "best_config.json").read_text())
    assert best["max_depth"] == 2
    assert best["num_rounds"] in (4, 8)
    report = json.loads((tmp_path / "out" / "tune_report.json").read_text())
    assert len(report["table"]) == 2
    # train must pick the tuned config up
    assert cli.main(["train", "--config", str(cfg_path)]) == 0
    model = json.loads((tmp_path / "out" / "model.json").read_text())
    assert model["config"]["num_rounds"] == best["num_rounds"]


def test_window_boundary_produces_cross_window_evaluation(tmp_path):
    sim = generate_corpus(16, 26, seed=41, days=60, posts_range=(10, 14))
    paths = write_fixture(sim, tmp_path / "fixture")
    boundary = (sim.view.window[0] + timedelta(days=30)).isoformat()
    config = {
        "corpus_path": str(paths["corpus"]),
        "scores_path": str(paths["scores"]),
        "suspension_path": str(paths["suspended"]),
        "out_dir": str(tmp_path / "out"),
        "seed": 5,
        "repetitions": 2,
        "window_boundary": boundary,
        "booster": {"num_rounds": 10, "max_depth": 3, "learning_rate": 0.3},
        "embedding": {"epochs": 1},
        "resample": {"k_neighbors": 3},
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    for command in ("label", "featurize", "evaluate"):
        assert cli.main([command, "--config", str(cfg_path)]) == 0, command
    out = Path(tmp_path / "out")
    assert (out / "features_test.csv").exists()
    report = json.loads((out / "eval_report.json").read_text())
    assert "cross_window" in report
    assert 0.0 <= report["cross_window"]["cross_window"]["roc_auc"] <= 1.0
    assert report["cross_window"]["train_fraction"] == 0.7
