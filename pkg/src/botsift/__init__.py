"""botsift: social-bot detection over a stored tweet corpus.

Subpackages and modules
-----------------------
corpus     line-delimited corpus ingestion, validation, windowed views
labeling   dual-scorer label fusion and quota-aware schedule planning
features   the 335-slot feature space (profile, context, time, graph)
embedding  10-dimensional skip-gram negative-sampling word vectors
resample   SMOTE oversampling with Tomek-link cleaning
boosting   second-order gradient-boosted trees, tuning, feature selection
explain    interventional Shapley values (brute-force oracle + tree path form)
metrics    F1, PR-AUC, ROC-AUC, stratified splits and cross-validation
simulate   synthetic bot/human corpus generator for fixtures
pipeline   batch orchestration, temporal generalization, leakage guard
cli        `botsift` command-line entry point
"""

from .boosting import BoosterConfig, TreeEnsemble, train
from .corpus import AccountRecord, CorpusView, TweetRecord, ingest, split_by_window
from .embedding import EmbeddingConfig, EmbeddingTable, train_embeddings
from .explain import Explanation, shapley_exact, shapley_tree, summarize
from .features import FeatureMatrix, FeatureSpec, build_feature_spec, extract_features, fit_stats
from .labeling import FusedLabel, FusionPolicy, ScorerOutput, fuse, plan_labeling, run_funnel
from .metrics import f1_at, kfold_cv, pr_auc, roc_auc, stratified_split
from .resample import ResampleConfig, resample
from .simulate import generate_corpus

__version__ = "0.1.0"

__all__ = [
    "AccountRecord", "BoosterConfig", "CorpusView", "EmbeddingConfig",
    "EmbeddingTable", "Explanation", "FeatureMatrix", "FeatureSpec",
    "FusedLabel", "FusionPolicy", "ResampleConfig", "ScorerOutput",
    "TreeEnsemble", "TweetRecord", "build_feature_spec", "extract_features",
    "f1_at", "fit_stats", "fuse", "generate_corpus", "ingest", "kfold_cv",
    "plan_labeling", "pr_auc", "resample", "roc_auc", "run_funnel",
    "shapley_exact", "shapley_tree", "split_by_window", "stratified_split",
    "summarize", "train", "train_embeddings", "__version__",
]
