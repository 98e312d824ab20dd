//! Ranking and classification metrics, and the ablation / benchmark harnesses.

mod harness;
pub mod metrics;

pub use harness::{
    ablation_configs, baseline_importances, run_ablation, run_benchmark, AblationCell, AblationOptions, BaselineMethod,
    BenchmarkCell, DatasetSpec, EvalResult, ExternalScores, SeedMetrics, SeedScore, TruthSource, ABLATION_TRUTH_MODELS,
};
pub use metrics::{
    average_ranks, classification_metrics, descending_order, recall_at_k, spearman_rank_correlation, top_k,
    ClassificationMetrics,
};
