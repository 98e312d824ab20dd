use std::path::Path;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{classification_metrics, recall_at_k, spearman_rank_correlation, ClassificationMetrics};
use crate::datasets::{augment_noisy, prepare_data, PreparedDataset, RawTable, DEFAULT_TEST_FRACTION};
use crate::encoding::FeatureMapSpec;
use crate::error::{Error, Result};
use crate::hqml::{train_hqml, ClassicalModel, ModelType, Predictor};
use crate::learners::{fit_learner, Hyperparams, LearnerKind};
use crate::matrix::Matrix;
use crate::qmedley::{self, explain, ExplainerConfig};

/// A named table plus the augmentation applied before every run.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub name: String,
    pub table: RawTable,
    pub n_noise: usize,
    pub n_redundant: usize,
    pub test_fraction: f64,
}

impl DatasetSpec {
    pub fn new(name: impl Into<String>, table: RawTable, n_noise: usize, n_redundant: usize) -> Self {
        Self {
            name: name.into(),
            table,
            n_noise,
            n_redundant,
            test_fraction: DEFAULT_TEST_FRACTION,
        }
    }

    pub fn with_test_fraction(mut self, test_fraction: f64) -> Self {
        self.test_fraction = test_fraction;
        self
    }

    /// Augment and split with the same seed.
    pub fn prepare(&self, seed: u64) -> Result<PreparedDataset> {
        let t = augment_noisy(&self.table, self.n_noise, self.n_redundant, seed)?;
        prepare_data(&t, self.test_fraction, seed)
    }
}

/// The four explainer variants of the ablation grid, in row order.
pub fn ablation_configs(seed: u64, repeats: usize) -> [ExplainerConfig; 4] {
    let base = ExplainerConfig {
        repeats,
        ..ExplainerConfig::with_seed(seed)
    };
    [
        base.clone(),
        ExplainerConfig {
            adaptive_weighting: true,
            ..base.clone()
        },
        ExplainerConfig {
            interaction_pi: true,
            ..base.clone()
        },
        ExplainerConfig {
            adaptive_weighting: true,
            interaction_pi: true,
            ..base
        },
    ]
}

pub const ABLATION_TRUTH_MODELS: [LearnerKind; 2] = [LearnerKind::DecisionTree, LearnerKind::RandomForest];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthSource {
    /// Gini importances of the fitted classical model.
    Intrinsic,
    /// The generator's planted truth (generated tables only).
    Planted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationOptions {
    pub repeats: usize,
    pub k: usize,
    pub truth: TruthSource,
    pub hyperparams: Hyperparams,
}

impl Default for AblationOptions {
    fn default() -> Self {
        Self {
            repeats: 5,
            k: 3,
            truth: TruthSource::Intrinsic,
            hyperparams: Hyperparams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedScore {
    pub seed: u64,
    pub recall_at_k: f64,
    pub spearman: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub dataset: String,
    pub truth_model: String,
    pub config: String,
    pub per_seed: Vec<SeedScore>,
    pub mean_recall_at_k: Option<f64>,
    pub mean_spearman: Option<f64>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    pub classical: ClassificationMetrics,
    pub quxai: ClassificationMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub dataset: String,
    pub learner: String,
    pub per_seed: Vec<SeedMetrics>,
    pub classical: Option<ClassificationMetrics>,
    pub quxai: Option<ClassificationMetrics>,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub kind: String,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ablation: Vec<AblationCell>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub benchmark: Vec<BenchmarkCell>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
    /// Wall time of the run; kept out of the JSON so reruns compare equal.
    #[serde(skip)]
    pub runtime: Duration,
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl EvalResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Every cell failed (nothing was measured).
    pub fn all_failed(&self) -> bool {
        let abl = self.ablation.iter().all(|c| c.per_seed.is_empty());
        let bench = self.benchmark.iter().all(|c| c.per_seed.is_empty());
        abl && bench
    }

    /// One summary row per cell.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        if !self.ablation.is_empty() {
            w.write_record(["dataset", "truth_model", "config", "mean_recall_at_k", "mean_spearman", "n_seeds", "failures"])?;
            for c in &self.ablation {
                w.write_record([
                    c.dataset.clone(),
                    c.truth_model.clone(),
                    c.config.clone(),
                    fmt(c.mean_recall_at_k),
                    fmt(c.mean_spearman),
                    c.per_seed.len().to_string(),
                    c.failures.join("; "),
                ])?;
            }
        }
        if !self.benchmark.is_empty() {
            let mut header = vec!["dataset".to_string(), "learner".to_string()];
            for side in ["classical", "quxai"] {
                for m in ["accuracy", "f1_macro", "precision_macro", "recall_macro"] {
                    header.push(format!("{side}_{m}"));
                }
            }
            header.extend(["n_seeds".to_string(), "failures".to_string()]);
            w.write_record(&header)?;
            for c in &self.benchmark {
                let mut row = vec![c.dataset.clone(), c.learner.clone()];
                for m in [c.classical, c.quxai] {
                    let vals = m.map(|m| [m.accuracy, m.f1_macro, m.precision_macro, m.recall_macro]);
                    for i in 0..4 {
                        row.push(fmt(vals.map(|v| v[i])));
                    }
                }
                row.push(c.per_seed.len().to_string());
                row.push(c.failures.join("; "));
                w.write_record(&row)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Data(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Fixed-width table for terminals.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        if !self.ablation.is_empty() {
            out.push_str(&format!("{:<16} {:<6} {:<34} {:>9} {:>9}\n", "dataset", "truth", "config", "recall@k", "spearman"));
            for c in &self.ablation {
                out.push_str(&format!(
                    "{:<16} {:<6} {:<34} {:>9} {:>9}\n",
                    c.dataset,
                    c.truth_model,
                    c.config,
                    fmt(c.mean_recall_at_k),
                    fmt(c.mean_spearman)
                ));
            }
        }
        if !self.benchmark.is_empty() {
            out.push_str(&format!(
                "{:<16} {:<12} {:>9} {:>9} {:>9} {:>9}\n",
                "dataset", "learner", "cls_acc", "qx_acc", "cls_f1", "qx_f1"
            ));
            for c in &self.benchmark {
                out.push_str(&format!(
                    "{:<16} {:<12} {:>9} {:>9} {:>9} {:>9}\n",
                    c.dataset,
                    c.learner,
                    fmt(c.classical.map(|m| m.accuracy)),
                    fmt(c.quxai.map(|m| m.accuracy)),
                    fmt(c.classical.map(|m| m.f1_macro)),
                    fmt(c.quxai.map(|m| m.f1_macro)),
                ));
            }
        }
        out
    }
}

type AblationUnit = std::result::Result<Vec<(usize, usize, SeedScore)>, String>;

fn ablation_unit(ds: &DatasetSpec, seed: u64, opts: &AblationOptions) -> AblationUnit {
    let p = ds.prepare(seed).map_err(|e| format!("seed {seed}: {e}"))?;
    let mut out = Vec::new();
    for (mi, &kind) in ABLATION_TRUTH_MODELS.iter().enumerate() {
        let model = ClassicalModel::fit(&p.x_train, &p.y_train, kind, &opts.hyperparams, seed, Some(p.feature_labels.clone()))
            .map_err(|e| format!("seed {seed}, {kind}: {e}"))?;
        let truth = match opts.truth {
            TruthSource::Intrinsic => model.learner.intrinsic_importances().map_err(|e| e.to_string())?,
            TruthSource::Planted => p
                .planted_truth
                .clone()
                .ok_or_else(|| format!("dataset '{}' has no planted truth", ds.name))?,
        };
        for (ci, cfg) in ablation_configs(seed, opts.repeats).iter().enumerate() {
            let report = explain(&model, &p.x_train, &p.y_train, cfg).map_err(|e| format!("seed {seed}, {kind}: {e}"))?;
            let recall = recall_at_k(&truth, &report.final_scores, opts.k).map_err(|e| e.to_string())?;
            let rho = spearman_rank_correlation(&truth, &report.final_scores).map_err(|e| e.to_string())?;
            out.push((mi, ci, SeedScore { seed, recall_at_k: recall, spearman: rho }));
        }
    }
    Ok(out)
}

/// Explainer ablation: for every dataset, classical DT/RF truth model and the
/// four explainer variants, mean Recall@k and Spearman over `seeds`.
/// Models see the scaled features directly (identity encoding).
pub fn run_ablation(datasets: &[DatasetSpec], seeds: &[u64], opts: &AblationOptions) -> Result<EvalResult> {
    if seeds.is_empty() {
        return Err(Error::Empty("seed list"));
    }
    opts.hyperparams.validate()?;
    let start = std::time::Instant::now();
    let units: Vec<(usize, u64)> = (0..datasets.len()).flat_map(|d| seeds.iter().map(move |&s| (d, s))).collect();
    let results: Vec<AblationUnit> = units.par_iter().map(|&(d, s)| ablation_unit(&datasets[d], s, opts)).collect();

    let names = ablation_configs(0, 1).map(|c| c.variant_name().to_string());
    let mut cells = Vec::new();
    for (d, ds) in datasets.iter().enumerate() {
        for (mi, kind) in ABLATION_TRUTH_MODELS.iter().enumerate() {
            for (ci, name) in names.iter().enumerate() {
                let mut per_seed = Vec::new();
                let mut failures = Vec::new();
                for (u, &(ud, _)) in units.iter().enumerate() {
                    if ud != d {
                        continue;
                    }
                    match &results[u] {
                        Ok(rows) => per_seed.extend(rows.iter().filter(|r| r.0 == mi && r.1 == ci).map(|r| r.2.clone())),
                        Err(e) => failures.push(e.clone()),
                    }
                }
                cells.push(AblationCell {
                    dataset: ds.name.clone(),
                    truth_model: kind.slug().to_string(),
                    config: name.clone(),
                    mean_recall_at_k: mean(per_seed.iter().map(|s| s.recall_at_k)),
                    mean_spearman: mean(per_seed.iter().map(|s| s.spearman)),
                    per_seed,
                    failures,
                });
            }
        }
    }
    Ok(EvalResult {
        kind: "ablation".into(),
        seeds: seeds.to_vec(),
        ablation: cells,
        benchmark: Vec::new(),
        provenance: None,
        runtime: start.elapsed(),
    })
}

fn benchmark_unit(ds: &DatasetSpec, kind: LearnerKind, seed: u64, hp: &Hyperparams) -> std::result::Result<SeedMetrics, String> {
    let ctx = |e: Error| format!("seed {seed}: {e}");
    let p = ds.prepare(seed).map_err(ctx)?;
    let classical = ClassicalModel::fit(&p.x_train, &p.y_train, kind, hp, seed, None).map_err(ctx)?;
    let map = FeatureMapSpec::rx(p.n_features()).map_err(ctx)?;
    let hybrid = train_hqml(&p.x_train, &p.y_train, kind, ModelType::AmplitudeBased, map, hp, seed, None).map_err(ctx)?;
    let c_pred = classical.predict(&p.x_test).map_err(ctx)?;
    let q_pred = hybrid.predict(&p.x_test).map_err(ctx)?;
    Ok(SeedMetrics {
        seed,
        classical: classification_metrics(&p.y_test, &c_pred).map_err(ctx)?,
        quxai: classification_metrics(&p.y_test, &q_pred).map_err(ctx)?,
    })
}

/// Classical learner on scaled features vs its amplitude-encoded hybrid twin,
/// evaluated on the held-out split for every dataset, learner kind and seed.
pub fn run_benchmark(datasets: &[DatasetSpec], kinds: &[LearnerKind], seeds: &[u64], hp: &Hyperparams) -> Result<EvalResult> {
    if seeds.is_empty() {
        return Err(Error::Empty("seed list"));
    }
    if let Some(k) = kinds.iter().find(|k| **k == LearnerKind::KnnPrecomputed) {
        return Err(Error::InvalidConfig(format!("{k} has no amplitude-based twin")));
    }
    hp.validate()?;
    let start = std::time::Instant::now();
    let mut cells = Vec::new();
    for ds in datasets {
        for &kind in kinds {
            let runs: Vec<_> = seeds.par_iter().map(|&s| benchmark_unit(ds, kind, s, hp)).collect();
            let mut per_seed = Vec::new();
            let mut failures = Vec::new();
            for r in runs {
                match r {
                    Ok(m) => per_seed.push(m),
                    Err(e) => failures.push(e),
                }
            }
            let cls: Vec<_> = per_seed.iter().map(|m| m.classical).collect();
            let qx: Vec<_> = per_seed.iter().map(|m| m.quxai).collect();
            cells.push(BenchmarkCell {
                dataset: ds.name.clone(),
                learner: kind.hybrid_name(),
                classical: ClassificationMetrics::mean(&cls),
                quxai: ClassificationMetrics::mean(&qx),
                per_seed,
                failures,
            });
        }
    }
    Ok(EvalResult {
        kind: "benchmark".into(),
        seeds: seeds.to_vec(),
        ablation: Vec::new(),
        benchmark: cells,
        provenance: None,
        runtime: start.elapsed(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    DciOnly,
    PiOnly,
    LogRegL1,
}

impl std::str::FromStr for BaselineMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "dci" | "dcionly" => Ok(Self::DciOnly),
            "pi" | "pionly" => Ok(Self::PiOnly),
            "logregl1" | "l1" => Ok(Self::LogRegL1),
            other => Err(Error::Unsupported(format!("unknown baseline method '{other}'"))),
        }
    }
}

/// Reference importance vectors for comparison against the full explainer.
/// `LogRegL1` ignores `model` and fits an L1 logistic regression on `(x, y)`,
/// scoring each feature by its mean absolute coefficient across classes.
pub fn baseline_importances<P: Predictor + ?Sized>(
    method: BaselineMethod,
    model: &P,
    x: &Matrix,
    y: &[usize],
    cfg: &ExplainerConfig,
) -> Result<Vec<f64>> {
    match method {
        BaselineMethod::DciOnly => qmedley::dci_scores(model, x, y, cfg),
        BaselineMethod::PiOnly => qmedley::pi_scores(model, x, y, cfg),
        BaselineMethod::LogRegL1 => {
            let fitted = fit_learner(LearnerKind::LogisticRegression, x, y, &Hyperparams::l1_logistic(), cfg.seed)?;
            let coef = fitted.linear_coefficients().expect("logistic is linear");
            Ok((0..coef.cols())
                .map(|j| coef.column(j).iter().map(|v| v.abs()).sum::<f64>() / coef.rows() as f64)
                .collect())
        }
    }
}

/// Importance scores produced by an outside tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalScores {
    pub feature_labels: Vec<String>,
    pub scores: Vec<f64>,
}

impl ExternalScores {
    pub fn from_json(s: &str) -> Result<Self> {
        let v: Self = serde_json::from_str(s)?;
        if v.feature_labels.len() != v.scores.len() {
            return Err(Error::DimensionMismatch {
                expected: v.feature_labels.len(),
                actual: v.scores.len(),
            });
        }
        if v.scores.iter().any(|x| !x.is_finite()) {
            return Err(Error::Data("external scores contain non-finite values".into()));
        }
        Ok(v)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Scores reordered to match `labels`; every label must be present.
    pub fn aligned_to(&self, labels: &[String]) -> Result<Vec<f64>> {
        labels
            .iter()
            .map(|l| {
                self.feature_labels
                    .iter()
                    .position(|f| f == l)
                    .map(|i| self.scores[i])
                    .ok_or_else(|| Error::Data(format!("external scores lack feature '{l}'")))
            })
            .collect()
    }
}
