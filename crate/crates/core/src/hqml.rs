//! Hybrid quantum-classical models: a classical learner trained on the output
//! of the RX feature map, with the map attached so that any new (or perturbed)
//! input is pushed through the quantum stage before the learner sees it.

use serde::{Deserialize, Serialize};

use crate::encoding::{amplitude_matrix, distance_matrix_from_kernel, kernel_matrix, FeatureMapSpec};
use crate::error::{Error, Result};
use crate::learners::{fit_learner, Hyperparams, LearnerKind, TrainedLearner};
use crate::matrix::Matrix;

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_BLOCK_ROWS: usize = 256;

/// Anything that maps rows of original (scaled) features to class labels.
///
/// The explainer is written against this trait so the same code explains
/// hybrid models and plain classical models (identity encoding).
pub trait Predictor: Sync {
    fn n_features(&self) -> usize;
    fn predict(&self, x: &Matrix) -> Result<Vec<usize>>;
    fn descriptor(&self) -> String;

    fn feature_labels(&self) -> Vec<String> {
        default_feature_labels(self.n_features())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelType {
    AmplitudeBased,
    KernelBased,
}

impl std::str::FromStr for ModelType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "amplitude" | "amplitude_based" | "amplitude-based" => Ok(ModelType::AmplitudeBased),
            "kernel" | "kernel_based" | "kernel-based" => Ok(ModelType::KernelBased),
            other => Err(Error::InvalidConfig(format!(
                "unknown model type '{other}'; expected 'amplitude' or 'kernel'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HqmlModel {
    pub format_version: u32,
    pub model_type: ModelType,
    pub learner: TrainedLearner,
    pub map: FeatureMapSpec,
    pub feature_labels: Vec<String>,
    /// Training inputs in the original scaled space (kernel models only).
    pub x_ref_train: Option<Matrix>,
    /// Cached Gram matrix over `x_ref_train` (kernel models only).
    pub k_ref: Option<Matrix>,
    #[serde(default = "default_block_rows")]
    pub block_rows: usize,
}

fn default_block_rows() -> usize {
    DEFAULT_BLOCK_ROWS
}

pub fn default_feature_labels(n: usize) -> Vec<String> {
    (0..n).map(|j| format!("x{j}")).collect()
}

/// Train a hybrid model. Amplitude models fit the learner on the `2^D`
/// basis probabilities of each row; kernel models cache the training Gram
/// matrix and fit kNN on the distances `√(1 − K)`.
#[allow(clippy::too_many_arguments)]
pub fn train_hqml(
    x_tr: &Matrix,
    y_tr: &[usize],
    kind: LearnerKind,
    model_type: ModelType,
    map: FeatureMapSpec,
    hp: &Hyperparams,
    seed: u64,
    feature_labels: Option<Vec<String>>,
) -> Result<HqmlModel> {
    if x_tr.cols() != map.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: map.n_qubits,
            actual: x_tr.cols(),
        });
    }
    let feature_labels = feature_labels.unwrap_or_else(|| default_feature_labels(x_tr.cols()));
    if feature_labels.len() != x_tr.cols() {
        return Err(Error::DimensionMismatch {
            expected: x_tr.cols(),
            actual: feature_labels.len(),
        });
    }
    match (model_type, kind) {
        (ModelType::AmplitudeBased, LearnerKind::KnnPrecomputed) => {
            return Err(Error::InvalidConfig(
                "amplitude-based models cannot use the precomputed-distance kNN learner".into(),
            ))
        }
        (ModelType::KernelBased, k) if k != LearnerKind::KnnPrecomputed => {
            return Err(Error::InvalidConfig(format!(
                "kernel-based models require the knn learner, got {k}"
            )))
        }
        _ => {}
    }

    match model_type {
        ModelType::AmplitudeBased => {
            map.check_amplitude_feasible()?;
            let features = amplitude_matrix(x_tr, &map, DEFAULT_BLOCK_ROWS)?;
            let learner = fit_learner(kind, &features, y_tr, hp, seed)?;
            Ok(HqmlModel {
                format_version: MODEL_FORMAT_VERSION,
                model_type,
                learner,
                map,
                feature_labels,
                x_ref_train: None,
                k_ref: None,
                block_rows: DEFAULT_BLOCK_ROWS,
            })
        }
        ModelType::KernelBased => {
            let k_ref = kernel_matrix(x_tr, x_tr)?;
            let learner = fit_learner(kind, &distance_matrix_from_kernel(&k_ref), y_tr, hp, seed)?;
            Ok(HqmlModel {
                format_version: MODEL_FORMAT_VERSION,
                model_type,
                learner,
                map,
                feature_labels,
                x_ref_train: Some(x_tr.clone()),
                k_ref: Some(k_ref),
                block_rows: DEFAULT_BLOCK_ROWS,
            })
        }
    }
}

impl HqmlModel {
    /// Classical representation of `x_eval` that the learner consumes:
    /// basis probabilities, or kernel distances to the training rows.
    pub fn quantum_representation(&self, x_eval: &Matrix, use_cache: bool) -> Result<Matrix> {
        if x_eval.cols() != self.map.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.map.n_qubits,
                actual: x_eval.cols(),
            });
        }
        match self.model_type {
            ModelType::AmplitudeBased => amplitude_matrix(x_eval, &self.map, self.block_rows),
            ModelType::KernelBased => {
                let x_ref = self
                    .x_ref_train
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig("kernel model is missing its training inputs".into()))?;
                let k = match &self.k_ref {
                    Some(cached) if use_cache && x_eval == x_ref => cached.clone(),
                    _ => kernel_matrix(x_eval, x_ref)?,
                };
                Ok(distance_matrix_from_kernel(&k))
            }
        }
    }

    /// Predict labels for rows in the original scaled feature space,
    /// re-running the quantum feature map on exactly these inputs.
    pub fn predict_adapted(&self, x_eval: &Matrix) -> Result<Vec<usize>> {
        let repr = self.quantum_representation(x_eval, true)?;
        self.learner.predict_labels(&repr)
    }

    /// Same as [`Self::predict_adapted`] but never consults the cached Gram matrix.
    pub fn predict_adapted_uncached(&self, x_eval: &Matrix) -> Result<Vec<usize>> {
        let repr = self.quantum_representation(x_eval, false)?;
        self.learner.predict_labels(&repr)
    }

    pub fn score_accuracy(&self, x: &Matrix, y: &[usize]) -> Result<f64> {
        score_accuracy(self, x, y)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        Ok(m)
    }
}

impl Predictor for HqmlModel {
    fn n_features(&self) -> usize {
        self.map.n_qubits
    }

    fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        self.predict_adapted(x)
    }

    fn descriptor(&self) -> String {
        let branch = match self.model_type {
            ModelType::AmplitudeBased => "amplitude",
            ModelType::KernelBased => "kernel",
        };
        format!("{} ({branch}, {} qubits)", self.learner.kind.hybrid_name(), self.map.n_qubits)
    }

    fn feature_labels(&self) -> Vec<String> {
        self.feature_labels.clone()
    }
}

/// A classical learner applied to the raw features (identity encoding).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalModel {
    pub learner: TrainedLearner,
    pub feature_labels: Vec<String>,
}

impl ClassicalModel {
    pub fn fit(x: &Matrix, y: &[usize], kind: LearnerKind, hp: &Hyperparams, seed: u64, feature_labels: Option<Vec<String>>) -> Result<Self> {
        if kind == LearnerKind::KnnPrecomputed {
            return Err(Error::InvalidConfig("identity encoding needs a feature learner, not knn".into()));
        }
        let learner = fit_learner(kind, x, y, hp, seed)?;
        Ok(Self {
            learner,
            feature_labels: feature_labels.unwrap_or_else(|| default_feature_labels(x.cols())),
        })
    }
}

impl Predictor for ClassicalModel {
    fn n_features(&self) -> usize {
        self.learner.n_features
    }

    fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        self.learner.predict_labels(x)
    }

    fn descriptor(&self) -> String {
        format!("{} (classical)", self.learner.kind)
    }

    fn feature_labels(&self) -> Vec<String> {
        self.feature_labels.clone()
    }
}

/// Fraction of rows whose prediction matches `y`.
pub fn score_accuracy<P: Predictor + ?Sized>(m: &P, x: &Matrix, y: &[usize]) -> Result<f64> {
    if x.rows() == 0 {
        return Err(Error::Empty("evaluation rows"));
    }
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    let pred = m.predict(x)?;
    Ok(accuracy(&pred, y))
}

pub(crate) fn accuracy(pred: &[usize], y: &[usize]) -> f64 {
    pred.iter().zip(y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64
}
