//! Classical learners, written from scratch so that every fitted parameter is
//! reproducible from `(data, hyperparameters, seed)`.
//!
//! Labels are integer class codes. A fitted learner remembers the sorted set
//! of codes it saw (`classes`) and always predicts one of them.

pub mod bayes;
pub mod ensemble;
pub mod knn;
pub mod linear;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{stream, tag};
use bayes::GaussianNbModel;
use ensemble::{AdaBoostModel, GradientBoostingModel};
use knn::KnnModel;
use linear::LinearModel;
use tree::{MaxFeatures, Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    DecisionTree,
    RandomForest,
    ExtraTrees,
    GradientBoosting,
    AdaBoost,
    Lda,
    LogisticRegression,
    GaussianNb,
    Perceptron,
    RidgeClassifier,
    KnnPrecomputed,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 11] = [
        LearnerKind::AdaBoost,
        LearnerKind::DecisionTree,
        LearnerKind::ExtraTrees,
        LearnerKind::GradientBoosting,
        LearnerKind::Lda,
        LearnerKind::LogisticRegression,
        LearnerKind::GaussianNb,
        LearnerKind::Perceptron,
        LearnerKind::RandomForest,
        LearnerKind::RidgeClassifier,
        LearnerKind::KnnPrecomputed,
    ];

    /// The ten families usable on feature vectors (everything but kNN on distances).
    pub const FEATURE_LEARNERS: [LearnerKind; 10] = [
        LearnerKind::AdaBoost,
        LearnerKind::DecisionTree,
        LearnerKind::ExtraTrees,
        LearnerKind::GradientBoosting,
        LearnerKind::Lda,
        LearnerKind::LogisticRegression,
        LearnerKind::GaussianNb,
        LearnerKind::Perceptron,
        LearnerKind::RandomForest,
        LearnerKind::RidgeClassifier,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            LearnerKind::DecisionTree => "dt",
            LearnerKind::RandomForest => "rf",
            LearnerKind::ExtraTrees => "extra",
            LearnerKind::GradientBoosting => "gb",
            LearnerKind::AdaBoost => "ada",
            LearnerKind::Lda => "lda",
            LearnerKind::LogisticRegression => "logistic",
            LearnerKind::GaussianNb => "nb",
            LearnerKind::Perceptron => "perceptron",
            LearnerKind::RidgeClassifier => "ridge",
            LearnerKind::KnnPrecomputed => "knn",
        }
    }

    /// Display name of the hybrid model built on this learner, e.g. `QDT`.
    pub fn hybrid_name(self) -> String {
        let short = match self {
            LearnerKind::DecisionTree => "DT",
            LearnerKind::RandomForest => "RF",
            LearnerKind::ExtraTrees => "Extra",
            LearnerKind::GradientBoosting => "GB",
            LearnerKind::AdaBoost => "Ada",
            LearnerKind::Lda => "LDA",
            LearnerKind::LogisticRegression => "Logistic",
            LearnerKind::GaussianNb => "NB",
            LearnerKind::Perceptron => "Perceptron",
            LearnerKind::RidgeClassifier => "Ridge",
            LearnerKind::KnnPrecomputed => "KNN",
        };
        format!("Q{short}")
    }

    pub fn is_tree_model(self) -> bool {
        matches!(self, LearnerKind::DecisionTree | LearnerKind::RandomForest | LearnerKind::ExtraTrees)
    }

    pub fn valid_names() -> String {
        Self::ALL.iter().map(|k| k.slug()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    /// Accepts the slug, the hybrid name (`QDT`), or a long name such as
    /// `random_forest`, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.to_ascii_lowercase().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
        let find = |name: &str| {
            Self::ALL.into_iter().find(|k| {
                k.slug() == name
                    || k.hybrid_name().to_ascii_lowercase() == name
                    || format!("{k:?}").to_ascii_lowercase() == name
            })
        };
        find(&norm)
            .or_else(|| match norm.as_str() {
                "decisiontree" | "tree" => Some(LearnerKind::DecisionTree),
                "randomforest" | "forest" => Some(LearnerKind::RandomForest),
                "extratrees" | "qextratrees" => Some(LearnerKind::ExtraTrees),
                "adaboost" => Some(LearnerKind::AdaBoost),
                "gradientboosting" => Some(LearnerKind::GradientBoosting),
                "naivebayes" | "gaussiannb" => Some(LearnerKind::GaussianNb),
                "ridgeclassifier" => Some(LearnerKind::RidgeClassifier),
                "logisticregression" | "logreg" => Some(LearnerKind::LogisticRegression),
                _ => None,
            })
            .ok_or_else(|| {
                Error::InvalidConfig(format!("unknown model kind '{s}'; valid kinds: {}", Self::valid_names()))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    L1(f64),
    L2(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeHyperparams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostingParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub iterations: usize,
    pub penalty: Penalty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptronParams {
    pub epochs: usize,
    pub learning_rate: f64,
}

/// Hyperparameters for every learner family; each fit reads only its own block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub tree: TreeHyperparams,
    pub random_forest: ForestParams,
    pub extra_trees: ForestParams,
    /// `learning_rate` is unused by SAMME.
    pub adaboost: BoostingParams,
    pub gradient_boosting: BoostingParams,
    pub logistic: LogisticParams,
    pub ridge_lambda: f64,
    pub lda_epsilon: f64,
    pub perceptron: PerceptronParams,
    pub nb_var_floor: f64,
    pub knn_k: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            tree: TreeHyperparams {
                max_depth: None,
                min_samples_split: 2,
            },
            random_forest: ForestParams {
                n_trees: 50,
                max_features: MaxFeatures::Sqrt,
                bootstrap: true,
            },
            extra_trees: ForestParams {
                n_trees: 50,
                max_features: MaxFeatures::Sqrt,
                bootstrap: false,
            },
            adaboost: BoostingParams {
                n_rounds: 50,
                max_depth: 1,
                learning_rate: 1.0,
            },
            gradient_boosting: BoostingParams {
                n_rounds: 50,
                max_depth: 3,
                learning_rate: 0.1,
            },
            logistic: LogisticParams {
                learning_rate: 0.1,
                iterations: 500,
                penalty: Penalty::L2(1e-4),
            },
            ridge_lambda: 1.0,
            lda_epsilon: 1e-6,
            perceptron: PerceptronParams {
                epochs: 100,
                learning_rate: 1.0,
            },
            nb_var_floor: 1e-9,
            knn_k: 5,
        }
    }
}

impl Hyperparams {
    /// Logistic regression settings used for the L1 coefficient baseline.
    pub fn l1_logistic() -> Self {
        let mut hp = Self::default();
        hp.logistic.penalty = Penalty::L1(0.01);
        hp
    }

    pub fn validate(&self) -> Result<()> {
        let positive_counts = [
            ("tree.min_samples_split", self.tree.min_samples_split),
            ("random_forest.n_trees", self.random_forest.n_trees),
            ("extra_trees.n_trees", self.extra_trees.n_trees),
            ("adaboost.n_rounds", self.adaboost.n_rounds),
            ("adaboost.max_depth", self.adaboost.max_depth),
            ("gradient_boosting.n_rounds", self.gradient_boosting.n_rounds),
            ("gradient_boosting.max_depth", self.gradient_boosting.max_depth),
            ("logistic.iterations", self.logistic.iterations),
            ("perceptron.epochs", self.perceptron.epochs),
            ("knn_k", self.knn_k),
        ];
        if let Some((name, _)) = positive_counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be positive")));
        }
        if self.tree.max_depth == Some(0) {
            return Err(Error::InvalidConfig("tree.max_depth must be positive".into()));
        }
        let rates = [
            ("gradient_boosting.learning_rate", self.gradient_boosting.learning_rate),
            ("logistic.learning_rate", self.logistic.learning_rate),
            ("perceptron.learning_rate", self.perceptron.learning_rate),
        ];
        if let Some((name, _)) = rates.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::InvalidConfig(format!("{name} must be > 0")));
        }
        if !(self.ridge_lambda >= 0.0 && self.lda_epsilon >= 0.0 && self.nb_var_floor >= 0.0) {
            return Err(Error::InvalidConfig("regularization weights must be nonnegative".into()));
        }
        Ok(())
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.tree.max_depth,
            min_samples_split: self.tree.min_samples_split,
            max_features: MaxFeatures::All,
            random_thresholds: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum LearnerParams {
    Tree { tree: Tree },
    Forest { trees: Vec<Tree> },
    AdaBoost(AdaBoostModel),
    GradientBoosting(GradientBoostingModel),
    Linear(LinearModel),
    GaussianNb(GaussianNbModel),
    Knn(KnnModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedLearner {
    pub kind: LearnerKind,
    pub classes: Vec<usize>,
    pub seed: u64,
    pub n_features: usize,
    pub params: LearnerParams,
}

/// Index of the largest entry; the lowest index wins ties.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn encode_classes(y: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut classes = y.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let idx = y.iter().map(|c| classes.binary_search(c).expect("present")).collect();
    (classes, idx)
}

pub fn fit_learner(kind: LearnerKind, x: &Matrix, y: &[usize], hp: &Hyperparams, seed: u64) -> Result<TrainedLearner> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::Empty("training matrix"));
    }
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    if x.rows() < 2 {
        return Err(Error::Data("at least two training rows are required".into()));
    }
    x.check_finite()?;
    hp.validate()?;
    if kind == LearnerKind::KnnPrecomputed && x.rows() != x.cols() {
        return Err(Error::InvalidConfig(format!(
            "KnnPrecomputed expects a square distance matrix, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    let (classes, yi) = encode_classes(y);
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }
    let k = classes.len();

    let params = match kind {
        LearnerKind::DecisionTree => {
            let idx: Vec<usize> = (0..x.rows()).collect();
            let mut rng = stream(seed, &[tag::TREE, 0]);
            let tree = tree::fit_classification_tree(x, &yi, &vec![1.0; x.rows()], k, &idx, &hp.tree_params(), &mut rng);
            LearnerParams::Tree { tree }
        }
        LearnerKind::RandomForest | LearnerKind::ExtraTrees => {
            let (forest, random_thresholds) = if kind == LearnerKind::RandomForest {
                (&hp.random_forest, false)
            } else {
                (&hp.extra_trees, true)
            };
            let tp = TreeParams {
                max_features: forest.max_features,
                random_thresholds,
                ..hp.tree_params()
            };
            LearnerParams::Forest {
                trees: ensemble::fit_forest(x, &yi, k, forest, &tp, seed),
            }
        }
        LearnerKind::AdaBoost => LearnerParams::AdaBoost(ensemble::fit_adaboost(
            x,
            &yi,
            k,
            hp.adaboost.n_rounds,
            hp.adaboost.max_depth,
            seed,
        )),
        LearnerKind::GradientBoosting => LearnerParams::GradientBoosting(ensemble::fit_gradient_boosting(
            x,
            &yi,
            k,
            hp.gradient_boosting.n_rounds,
            hp.gradient_boosting.max_depth,
            hp.gradient_boosting.learning_rate,
        )),
        LearnerKind::LogisticRegression => LearnerParams::Linear(linear::fit_logistic(
            x,
            &yi,
            k,
            hp.logistic.learning_rate,
            hp.logistic.iterations,
            hp.logistic.penalty,
        )),
        LearnerKind::RidgeClassifier => LearnerParams::Linear(linear::fit_ridge(x, &yi, k, hp.ridge_lambda)?),
        LearnerKind::Lda => LearnerParams::Linear(linear::fit_lda(x, &yi, k, hp.lda_epsilon)?),
        LearnerKind::Perceptron => LearnerParams::Linear(linear::fit_perceptron(
            x,
            &yi,
            k,
            hp.perceptron.epochs,
            hp.perceptron.learning_rate,
            seed,
        )),
        LearnerKind::GaussianNb => LearnerParams::GaussianNb(bayes::fit_gaussian_nb(x, &yi, k, hp.nb_var_floor)),
        LearnerKind::KnnPrecomputed => LearnerParams::Knn(KnnModel {
            k: hp.knn_k,
            reference_labels: yi,
        }),
    };
    Ok(TrainedLearner {
        kind,
        classes,
        seed,
        n_features: x.cols(),
        params,
    })
}

impl TrainedLearner {
    fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Class index (into `classes`) predicted for one row.
    pub fn predict_index(&self, x: &[f64]) -> usize {
        let k = self.n_classes();
        match &self.params {
            LearnerParams::Tree { tree } => tree.predict_class(x),
            LearnerParams::Forest { trees } => ensemble::forest_predict(trees, k, x),
            LearnerParams::AdaBoost(m) => m.predict(k, x),
            LearnerParams::GradientBoosting(m) => m.predict(x),
            LearnerParams::Linear(m) => argmax(&m.scores(x)),
            LearnerParams::GaussianNb(m) => m.predict(x),
            LearnerParams::Knn(m) => m.predict(k, x),
        }
    }

    pub fn predict_labels(&self, x: &Matrix) -> Result<Vec<usize>> {
        if x.cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.cols(),
            });
        }
        let idx: Vec<usize> = if x.rows() >= 64 {
            (0..x.rows()).into_par_iter().map(|r| self.predict_index(x.row(r))).collect()
        } else {
            x.row_iter().map(|r| self.predict_index(r)).collect()
        };
        Ok(idx.into_iter().map(|i| self.classes[i]).collect())
    }

    /// Normalized impurity-decrease (Gini) importances of a tree model.
    pub fn intrinsic_importances(&self) -> Result<Vec<f64>> {
        match &self.params {
            LearnerParams::Tree { tree } => Ok(tree.normalized_importances()),
            LearnerParams::Forest { trees } => Ok(ensemble::forest_importances(trees, self.n_features)),
            _ => Err(Error::Unsupported(format!(
                "intrinsic importances are only defined for tree models, not {}",
                self.kind
            ))),
        }
    }

    /// Coefficient matrix of a linear-family learner (`classes × features`).
    pub fn linear_coefficients(&self) -> Option<&Matrix> {
        match &self.params {
            LearnerParams::Linear(m) => Some(&m.coef),
            _ => None,
        }
    }
}

/// Free-function form of [`TrainedLearner::predict_labels`].
pub fn predict_labels(m: &TrainedLearner, x: &Matrix) -> Result<Vec<usize>> {
    m.predict_labels(x)
}

/// Free-function form of [`TrainedLearner::intrinsic_importances`].
pub fn intrinsic_importances(m: &TrainedLearner) -> Result<Vec<f64>> {
    m.intrinsic_importances()
}
