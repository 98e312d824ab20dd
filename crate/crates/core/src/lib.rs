//! Hybrid quantum-classical classifiers and their global explanations.
//!
//! A model here is a classical learner stacked on top of a simulated quantum
//! feature map: every input feature drives one qubit through an `RX` rotation,
//! and the learner consumes either the computational-basis probabilities of the
//! resulting product state or fidelity-kernel distances to the training set.
//!
//! The [`qmedley`] explainer scores each original feature by combining
//! drop-column and permutation importance, re-running the quantum encoding on
//! every perturbed input so that the attribution respects the full pipeline.

pub mod datasets;
pub mod encoding;
pub mod error;
pub mod evaluation;
pub mod hqml;
pub mod learners;
pub mod matrix;
pub mod qmedley;
pub mod rng;
pub mod viz;

pub use encoding::FeatureMapSpec;
pub use error::{Error, Result};
pub use hqml::{ClassicalModel, HqmlModel, ModelType, Predictor};
pub use learners::{Hyperparams, LearnerKind, TrainedLearner};
pub use matrix::Matrix;
pub use qmedley::{ExplainerConfig, ImportanceReport};

/// Version string embedded in every file the tooling writes.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
