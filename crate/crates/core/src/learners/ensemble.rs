//! Tree ensembles: bagged forests, extremely randomized trees, SAMME AdaBoost
//! and multinomial gradient boosting.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_classification_tree, fit_regression_tree, normalize, MaxFeatures, Tree, TreeParams};
use super::{argmax, ForestParams};
use crate::matrix::Matrix;
use crate::rng::{stream, tag};

/// Fit `params.n_trees` trees in parallel. Tree `t` draws all of its
/// randomness from the stream `(seed, TREE, t)`, so the result does not depend
/// on scheduling.
pub fn fit_forest(x: &Matrix, y: &[usize], n_classes: usize, params: &ForestParams, tree: &TreeParams, seed: u64) -> Vec<Tree> {
    let n = x.rows();
    let weights = vec![1.0; n];
    (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, &[tag::TREE, t as u64]);
            let idx: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_classification_tree(x, y, &weights, n_classes, &idx, tree, &mut rng)
        })
        .collect()
}

pub fn forest_predict(trees: &[Tree], n_classes: usize, x: &[f64]) -> usize {
    let mut votes = vec![0.0; n_classes];
    for t in trees {
        votes[t.predict_class(x)] += 1.0;
    }
    argmax(&votes)
}

/// Mean of the per-tree normalized importances over trees that split at
/// least once, renormalized.
pub fn forest_importances(trees: &[Tree], n_features: usize) -> Vec<f64> {
    let mut acc = vec![0.0; n_features];
    let mut used = 0usize;
    for t in trees.iter().filter(|t| !t.is_single_leaf()) {
        for (a, v) in acc.iter_mut().zip(t.normalized_importances()) {
            *a += v;
        }
        used += 1;
    }
    if used == 0 {
        return acc;
    }
    normalize(&acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub stumps: Vec<Tree>,
    pub alphas: Vec<f64>,
}

/// Multiclass AdaBoost (SAMME).
pub fn fit_adaboost(x: &Matrix, y: &[usize], n_classes: usize, rounds: usize, max_depth: usize, seed: u64) -> AdaBoostModel {
    let n = x.rows();
    let k = n_classes as f64;
    let mut w = vec![1.0 / n as f64; n];
    let idx: Vec<usize> = (0..n).collect();
    let params = TreeParams {
        max_depth: Some(max_depth),
        min_samples_split: 2,
        max_features: MaxFeatures::All,
        random_thresholds: false,
    };
    let mut model = AdaBoostModel {
        stumps: Vec::new(),
        alphas: Vec::new(),
    };
    for round in 0..rounds {
        let mut rng = stream(seed, &[tag::TREE, round as u64]);
        let stump = fit_classification_tree(x, y, &w, n_classes, &idx, &params, &mut rng);
        let miss: Vec<bool> = (0..n).map(|i| stump.predict_class(x.row(i)) != y[i]).collect();
        let total: f64 = w.iter().sum();
        let err = miss.iter().zip(&w).filter(|(m, _)| **m).map(|(_, wi)| wi).sum::<f64>() / total;

        if err <= 1e-12 {
            model.stumps.push(stump);
            model.alphas.push(1.0);
            break;
        }
        if err >= 1.0 - 1.0 / k {
            // No better than chance; keep one learner so prediction stays defined.
            if model.stumps.is_empty() {
                model.stumps.push(stump);
                model.alphas.push(1.0);
            }
            break;
        }
        let alpha = ((1.0 - err) / err).ln() + (k - 1.0).ln();
        for (wi, m) in w.iter_mut().zip(&miss) {
            if *m {
                *wi *= alpha.exp();
            }
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|wi| *wi /= s);
        model.stumps.push(stump);
        model.alphas.push(alpha);
    }
    model
}

impl AdaBoostModel {
    pub fn predict(&self, n_classes: usize, x: &[f64]) -> usize {
        let mut score = vec![0.0; n_classes];
        for (s, a) in self.stumps.iter().zip(&self.alphas) {
            score[s.predict_class(x)] += a;
        }
        argmax(&score)
    }

    /// The model restricted to its first `rounds` learners.
    pub fn truncated(&self, rounds: usize) -> Self {
        let r = rounds.min(self.stumps.len());
        Self {
            stumps: self.stumps[..r].to_vec(),
            alphas: self.alphas[..r].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostingModel {
    pub init: Vec<f64>,
    /// `rounds[r][k]` is the regression tree for class `k` in round `r`.
    pub rounds: Vec<Vec<Tree>>,
    pub learning_rate: f64,
}

fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    v.iter_mut().for_each(|x| *x /= s);
}

/// Softmax gradient boosting with one regression tree per class per round and
/// Newton-step leaf values.
pub fn fit_gradient_boosting(x: &Matrix, y: &[usize], n_classes: usize, rounds: usize, max_depth: usize, learning_rate: f64) -> GradientBoostingModel {
    let n = x.rows();
    let kf = n_classes as f64;
    let mut prior = vec![0.0; n_classes];
    for &c in y {
        prior[c] += 1.0;
    }
    let init: Vec<f64> = prior.iter().map(|c| (c / n as f64).max(1e-12).ln()).collect();
    let mut raw: Vec<Vec<f64>> = vec![init.clone(); n];
    let mut model = GradientBoostingModel {
        init,
        rounds: Vec::with_capacity(rounds),
        learning_rate,
    };

    for _ in 0..rounds {
        let probs: Vec<Vec<f64>> = raw
            .iter()
            .map(|r| {
                let mut p = r.clone();
                softmax_in_place(&mut p);
                p
            })
            .collect();
        let trees: Vec<Tree> = (0..n_classes)
            .into_par_iter()
            .map(|k| {
                let residual: Vec<f64> = (0..n).map(|i| f64::from(u8::from(y[i] == k)) - probs[i][k]).collect();
                let leaf = |idx: &[usize]| {
                    let num: f64 = idx.iter().map(|&i| residual[i]).sum();
                    let den: f64 = idx.iter().map(|&i| residual[i].abs() * (1.0 - residual[i].abs())).sum();
                    if den.abs() < 1e-150 {
                        0.0
                    } else {
                        (kf - 1.0) / kf * num / den
                    }
                };
                fit_regression_tree(x, &residual, max_depth, 2, &leaf)
            })
            .collect();
        for (i, r) in raw.iter_mut().enumerate() {
            for (k, t) in trees.iter().enumerate() {
                r[k] += learning_rate * t.leaf_value(x.row(i));
            }
        }
        model.rounds.push(trees);
    }
    model
}

impl GradientBoostingModel {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut raw = self.init.clone();
        for trees in &self.rounds {
            for (k, t) in trees.iter().enumerate() {
                raw[k] += self.learning_rate * t.leaf_value(x);
            }
        }
        argmax(&raw)
    }

    pub fn truncated(&self, rounds: usize) -> Self {
        Self {
            init: self.init.clone(),
            rounds: self.rounds[..rounds.min(self.rounds.len())].to_vec(),
            learning_rate: self.learning_rate,
        }
    }
}
