//! Q-MEDLEY global feature importance.
//!
//! For every original input feature `j` of a model `M` and reference data
//! `(X, Y)` with baseline accuracy `A_base`:
//!
//! * drop-column importance `DCI_j = A_base − acc(M(X with column j set to the neutral value))`,
//! * permutation importance `PI_j = A_base − mean_k acc(M(X with column j shuffled by π_k))`,
//! * the final score averages the two (or weights them adaptively).
//!
//! Perturbations happen in the original feature space and the model's own
//! prediction path re-runs the quantum encoding on every perturbed matrix; for
//! kernel models the cross-kernel against the stored training inputs is
//! rebuilt while the cached training Gram matrix is reused.
//!
//! All randomness comes from streams keyed by `(seed, feature, repeat)`, so the
//! per-feature work can run in any order on any number of threads and still
//! produce bit-identical reports.
//!
//! The `adaptive_weighting` and `interaction_pi` switches are this crate's own
//! constructions for the two named ablation variants:
//!
//! * adaptive weighting sets `w_DCI = sd(DCI) / (sd(DCI) + sd(PI))` (population
//!   standard deviations, falling back to equal weights when both vanish);
//! * interaction-aware PI adds, for each feature, half the mean positive
//!   synergy `I_joint(j,l) − PI_j − PI_l` over its most correlated partners,
//!   where `I_joint` shuffles both columns independently.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hqml::{accuracy, Predictor};
use crate::matrix::Matrix;
use crate::rng::{stream, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainerConfig {
    pub repeats: usize,
    pub seed: u64,
    pub adaptive_weighting: bool,
    pub interaction_pi: bool,
    pub interaction_partners: usize,
    pub neutral_value: f64,
}

impl Default for ExplainerConfig {
    fn default() -> Self {
        Self {
            repeats: 5,
            seed: 0,
            adaptive_weighting: false,
            interaction_pi: false,
            interaction_partners: 2,
            neutral_value: 0.0,
        }
    }
}

impl ExplainerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    /// Short name of the variant, matching the ablation grid labels.
    pub fn variant_name(&self) -> &'static str {
        match (self.adaptive_weighting, self.interaction_pi) {
            (false, false) => "baseline",
            (true, false) => "adaptive_weighting",
            (false, true) => "interaction_pi",
            (true, true) => "adaptive_weighting+interaction_pi",
        }
    }

    fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        if self.interaction_partners == 0 {
            return Err(Error::InvalidConfig("interaction_partners must be at least 1".into()));
        }
        if !self.neutral_value.is_finite() {
            return Err(Error::InvalidConfig("neutral_value must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub dci: f64,
    pub pi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub feature_labels: Vec<String>,
    pub baseline_accuracy: f64,
    pub dci: Vec<f64>,
    pub pi: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub interaction_pi: Option<Vec<f64>>,
    pub weights: Weights,
    #[serde(rename = "final")]
    pub final_scores: Vec<f64>,
    pub config: ExplainerConfig,
    pub model_descriptor: String,
    /// Free-form run metadata attached by front ends.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub provenance: Option<serde_json::Value>,
}

impl ImportanceReport {
    /// The permutation component that entered aggregation.
    pub fn aggregated_pi(&self) -> &[f64] {
        self.interaction_pi.as_deref().unwrap_or(&self.pi)
    }

    /// Recompute the final vector from the stored components and weights.
    pub fn recompute_final(&self) -> Vec<f64> {
        combine(&self.dci, self.aggregated_pi(), self.weights)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn check_reference<P: Predictor + ?Sized>(m: &P, x_ref: &Matrix, y_ref: &[usize]) -> Result<()> {
    if x_ref.rows() == 0 {
        return Err(Error::Empty("reference data"));
    }
    if x_ref.cols() != m.n_features() {
        return Err(Error::DimensionMismatch {
            expected: m.n_features(),
            actual: x_ref.cols(),
        });
    }
    if y_ref.len() != x_ref.rows() {
        return Err(Error::DimensionMismatch {
            expected: x_ref.rows(),
            actual: y_ref.len(),
        });
    }
    Ok(())
}

fn perturbed_accuracy<P: Predictor + ?Sized>(m: &P, x: &Matrix, y: &[usize]) -> Result<f64> {
    Ok(accuracy(&m.predict(x)?, y))
}

/// Accuracy of `m` on the unperturbed reference data.
pub fn baseline_accuracy<P: Predictor + ?Sized>(m: &P, x_ref: &Matrix, y_ref: &[usize]) -> Result<f64> {
    check_reference(m, x_ref, y_ref)?;
    perturbed_accuracy(m, x_ref, y_ref)
}

/// Permutation of `0..n` used for repeat `repeat` of feature `feature`.
pub fn permutation_for(seed: u64, n: usize, feature: usize, repeat: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut stream(seed, &[tag::PERMUTE, feature as u64, repeat as u64]));
    p
}

fn permute_column(x: &mut Matrix, source: &Matrix, col: usize, perm: &[usize]) {
    for (i, &p) in perm.iter().enumerate() {
        x.set(i, col, source.get(p, col));
    }
}

/// Mean accuracy over an explicit set of permutations of column `feature`;
/// row `i` receives the value of row `perm[i]`.
pub fn mean_permuted_accuracy<P: Predictor + ?Sized>(
    m: &P,
    x_ref: &Matrix,
    y_ref: &[usize],
    feature: usize,
    perms: &[Vec<usize>],
) -> Result<f64> {
    check_reference(m, x_ref, y_ref)?;
    if feature >= x_ref.cols() {
        return Err(Error::DimensionMismatch {
            expected: x_ref.cols(),
            actual: feature,
        });
    }
    if perms.is_empty() {
        return Err(Error::Empty("permutation set"));
    }
    let accs = perms
        .par_iter()
        .map(|perm| {
            if perm.len() != x_ref.rows() {
                return Err(Error::DimensionMismatch {
                    expected: x_ref.rows(),
                    actual: perm.len(),
                });
            }
            let mut xp = x_ref.clone();
            permute_column(&mut xp, x_ref, feature, perm);
            perturbed_accuracy(m, &xp, y_ref)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(accs.iter().sum::<f64>() / accs.len() as f64)
}

fn dci_with_base<P: Predictor + ?Sized>(m: &P, x_ref: &Matrix, y_ref: &[usize], cfg: &ExplainerConfig, base: f64) -> Result<Vec<f64>> {
    (0..x_ref.cols())
        .into_par_iter()
        .map(|j| {
            let mut xd = x_ref.clone();
            xd.fill_column(j, cfg.neutral_value);
            Ok(base - perturbed_accuracy(m, &xd, y_ref)?)
        })
        .collect()
}

fn pi_with_base<P: Predictor + ?Sized>(m: &P, x_ref: &Matrix, y_ref: &[usize], cfg: &ExplainerConfig, base: f64) -> Result<Vec<f64>> {
    let (n, d, k) = (x_ref.rows(), x_ref.cols(), cfg.repeats);
    let accs = (0..d * k)
        .into_par_iter()
        .map(|job| {
            let (j, r) = (job / k, job % k);
            let perm = permutation_for(cfg.seed, n, j, r);
            let mut xp = x_ref.clone();
            permute_column(&mut xp, x_ref, j, &perm);
            perturbed_accuracy(m, &xp, y_ref)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(accs
        .chunks(k)
        .map(|c| base - c.iter().sum::<f64>() / k as f64)
        .collect())
}

/// Drop-column importances (neutralize each column in turn).
pub fn dci_scores<P: Predictor + ?Sized>(m: &P, x_ref: &Matrix, y_ref: &[usize], cfg: &ExplainerConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let base = baseline_accuracy(m, x_ref, y_ref)?;
    dci_with_base(m, x_ref, y_ref, cfg, base)
}

/// Permutation importances over `cfg.repeats` seeded shuffles per column.
pub fn pi_scores<P: Predictor + ?Sized>(m: &P, x_ref: &Matrix, y_ref: &[usize], cfg: &ExplainerConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let base = baseline_accuracy(m, x_ref, y_ref)?;
    pi_with_base(m, x_ref, y_ref, cfg, base)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// The `m` features most correlated (in absolute Pearson r) with each column,
/// ties broken by lower index.
pub fn interaction_partners(x: &Matrix, m: usize) -> Vec<Vec<usize>> {
    let d = x.cols();
    let cols: Vec<Vec<f64>> = (0..d).map(|j| x.column(j)).collect();
    (0..d)
        .map(|j| {
            let mut others: Vec<(usize, f64)> = (0..d).filter(|&l| l != j).map(|l| (l, pearson(&cols[j], &cols[l]).abs())).collect();
            others.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            others.into_iter().take(m).map(|(l, _)| l).collect()
        })
        .collect()
}

fn joint_importance<P: Predictor + ?Sized>(m: &P, x_ref: &Matrix, y_ref: &[usize], cfg: &ExplainerConfig, base: f64, a: usize, b: usize) -> Result<f64> {
    let n = x_ref.rows();
    let mut total = 0.0;
    for r in 0..cfg.repeats {
        let mut xp = x_ref.clone();
        for (slot, col) in [a, b].into_iter().enumerate() {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut stream(cfg.seed, &[tag::JOINT_PERMUTE, a as u64, b as u64, r as u64, slot as u64]));
            permute_column(&mut xp, x_ref, col, &perm);
        }
        total += perturbed_accuracy(m, &xp, y_ref)?;
    }
    Ok(base - total / cfg.repeats as f64)
}

fn interaction_with_pi<P: Predictor + ?Sized>(
    m: &P,
    x_ref: &Matrix,
    y_ref: &[usize],
    cfg: &ExplainerConfig,
    base: f64,
    pi: &[f64],
) -> Result<Vec<f64>> {
    let d = x_ref.cols();
    if d < 2 {
        return Err(Error::InvalidConfig("interaction-aware PI needs at least two features".into()));
    }
    let partners = interaction_partners(x_ref, cfg.interaction_partners.min(d - 1));
    let mut pairs: Vec<(usize, usize)> = partners
        .iter()
        .enumerate()
        .flat_map(|(j, ps)| ps.iter().map(move |&l| (j.min(l), j.max(l))))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let joint: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| joint_importance(m, x_ref, y_ref, cfg, base, a, b))
        .collect::<Result<_>>()?;
    let lookup = |a: usize, b: usize| {
        let key = (a.min(b), a.max(b));
        joint[pairs.binary_search(&key).expect("pair computed")]
    };
    Ok((0..d)
        .map(|j| {
            let ps = &partners[j];
            let synergy: f64 = ps
                .iter()
                .map(|&l| (lookup(j, l) - pi[j] - pi[l]).max(0.0) / 2.0)
                .sum::<f64>()
                / ps.len() as f64;
            pi[j] + synergy
        })
        .collect())
}

/// Permutation importance augmented with pairwise joint-shuffle synergy.
pub fn interaction_pi_scores<P: Predictor + ?Sized>(m: &P, x_ref: &Matrix, y_ref: &[usize], cfg: &ExplainerConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let base = baseline_accuracy(m, x_ref, y_ref)?;
    let pi = pi_with_base(m, x_ref, y_ref, cfg, base)?;
    interaction_with_pi(m, x_ref, y_ref, cfg, base, &pi)
}

fn population_sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

fn combine(dci: &[f64], pi: &[f64], w: Weights) -> Vec<f64> {
    dci.iter().zip(pi).map(|(d, p)| w.dci * d + w.pi * p).collect()
}

/// Combine drop-column and permutation scores into final importances.
pub fn aggregate_scores(dci: &[f64], pi: &[f64], cfg: &ExplainerConfig) -> Result<(Vec<f64>, Weights)> {
    if dci.len() != pi.len() {
        return Err(Error::DimensionMismatch {
            expected: dci.len(),
            actual: pi.len(),
        });
    }
    let even = Weights { dci: 0.5, pi: 0.5 };
    let weights = if cfg.adaptive_weighting && !dci.is_empty() {
        let (sd, sp) = (population_sd(dci), population_sd(pi));
        if sd + sp < 1e-12 {
            even
        } else {
            let w = sd / (sd + sp);
            Weights { dci: w, pi: 1.0 - w }
        }
    } else {
        even
    };
    let final_scores = if weights == even {
        dci.iter().zip(pi).map(|(d, p)| (d + p) / 2.0).collect()
    } else {
        combine(dci, pi, weights)
    };
    Ok((final_scores, weights))
}

/// Run the full explainer and assemble a report.
pub fn explain<P: Predictor + ?Sized>(m: &P, x_ref: &Matrix, y_ref: &[usize], cfg: &ExplainerConfig) -> Result<ImportanceReport> {
    cfg.validate()?;
    check_reference(m, x_ref, y_ref)?;
    let feature_labels = m.feature_labels();
    if feature_labels.len() != x_ref.cols() {
        return Err(Error::DimensionMismatch {
            expected: x_ref.cols(),
            actual: feature_labels.len(),
        });
    }
    let base = perturbed_accuracy(m, x_ref, y_ref)?;
    let dci = dci_with_base(m, x_ref, y_ref, cfg, base)?;
    let pi = pi_with_base(m, x_ref, y_ref, cfg, base)?;
    let interaction = if cfg.interaction_pi {
        Some(interaction_with_pi(m, x_ref, y_ref, cfg, base, &pi)?)
    } else {
        None
    };
    let (final_scores, weights) = aggregate_scores(&dci, interaction.as_deref().unwrap_or(&pi), cfg)?;
    Ok(ImportanceReport {
        feature_labels,
        baseline_accuracy: base,
        dci,
        pi,
        interaction_pi: interaction,
        weights,
        final_scores,
        config: cfg.clone(),
        model_descriptor: m.descriptor(),
        provenance: None,
    })
}
