use serde::{Deserialize, Serialize};

use super::argmax;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbModel {
    /// `n_classes × n_features`
    pub means: Matrix,
    pub variances: Matrix,
    pub log_priors: Vec<f64>,
}

pub fn fit_gaussian_nb(x: &Matrix, y: &[usize], n_classes: usize, var_floor: f64) -> GaussianNbModel {
    let p = x.cols();
    let mut counts = vec![0.0; n_classes];
    let mut means = Matrix::zeros(n_classes, p);
    for (row, &c) in x.row_iter().zip(y) {
        counts[c] += 1.0;
        for (m, v) in means.row_mut(c).iter_mut().zip(row) {
            *m += v;
        }
    }
    for (k, &cnt) in counts.iter().enumerate() {
        means.row_mut(k).iter_mut().for_each(|m| *m /= f64::max(cnt, 1.0));
    }
    let mut variances = Matrix::zeros(n_classes, p);
    for (row, &c) in x.row_iter().zip(y) {
        let mu = means.row(c).to_vec();
        for ((s, v), m) in variances.row_mut(c).iter_mut().zip(row).zip(&mu) {
            *s += (v - m) * (v - m);
        }
    }
    for (k, &cnt) in counts.iter().enumerate() {
        variances
            .row_mut(k)
            .iter_mut()
            .for_each(|s| *s = (*s / f64::max(cnt, 1.0)).max(var_floor));
    }
    let n: f64 = counts.iter().sum();
    let log_priors = counts.iter().map(|c| (c / n).max(1e-300).ln()).collect();
    GaussianNbModel {
        means,
        variances,
        log_priors,
    }
}

impl GaussianNbModel {
    pub fn log_joint(&self, x: &[f64]) -> Vec<f64> {
        (0..self.log_priors.len())
            .map(|k| {
                let ll: f64 = self
                    .means
                    .row(k)
                    .iter()
                    .zip(self.variances.row(k))
                    .zip(x)
                    .map(|((m, v), xi)| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (xi - m) * (xi - m) / v))
                    .sum();
                self.log_priors[k] + ll
            })
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.log_joint(x))
    }
}
