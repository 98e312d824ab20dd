//! Learners whose decision function is linear in the input:
//! `score_k(x) = coef[k]·x + intercept[k]`, predicted class = argmax.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Penalty;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{stream, tag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// `n_classes × n_features`
    pub coef: Matrix,
    pub intercept: Vec<f64>,
}

impl LinearModel {
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        (0..self.coef.rows())
            .map(|k| self.coef.row(k).iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.intercept[k])
            .collect()
    }
}

fn column_means(x: &Matrix) -> Vec<f64> {
    let mut m = vec![0.0; x.cols()];
    for r in x.row_iter() {
        for (a, v) in m.iter_mut().zip(r) {
            *a += v;
        }
    }
    m.iter_mut().for_each(|a| *a /= x.rows() as f64);
    m
}

fn centered(x: &Matrix, means: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.rows(), x.cols(), |r, c| x.get(r, c) - means[c])
}

/// Solve `(A + λI) Z = B` for symmetric positive semidefinite `A`.
fn regularized_solve(mut a: DMatrix<f64>, lambda: f64, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    for i in 0..a.nrows() {
        a[(i, i)] += lambda;
    }
    Cholesky::<f64, Dyn>::new(a)
        .map(|c| c.solve(b))
        .ok_or_else(|| Error::Numerical("regularized system is not positive definite".into()))
}

/// Multinomial logistic regression by full-batch gradient descent on the mean
/// cross-entropy. L1 uses a proximal soft-threshold step; the intercept is
/// never penalized.
pub fn fit_logistic(x: &Matrix, y: &[usize], n_classes: usize, learning_rate: f64, iterations: usize, penalty: Penalty) -> LinearModel {
    let (n, p) = (x.rows(), x.cols());
    let mut w = vec![0.0; n_classes * p];
    let mut b = vec![0.0; n_classes];
    let mut grad_w = vec![0.0; n_classes * p];
    let mut grad_b = vec![0.0; n_classes];
    let mut probs = vec![0.0; n_classes];
    let inv_n = 1.0 / n as f64;

    for _ in 0..iterations {
        grad_w.iter_mut().for_each(|g| *g = 0.0);
        grad_b.iter_mut().for_each(|g| *g = 0.0);
        for (i, row) in x.row_iter().enumerate() {
            for k in 0..n_classes {
                probs[k] = w[k * p..(k + 1) * p].iter().zip(row).map(|(a, v)| a * v).sum::<f64>() + b[k];
            }
            let m = probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut s = 0.0;
            for v in probs.iter_mut() {
                *v = (*v - m).exp();
                s += *v;
            }
            for k in 0..n_classes {
                let err = probs[k] / s - f64::from(u8::from(y[i] == k));
                grad_b[k] += err;
                for (g, v) in grad_w[k * p..(k + 1) * p].iter_mut().zip(row) {
                    *g += err * v;
                }
            }
        }
        for k in 0..n_classes {
            b[k] -= learning_rate * grad_b[k] * inv_n;
        }
        match penalty {
            Penalty::L2(lambda) => {
                for (wi, g) in w.iter_mut().zip(&grad_w) {
                    *wi -= learning_rate * (g * inv_n + lambda * *wi);
                }
            }
            Penalty::L1(lambda) => {
                let shrink = learning_rate * lambda;
                for (wi, g) in w.iter_mut().zip(&grad_w) {
                    let z = *wi - learning_rate * g * inv_n;
                    *wi = z.signum() * (z.abs() - shrink).max(0.0);
                }
            }
        }
    }
    LinearModel {
        coef: Matrix::from_vec(n_classes, p, w).expect("shape"),
        intercept: b,
    }
}

/// One-hot least squares with an unpenalized intercept. Uses the dual
/// (`n × n`) system when there are more features than rows.
pub fn fit_ridge(x: &Matrix, y: &[usize], n_classes: usize, lambda: f64) -> Result<LinearModel> {
    let (n, p) = (x.rows(), x.cols());
    let x_mean = column_means(x);
    let xc = centered(x, &x_mean);
    let y_mean: Vec<f64> = (0..n_classes)
        .map(|k| y.iter().filter(|&&c| c == k).count() as f64 / n as f64)
        .collect();
    let yc = DMatrix::from_fn(n, n_classes, |i, k| f64::from(u8::from(y[i] == k)) - y_mean[k]);

    // p × K
    let w = if p <= n {
        let gram = xc.transpose() * &xc;
        regularized_solve(gram, lambda, &(xc.transpose() * &yc))?
    } else {
        let gram = &xc * xc.transpose();
        xc.transpose() * regularized_solve(gram, lambda, &yc)?
    };

    let coef = Matrix::from_vec(n_classes, p, (0..n_classes).flat_map(|k| (0..p).map(move |j| (k, j))).map(|(k, j)| w[(j, k)]).collect())?;
    let intercept = (0..n_classes)
        .map(|k| y_mean[k] - (0..p).map(|j| x_mean[j] * w[(j, k)]).sum::<f64>())
        .collect();
    Ok(LinearModel { coef, intercept })
}

/// Linear discriminant analysis with pooled covariance `S + εI`.
///
/// `score_k(x) = xᵀS⁻¹μ_k − ½μ_kᵀS⁻¹μ_k + ln π_k`. When features outnumber
/// rows, `S⁻¹` is applied through the Woodbury identity so that only an
/// `n × n` system is factored.
pub fn fit_lda(x: &Matrix, y: &[usize], n_classes: usize, epsilon: f64) -> Result<LinearModel> {
    let (n, p) = (x.rows(), x.cols());
    let mut counts = vec![0usize; n_classes];
    let mut means = vec![vec![0.0; p]; n_classes];
    for (row, &c) in x.row_iter().zip(y) {
        counts[c] += 1;
        for (m, v) in means[c].iter_mut().zip(row) {
            *m += v;
        }
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= c.max(1) as f64);
    }
    let dof = if n > n_classes { (n - n_classes) as f64 } else { n as f64 };
    // Within-class residuals scaled so that S = ZᵀZ.
    let scale = 1.0 / dof.sqrt();
    let z = DMatrix::from_fn(n, p, |i, j| (x.get(i, j) - means[y[i]][j]) * scale);
    let mu = DMatrix::from_fn(p, n_classes, |j, k| means[k][j]);

    // p × K matrix S⁻¹ μ
    let s_inv_mu = if p <= n {
        regularized_solve(z.transpose() * &z, epsilon, &mu)?
    } else {
        // (ZᵀZ + εI)⁻¹ = (1/ε)(I − Zᵀ(εI + ZZᵀ)⁻¹Z)
        let inner = regularized_solve(&z * z.transpose(), epsilon, &(&z * &mu))?;
        (&mu - z.transpose() * inner) / epsilon
    };

    let mut coef = Matrix::zeros(n_classes, p);
    let mut intercept = vec![0.0; n_classes];
    for k in 0..n_classes {
        let col = s_inv_mu.column(k);
        for j in 0..p {
            coef.set(k, j, col[j]);
        }
        let quad: f64 = DVector::from_column_slice(&means[k]).dot(&col);
        let prior = counts[k] as f64 / n as f64;
        intercept[k] = -0.5 * quad + prior.max(1e-300).ln();
    }
    Ok(LinearModel { coef, intercept })
}

/// One-vs-all perceptron. Samples are visited in a freshly shuffled order
/// each epoch; an update happens when `y·(w·x + b) <= 0`.
pub fn fit_perceptron(x: &Matrix, y: &[usize], n_classes: usize, epochs: usize, learning_rate: f64, seed: u64) -> LinearModel {
    let (n, p) = (x.rows(), x.cols());
    let mut coef = Matrix::zeros(n_classes, p);
    let mut intercept = vec![0.0; n_classes];
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..epochs {
        order.shuffle(&mut stream(seed, &[tag::PERCEPTRON, epoch as u64]));
        let mut updates = 0usize;
        for &i in &order {
            let row = x.row(i);
            for k in 0..n_classes {
                let target = if y[i] == k { 1.0 } else { -1.0 };
                let w = coef.row_mut(k);
                let score: f64 = w.iter().zip(row).map(|(a, v)| a * v).sum::<f64>() + intercept[k];
                if target * score <= 0.0 {
                    for (a, v) in w.iter_mut().zip(row) {
                        *a += learning_rate * target * v;
                    }
                    intercept[k] += learning_rate * target;
                    updates += 1;
                }
            }
        }
        if updates == 0 {
            break;
        }
    }
    LinearModel { coef, intercept }
}
