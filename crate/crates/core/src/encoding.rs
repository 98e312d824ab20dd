//! RX product-state feature map.
//!
//! Feature `j` is loaded onto qubit `j` as `RX(x_j)|0⟩ = cos(x_j/2)|0⟩ − i·sin(x_j/2)|1⟩`.
//! No entangling gates are applied, so the `N`-qubit state is the tensor
//! product of the single-qubit states. Two consequences are used everywhere:
//!
//! * basis-state probabilities are products of the per-qubit pairs
//!   `[cos²(x_j/2), sin²(x_j/2)]`, and
//! * the fidelity between two encoded states factorizes as
//!   `Π_j cos²((x_j − x'_j)/2)`, which costs `O(D)` rather than `O(2^D)`.
//!
//! Global phases (including the `−i` on `|1⟩`) never reach an observable here
//! and are not stored.
//!
//! Bit ordering: qubit 0 is the most significant bit of the basis index, so
//! for two qubits the amplitude vector is ordered `|00⟩, |01⟩, |10⟩, |11⟩`
//! with the first digit belonging to feature 0.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_MAX_AMPLITUDE_QUBITS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Rotation {
    #[serde(rename = "RX")]
    Rx,
}

/// The quantum encoding attached to a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMapSpec {
    pub n_qubits: usize,
    pub rotation: Rotation,
    /// Expected range of the input angles. Inputs outside it are still
    /// encoded; the range documents how data should be scaled.
    pub angle_domain: (f64, f64),
    pub max_amplitude_qubits: usize,
}

impl FeatureMapSpec {
    pub fn rx(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidConfig("feature map needs at least one qubit".into()));
        }
        Ok(Self {
            n_qubits,
            rotation: Rotation::Rx,
            angle_domain: (0.0, std::f64::consts::PI),
            max_amplitude_qubits: DEFAULT_MAX_AMPLITUDE_QUBITS,
        })
    }

    pub fn with_max_amplitude_qubits(mut self, cap: usize) -> Self {
        self.max_amplitude_qubits = cap;
        self
    }

    /// Hilbert-space dimension `2^N`.
    pub fn dimension(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn check_amplitude_feasible(&self) -> Result<()> {
        if self.n_qubits > self.max_amplitude_qubits {
            return Err(Error::QubitCapExceeded {
                n_qubits: self.n_qubits,
                cap: self.max_amplitude_qubits,
            });
        }
        Ok(())
    }
}

/// Measurement probabilities of one qubit after `RX(angle)|0⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitProbPair {
    pub p0: f64,
    pub p1: f64,
}

impl QubitProbPair {
    pub fn rx(angle: f64) -> Self {
        let half = 0.5 * angle;
        let (s, c) = half.sin_cos();
        Self { p0: c * c, p1: s * s }
    }
}

fn check_row(x: &[f64], expected: usize) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: x.len(),
        });
    }
    if let Some(col) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: 0, col });
    }
    Ok(())
}

/// Computational-basis probabilities of the encoded state, written into `out`
/// (length `2^D`).
fn write_amplitudes(x: &[f64], out: &mut [f64]) {
    out[0] = 1.0;
    let mut len = 1;
    for &angle in x {
        let q = QubitProbPair::rx(angle);
        // Expand in place from the back so each old entry is read before it is overwritten.
        for i in (0..len).rev() {
            let v = out[i];
            out[2 * i] = v * q.p0;
            out[2 * i + 1] = v * q.p1;
        }
        len *= 2;
    }
}

/// Probability vector `f_Q(|ψ(x)⟩)` of length `2^D`.
pub fn amplitude_features(x: &[f64], spec: &FeatureMapSpec) -> Result<Vec<f64>> {
    check_row(x, spec.n_qubits)?;
    spec.check_amplitude_feasible()?;
    let mut out = vec![0.0; spec.dimension()];
    write_amplitudes(x, &mut out);
    Ok(out)
}

/// Row-wise [`amplitude_features`], encoded in parallel blocks of `block_rows`.
pub fn amplitude_matrix(x: &Matrix, spec: &FeatureMapSpec, block_rows: usize) -> Result<Matrix> {
    if x.cols() != spec.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: spec.n_qubits,
            actual: x.cols(),
        });
    }
    spec.check_amplitude_feasible()?;
    x.check_finite()?;
    let dim = spec.dimension();
    let mut data = vec![0.0; x.rows() * dim];
    let block = block_rows.max(1) * dim;
    data.par_chunks_mut(block).enumerate().for_each(|(b, chunk)| {
        for (k, out) in chunk.chunks_mut(dim).enumerate() {
            write_amplitudes(x.row(b * block_rows.max(1) + k), out);
        }
    });
    Matrix::from_vec(x.rows(), dim, data)
}

#[inline]
fn kernel_unchecked(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let c = (0.5 * (a - b).abs()).cos();
            c * c
        })
        .product()
}

/// Fidelity `|⟨ψ(x)|ψ(x')⟩|²` between two encoded states.
pub fn fidelity_kernel(x: &[f64], x_prime: &[f64]) -> Result<f64> {
    check_row(x, x.len())?;
    check_row(x_prime, x.len())?;
    Ok(kernel_unchecked(x, x_prime))
}

/// Gram matrix with entry `(i, l) = κ(A[i], B[l])`.
pub fn kernel_matrix(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            actual: b.cols(),
        });
    }
    a.check_finite()?;
    b.check_finite()?;
    let n_b = b.rows();
    let mut data = vec![0.0; a.rows() * n_b];
    if n_b > 0 {
        data.par_chunks_mut(n_b).enumerate().for_each(|(i, out)| {
            let xi = a.row(i);
            for (l, v) in out.iter_mut().enumerate() {
                *v = kernel_unchecked(xi, b.row(l));
            }
        });
    }
    Matrix::from_vec(a.rows(), n_b, data)
}

/// `√(1 − κ)` with the radicand clamped at zero.
pub fn distance_from_kernel(k: f64) -> f64 {
    (1.0 - k).max(0.0).sqrt()
}

/// Kernel-induced distance `√(1 − κ(x, x'))`.
pub fn kernel_distance(x: &[f64], x_prime: &[f64]) -> Result<f64> {
    fidelity_kernel(x, x_prime).map(distance_from_kernel)
}

pub fn distance_matrix_from_kernel(k: &Matrix) -> Matrix {
    k.map(distance_from_kernel)
}
