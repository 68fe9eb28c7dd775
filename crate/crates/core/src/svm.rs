//! Binary SVM on a precomputed kernel.
//!
//! Solves the dual `max sum a_i - 1/2 sum a_i a_j l_i l_j K_ij` subject to
//! `0 <= a_i <= C`, `sum a_i l_i = 0` with SMO (maximal violating pair). The
//! bias averages `l_s - sum_m a_m l_m K_ms` over the support set.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;

pub const DEFAULT_C: f64 = 1.0;

/// Stop once the maximal KKT violation `m(a) - M(a)` falls to this value.
pub const SMO_TOLERANCE: f64 = 1e-6;

pub const MAX_ITERATIONS: usize = 100_000;

/// Curvature floor for non-positive-definite pairs.
const TAU: f64 = 1e-12;

/// Relative threshold above which a coefficient marks a support vector.
pub const SUPPORT_REL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub labels: Vec<i8>,
    pub support_indices: Vec<usize>,
    pub bias: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

/// Trains on a square kernel matrix.
pub fn train(gram: &KernelMatrix, labels: &[i8], c: f64) -> Result<SvmModel> {
    if !gram.is_square() {
        return Err(Error::Shape(format!("Gram matrix is {}x{}", gram.rows(), gram.cols())));
    }
    train_dense(gram.entries(), labels, c)
}

/// Trains on a row-major `L x L` matrix. Asymmetric input (shot estimates)
/// is symmetrized by averaging.
pub fn train_dense(gram: &[f64], labels: &[i8], c: f64) -> Result<SvmModel> {
    let l = labels.len();
    if gram.len() != l * l {
        return Err(Error::Shape(format!("{} Gram entries for {l} labels", gram.len())));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Config(format!("C must be positive, got {c}")));
    }
    if let Some(bad) = labels.iter().find(|&&y| y != 1 && y != -1) {
        return Err(Error::Training(format!("label {bad} is not +1 or -1")));
    }
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(Error::Training("labels contain a single class".into()));
    }
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite kernel entry".into()));
    }
    let mut k = vec![0.0; l * l];
    for i in 0..l {
        for j in 0..l {
            k[i * l + j] = 0.5 * (gram[i * l + j] + gram[j * l + i]);
        }
    }
    let y: Vec<f64> = labels.iter().map(|&v| f64::from(v)).collect();
    let alphas = smo(&k, &y, c)?;
    let tol = SUPPORT_REL_TOL * c;
    let support_indices: Vec<usize> = (0..l).filter(|&i| alphas[i] > tol).collect();
    let bias = if support_indices.is_empty() {
        0.0
    } else {
        support_indices
            .iter()
            .map(|&s| {
                y[s] - support_indices
                    .iter()
                    .map(|&m| alphas[m] * y[m] * k[m * l + s])
                    .sum::<f64>()
            })
            .sum::<f64>()
            / support_indices.len() as f64
    };
    Ok(SvmModel {
        alphas,
        labels: labels.to_vec(),
        support_indices,
        bias,
        c,
    })
}

fn smo(k: &[f64], y: &[f64], c: f64) -> Result<Vec<f64>> {
    let l = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * k[i * l + j];
    let mut alpha = vec![0.0; l];
    // gradient of 1/2 a'Qa - e'a
    let mut grad = vec![-1.0; l];
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    loop {
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..l {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] > g_max {
                g_max = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..l {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                g_max2 = g_max2.max(y[t] * grad[t]);
                let b = g_max + y[t] * grad[t];
                if b > 0.0 {
                    let mut a = k[i * l + i] + k[t * l + t] - 2.0 * k[i * l + t];
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let obj = -(b * b) / a;
                    if obj < best {
                        best = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let violation = g_max + g_max2;
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            break;
        };
        if violation <= SMO_TOLERANCE {
            break;
        }
        if iterations == MAX_ITERATIONS {
            return Err(Error::NonConvergence { iterations, violation });
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }
    Ok(alpha)
}

impl SvmModel {
    pub fn n_train(&self) -> usize {
        self.alphas.len()
    }

    /// `sum_s a_s l_s K(x', x_s) + b` from a row of kernel values against
    /// every training sample.
    pub fn decision_value(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_train() {
            return Err(Error::Shape(format!(
                "kernel row has {} entries, model has {} training samples",
                row.len(),
                self.n_train()
            )));
        }
        Ok(self
            .support_indices
            .iter()
            .map(|&s| self.alphas[s] * f64::from(self.labels[s]) * row[s])
            .sum::<f64>()
            + self.bias)
    }

    /// Sign of the decision value, with 0 mapped to `+1`.
    pub fn predict(&self, row: &[f64]) -> Result<i8> {
        Ok(if self.decision_value(row)? >= 0.0 { 1 } else { -1 })
    }

    /// Predictions for every row of a cross-kernel (test x train).
    pub fn predict_all(&self, cross: &KernelMatrix) -> Result<Vec<i8>> {
        (0..cross.rows()).map(|i| self.predict(cross.row(i))).collect()
    }

    /// Fraction of rows of `cross` predicted as `truth`.
    pub fn accuracy(&self, cross: &KernelMatrix, truth: &[i8]) -> Result<f64> {
        if cross.rows() != truth.len() {
            return Err(Error::Shape(format!("{} kernel rows for {} labels", cross.rows(), truth.len())));
        }
        if truth.is_empty() {
            return Err(Error::Shape("accuracy of an empty set".into()));
        }
        let predicted = self.predict_all(cross)?;
        let correct = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
        Ok(correct as f64 / truth.len() as f64)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Dual objective `sum a_i - 1/2 sum a_i a_j l_i l_j K_ij` (to be maximized).
pub fn dual_objective(gram: &[f64], labels: &[i8], alphas: &[f64]) -> f64 {
    let l = labels.len();
    let mut quad = 0.0;
    for i in 0..l {
        for j in 0..l {
            quad += alphas[i] * alphas[j] * f64::from(labels[i]) * f64::from(labels[j]) * gram[i * l + j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

/// Largest KKT violation `max(0, m(a) - M(a))` of the dual, where `m` and `M`
/// bound the feasible bias from the free-direction gradients.
pub fn kkt_violation(gram: &[f64], labels: &[i8], alphas: &[f64], c: f64) -> f64 {
    let l = labels.len();
    let tol = SUPPORT_REL_TOL * c;
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for t in 0..l {
        let yt = f64::from(labels[t]);
        let grad: f64 = (0..l)
            .map(|j| yt * f64::from(labels[j]) * gram[t * l + j] * alphas[j])
            .sum::<f64>()
            - 1.0;
        let v = -yt * grad;
        let a = alphas[t];
        let can_up = (yt > 0.0 && a < c - tol) || (yt < 0.0 && a > tol);
        let can_low = (yt > 0.0 && a > tol) || (yt < 0.0 && a < c - tol);
        if can_up {
            up = up.max(v);
        }
        if can_low {
            low = low.min(v);
        }
    }
    (up - low).max(0.0)
}
