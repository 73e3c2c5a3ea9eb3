//! Support vector classification trained with a simplified SMO solver.
//!
//! Training sets here are at most a few hundred rows, so the full kernel
//! matrix is cached and the working pair is chosen deterministically by the
//! largest error gap. Per-class box constraints implement class weighting.

use serde::{Deserialize, Serialize};

use crate::data::LabeledSet;
use crate::spec::ModelSpec;
use crate::MlError;

const TOL: f64 = 1e-3;
const MAX_PASSES: usize = 10;
const MAX_SWEEPS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvcModel {
    pub kernel: Kernel,
    /// Support vectors with their `α_i y_i` coefficients.
    pub support: Vec<(Vec<f64>, f64)>,
    pub bias: f64,
}

impl SvcModel {
    pub fn predict(&self, features: &[f64]) -> u8 {
        u8::from(self.decision(features) > 0.0)
    }

    pub fn decision(&self, features: &[f64]) -> f64 {
        self.bias
            + self
                .support
                .iter()
                .map(|(sv, coef)| coef * self.kernel.eval(sv, features))
                .sum::<f64>()
    }
}

pub fn train(
    spec: &ModelSpec,
    data: &LabeledSet,
    weights: &[f64],
    kernel: Kernel,
) -> Result<SvcModel, MlError> {
    let c = spec.f64_or("C", 1.0)?;
    if c <= 0.0 {
        return Err(MlError::BadSpec(format!("C must be positive, got {c}")));
    }
    let n = data.len();
    let y: Vec<f64> = data
        .labels
        .iter()
        .map(|&l| if l == 1 { 1.0 } else { -1.0 })
        .collect();
    let box_c: Vec<f64> = weights.iter().map(|w| c * w).collect();

    // Full kernel matrix.
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| kernel.eval(&data.rows[i], &data.rows[j]))
                .collect()
        })
        .collect();

    let mut alpha = vec![0.0f64; n];
    let mut bias = 0.0f64;
    let decision = |alpha: &[f64], bias: f64, gram_row: &[f64]| -> f64 {
        bias + alpha
            .iter()
            .zip(&y)
            .zip(gram_row)
            .map(|((a, yy), k)| a * yy * k)
            .sum::<f64>()
    };

    let mut passes = 0;
    let mut sweeps = 0;
    while passes < MAX_PASSES && sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut changed = 0;
        for i in 0..n {
            let err_i = decision(&alpha, bias, &gram[i]) - y[i];
            let violates = (y[i] * err_i < -TOL && alpha[i] < box_c[i])
                || (y[i] * err_i > TOL && alpha[i] > 0.0);
            if !violates {
                continue;
            }
            // Second choice: the largest error gap, ties to the lowest id.
            let mut j_best = usize::MAX;
            let mut gap_best = -1.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let gap = (err_i - (decision(&alpha, bias, &gram[j]) - y[j])).abs();
                if gap > gap_best {
                    gap_best = gap;
                    j_best = j;
                }
            }
            let j = j_best;
            let err_j = decision(&alpha, bias, &gram[j]) - y[j];

            let (alpha_i_old, alpha_j_old) = (alpha[i], alpha[j]);
            let (low, high) = if (y[i] - y[j]).abs() > f64::EPSILON {
                (
                    (alpha[j] - alpha[i]).max(0.0),
                    box_c[j].min(box_c[i] + alpha[j] - alpha[i]),
                )
            } else {
                (
                    (alpha[i] + alpha[j] - box_c[i]).max(0.0),
                    box_c[j].min(alpha[i] + alpha[j]),
                )
            };
            if low >= high {
                continue;
            }
            let eta = 2.0 * gram[i][j] - gram[i][i] - gram[j][j];
            if eta >= 0.0 {
                continue;
            }
            let mut alpha_j = alpha_j_old - y[j] * (err_i - err_j) / eta;
            alpha_j = alpha_j.clamp(low, high);
            if (alpha_j - alpha_j_old).abs() < 1e-5 {
                continue;
            }
            let alpha_i = alpha_i_old + y[i] * y[j] * (alpha_j_old - alpha_j);
            alpha[i] = alpha_i;
            alpha[j] = alpha_j;

            let b1 = bias
                - err_i
                - y[i] * (alpha_i - alpha_i_old) * gram[i][i]
                - y[j] * (alpha_j - alpha_j_old) * gram[i][j];
            let b2 = bias
                - err_j
                - y[i] * (alpha_i - alpha_i_old) * gram[i][j]
                - y[j] * (alpha_j - alpha_j_old) * gram[j][j];
            bias = if alpha_i > 0.0 && alpha_i < box_c[i] {
                b1
            } else if alpha_j > 0.0 && alpha_j < box_c[j] {
                b2
            } else {
                (b1 + b2) / 2.0
            };
            changed += 1;
        }
        passes = if changed == 0 { passes + 1 } else { 0 };
    }

    let support: Vec<(Vec<f64>, f64)> = (0..n)
        .filter(|&i| alpha[i] > 1e-10)
        .map(|i| (data.rows[i].clone(), alpha[i] * y[i]))
        .collect();
    Ok(SvcModel {
        kernel,
        support,
        bias,
    })
}

/// Kernel from the spec: linear, or RBF with the `gamma` parameter.
pub fn kernel_from_spec(spec: &ModelSpec, rbf: bool) -> Result<Kernel, MlError> {
    if rbf {
        let gamma = spec.f64_or("gamma", 1.0)?;
        if gamma <= 0.0 {
            return Err(MlError::BadSpec(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        Ok(Kernel::Rbf { gamma })
    } else {
        Ok(Kernel::Linear)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{Algorithm, ParamValue};

    fn blobs() -> LabeledSet {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..15 {
            let a = ((i * 29) % 10) as f64 / 100.0;
            let b = ((i * 31) % 10) as f64 / 100.0;
            rows.push(vec![0.1 + a, 0.15 + b]);
            labels.push(0);
            rows.push(vec![0.8 + b, 0.85 + a]);
            labels.push(1);
        }
        LabeledSet::new(
            (0..rows.len()).map(|i| format!("c{i}")).collect(),
            rows,
            labels,
        )
        .unwrap()
    }

    #[test]
    fn linear_kernel_separates_blobs() {
        let data = blobs();
        let weights = vec![1.0; data.len()];
        let spec = ModelSpec::new(Algorithm::LinSvc).with("C", ParamValue::Float(10.0));
        let model = train(&spec, &data, &weights, Kernel::Linear).unwrap();
        for (row, &label) in data.rows.iter().zip(&data.labels) {
            assert_eq!(model.predict(row), label);
        }
    }

    #[test]
    fn rbf_kernel_separates_ring() {
        // Inner cluster vs surrounding ring: not linearly separable.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..16 {
            let angle = i as f64 * std::f64::consts::TAU / 16.0;
            rows.push(vec![0.5 + 0.08 * angle.cos(), 0.5 + 0.08 * angle.sin()]);
            labels.push(1);
            rows.push(vec![0.5 + 0.45 * angle.cos(), 0.5 + 0.45 * angle.sin()]);
            labels.push(0);
        }
        let data = LabeledSet::new(
            (0..rows.len()).map(|i| format!("c{i}")).collect(),
            rows,
            labels,
        )
        .unwrap();
        let weights = vec![1.0; data.len()];
        let spec = ModelSpec::new(Algorithm::RbfSvc).with("C", ParamValue::Float(100.0));
        let model = train(&spec, &data, &weights, Kernel::Rbf { gamma: 10.0 }).unwrap();
        for (row, &label) in data.rows.iter().zip(&data.labels) {
            assert_eq!(model.predict(row), label);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let data = blobs();
        let weights = vec![1.0; data.len()];
        let spec = ModelSpec::new(Algorithm::RbfSvc).with("C", ParamValue::Float(1.0));
        let a = train(&spec, &data, &weights, Kernel::Rbf { gamma: 0.5 }).unwrap();
        let b = train(&spec, &data, &weights, Kernel::Rbf { gamma: 0.5 }).unwrap();
        assert_eq!(a.bias, b.bias);
        assert_eq!(a.support.len(), b.support.len());
    }
}
