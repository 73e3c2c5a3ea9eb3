//! Logistic regression via (proximal) gradient descent.

use serde::{Deserialize, Serialize};

use crate::data::LabeledSet;
use crate::spec::ModelSpec;
use crate::MlError;

const ITERATIONS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Penalty {
    L1,
    L2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl LogRegModel {
    pub fn predict(&self, features: &[f64]) -> u8 {
        u8::from(self.decision(features) > 0.0)
    }

    fn decision(&self, features: &[f64]) -> f64 {
        self.intercept
            + self
                .weights
                .iter()
                .zip(features)
                .map(|(w, x)| w * x)
                .sum::<f64>()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Minimizes `C · Σ w_i log(1 + exp(−ỹ_i f(x_i))) + pen(β)` with an
/// unpenalized intercept; the L1 penalty uses a proximal (soft-threshold)
/// step.
pub fn train(spec: &ModelSpec, data: &LabeledSet, weights: &[f64]) -> Result<LogRegModel, MlError> {
    let c = spec.f64_or("C", 1.0)?;
    if c <= 0.0 {
        return Err(MlError::BadSpec(format!("C must be positive, got {c}")));
    }
    let penalty = match spec.params.get("penalty").and_then(|v| v.as_str()) {
        None => Penalty::L2,
        Some("l1") => Penalty::L1,
        Some("l2") => Penalty::L2,
        Some(other) => {
            return Err(MlError::BadSpec(format!("unknown penalty {other:?}")))
        }
    };
    let d = data.width();
    let n = data.len();

    // Lipschitz bound of the smooth part: C/4 · Σ w ‖(x, 1)‖² plus the L2
    // curvature.
    let lipschitz: f64 = 0.25
        * c
        * data
            .rows
            .iter()
            .zip(weights)
            .map(|(row, w)| w * (1.0 + row.iter().map(|x| x * x).sum::<f64>()))
            .sum::<f64>()
        + if penalty == Penalty::L2 { 1.0 } else { 0.0 };
    let step = 1.0 / lipschitz.max(1e-12);

    let mut beta = vec![0.0; d];
    let mut intercept = 0.0;
    for _ in 0..ITERATIONS {
        let mut grad = vec![0.0; d];
        let mut grad_b = 0.0;
        for i in 0..n {
            let row = &data.rows[i];
            let label = if data.labels[i] == 1 { 1.0 } else { -1.0 };
            let margin = intercept
                + beta.iter().zip(row).map(|(w, x)| w * x).sum::<f64>();
            let factor = -label * sigmoid(-label * margin) * weights[i] * c;
            for (g, x) in grad.iter_mut().zip(row) {
                *g += factor * x;
            }
            grad_b += factor;
        }
        if penalty == Penalty::L2 {
            for (g, b) in grad.iter_mut().zip(&beta) {
                *g += b;
            }
        }
        for (b, g) in beta.iter_mut().zip(&grad) {
            *b -= step * g;
        }
        intercept -= step * grad_b;
        if penalty == Penalty::L1 {
            let threshold = step;
            for b in &mut beta {
                *b = b.signum() * (b.abs() - threshold).max(0.0);
            }
        }
    }
    Ok(LogRegModel {
        weights: beta,
        intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{Algorithm, ParamValue};

    fn blobs() -> LabeledSet {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..20 {
            let jitter = (i % 5) as f64 * 0.02;
            rows.push(vec![0.1 + jitter, 0.1 - jitter]);
            labels.push(0);
            rows.push(vec![0.9 - jitter, 0.9 + jitter]);
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
    fn separates_blobs_with_both_penalties() {
        let data = blobs();
        let weights = vec![1.0; data.len()];
        for penalty in ["l1", "l2"] {
            let spec = ModelSpec::new(Algorithm::Lr)
                .with("C", ParamValue::Float(10.0))
                .with("penalty", ParamValue::Text(penalty.into()));
            let model = train(&spec, &data, &weights).unwrap();
            for (row, &label) in data.rows.iter().zip(&data.labels) {
                assert_eq!(model.predict(row), label, "penalty {penalty}");
            }
        }
    }

    #[test]
    fn l1_with_tiny_c_zeroes_weights() {
        let data = blobs();
        let weights = vec![1.0; data.len()];
        let spec = ModelSpec::new(Algorithm::Lr)
            .with("C", ParamValue::Float(1e-4))
            .with("penalty", ParamValue::Text("l1".into()));
        let model = train(&spec, &data, &weights).unwrap();
        assert!(model.weights.iter().all(|w| w.abs() < 1e-6));
    }

    #[test]
    fn rejects_bad_params() {
        let data = blobs();
        let weights = vec![1.0; data.len()];
        let spec = ModelSpec::new(Algorithm::Lr).with("C", ParamValue::Float(-1.0));
        assert!(train(&spec, &data, &weights).is_err());
        let spec =
            ModelSpec::new(Algorithm::Lr).with("penalty", ParamValue::Text("l3".into()));
        assert!(train(&spec, &data, &weights).is_err());
    }
}
