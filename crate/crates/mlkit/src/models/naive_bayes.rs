//! Multinomial Naive Bayes with additive smoothing. Requires non-negative
//! features; fractional counts are accepted.

use serde::{Deserialize, Serialize};

use crate::data::LabeledSet;
use crate::spec::ModelSpec;
use crate::MlError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MnbModel {
    /// log θ per class and feature.
    pub log_theta: [Vec<f64>; 2],
    pub log_priors: [f64; 2],
}

impl MnbModel {
    pub fn predict(&self, features: &[f64]) -> u8 {
        let score = |class: usize| -> f64 {
            self.log_priors[class]
                + features
                    .iter()
                    .zip(&self.log_theta[class])
                    .map(|(x, lt)| x * lt)
                    .sum::<f64>()
        };
        u8::from(score(1) > score(0))
    }
}

pub fn train(spec: &ModelSpec, data: &LabeledSet) -> Result<MnbModel, MlError> {
    let alpha = spec.f64_or("alpha", 1.0)?;
    if alpha <= 0.0 {
        return Err(MlError::BadSpec(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    for (i, row) in data.rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v < 0.0 {
                return Err(MlError::NegativeFeature { row: i, col: j });
            }
        }
    }
    let d = data.width();
    let n = data.len() as f64;
    let mut log_theta = [vec![0.0; d], vec![0.0; d]];
    let mut log_priors = [0.0; 2];
    for class in 0..2usize {
        let members: Vec<usize> = (0..data.len())
            .filter(|&i| data.labels[i] as usize == class)
            .collect();
        log_priors[class] = (members.len() as f64 / n).ln();
        let mut feature_mass = vec![0.0; d];
        for &i in &members {
            for (m, x) in feature_mass.iter_mut().zip(&data.rows[i]) {
                *m += x;
            }
        }
        let total: f64 = feature_mass.iter().sum::<f64>() + alpha * d as f64;
        for (lt, m) in log_theta[class].iter_mut().zip(&feature_mass) {
            *lt = ((m + alpha) / total).ln();
        }
    }
    Ok(MnbModel {
        log_theta,
        log_priors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{Algorithm, ParamValue};

    #[test]
    fn classifies_count_profiles() {
        // Class 1 documents lean on feature 0, class 0 on feature 1.
        let rows = vec![
            vec![5.0, 0.0],
            vec![4.0, 1.0],
            vec![6.0, 0.0],
            vec![0.0, 5.0],
            vec![1.0, 4.0],
            vec![0.0, 6.0],
        ];
        let labels = vec![1, 1, 1, 0, 0, 0];
        let data = LabeledSet::new(
            (0..6).map(|i| format!("c{i}")).collect(),
            rows,
            labels,
        )
        .unwrap();
        let spec = ModelSpec::new(Algorithm::Mnb).with("alpha", ParamValue::Float(0.1));
        let model = train(&spec, &data).unwrap();
        assert_eq!(model.predict(&[3.0, 0.0]), 1);
        assert_eq!(model.predict(&[0.0, 3.0]), 0);
    }

    #[test]
    fn rejects_negative_features() {
        let data = LabeledSet::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0], vec![-0.5]],
            vec![1, 0],
        )
        .unwrap();
        let spec = ModelSpec::new(Algorithm::Mnb);
        assert!(matches!(
            train(&spec, &data),
            Err(MlError::NegativeFeature { row: 1, col: 0 })
        ));
    }
}
