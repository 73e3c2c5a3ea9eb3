//! Random forest: bagged trees with per-split feature subsampling.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::LabeledSet;
use crate::models::tree::{grow, Tree, TreeParams};
use crate::spec::ModelSpec;
use crate::MlError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Mean of the trees' leaf probabilities, thresholded at one half.
    pub fn predict(&self, features: &[f64]) -> u8 {
        let mean: f64 = self
            .trees
            .iter()
            .map(|t| t.predict(features))
            .sum::<f64>()
            / self.trees.len() as f64;
        u8::from(mean > 0.5)
    }
}

pub fn train(
    spec: &ModelSpec,
    data: &LabeledSet,
    weights: &[f64],
    seed: u64,
) -> Result<ForestModel, MlError> {
    let n_estimators = spec.usize_or("n", 100)?;
    let max_depth = spec.usize_or("d", 8)?;
    if n_estimators == 0 || max_depth == 0 {
        return Err(MlError::BadSpec("n and d must be at least 1".into()));
    }
    let n = data.len();
    let d = data.width();
    let max_features = (d as f64).sqrt().ceil() as usize;
    let targets: Vec<f64> = data.labels.iter().map(|&l| f64::from(l)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trees = (0..n_estimators)
        .map(|_| {
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            grow(
                &data.rows,
                &targets,
                weights,
                &sample,
                TreeParams {
                    max_depth,
                    max_features: Some(max_features.min(d)),
                },
                Some(&mut rng),
            )
        })
        .collect();
    Ok(ForestModel { trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{Algorithm, ParamValue};

    #[test]
    fn deep_forest_memorizes_small_set() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 8) as f64 / 8.0, (i / 8) as f64 / 5.0])
            .collect();
        let labels: Vec<u8> = (0..40).map(|i| u8::from((i * 7) % 5 < 2)).collect();
        let data = LabeledSet::new(
            (0..40).map(|i| format!("c{i}")).collect(),
            rows,
            labels,
        )
        .unwrap();
        let spec = ModelSpec::new(Algorithm::Rf)
            .with("n", ParamValue::Int(500))
            .with("d", ParamValue::Int(8));
        let weights = vec![1.0; data.len()];
        let model = train(&spec, &data, &weights, 42).unwrap();
        let hits = data
            .rows
            .iter()
            .zip(&data.labels)
            .filter(|(row, &l)| model.predict(row) == l)
            .count();
        assert!(hits as f64 / data.len() as f64 >= 0.99, "{hits}/40");
    }

    #[test]
    fn same_seed_same_forest() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
        let data = LabeledSet::new(
            (0..20).map(|i| format!("c{i}")).collect(),
            rows,
            labels,
        )
        .unwrap();
        let spec = ModelSpec::new(Algorithm::Rf)
            .with("n", ParamValue::Int(20))
            .with("d", ParamValue::Int(3));
        let weights = vec![1.0; data.len()];
        let a = train(&spec, &data, &weights, 7).unwrap();
        let b = train(&spec, &data, &weights, 7).unwrap();
        assert_eq!(a.trees, b.trees);
        let c = train(&spec, &data, &weights, 8).unwrap();
        assert_ne!(a.trees, c.trees);
    }
}
