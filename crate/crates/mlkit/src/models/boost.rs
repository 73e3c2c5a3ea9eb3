//! Gradient boosting on the logistic loss and discrete AdaBoost, both over
//! depth-limited CART trees.

use serde::{Deserialize, Serialize};

use crate::data::LabeledSet;
use crate::models::tree::{grow, Tree, TreeParams};
use crate::spec::ModelSpec;
use crate::MlError;

const LEAF_CLAMP: f64 = 4.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbModel {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl GbModel {
    pub fn predict(&self, features: &[f64]) -> u8 {
        u8::from(self.decision(features) > 0.0)
    }

    pub fn decision(&self, features: &[f64]) -> f64 {
        self.base_score
            + self.learning_rate
                * self
                    .trees
                    .iter()
                    .map(|t| t.predict(features))
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

/// Boosted logistic regression: each stage fits a variance-split tree to the
/// current residuals and replaces leaf values by a Newton step.
pub fn train_gb(spec: &ModelSpec, data: &LabeledSet, weights: &[f64]) -> Result<GbModel, MlError> {
    let n_estimators = spec.usize_or("n", 100)?;
    let max_depth = spec.usize_or("d", 3)?;
    let learning_rate = spec.f64_or("lr", 0.1)?;
    if n_estimators == 0 || max_depth == 0 || learning_rate <= 0.0 {
        return Err(MlError::BadSpec(
            "n, d must be at least 1 and lr positive".into(),
        ));
    }
    let n = data.len();
    let mass: f64 = weights.iter().sum();
    let positive_mass: f64 = weights
        .iter()
        .zip(&data.labels)
        .filter(|(_, &l)| l == 1)
        .map(|(w, _)| w)
        .sum();
    let rate = (positive_mass / mass).clamp(1e-6, 1.0 - 1e-6);
    let base_score = (rate / (1.0 - rate)).ln();

    let indices: Vec<usize> = (0..n).collect();
    let mut margins = vec![base_score; n];
    let mut trees = Vec::with_capacity(n_estimators);
    for _ in 0..n_estimators {
        let residuals: Vec<f64> = (0..n)
            .map(|i| f64::from(data.labels[i]) - sigmoid(margins[i]))
            .collect();
        let mut tree = grow(
            &data.rows,
            &residuals,
            weights,
            &indices,
            TreeParams {
                max_depth,
                max_features: None,
            },
            None,
        );
        // Newton leaf values: Σ w r / Σ w p(1−p) over leaf members.
        let mut numer: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
        let mut denom: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
        for i in 0..n {
            let leaf = tree.leaf_of(&data.rows[i]);
            let p = sigmoid(margins[i]);
            *numer.entry(leaf).or_insert(0.0) += weights[i] * residuals[i];
            *denom.entry(leaf).or_insert(0.0) += weights[i] * p * (1.0 - p);
        }
        for (&leaf, &num) in &numer {
            let den = denom[&leaf];
            let value = if den > 1e-12 { num / den } else { 0.0 };
            tree.set_leaf_value(leaf, value.clamp(-LEAF_CLAMP, LEAF_CLAMP));
        }
        for i in 0..n {
            margins[i] += learning_rate * tree.predict(&data.rows[i]);
        }
        trees.push(tree);
    }
    Ok(GbModel {
        base_score,
        learning_rate,
        trees,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaModel {
    /// (tree, stage weight α).
    pub stages: Vec<(Tree, f64)>,
}

impl AdaModel {
    pub fn predict(&self, features: &[f64]) -> u8 {
        let score: f64 = self
            .stages
            .iter()
            .map(|(tree, alpha)| {
                let vote = if tree.predict(features) > 0.5 { 1.0 } else { -1.0 };
                alpha * vote
            })
            .sum();
        u8::from(score > 0.0)
    }
}

/// Discrete AdaBoost with re-weighted depth-limited trees; the learning rate
/// scales each stage weight.
pub fn train_ab(spec: &ModelSpec, data: &LabeledSet, weights: &[f64]) -> Result<AdaModel, MlError> {
    let n_estimators = spec.usize_or("n", 50)?;
    let max_depth = spec.usize_or("d", 1)?;
    let learning_rate = spec.f64_or("lr", 1.0)?;
    if n_estimators == 0 || max_depth == 0 || learning_rate <= 0.0 {
        return Err(MlError::BadSpec(
            "n, d must be at least 1 and lr positive".into(),
        ));
    }
    let n = data.len();
    let targets: Vec<f64> = data.labels.iter().map(|&l| f64::from(l)).collect();
    let indices: Vec<usize> = (0..n).collect();

    let mut boost_weights: Vec<f64> = {
        let mass: f64 = weights.iter().sum();
        weights.iter().map(|w| w / mass).collect()
    };
    let mut stages = Vec::with_capacity(n_estimators);
    for _ in 0..n_estimators {
        let tree = grow(
            &data.rows,
            &targets,
            &boost_weights,
            &indices,
            TreeParams {
                max_depth,
                max_features: None,
            },
            None,
        );
        let predictions: Vec<u8> = data
            .rows
            .iter()
            .map(|row| u8::from(tree.predict(row) > 0.5))
            .collect();
        let err: f64 = boost_weights
            .iter()
            .zip(predictions.iter().zip(&data.labels))
            .filter(|(_, (p, t))| p != t)
            .map(|(w, _)| w)
            .sum();
        if err >= 0.5 {
            if stages.is_empty() {
                stages.push((tree, 1.0));
            }
            break;
        }
        let err = err.max(1e-10);
        let alpha = learning_rate * ((1.0 - err) / err).ln();
        for (w, (p, t)) in boost_weights
            .iter_mut()
            .zip(predictions.iter().zip(&data.labels))
        {
            if p != t {
                *w *= alpha.exp();
            }
        }
        let mass: f64 = boost_weights.iter().sum();
        for w in &mut boost_weights {
            *w /= mass;
        }
        let stop = err <= 1e-10;
        stages.push((tree, alpha));
        if stop {
            break;
        }
    }
    Ok(AdaModel { stages })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{Algorithm, ParamValue};

    fn stripes() -> LabeledSet {
        // Label alternates over one feature: stumps must be boosted to fit.
        let rows: Vec<Vec<f64>> = (0..24).map(|i| vec![i as f64 / 24.0]).collect();
        let labels: Vec<u8> = (0..24).map(|i| u8::from((i / 6) % 2 == 1)).collect();
        LabeledSet::new(
            (0..24).map(|i| format!("c{i}")).collect(),
            rows,
            labels,
        )
        .unwrap()
    }

    #[test]
    fn gradient_boosting_fits_stripes() {
        let data = stripes();
        let weights = vec![1.0; data.len()];
        let spec = ModelSpec::new(Algorithm::Gb)
            .with("n", ParamValue::Int(150))
            .with("d", ParamValue::Int(2))
            .with("lr", ParamValue::Float(0.5));
        let model = train_gb(&spec, &data, &weights).unwrap();
        for (row, &label) in data.rows.iter().zip(&data.labels) {
            assert_eq!(model.predict(row), label);
        }
    }

    #[test]
    fn adaboost_fits_stripes_with_stumps() {
        let data = stripes();
        let weights = vec![1.0; data.len()];
        let spec = ModelSpec::new(Algorithm::Ab)
            .with("n", ParamValue::Int(100))
            .with("d", ParamValue::Int(1))
            .with("lr", ParamValue::Float(1.0));
        let model = train_ab(&spec, &data, &weights).unwrap();
        let hits = data
            .rows
            .iter()
            .zip(&data.labels)
            .filter(|(row, &l)| model.predict(row) == l)
            .count();
        assert!(hits >= 22, "{hits}/24");
    }

    #[test]
    fn perfect_stump_stops_adaboost_early() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels: Vec<u8> = (0..10).map(|i| u8::from(i >= 5)).collect();
        let data = LabeledSet::new(
            (0..10).map(|i| format!("c{i}")).collect(),
            rows,
            labels,
        )
        .unwrap();
        let weights = vec![1.0; 10];
        let spec = ModelSpec::new(Algorithm::Ab)
            .with("n", ParamValue::Int(50))
            .with("d", ParamValue::Int(1));
        let model = train_ab(&spec, &data, &weights).unwrap();
        assert_eq!(model.stages.len(), 1);
        for (row, &label) in data.rows.iter().zip(&data.labels) {
            assert_eq!(model.predict(row), label);
        }
    }
}
