//! k-nearest neighbours with Euclidean distance. Distance ties prefer the
//! lower row id; vote ties prefer class 0.

use serde::{Deserialize, Serialize};

use crate::data::LabeledSet;
use crate::spec::ModelSpec;
use crate::MlError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl KnnModel {
    pub fn predict(&self, features: &[f64]) -> u8 {
        let mut ranked: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let d2: f64 = row
                    .iter()
                    .zip(features)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d2, i)
            })
            .collect();
        ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let k = self.k.min(ranked.len());
        let positive = ranked[..k]
            .iter()
            .filter(|(_, i)| self.labels[*i] == 1)
            .count();
        u8::from(2 * positive > k)
    }
}

pub fn train(spec: &ModelSpec, data: &LabeledSet) -> Result<KnnModel, MlError> {
    let k = spec.usize_or("k", 5)?;
    if k == 0 {
        return Err(MlError::BadSpec("k must be at least 1".into()));
    }
    Ok(KnnModel {
        k,
        rows: data.rows.clone(),
        labels: data.labels.clone(),
    })
}
