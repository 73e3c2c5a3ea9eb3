//! Evaluation scores for binary classification.

use serde::{Deserialize, Serialize};

/// Confusion counts of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Precision, recall and their harmonic mean. Zero denominators score 0.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub counts: ConfusionCounts,
}

/// Computes F1, precision and recall from predictions against truth.
///
/// # Panics
/// Panics if the slices have different lengths.
pub fn scores(predictions: &[u8], truth: &[u8]) -> Scores {
    assert_eq!(
        predictions.len(),
        truth.len(),
        "predictions and truth must align"
    );
    let mut counts = ConfusionCounts::default();
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p, t) {
            (1, 1) => counts.tp += 1,
            (1, 0) => counts.fp += 1,
            (0, 0) => counts.tn += 1,
            (0, 1) => counts.fn_ += 1,
            _ => panic!("labels must be binary"),
        }
    }
    scores_from_counts(counts)
}

pub fn scores_from_counts(counts: ConfusionCounts) -> Scores {
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Scores {
        f1,
        precision,
        recall,
        counts,
    }
}
