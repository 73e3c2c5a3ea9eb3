//! Stratified k-fold splits.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::data::LabeledSet;

#[derive(Debug, Error)]
pub enum FoldError {
    #[error("class {class} has only {count} members, fewer than k = {k}")]
    TooFewMembers { class: u8, count: usize, k: usize },
    #[error("k must be at least 2, got {0}")]
    BadK(usize),
}

/// Splits row indices into `k` disjoint folds preserving the class balance:
/// per-fold positive counts differ by at most one from the proportional
/// share. Assignment depends only on the labels, `k` and the seed.
pub fn stratified_kfold(
    data: &LabeledSet,
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, FoldError> {
    if k < 2 {
        return Err(FoldError::BadK(k));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    // Deal positions continue across classes so total fold sizes stay
    // balanced, not only the per-class counts.
    let mut position = 0usize;
    for class in [1u8, 0u8] {
        let mut members: Vec<usize> = data
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect();
        if members.len() < k {
            return Err(FoldError::TooFewMembers {
                class,
                count: members.len(),
                k,
            });
        }
        members.shuffle(&mut rng);
        for index in members {
            folds[position % k].push(index);
            position += 1;
        }
    }
    for fold in &mut folds {
        fold.sort_unstable();
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, positives: usize) -> LabeledSet {
        LabeledSet::new(
            (0..n).map(|i| format!("c{i}")).collect(),
            (0..n).map(|i| vec![i as f64]).collect(),
            (0..n).map(|i| u8::from(i < positives)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn folds_partition_the_data() {
        let data = set(180, 76);
        let folds = stratified_kfold(&data, 5, 42).unwrap();
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..180).collect::<Vec<_>>());
    }

    #[test]
    fn training_set_shape_gives_15_or_16_positives_per_fold() {
        // 180 rows with 76 positives: folds of 36 with 15 or 16 positives.
        let data = set(180, 76);
        let folds = stratified_kfold(&data, 5, 7).unwrap();
        for fold in &folds {
            assert_eq!(fold.len(), 36);
            let pos = fold.iter().filter(|&&i| data.labels[i] == 1).count();
            assert!(pos == 15 || pos == 16, "fold has {pos} positives");
        }
        let total: usize = folds
            .iter()
            .map(|f| f.iter().filter(|&&i| data.labels[i] == 1).count())
            .sum();
        assert_eq!(total, 76);
    }

    #[test]
    fn exact_divisibility() {
        let data = set(10, 5);
        let folds = stratified_kfold(&data, 5, 1).unwrap();
        for fold in &folds {
            let pos = fold.iter().filter(|&&i| data.labels[i] == 1).count();
            assert_eq!(pos, 1);
        }
    }

    #[test]
    fn class_smaller_than_k_errors() {
        let data = set(4, 1);
        assert!(matches!(
            stratified_kfold(&data, 5, 1),
            Err(FoldError::TooFewMembers { class: 1, .. })
        ));
    }

    #[test]
    fn assignment_depends_only_on_labels_k_seed() {
        let a = set(40, 13);
        let mut b = set(40, 13);
        for row in &mut b.rows {
            row[0] *= -3.5; // features must not matter
        }
        assert_eq!(
            stratified_kfold(&a, 5, 9).unwrap(),
            stratified_kfold(&b, 5, 9).unwrap()
        );
        assert_ne!(
            stratified_kfold(&a, 5, 9).unwrap(),
            stratified_kfold(&a, 5, 10).unwrap()
        );
    }
}
