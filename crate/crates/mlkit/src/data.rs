//! Labeled feature sets.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("rows ({rows}), labels ({labels}) and ids ({ids}) must have equal length")]
    LengthMismatch {
        rows: usize,
        labels: usize,
        ids: usize,
    },
    #[error("label {label} at row {row} is not binary")]
    NonBinaryLabel { row: usize, label: u8 },
    #[error("feature at row {row}, column {col} is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("rows have inconsistent widths ({first} vs {other} at row {row})")]
    RaggedRows {
        first: usize,
        other: usize,
        row: usize,
    },
}

/// Feature rows with binary labels and company identifiers.
#[derive(Debug, Clone, Default)]
pub struct LabeledSet {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl LabeledSet {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self, DataError> {
        if rows.len() != labels.len() || rows.len() != ids.len() {
            return Err(DataError::LengthMismatch {
                rows: rows.len(),
                labels: labels.len(),
                ids: ids.len(),
            });
        }
        let width = rows.first().map_or(0, Vec::len);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(DataError::RaggedRows {
                    first: width,
                    other: row.len(),
                    row: i,
                });
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(DataError::NonFinite { row: i, col: j });
                }
            }
        }
        for (i, &label) in labels.iter().enumerate() {
            if label > 1 {
                return Err(DataError::NonBinaryLabel { row: i, label });
            }
        }
        Ok(Self { ids, rows, labels })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    /// Subset by row indices, preserving their order.
    pub fn subset(&self, indices: &[usize]) -> LabeledSet {
        LabeledSet {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// All rows except the given indices, preserving data order.
    pub fn complement(&self, indices: &[usize]) -> LabeledSet {
        let excluded: std::collections::HashSet<usize> = indices.iter().copied().collect();
        let keep: Vec<usize> = (0..self.len()).filter(|i| !excluded.contains(i)).collect();
        self.subset(&keep)
    }
}
