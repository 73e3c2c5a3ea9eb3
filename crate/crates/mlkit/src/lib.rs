//! From-scratch classifier suite with stratified cross-validation and
//! F1-optimizing grid search.
//!
//! Ten algorithms (logistic regression, LDA, linear SVC, kNN, multinomial
//! naive Bayes, QDA, RBF SVC, random forest, gradient boosting, AdaBoost)
//! share one [`ModelSpec`]/[`Model`] interface. Every stochastic trainer
//! takes an explicit seed and grid search evaluates all points on identical
//! folds.

pub mod data;
pub mod folds;
pub mod grid;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod spec;

pub use data::{DataError, LabeledSet};
pub use folds::{stratified_kfold, FoldError};
pub use grid::{grid_search, CvResult, Grid, GridSearchOutcome};
pub use metrics::{scores, scores_from_counts, ConfusionCounts, Scores};
pub use models::{train, Model};
pub use spec::{Algorithm, ClassWeight, ModelSpec, ParamValue};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MlError {
    #[error("invalid model specification: {0}")]
    BadSpec(String),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("negative feature at row {row}, column {col} (multinomial model)")]
    NegativeFeature { row: usize, col: usize },
    #[error("covariance is singular beyond the ridge fallback")]
    SingularCovariance,
    #[error("invalid training data: {0}")]
    BadData(String),
    #[error("fold error: {0}")]
    Fold(#[from] FoldError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad model file: {0}")]
    BadFormat(String),
}
