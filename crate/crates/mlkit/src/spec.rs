//! Algorithm identifiers and parameter settings.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::MlError;

/// The ten classification algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    /// Logistic Regression.
    Lr,
    /// Linear Discriminant Analysis.
    Lda,
    /// Linear Support Vector Classification.
    LinSvc,
    /// k-Nearest Neighbours.
    Knn,
    /// Multinomial Naive Bayes.
    Mnb,
    /// Quadratic Discriminant Analysis.
    Qda,
    /// Support Vector Classification with RBF kernel.
    RbfSvc,
    /// Random Forest.
    Rf,
    /// Gradient Boosting.
    Gb,
    /// AdaBoost.
    Ab,
}

impl Algorithm {
    pub const ALL: [Algorithm; 10] = [
        Algorithm::Lr,
        Algorithm::Lda,
        Algorithm::LinSvc,
        Algorithm::Knn,
        Algorithm::Mnb,
        Algorithm::Qda,
        Algorithm::RbfSvc,
        Algorithm::Rf,
        Algorithm::Gb,
        Algorithm::Ab,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lr => "lr",
            Algorithm::Lda => "lda",
            Algorithm::LinSvc => "linsvc",
            Algorithm::Knn => "knn",
            Algorithm::Mnb => "mnb",
            Algorithm::Qda => "qda",
            Algorithm::RbfSvc => "rbfsvc",
            Algorithm::Rf => "rf",
            Algorithm::Gb => "gb",
            Algorithm::Ab => "ab",
        }
    }

    pub fn parse(s: &str) -> Option<Algorithm> {
        Self::ALL.into_iter().find(|a| a.name() == s.to_lowercase())
    }

    /// Whether the algorithm's distributional assumptions fit continuous
    /// distance features. Multinomial Naive Bayes models discrete counts and
    /// is excluded from the register-distance comparison.
    pub fn suits_continuous_features(self) -> bool {
        self != Algorithm::Mnb
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Instance weighting scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ClassWeight {
    #[default]
    Uniform,
    /// Inverse class frequency on the training fold.
    Balanced,
}

impl ClassWeight {
    pub fn name(self) -> &'static str {
        match self {
            ClassWeight::Uniform => "uniform",
            ClassWeight::Balanced => "balanced",
        }
    }

    pub fn parse(s: &str) -> Option<ClassWeight> {
        match s {
            "uniform" => Some(ClassWeight::Uniform),
            "balanced" => Some(ClassWeight::Balanced),
            _ => None,
        }
    }

    /// Per-instance weights: balanced gives each class half the total mass.
    pub fn weights(self, labels: &[u8]) -> Vec<f64> {
        match self {
            ClassWeight::Uniform => vec![1.0; labels.len()],
            ClassWeight::Balanced => {
                let n = labels.len() as f64;
                let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
                let neg = n - pos;
                labels
                    .iter()
                    .map(|&l| if l == 1 { n / (2.0 * pos) } else { n / (2.0 * neg) })
                    .collect()
            }
        }
    }
}

/// One parameter value in a model specification or grid axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl ParamValue {
    pub fn parse(s: &str) -> ParamValue {
        let s = s.trim();
        if let Ok(i) = s.parse::<i64>() {
            return ParamValue::Int(i);
        }
        if let Ok(f) = s.parse::<f64>() {
            return ParamValue::Float(f);
        }
        ParamValue::Text(s.to_string())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Float(f) => Some(*f),
            ParamValue::Text(_) => None,
        }
    }

    pub fn as_usize(&self) -> Option<usize> {
        match self {
            ParamValue::Int(i) if *i >= 0 => Some(*i as usize),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Text(s) => Some(s),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

/// An algorithm with concrete parameter settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub algorithm: Algorithm,
    pub params: BTreeMap<String, ParamValue>,
}

impl ModelSpec {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: ParamValue) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, MlError> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| MlError::BadSpec(format!(
                "parameter {key} must be numeric, got {v}"
            ))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, MlError> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.as_usize().ok_or_else(|| MlError::BadSpec(format!(
                "parameter {key} must be a non-negative integer, got {v}"
            ))),
        }
    }

    pub fn class_weight(&self) -> Result<ClassWeight, MlError> {
        match self.params.get("class_weight") {
            None => Ok(ClassWeight::Uniform),
            Some(v) => v
                .as_str()
                .and_then(ClassWeight::parse)
                .ok_or_else(|| MlError::BadSpec(format!("unknown class weight {v}"))),
        }
    }

    /// Compact `key=value` rendering for reports.
    pub fn params_display(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.params.is_empty() {
            write!(f, "{}", self.algorithm)
        } else {
            write!(f, "{} {}", self.algorithm, self.params_display())
        }
    }
}
