//! Trainers for the ten algorithms behind a single [`Model`] type.

pub mod boost;
pub mod discriminant;
pub mod forest;
pub mod knn;
pub mod logreg;
pub mod naive_bayes;
pub mod svm;
pub mod tree;

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::LabeledSet;
use crate::spec::{Algorithm, ModelSpec};
use crate::MlError;

const MAGIC: &[u8; 4] = b"SMML";
const FORMAT_VERSION: u32 = 1;

/// A trained classifier. Prediction is a pure function of the features.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Model {
    LogReg(logreg::LogRegModel),
    Discriminant(discriminant::DiscriminantModel),
    NaiveBayes(naive_bayes::MnbModel),
    Knn(knn::KnnModel),
    Svc(svm::SvcModel),
    Forest(forest::ForestModel),
    GradientBoost(boost::GbModel),
    AdaBoost(boost::AdaModel),
}

impl Model {
    pub fn predict(&self, features: &[f64]) -> u8 {
        match self {
            Model::LogReg(m) => m.predict(features),
            Model::Discriminant(m) => m.predict(features),
            Model::NaiveBayes(m) => m.predict(features),
            Model::Knn(m) => m.predict(features),
            Model::Svc(m) => m.predict(features),
            Model::Forest(m) => m.predict(features),
            Model::GradientBoost(m) => m.predict(features),
            Model::AdaBoost(m) => m.predict(features),
        }
    }

    pub fn predict_batch(&self, rows: &[Vec<f64>]) -> Vec<u8> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    /// Writes the model as a versioned binary file.
    pub fn save(&self, path: &Path) -> Result<(), MlError> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        let payload = bincode::serialize(self)
            .map_err(|e| MlError::BadFormat(format!("serialize: {e}")))?;
        w.write_all(&(payload.len() as u64).to_le_bytes())?;
        w.write_all(&payload)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, MlError> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(MlError::BadFormat("magic bytes mismatch".into()));
        }
        let mut version = [0u8; 4];
        r.read_exact(&mut version)?;
        let version = u32::from_le_bytes(version);
        if version != FORMAT_VERSION {
            return Err(MlError::BadFormat(format!(
                "unsupported version {version}"
            )));
        }
        let mut len = [0u8; 8];
        r.read_exact(&mut len)?;
        let mut payload = vec![0u8; u64::from_le_bytes(len) as usize];
        r.read_exact(&mut payload)?;
        bincode::deserialize(&payload).map_err(|e| MlError::BadFormat(format!("payload: {e}")))
    }
}

/// Trains the specified algorithm. The training set must contain both
/// classes; stochastic trainers derive all randomness from `seed`.
pub fn train(spec: &ModelSpec, data: &LabeledSet, seed: u64) -> Result<Model, MlError> {
    if data.is_empty() {
        return Err(MlError::BadData("training set is empty".into()));
    }
    let positives = data.positives();
    if positives == 0 || positives == data.len() {
        return Err(MlError::SingleClass);
    }
    let weights = spec.class_weight()?.weights(&data.labels);
    match spec.algorithm {
        Algorithm::Lr => Ok(Model::LogReg(logreg::train(spec, data, &weights)?)),
        Algorithm::Lda => Ok(Model::Discriminant(discriminant::train(data, false)?)),
        Algorithm::Qda => Ok(Model::Discriminant(discriminant::train(data, true)?)),
        Algorithm::Mnb => Ok(Model::NaiveBayes(naive_bayes::train(spec, data)?)),
        Algorithm::Knn => Ok(Model::Knn(knn::train(spec, data)?)),
        Algorithm::LinSvc => {
            let kernel = svm::kernel_from_spec(spec, false)?;
            Ok(Model::Svc(svm::train(spec, data, &weights, kernel)?))
        }
        Algorithm::RbfSvc => {
            let kernel = svm::kernel_from_spec(spec, true)?;
            Ok(Model::Svc(svm::train(spec, data, &weights, kernel)?))
        }
        Algorithm::Rf => Ok(Model::Forest(forest::train(spec, data, &weights, seed)?)),
        Algorithm::Gb => Ok(Model::GradientBoost(boost::train_gb(spec, data, &weights)?)),
        Algorithm::Ab => Ok(Model::AdaBoost(boost::train_ab(spec, data, &weights)?)),
    }
}
