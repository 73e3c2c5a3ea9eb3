//! Linear and quadratic discriminant analysis from class-conditional
//! Gaussian estimates. Singular covariances fall back to an escalating ridge
//! starting at 1e-6.

use serde::{Deserialize, Serialize};

use crate::data::LabeledSet;
use crate::linalg::{cholesky_logdet, cholesky_solve, cholesky_with_ridge};
use crate::MlError;

const BASE_RIDGE: f64 = 1e-6;
const MAX_RIDGE: f64 = 1e-2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscriminantModel {
    /// Per class (0, 1): mean vector.
    pub means: [Vec<f64>; 2],
    /// Cholesky factors, shared between classes for LDA.
    pub factors: [Vec<Vec<f64>>; 2],
    pub log_priors: [f64; 2],
    pub log_dets: [f64; 2],
    pub quadratic: bool,
}

impl DiscriminantModel {
    pub fn predict(&self, features: &[f64]) -> u8 {
        let score = |class: usize| -> f64 {
            let diff: Vec<f64> = features
                .iter()
                .zip(&self.means[class])
                .map(|(x, m)| x - m)
                .collect();
            let solved = cholesky_solve(&self.factors[class], &diff);
            let mahalanobis: f64 = diff.iter().zip(&solved).map(|(a, b)| a * b).sum();
            self.log_priors[class] - 0.5 * (mahalanobis + self.log_dets[class])
        };
        u8::from(score(1) > score(0))
    }
}

fn class_stats(data: &LabeledSet, class: u8) -> (Vec<usize>, Vec<f64>) {
    let members: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == class).collect();
    let d = data.width();
    let mut mean = vec![0.0; d];
    for &i in &members {
        for (m, x) in mean.iter_mut().zip(&data.rows[i]) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= members.len() as f64;
    }
    (members, mean)
}

fn scatter(data: &LabeledSet, members: &[usize], mean: &[f64]) -> Vec<Vec<f64>> {
    let d = mean.len();
    let mut s = vec![vec![0.0; d]; d];
    for &i in members {
        let diff: Vec<f64> = data.rows[i].iter().zip(mean).map(|(x, m)| x - m).collect();
        for a in 0..d {
            for b in 0..d {
                s[a][b] += diff[a] * diff[b];
            }
        }
    }
    s
}

pub fn train(data: &LabeledSet, quadratic: bool) -> Result<DiscriminantModel, MlError> {
    let n = data.len() as f64;
    let (neg, mean0) = class_stats(data, 0);
    let (pos, mean1) = class_stats(data, 1);
    let scatter0 = scatter(data, &neg, &mean0);
    let scatter1 = scatter(data, &pos, &mean1);
    let d = data.width();

    let factorize = |cov: &[Vec<f64>]| {
        cholesky_with_ridge(cov, BASE_RIDGE, MAX_RIDGE)
            .ok_or_else(|| MlError::SingularCovariance)
    };

    let (factors, log_dets) = if quadratic {
        let mut cov0 = scatter0;
        let mut cov1 = scatter1;
        let denom0 = (neg.len() as f64 - 1.0).max(1.0);
        let denom1 = (pos.len() as f64 - 1.0).max(1.0);
        for row in &mut cov0 {
            for v in row.iter_mut() {
                *v /= denom0;
            }
        }
        for row in &mut cov1 {
            for v in row.iter_mut() {
                *v /= denom1;
            }
        }
        let f0 = factorize(&cov0)?;
        let f1 = factorize(&cov1)?;
        let d0 = cholesky_logdet(&f0);
        let d1 = cholesky_logdet(&f1);
        ([f0, f1], [d0, d1])
    } else {
        let mut pooled = vec![vec![0.0; d]; d];
        for a in 0..d {
            for b in 0..d {
                pooled[a][b] = (scatter0[a][b] + scatter1[a][b]) / (n - 2.0).max(1.0);
            }
        }
        let f = factorize(&pooled)?;
        let logdet = cholesky_logdet(&f);
        ([f.clone(), f], [logdet, logdet])
    };

    Ok(DiscriminantModel {
        means: [mean0, mean1],
        factors,
        log_priors: [
            (neg.len() as f64 / n).ln(),
            (pos.len() as f64 / n).ln(),
        ],
        log_dets,
        quadratic,
    })
}
