//! Classification combination, error-matrix estimation and bias-corrected
//! turnover totals.
//!
//! Predicted labels are treated as draws from a 2×2 classification-error
//! model `P` with `P[g][h] = P(ŝ = h | s = g)` (component order: webshop,
//! other). The raw aggregate `ŷ` is biased by `(Pᵀ − I)y`; the correction
//! blends the plug-in bias estimate `B̂₀ = (Pᵀ − I)ŷ` with its inverse-
//! corrected variant `B̂₁ = Q B̂₀` (`Q = (Pᵀ)⁻¹`), choosing the mixing
//! weight λ that minimizes the mean squared error of the first component via
//! a fixed-point iteration. Standard deviations come from the closed-form
//! limit of the parametric bootstrap,
//! `V̂∞ = diag(Pᵀ k̂) − Pᵀ diag(k̂) P` with `k̂ = Σ â_i y_i²`.

use std::io::Write;

use thiserror::Error;

/// Default stopping tolerance of the λ iteration.
pub const LAMBDA_TOL: f64 = 1e-6;
/// Default iteration cap.
pub const LAMBDA_MAX_ITER: usize = 100;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("confusion counts leave a class empty (TP+FN = {positives}, TN+FP = {negatives})")]
    EmptyClass { positives: u64, negatives: u64 },
    #[error("transposed error matrix is singular (det = {det:.3e})")]
    SingularMatrix { det: f64 },
    #[error("lambda iteration did not converge within {max_iter} iterations: {trajectory:?}")]
    NoConvergence {
        max_iter: usize,
        trajectory: Vec<f64>,
    },
    #[error("variance entry (1,1) is negative beyond tolerance: {value:.6e}")]
    NegativeVariance { value: f64 },
}

/// Three-valued classification: webshop, other, or missing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label3 {
    Missing,
    No,
    Yes,
}

impl Label3 {
    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            -1 => Some(Label3::Missing),
            0 => Some(Label3::No),
            1 => Some(Label3::Yes),
            _ => None,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label3::Missing => -1,
            Label3::No => 0,
            Label3::Yes => 1,
        }
    }
}

/// Combines the register-based and website-based classifications: missing
/// values defer to the other source, otherwise the minimum (logical AND)
/// wins.
pub fn combine(br: Label3, web: Label3) -> Label3 {
    match (br, web) {
        (Label3::Missing, Label3::Missing) => Label3::Missing,
        (x, Label3::Missing) => x,
        (Label3::Missing, y) => y,
        (x, y) => {
            if x.as_i8() <= y.as_i8() {
                x
            } else {
                y
            }
        }
    }
}

/// Dense 2×2 matrix with row-major storage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn transpose(self) -> Mat2 {
        Mat2([
            [self.0[0][0], self.0[1][0]],
            [self.0[0][1], self.0[1][1]],
        ])
    }

    pub fn mul(self, rhs: Mat2) -> Mat2 {
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j];
            }
        }
        Mat2(out)
    }

    pub fn mul_vec(self, v: [f64; 2]) -> [f64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn add(self, rhs: Mat2) -> Mat2 {
        Mat2([
            [self.0[0][0] + rhs.0[0][0], self.0[0][1] + rhs.0[0][1]],
            [self.0[1][0] + rhs.0[1][0], self.0[1][1] + rhs.0[1][1]],
        ])
    }

    pub fn sub(self, rhs: Mat2) -> Mat2 {
        Mat2([
            [self.0[0][0] - rhs.0[0][0], self.0[0][1] - rhs.0[0][1]],
            [self.0[1][0] - rhs.0[1][0], self.0[1][1] - rhs.0[1][1]],
        ])
    }

    pub fn scale(self, s: f64) -> Mat2 {
        Mat2([
            [self.0[0][0] * s, self.0[0][1] * s],
            [self.0[1][0] * s, self.0[1][1] * s],
        ])
    }

    pub fn det(self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn inverse(self) -> Option<Mat2> {
        let det = self.det();
        if det.abs() < 1e-12 {
            return None;
        }
        Some(Mat2([
            [self.0[1][1] / det, -self.0[0][1] / det],
            [-self.0[1][0] / det, self.0[0][0] / det],
        ]))
    }

    pub fn diag(v: [f64; 2]) -> Mat2 {
        Mat2([[v[0], 0.0], [0.0, v[1]]])
    }
}

/// The estimated classification-error model: row-stochastic `P` and
/// `Q = (Pᵀ)⁻¹`.
#[derive(Debug, Clone, Copy)]
pub struct ErrorModel {
    pub p: Mat2,
    pub q: Mat2,
}

/// Builds the error model from test-set confusion counts:
/// `P = [[TP, FN], [FP, TN]] / row sums`.
pub fn estimate_error_matrix(
    tp: u64,
    fp: u64,
    tn: u64,
    fn_: u64,
) -> Result<ErrorModel, EstimatorError> {
    let positives = tp + fn_;
    let negatives = tn + fp;
    if positives == 0 || negatives == 0 {
        return Err(EstimatorError::EmptyClass {
            positives,
            negatives,
        });
    }
    let p = Mat2([
        [tp as f64 / positives as f64, fn_ as f64 / positives as f64],
        [fp as f64 / negatives as f64, tn as f64 / negatives as f64],
    ]);
    ErrorModel::new(p)
}

impl ErrorModel {
    pub fn new(p: Mat2) -> Result<Self, EstimatorError> {
        let pt = p.transpose();
        let q = pt
            .inverse()
            .ok_or(EstimatorError::SingularMatrix { det: pt.det() })?;
        debug_assert!({
            let residual = q.mul(pt).sub(Mat2::IDENTITY);
            residual
                .0
                .iter()
                .flatten()
                .all(|x| x.abs() < 1e-10)
        });
        Ok(Self { p, q })
    }
}

/// Aggregated turnover of one record set for one year.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    /// `(webshop total, other total)`.
    pub y: [f64; 2],
    /// Per-class sums of squared turnover, `k̂ = Σ â_i y_i²`.
    pub k: [f64; 2],
    /// Records with a missing combined label, excluded from both components.
    pub excluded_count: usize,
    pub excluded_turnover: f64,
}

/// Sums turnover and squared turnover by predicted class. Records labelled
/// missing contribute to neither component and are reported as coverage
/// loss.
pub fn aggregate<I>(records: I) -> Aggregate
where
    I: IntoIterator<Item = (Label3, f64)>,
{
    let mut agg = Aggregate {
        y: [0.0; 2],
        k: [0.0; 2],
        excluded_count: 0,
        excluded_turnover: 0.0,
    };
    for (label, turnover) in records {
        match label {
            Label3::Yes => {
                agg.y[0] += turnover;
                agg.k[0] += turnover * turnover;
            }
            Label3::No => {
                agg.y[1] += turnover;
                agg.k[1] += turnover * turnover;
            }
            Label3::Missing => {
                agg.excluded_count += 1;
                agg.excluded_turnover += turnover;
            }
        }
    }
    agg
}

/// Closed-form limits of the parametric bootstrap:
/// `B̂∞ = (Pᵀ − I) ŷ` and `V̂∞ = diag(Pᵀ k̂) − Pᵀ diag(k̂) P`.
pub fn bootstrap_moments(model: &ErrorModel, y_hat: [f64; 2], k_hat: [f64; 2]) -> ([f64; 2], Mat2) {
    let pt = model.p.transpose();
    let bias = pt.sub(Mat2::IDENTITY).mul_vec(y_hat);
    let variance = Mat2::diag(pt.mul_vec(k_hat))
        .sub(pt.mul(Mat2::diag(k_hat)).mul(model.p));
    (bias, variance)
}

/// Result of the λ optimization.
#[derive(Debug, Clone)]
pub struct LambdaResult {
    pub lambda: f64,
    /// `B̂_λ = (I + λ(Q − I)) B̂₀` at the final λ.
    pub b_lambda: [f64; 2],
    pub iterations: usize,
    pub trajectory: Vec<f64>,
}

/// The four moment terms of the mse quadratic, shared by the iteration and
/// its reporting.
fn moment_terms(model: &ErrorModel, omega: Mat2, b_current: [f64; 2]) -> [f64; 4] {
    let pt = model.p.transpose();
    let a = pt.sub(Mat2::IDENTITY);
    let w = a.mul(omega).mul(a.transpose());
    let q = model.q;
    let m1 = a.mul_vec(b_current)[0].powi(2);
    let m2 = w.mul(q.transpose().mul(q)).0[0][0];
    let m3 = w.mul(q.add(q.transpose()).scale(0.5)).0[0][0];
    let m4 = w.0[0][0];
    [m1, m2, m3, m4]
}

/// Fixed-point iteration for the mse-optimal mixing weight.
///
/// Starting at λ = 0 with `B̂ = B̂₀`, each step computes
/// `λ ← clamp((m₁ − m₃ + m₄) / (m₁ + m₂ − 2m₃ + m₄), 0, 1)` and updates
/// `B̂ = (I + λ(Q − I)) B̂₀` until successive λ differ by less than `tol`.
/// A vanishing denominator (error-free model) yields λ = 0.
pub fn optimize_lambda(
    model: &ErrorModel,
    y_hat: [f64; 2],
    k_hat: [f64; 2],
    tol: f64,
    max_iter: usize,
) -> Result<LambdaResult, EstimatorError> {
    let (b0, omega) = bootstrap_moments(model, y_hat, k_hat);
    let blend = |lambda: f64| -> [f64; 2] {
        let mix = Mat2::IDENTITY.add(model.q.sub(Mat2::IDENTITY).scale(lambda));
        mix.mul_vec(b0)
    };

    let mut lambda_old = 0.0f64;
    let mut b_current = b0;
    let mut trajectory = Vec::new();
    for iteration in 1..=max_iter {
        let [m1, m2, m3, m4] = moment_terms(model, omega, b_current);
        let denominator = m1 + m2 - 2.0 * m3 + m4;
        let lambda_new = if denominator == 0.0 {
            0.0
        } else {
            ((m1 - m3 + m4) / denominator).clamp(0.0, 1.0)
        };
        trajectory.push(lambda_new);
        if (lambda_new - lambda_old).abs() < tol {
            return Ok(LambdaResult {
                lambda: lambda_new,
                b_lambda: blend(lambda_new),
                iterations: iteration,
                trajectory,
            });
        }
        b_current = blend(lambda_new);
        lambda_old = lambda_new;
    }
    Err(EstimatorError::NoConvergence {
        max_iter,
        trajectory,
    })
}

/// Bias-corrected total with its standard deviation for one year.
#[derive(Debug, Clone)]
pub struct CorrectionResult {
    pub y_manual: f64,
    pub y_hat: [f64; 2],
    pub lambda_opt: f64,
    pub b_lambda: [f64; 2],
    /// `y_manual + ŷ₁ − (B̂_λ)₁`.
    pub y_final: f64,
    pub std: f64,
    pub iterations: usize,
}

/// Composes the final estimate and its standard deviation. The manual part
/// is error-free and contributes no variance; the model part's covariance is
/// `M V̂∞ Mᵀ` with `M = 2I − Pᵀ − (Q − I)(Pᵀ − I)`.
pub fn corrected_estimate(
    y_manual: f64,
    model: &ErrorModel,
    y_hat: [f64; 2],
    k_hat: [f64; 2],
    lambda: &LambdaResult,
) -> Result<CorrectionResult, EstimatorError> {
    let (_, omega) = bootstrap_moments(model, y_hat, k_hat);
    let pt = model.p.transpose();
    let m = Mat2::IDENTITY
        .scale(2.0)
        .sub(pt)
        .sub(model.q.sub(Mat2::IDENTITY).mul(pt.sub(Mat2::IDENTITY)));
    let v = m.mul(omega).mul(m.transpose());
    let var = v.0[0][0];
    // Zero variance is exact cancellation; tolerate rounding dust relative
    // to the k̂ scale before declaring the model inconsistent.
    let tolerance = 1e-8 * (1.0 + k_hat[0].abs() + k_hat[1].abs());
    if var < -tolerance {
        return Err(EstimatorError::NegativeVariance { value: var });
    }
    Ok(CorrectionResult {
        y_manual,
        y_hat,
        lambda_opt: lambda.lambda,
        b_lambda: lambda.b_lambda,
        y_final: y_manual + y_hat[0] - lambda.b_lambda[0],
        std: var.max(0.0).sqrt(),
        iterations: lambda.iterations,
    })
}

/// One row of the estimate report.
#[derive(Debug, Clone)]
pub struct YearEstimate {
    pub year: i32,
    pub result: CorrectionResult,
}

/// Writes the estimate report:
/// `year,y_M,y_hat,lambda_opt,bias,estimate,std`.
pub fn write_report_csv<W: Write>(
    out: &mut W,
    rows: &[YearEstimate],
    header_comment: Option<&str>,
) -> std::io::Result<()> {
    if let Some(comment) = header_comment {
        writeln!(out, "# {comment}")?;
    }
    writeln!(out, "year,y_M,y_hat,lambda_opt,bias,estimate,std")?;
    for row in rows {
        let r = &row.result;
        writeln!(
            out,
            "{},{:.0},{:.0},{},{:.0},{:.0},{:.0}",
            row.year, r.y_manual, r.y_hat[0], r.lambda_opt, r.b_lambda[0], r.y_final, r.std
        )?;
    }
    Ok(())
}
