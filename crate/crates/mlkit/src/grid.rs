//! Parameter grids and F1-optimizing grid search with stratified k-fold
//! cross-validation.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabeledSet;
use crate::folds::stratified_kfold;
use crate::metrics::{scores, Scores};
use crate::models::train;
use crate::spec::{Algorithm, ModelSpec, ParamValue};
use crate::MlError;

/// One axis of a parameter grid: name and candidate values.
pub type GridAxis = (String, Vec<ParamValue>);

/// A parameter grid for one algorithm. Points enumerate the cartesian
/// product of the axes in declaration order (last axis fastest).
#[derive(Debug, Clone)]
pub struct Grid {
    pub algorithm: Algorithm,
    pub axes: Vec<GridAxis>,
}

impl Grid {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            axes: Vec::new(),
        }
    }

    pub fn axis<V: Into<Vec<ParamValue>>>(mut self, name: &str, values: V) -> Self {
        self.axes.push((name.to_string(), values.into()));
        self
    }

    pub fn points(&self) -> Vec<ModelSpec> {
        let mut points = vec![ModelSpec::new(self.algorithm)];
        for (name, values) in &self.axes {
            let mut expanded = Vec::with_capacity(points.len() * values.len());
            for point in &points {
                for value in values {
                    expanded.push(point.clone().with(name, value.clone()));
                }
            }
            points = expanded;
        }
        points
    }

    /// The default grid per algorithm. Class weighting participates for
    /// LR, LinSVC, RBFSVC, RF and AB.
    pub fn table_default(algorithm: Algorithm) -> Grid {
        let floats = |vs: &[f64]| -> Vec<ParamValue> {
            vs.iter().map(|&v| ParamValue::Float(v)).collect()
        };
        let ints = |vs: &[i64]| -> Vec<ParamValue> {
            vs.iter().map(|&v| ParamValue::Int(v)).collect()
        };
        let texts = |vs: &[&str]| -> Vec<ParamValue> {
            vs.iter().map(|v| ParamValue::Text(v.to_string())).collect()
        };
        let weighting = texts(&["uniform", "balanced"]);
        let estimators = ints(&[50, 100, 200, 500]);
        let depths = ints(&[1, 2, 3, 4, 5, 6, 7, 8]);
        let rates = floats(&[0.01, 0.1, 1.0]);
        match algorithm {
            Algorithm::Lr => Grid::new(algorithm)
                .axis("penalty", texts(&["l1", "l2"]))
                .axis("C", floats(&[0.001, 0.01, 0.1, 1.0, 10.0]))
                .axis("class_weight", weighting),
            Algorithm::Lda | Algorithm::Qda => Grid::new(algorithm),
            Algorithm::LinSvc => Grid::new(algorithm)
                .axis("C", floats(&[0.001, 0.01, 0.1, 1.0, 10.0]))
                .axis("class_weight", weighting),
            Algorithm::Knn => Grid::new(algorithm).axis(
                "k",
                ints(&(1..=39).step_by(2).map(|k| k as i64).collect::<Vec<_>>()),
            ),
            Algorithm::Mnb => {
                Grid::new(algorithm).axis("alpha", floats(&[1e-10, 0.01, 0.1, 1.0]))
            }
            Algorithm::RbfSvc => Grid::new(algorithm)
                .axis("C", floats(&[0.01, 0.1, 1.0, 10.0, 100.0]))
                .axis("gamma", floats(&[0.001, 0.01, 0.1, 1.0]))
                .axis("class_weight", weighting),
            Algorithm::Rf => Grid::new(algorithm)
                .axis("n", estimators)
                .axis("d", depths)
                .axis("class_weight", weighting),
            Algorithm::Gb => Grid::new(algorithm)
                .axis("n", estimators)
                .axis("d", depths)
                .axis("lr", rates),
            Algorithm::Ab => Grid::new(algorithm)
                .axis("n", estimators)
                .axis("d", depths)
                .axis("lr", rates)
                .axis("class_weight", weighting),
        }
    }

    /// Parses a grid definition file: `[algorithm]` section headers followed
    /// by `name = v1, v2, ...` axes. `#` starts a comment.
    pub fn parse_file(text: &str) -> Result<Vec<Grid>, MlError> {
        let mut grids: Vec<Grid> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let algorithm = Algorithm::parse(name.trim()).ok_or_else(|| {
                    MlError::BadSpec(format!("line {}: unknown algorithm {name:?}", lineno + 1))
                })?;
                grids.push(Grid::new(algorithm));
                continue;
            }
            let Some((key, values)) = line.split_once('=') else {
                return Err(MlError::BadSpec(format!(
                    "line {}: expected `name = values`",
                    lineno + 1
                )));
            };
            let Some(grid) = grids.last_mut() else {
                return Err(MlError::BadSpec(format!(
                    "line {}: axis before any [algorithm] section",
                    lineno + 1
                )));
            };
            let values: Vec<ParamValue> = values
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(ParamValue::parse)
                .collect();
            if values.is_empty() {
                return Err(MlError::BadSpec(format!(
                    "line {}: axis {key:?} has no values",
                    lineno + 1
                )));
            }
            grid.axes.push((key.trim().to_string(), values));
        }
        Ok(grids)
    }

    /// Renders grids in the definition-file format.
    pub fn format_file(grids: &[Grid]) -> String {
        let mut out = String::new();
        for grid in grids {
            out.push_str(&format!("[{}]\n", grid.algorithm));
            for (name, values) in &grid.axes {
                let rendered: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                out.push_str(&format!("{name} = {}\n", rendered.join(", ")));
            }
            out.push('\n');
        }
        out
    }
}

/// Cross-validation outcome of one grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvResult {
    pub spec: ModelSpec,
    pub per_fold: Vec<Scores>,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub mean_precision: f64,
    pub std_precision: f64,
    pub mean_recall: f64,
    pub std_recall: f64,
}

impl CvResult {
    fn from_folds(spec: ModelSpec, per_fold: Vec<Scores>) -> CvResult {
        let stat = |pick: fn(&Scores) -> f64| -> (f64, f64) {
            let k = per_fold.len() as f64;
            let mean = per_fold.iter().map(pick).sum::<f64>() / k;
            let var = per_fold
                .iter()
                .map(|s| (pick(s) - mean).powi(2))
                .sum::<f64>()
                / k;
            (mean, var.sqrt())
        };
        let (mean_f1, std_f1) = stat(|s| s.f1);
        let (mean_precision, std_precision) = stat(|s| s.precision);
        let (mean_recall, std_recall) = stat(|s| s.recall);
        CvResult {
            spec,
            per_fold,
            mean_f1,
            std_f1,
            mean_precision,
            std_precision,
            mean_recall,
            std_recall,
        }
    }
}

/// Full outcome of a grid search: the winner, every evaluated point in grid
/// order, and grid points whose training failed.
#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    pub best: CvResult,
    pub report: Vec<CvResult>,
    pub failures: Vec<(ModelSpec, String)>,
}

/// Evaluates every grid point with stratified k-fold cross-validation on
/// identical folds and returns the argmax by mean F1; ties prefer the lower
/// standard deviation, then grid order. Training failures are recorded, not
/// fatal.
pub fn grid_search(
    grid: &Grid,
    data: &LabeledSet,
    k: usize,
    seed: u64,
) -> Result<GridSearchOutcome, MlError> {
    let points = grid.points();
    if points.is_empty() {
        return Err(MlError::BadSpec("empty grid".into()));
    }
    let folds = stratified_kfold(data, k, seed)?;

    let evaluated: Vec<Result<CvResult, (ModelSpec, String)>> = points
        .par_iter()
        .map(|spec| {
            let mut per_fold = Vec::with_capacity(folds.len());
            for fold in &folds {
                let train_set = data.complement(fold);
                let test_set = data.subset(fold);
                let model = train(spec, &train_set, seed)
                    .map_err(|e| (spec.clone(), e.to_string()))?;
                let predictions = model.predict_batch(&test_set.rows);
                per_fold.push(scores(&predictions, &test_set.labels));
            }
            Ok(CvResult::from_folds(spec.clone(), per_fold))
        })
        .collect();

    let mut report = Vec::new();
    let mut failures = Vec::new();
    for item in evaluated {
        match item {
            Ok(result) => report.push(result),
            Err(failure) => failures.push(failure),
        }
    }
    let best = report
        .iter()
        .cloned()
        .reduce(|best, candidate| {
            if candidate.mean_f1 > best.mean_f1
                || (candidate.mean_f1 == best.mean_f1 && candidate.std_f1 < best.std_f1)
            {
                candidate
            } else {
                best
            }
        })
        .ok_or_else(|| MlError::BadSpec("every grid point failed to train".into()))?;
    Ok(GridSearchOutcome {
        best,
        report,
        failures,
    })
}

/// Writes the grid report CSV: one row per evaluated point.
pub fn write_report_csv<W: Write>(
    out: &mut W,
    outcome: &GridSearchOutcome,
    header_comment: Option<&str>,
) -> std::io::Result<()> {
    if let Some(comment) = header_comment {
        writeln!(out, "# {comment}")?;
    }
    writeln!(
        out,
        "algorithm,params,mean_f1,std_f1,mean_precision,std_precision,mean_recall,std_recall"
    )?;
    for row in &outcome.report {
        writeln!(
            out,
            "{},\"{}\",{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            row.spec.algorithm,
            row.spec.params_display(),
            row.mean_f1,
            row.std_f1,
            row.mean_precision,
            row.std_precision,
            row.mean_recall,
            row.std_recall
        )?;
    }
    for (spec, error) in &outcome.failures {
        writeln!(out, "{},\"{}\",failed: {error},,,,,", spec.algorithm, spec.params_display())?;
    }
    Ok(())
}
