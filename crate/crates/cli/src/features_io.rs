//! Readers for the feature CSVs produced by the link and webfeat stages.

use std::path::Path;

use crate::CliError;

/// One row of `distance_features.csv`.
#[derive(Debug, Clone)]
pub struct DistanceRow {
    pub company_id: String,
    pub missing: bool,
    pub values: [f64; 8],
}

/// One row of `web_features.csv`.
#[derive(Debug, Clone)]
pub struct WebRow {
    pub company_id: String,
    pub missing: bool,
    pub tfidf: [f64; 8],
    pub match_probability: f64,
}

fn open(path: &Path) -> Result<csv::Reader<std::fs::File>, CliError> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))
}

pub fn read_distance_features(path: &Path) -> Result<Vec<DistanceRow>, CliError> {
    let mut rdr = open(path)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |what: &str| {
            CliError::Data(format!("{}:{line}: {what}", path.display()))
        };
        let company_id = record.get(0).ok_or_else(|| bad("missing company_id"))?.to_string();
        let missing: bool = record
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad missing flag"))?;
        let mut values = [1.0f64; 8];
        if !missing {
            for (i, value) in values.iter_mut().enumerate() {
                *value = record
                    .get(2 + i)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad("bad distance value"))?;
            }
        }
        out.push(DistanceRow {
            company_id,
            missing,
            values,
        });
    }
    Ok(out)
}

pub fn read_web_features(path: &Path) -> Result<Vec<WebRow>, CliError> {
    let mut rdr = open(path)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |what: &str| CliError::Data(format!("{}:{line}: {what}", path.display()));
        let company_id = record.get(0).ok_or_else(|| bad("missing company_id"))?.to_string();
        let missing: bool = record
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad missing flag"))?;
        let mut tfidf = [0.0f64; 8];
        for (i, value) in tfidf.iter_mut().enumerate() {
            *value = record
                .get(2 + i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad("bad tfidf value"))?;
        }
        let match_probability: f64 = record
            .get(10)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("bad match_probability"))?;
        out.push(WebRow {
            company_id,
            missing,
            tfidf,
            match_probability,
        });
    }
    Ok(out)
}

/// One row of `classifications.csv`.
#[derive(Debug, Clone, Copy)]
pub struct ClassificationRow {
    pub s_br: i8,
    pub s_web: i8,
    pub s_combined: i8,
}

pub fn read_classifications(
    path: &Path,
) -> Result<std::collections::BTreeMap<String, ClassificationRow>, CliError> {
    let mut rdr = open(path)?;
    let mut out = std::collections::BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |what: &str| CliError::Data(format!("{}:{line}: {what}", path.display()));
        let id = record.get(0).ok_or_else(|| bad("missing company_id"))?.to_string();
        let parse = |i: usize| -> Result<i8, CliError> {
            record
                .get(i)
                .and_then(|v| v.parse().ok())
                .filter(|v| (-1..=1).contains(v))
                .ok_or_else(|| bad("bad label"))
        };
        let row = ClassificationRow {
            s_br: parse(1)?,
            s_web: parse(2)?,
            s_combined: parse(3)?,
        };
        out.insert(id, row);
    }
    Ok(out)
}
