//! CSV ingestion with schema validation. Errors name the file, line and
//! column; duplicate keys are rejected.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use shopmatch_core::types::{CompanyRecord, RegisterEntry};

use crate::CliError;

/// One url_matches.csv row.
#[derive(Debug, Clone)]
pub struct UrlMatch {
    pub company_id: String,
    pub url: String,
    pub match_probability: f64,
}

/// One labels.csv row; −1 means missing.
#[derive(Debug, Clone, Copy)]
pub struct LabelRow {
    pub label_br: i8,
    pub label_web: i8,
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>, CliError> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))
}

fn check_header(path: &Path, got: &csv::StringRecord, want: &[&str]) -> Result<(), CliError> {
    let got: Vec<&str> = got.iter().collect();
    if got != want {
        return Err(CliError::Data(format!(
            "{}: header must be {}, got {}",
            path.display(),
            want.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

fn field<'a>(
    path: &Path,
    record: &'a csv::StringRecord,
    index: usize,
    name: &str,
) -> Result<&'a str, CliError> {
    record.get(index).ok_or_else(|| {
        CliError::Data(format!(
            "{}:{}: missing column {name}",
            path.display(),
            record.position().map_or(0, |p| p.line())
        ))
    })
}

fn parse_number<T: std::str::FromStr>(
    path: &Path,
    record: &csv::StringRecord,
    index: usize,
    name: &str,
) -> Result<T, CliError> {
    let raw = field(path, record, index, name)?;
    raw.parse().map_err(|_| {
        CliError::Data(format!(
            "{}:{}: column {name}: cannot parse {raw:?}",
            path.display(),
            record.position().map_or(0, |p| p.line())
        ))
    })
}

/// Reads `tax_returns.csv` (company_id,name,industry_1974,year,turnover),
/// grouping year rows per company. Duplicate (company_id, year) pairs and
/// conflicting names are rejected.
pub fn read_tax_returns(path: &Path) -> Result<Vec<CompanyRecord>, CliError> {
    let mut rdr = reader(path)?;
    check_header(
        path,
        rdr.headers()
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        &["company_id", "name", "industry_1974", "year", "turnover"],
    )?;
    let mut by_id: BTreeMap<String, CompanyRecord> = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let id = field(path, &record, 0, "company_id")?.to_string();
        let name = field(path, &record, 1, "name")?.to_string();
        let industry = field(path, &record, 2, "industry_1974")?.to_string();
        let year: i32 = parse_number(path, &record, 3, "year")?;
        let turnover: f64 = parse_number(path, &record, 4, "turnover")?;
        if !turnover.is_finite() {
            return Err(CliError::Data(format!(
                "{}:{line}: column turnover: not finite",
                path.display()
            )));
        }
        match by_id.get_mut(&id) {
            None => {
                let mut turnover_map = BTreeMap::new();
                turnover_map.insert(year, turnover);
                by_id.insert(
                    id.clone(),
                    CompanyRecord {
                        id,
                        name,
                        industry,
                        turnover: turnover_map,
                    },
                );
            }
            Some(existing) => {
                if existing.name != name {
                    return Err(CliError::Data(format!(
                        "{}:{line}: company {id} has conflicting names {:?} and {name:?}",
                        path.display(),
                        existing.name
                    )));
                }
                if existing.turnover.insert(year, turnover).is_some() {
                    return Err(CliError::Data(format!(
                        "{}:{line}: duplicate company_id {id} for year {year}",
                        path.display()
                    )));
                }
            }
        }
    }
    Ok(by_id.into_values().collect())
}

/// Reads `register.csv` (name,country,retail_flag).
pub fn read_register(path: &Path) -> Result<Vec<RegisterEntry>, CliError> {
    let mut rdr = reader(path)?;
    check_header(
        path,
        rdr.headers()
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        &["name", "country", "retail_flag"],
    )?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let retail_raw = field(path, &record, 2, "retail_flag")?;
        let retail = match retail_raw {
            "true" | "1" => true,
            "false" | "0" => false,
            other => {
                return Err(CliError::Data(format!(
                    "{}:{line}: column retail_flag: expected true/false, got {other:?}",
                    path.display()
                )))
            }
        };
        out.push(RegisterEntry {
            name: field(path, &record, 0, "name")?.to_string(),
            country: field(path, &record, 1, "country")?.to_string(),
            retail,
        });
    }
    Ok(out)
}

/// Reads `url_matches.csv` (company_id,url,match_probability); one row per
/// company.
pub fn read_url_matches(path: &Path) -> Result<HashMap<String, UrlMatch>, CliError> {
    let mut rdr = reader(path)?;
    check_header(
        path,
        rdr.headers()
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        &["company_id", "url", "match_probability"],
    )?;
    let mut out = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let id = field(path, &record, 0, "company_id")?.to_string();
        let probability: f64 = parse_number(path, &record, 2, "match_probability")?;
        if !(0.0..=1.0).contains(&probability) {
            return Err(CliError::Data(format!(
                "{}:{line}: column match_probability: {probability} outside [0, 1]",
                path.display()
            )));
        }
        let entry = UrlMatch {
            company_id: id.clone(),
            url: field(path, &record, 1, "url")?.to_string(),
            match_probability: probability,
        };
        if out.insert(id.clone(), entry).is_some() {
            return Err(CliError::Data(format!(
                "{}:{line}: duplicate company_id {id}",
                path.display()
            )));
        }
    }
    Ok(out)
}

/// Reads `labels.csv` (company_id,label_br,label_web) with values in
/// {−1, 0, 1}.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, LabelRow>, CliError> {
    let mut rdr = reader(path)?;
    check_header(
        path,
        rdr.headers()
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
        &["company_id", "label_br", "label_web"],
    )?;
    let mut out = BTreeMap::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let id = field(path, &record, 0, "company_id")?.to_string();
        let label_br: i8 = parse_number(path, &record, 1, "label_br")?;
        let label_web: i8 = parse_number(path, &record, 2, "label_web")?;
        for (name, v) in [("label_br", label_br), ("label_web", label_web)] {
            if !(-1..=1).contains(&v) {
                return Err(CliError::Data(format!(
                    "{}:{line}: column {name}: {v} not in {{-1, 0, 1}}",
                    path.display()
                )));
            }
        }
        if out
            .insert(
                id.clone(),
                LabelRow {
                    label_br,
                    label_web,
                },
            )
            .is_some()
        {
            return Err(CliError::Data(format!(
                "{}:{line}: duplicate company_id {id}",
                path.display()
            )));
        }
    }
    Ok(out)
}

/// Validates that every labeled id exists among the tax records.
pub fn check_label_coverage(
    labels: &BTreeMap<String, LabelRow>,
    companies: &[CompanyRecord],
) -> Result<(), CliError> {
    let known: HashSet<&str> = companies.iter().map(|c| c.id.as_str()).collect();
    for id in labels.keys() {
        if !known.contains(id.as_str()) {
            return Err(CliError::Data(format!(
                "labels reference unknown company_id {id}"
            )));
        }
    }
    Ok(())
}
