//! Shared domain records.

use std::collections::BTreeMap;

/// One tax filer: identifier, raw legal name and per-year turnover.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanyRecord {
    pub id: String,
    pub name: String,
    /// Industry code from the 1974 classification, kept as an opaque string.
    pub industry: String,
    /// Turnover per year, in currency units.
    pub turnover: BTreeMap<i32, f64>,
}

impl CompanyRecord {
    pub fn max_turnover(&self) -> Option<f64> {
        self.turnover
            .values()
            .copied()
            .fold(None, |acc, v| Some(acc.map_or(v, |m: f64| m.max(v))))
    }
}

/// One business-register company: raw name, country of establishment and
/// whether it is registered as a retail company.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterEntry {
    pub name: String,
    pub country: String,
    pub retail: bool,
}
