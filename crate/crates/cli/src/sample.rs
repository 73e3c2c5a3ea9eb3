//! Labeled-sample selection by industry-dependent turnover thresholds.

use shopmatch_core::types::CompanyRecord;

/// Thresholds per 1974 industry class. Codes other than retail or wholesale
/// fall under the `other` threshold.
#[derive(Debug, Clone, Copy)]
pub struct SampleThresholds {
    pub retail: f64,
    pub wholesale: f64,
    pub other: f64,
}

impl Default for SampleThresholds {
    fn default() -> Self {
        Self {
            retail: 1e6,
            wholesale: 2e7,
            other: 5e7,
        }
    }
}

impl SampleThresholds {
    pub fn for_industry(&self, industry: &str) -> f64 {
        match industry.trim().to_lowercase().as_str() {
            "retail" | "retail trade" => self.retail,
            "wholesale" | "wholesale trade" => self.wholesale,
            _ => self.other,
        }
    }
}

/// Companies whose maximum annual turnover exceeds their industry threshold,
/// in input order: the manual-labeling candidate list.
pub fn label_sample_select<'a>(
    companies: &'a [CompanyRecord],
    thresholds: &SampleThresholds,
) -> Vec<&'a CompanyRecord> {
    companies
        .iter()
        .filter(|c| {
            c.max_turnover()
                .is_some_and(|max| max > thresholds.for_industry(&c.industry))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn company(id: &str, industry: &str, turnovers: &[(i32, f64)]) -> CompanyRecord {
        CompanyRecord {
            id: id.into(),
            name: format!("{id} Ltd"),
            industry: industry.into(),
            turnover: BTreeMap::from_iter(turnovers.iter().copied()),
        }
    }

    #[test]
    fn retail_above_one_million_selected() {
        let companies = vec![company("c1", "Retail", &[(2014, 1.5e6)])];
        let selected = label_sample_select(&companies, &SampleThresholds::default());
        assert_eq!(selected.len(), 1);
    }

    #[test]
    fn retail_below_threshold_not_selected() {
        let companies = vec![company("c1", "Retail", &[(2014, 9e5)])];
        assert!(label_sample_select(&companies, &SampleThresholds::default()).is_empty());
    }

    #[test]
    fn other_industry_uses_fifty_million() {
        let companies = vec![
            company("c1", "Mining", &[(2014, 6e7)]),
            company("c2", "Mining", &[(2014, 4e7)]),
        ];
        let selected = label_sample_select(&companies, &SampleThresholds::default());
        assert_eq!(selected.len(), 1);
        assert_eq!(selected[0].id, "c1");
    }

    #[test]
    fn max_over_years_decides() {
        let companies = vec![company("c1", "Retail", &[(2014, 5e5), (2016, 1.2e6)])];
        assert_eq!(
            label_sample_select(&companies, &SampleThresholds::default()).len(),
            1
        );
    }

    #[test]
    fn wholesale_threshold() {
        let companies = vec![
            company("c1", "Wholesale", &[(2014, 2.5e7)]),
            company("c2", "Wholesale Trade", &[(2014, 1.9e7)]),
        ];
        let selected = label_sample_select(&companies, &SampleThresholds::default());
        assert_eq!(selected.len(), 1);
        assert_eq!(selected[0].id, "c1");
    }
}
