//! Candidate generation and distance feature vectors for tax-filer names.
//!
//! Each tax-filer stem is matched against an indexed register: the LSH forest
//! proposes the approximately most similar register stems, those are filtered
//! to compatible suffix classes, and the minimum distance under each of the
//! eight metrics becomes one component of the feature vector.

use std::io::Write;

use rayon::prelude::*;

use crate::lshforest::LshForest;
use crate::normalize::{clean_name, CleanName, StemmedName, SuffixClasses, SuffixTable};
use crate::strdist::{distance_profiled, MetricId, StringProfile};
use crate::types::RegisterEntry;

/// Tax stems shorter than this yield missing features.
pub const MIN_STEM_CHARS: usize = 3;

/// One register row after stemming, as referenced by candidate sets.
#[derive(Debug, Clone)]
pub struct RegisterStem {
    /// Index of the row in the ingested register.
    pub row: u32,
    pub stem: CleanName,
    pub suffix_start: String,
}

/// Register prepared for matching: stemmed rows, an LSH forest over the
/// unique stems, and per-stem string profiles for fast distance evaluation.
pub struct IndexedRegister {
    entries: Vec<RegisterStem>,
    forest: LshForest,
    /// Forest stem id → indices into `entries`.
    stem_entries: Vec<Vec<u32>>,
    /// Forest stem id → precomputed profile.
    profiles: Vec<StringProfile>,
}

impl IndexedRegister {
    /// Stems all register rows (skipping names that clean to nothing) and
    /// builds the forest. Only rows flagged as retail participate.
    pub fn build(
        register: &[RegisterEntry],
        table: &SuffixTable,
        trees: usize,
        total_hashes: usize,
        seed: u64,
    ) -> Result<Self, crate::lshforest::LshError> {
        let mut entries = Vec::new();
        for (row, entry) in register.iter().enumerate() {
            if !entry.retail {
                continue;
            }
            let Ok(clean) = clean_name(&entry.name) else {
                continue;
            };
            let stemmed = table.stem(&clean);
            entries.push(RegisterStem {
                row: row as u32,
                stem: stemmed.stem,
                suffix_start: stemmed.suffix_start,
            });
        }
        let stems: Vec<&str> = entries.iter().map(|e| e.stem.as_str()).collect();
        let forest = crate::lshforest::build_forest(&stems, trees, total_hashes, seed)?;

        let mut stem_entries = vec![Vec::new(); forest.len()];
        let mut lookup = std::collections::HashMap::with_capacity(forest.len());
        for (id, stem) in forest.stems().iter().enumerate() {
            lookup.insert(stem.as_str(), id);
        }
        for (i, e) in entries.iter().enumerate() {
            let id = lookup[e.stem.as_str()];
            stem_entries[id].push(i as u32);
        }
        let profiles = forest
            .stems()
            .iter()
            .map(|s| StringProfile::new(s))
            .collect();
        Ok(Self {
            entries,
            forest,
            stem_entries,
            profiles,
        })
    }

    pub fn entries(&self) -> &[RegisterStem] {
        &self.entries
    }

    pub fn forest(&self) -> &LshForest {
        &self.forest
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// A register candidate for one query: the entry index plus its unique-stem
/// id in the forest.
#[derive(Debug, Clone, Copy)]
pub struct Candidate {
    pub entry: u32,
    stem_id: u32,
}

/// Queries the forest for the top-m stems and keeps entries whose suffix
/// class is compatible with the query's. Names without a suffix match any
/// class.
pub fn candidate_set(
    tax_stem: &StemmedName,
    index: &IndexedRegister,
    classes: &SuffixClasses,
    m: usize,
) -> Vec<Candidate> {
    if index.is_empty() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for stem_id in index.forest.query_top_m(tax_stem.stem.as_str(), m) {
        for &entry in &index.stem_entries[stem_id as usize] {
            let suffix = &index.entries[entry as usize].suffix_start;
            if classes.compatible(&tax_stem.suffix_start, suffix) {
                out.push(Candidate { entry, stem_id });
            }
        }
    }
    out
}

/// 8-vector of minimum distances, one per metric, with the register entry
/// attaining each minimum. `missing` is set when the stem is shorter than
/// [`MIN_STEM_CHARS`] characters or no compatible candidate exists.
#[derive(Debug, Clone)]
pub struct DistanceFeatures {
    pub values: [f64; 8],
    /// Register entry index attaining the minimum, per metric.
    pub best_match: [Option<u32>; 8],
    pub missing: bool,
}

impl DistanceFeatures {
    pub fn missing() -> Self {
        Self {
            values: [1.0; 8],
            best_match: [None; 8],
            missing: true,
        }
    }

    /// The representative match reported in feature exports: the best
    /// candidate under the Jaccard trigram metric that also drives the
    /// forest ranking.
    pub fn representative_match(&self) -> Option<u32> {
        self.best_match[MetricId::Jaccard3.index()]
    }
}

/// Computes the per-metric minima over the candidate set.
pub fn feature_vector(
    tax_stem: &StemmedName,
    candidates: &[Candidate],
    index: &IndexedRegister,
) -> DistanceFeatures {
    if tax_stem.stem.as_str().chars().count() < MIN_STEM_CHARS || candidates.is_empty() {
        return DistanceFeatures::missing();
    }
    let query = StringProfile::new(tax_stem.stem.as_str());
    let mut values = [f64::INFINITY; 8];
    let mut best_match = [None; 8];
    let mut seen_stem = vec![false; index.forest.len()];
    for cand in candidates {
        // Entries sharing a stem have identical distances; evaluate once.
        if seen_stem[cand.stem_id as usize] {
            continue;
        }
        seen_stem[cand.stem_id as usize] = true;
        let profile = &index.profiles[cand.stem_id as usize];
        for metric in MetricId::ALL {
            let i = metric.index();
            let d = distance_profiled(metric, &query, profile);
            if d < values[i] {
                values[i] = d;
                best_match[i] = Some(cand.entry);
            }
        }
    }
    DistanceFeatures {
        values,
        best_match,
        missing: false,
    }
}

/// Features of one tax filer, keyed by company id.
#[derive(Debug, Clone)]
pub struct LinkedCompany {
    pub company_id: String,
    pub features: DistanceFeatures,
}

/// Stems every tax-filer name and computes its feature vector against the
/// indexed register. Output order follows ascending company id regardless of
/// parallel scheduling.
pub fn link_companies(
    companies: &[(String, String)],
    table: &SuffixTable,
    index: &IndexedRegister,
    classes: &SuffixClasses,
    m: usize,
) -> Vec<LinkedCompany> {
    let mut sorted: Vec<&(String, String)> = companies.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    sorted
        .par_iter()
        .map(|(id, name)| {
            let features = match clean_name(name) {
                Ok(clean) => {
                    let stemmed = table.stem(&clean);
                    let candidates = candidate_set(&stemmed, index, classes, m);
                    feature_vector(&stemmed, &candidates, index)
                }
                Err(_) => DistanceFeatures::missing(),
            };
            LinkedCompany {
                company_id: id.clone(),
                features,
            }
        })
        .collect()
}

/// Writes the feature CSV:
/// `company_id,missing,lev_norm,...,cosine_3,best_match_id`.
/// Missing rows leave the value columns empty.
pub fn write_features_csv<W: Write>(
    out: &mut W,
    linked: &[LinkedCompany],
    header_comment: Option<&str>,
) -> std::io::Result<()> {
    if let Some(comment) = header_comment {
        writeln!(out, "# {comment}")?;
    }
    write!(out, "company_id,missing")?;
    for metric in MetricId::ALL {
        write!(out, ",{}", metric.name())?;
    }
    writeln!(out, ",best_match_id")?;
    for row in linked {
        write!(out, "{},{}", row.company_id, row.features.missing)?;
        if row.features.missing {
            write!(out, ",,,,,,,,")?;
        } else {
            for v in row.features.values {
                write!(out, ",{v}")?;
            }
        }
        match row.features.representative_match() {
            Some(entry) => writeln!(out, ",{entry}")?,
            None => writeln!(out, ",")?,
        }
    }
    Ok(())
}

pub use crate::lshforest::DEFAULT_TOP_M as DEFAULT_M;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::{build_suffix_table, KnownEntities};

    fn register(names: &[(&str, &str)]) -> Vec<RegisterEntry> {
        names
            .iter()
            .map(|(name, country)| RegisterEntry {
                name: name.to_string(),
                country: country.to_string(),
                retail: true,
            })
            .collect()
    }

    fn fixture() -> (Vec<RegisterEntry>, SuffixTable, SuffixClasses) {
        let reg = register(&[
            ("Acme Trading Limited", "GB"),
            ("Beta Handel GmbH", "DE"),
            ("Acme Trading GmbH", "DE"),
            ("Webshop Noord B.V.", "NL"),
            ("Zeta Retail Ltd", "GB"),
        ]);
        let known = KnownEntities::builtin();
        let table = build_suffix_table(&reg, &known, 4, 50);
        let classes = SuffixClasses::from_known(&known);
        (reg, table, classes)
    }

    #[test]
    fn suffix_class_filter_keeps_abbreviation_matches() {
        let (reg, table, classes) = fixture();
        let index = IndexedRegister::build(&reg, &table, 8, 64, 1).unwrap();
        let query = table.stem(&clean_name("Acme Trading Ltd").unwrap());
        assert_eq!(query.suffix_start, "ltd");
        let cands = candidate_set(&query, &index, &classes, 100);
        let stems: Vec<&str> = cands
            .iter()
            .map(|c| index.entries()[c.entry as usize].stem.as_str())
            .collect();
        assert!(stems.contains(&"acme trading"));
        // "acme trading" appears twice, once with suffix "limited" (kept)
        // and once with "gmbh" (filtered).
        let kept: Vec<&RegisterStem> = cands
            .iter()
            .map(|c| &index.entries()[c.entry as usize])
            .filter(|e| e.stem.as_str() == "acme trading")
            .collect();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].suffix_start, "limited");
    }

    #[test]
    fn empty_register_yields_empty_candidates() {
        let (_, table, classes) = fixture();
        let reg: Vec<RegisterEntry> = Vec::new();
        assert!(IndexedRegister::build(&reg, &table, 8, 64, 1).is_err());
        // An index with rows but none retail behaves as empty too.
        let non_retail = vec![RegisterEntry {
            name: "Acme Ltd".into(),
            country: "GB".into(),
            retail: false,
        }];
        assert!(IndexedRegister::build(&non_retail, &table, 8, 64, 1).is_err());
        let _ = classes;
    }

    #[test]
    fn exact_match_gives_zero_vector() {
        let (reg, table, classes) = fixture();
        let index = IndexedRegister::build(&reg, &table, 8, 64, 1).unwrap();
        let query = table.stem(&clean_name("Acme Trading Limited").unwrap());
        let cands = candidate_set(&query, &index, &classes, 100);
        let features = feature_vector(&query, &cands, &index);
        assert!(!features.missing);
        assert_eq!(features.values, [0.0; 8]);
    }

    #[test]
    fn short_stem_is_missing() {
        let (reg, table, classes) = fixture();
        let index = IndexedRegister::build(&reg, &table, 8, 64, 1).unwrap();
        let query = table.stem(&clean_name("ab").unwrap());
        let cands = candidate_set(&query, &index, &classes, 100);
        let features = feature_vector(&query, &cands, &index);
        assert!(features.missing);
    }

    #[test]
    fn lev_minimum_against_single_candidate() {
        let reg = register(&[("acm", "GB")]);
        let known = KnownEntities::default();
        let table = build_suffix_table(&reg, &known, 4, 50);
        let classes = SuffixClasses::default();
        let index = IndexedRegister::build(&reg, &table, 8, 64, 1).unwrap();
        let query = StemmedName {
            stem: clean_name("acme").unwrap(),
            suffix_start: String::new(),
        };
        let cands = candidate_set(&query, &index, &classes, 100);
        let features = feature_vector(&query, &cands, &index);
        let lev = features.values[MetricId::LevNorm.index()];
        assert!((lev - 0.25).abs() < 1e-12);
    }

    #[test]
    fn batch_equals_individual_queries() {
        let (reg, table, classes) = fixture();
        let index = IndexedRegister::build(&reg, &table, 8, 64, 1).unwrap();
        let companies = vec![
            ("c2".to_string(), "Beta Handel GmbH".to_string()),
            ("c1".to_string(), "Acme Trading Ltd".to_string()),
            ("c3".to_string(), "Onbekend".to_string()),
        ];
        let batch = link_companies(&companies, &table, &index, &classes, 100);
        assert_eq!(batch.len(), 3);
        // Output sorted by company id.
        assert_eq!(batch[0].company_id, "c1");
        assert_eq!(batch[1].company_id, "c2");
        for row in &batch {
            let (_, name) = companies
                .iter()
                .find(|(id, _)| *id == row.company_id)
                .unwrap();
            let stemmed = table.stem(&clean_name(name).unwrap());
            let cands = candidate_set(&stemmed, &index, &classes, 100);
            let single = feature_vector(&stemmed, &cands, &index);
            assert_eq!(single.missing, row.features.missing);
            assert_eq!(single.values, row.features.values);
        }
    }

    #[test]
    fn csv_layout_matches_metric_order() {
        let (reg, table, classes) = fixture();
        let index = IndexedRegister::build(&reg, &table, 8, 64, 1).unwrap();
        let companies = vec![("c1".to_string(), "Acme Trading Ltd".to_string())];
        let linked = link_companies(&companies, &table, &index, &classes, 100);
        let mut buf = Vec::new();
        write_features_csv(&mut buf, &linked, Some("seed=1")).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with('#'));
        assert_eq!(
            lines.next().unwrap(),
            "company_id,missing,lev_norm,jaro_winkler,jaccard_1,jaccard_2,jaccard_3,\
             cosine_1,cosine_2,cosine_3,best_match_id"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("c1,false,"));
        let _ = DEFAULT_M;
    }
}
