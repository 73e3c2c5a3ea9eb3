//! Pipeline stages and their orchestration.
//!
//! Stages write their outputs under the configured output directory and are
//! skipped on rerun when a content hash of their inputs and parameters is
//! unchanged. A lock file guards the output directory against concurrent
//! runs.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use shopmatch_core::estimator::{self, Label3, YearEstimate};
use shopmatch_core::linkage::{self, IndexedRegister};
use shopmatch_core::lshforest::LshForest;
use shopmatch_core::normalize::{
    build_suffix_table, KnownEntities, SuffixClasses, SuffixTable,
};
use shopmatch_core::types::CompanyRecord;
use shopmatch_core::webfeat::{self, PageResult};
use shopmatch_mlkit as mlkit;

use crate::config::{file_hash, hex_prefix, RunConfig};
use crate::features_io::{
    read_classifications, read_distance_features, read_web_features, ClassificationRow,
};
use crate::sample::{label_sample_select, SampleThresholds};
use crate::schema::{self, LabelRow};
use crate::CliError;

/// Exclusive ownership of the output directory for the process lifetime.
pub struct OutDirLock {
    path: PathBuf,
}

impl OutDirLock {
    pub fn acquire(out_dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Data(format!("cannot create {}: {e}", out_dir.display())))?;
        let path = out_dir.join(".lock");
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Config(format!(
                    "output directory is locked by another run ({}); remove the stale lock if no run is active",
                    path.display()
                )))
            }
            Err(e) => Err(CliError::Data(format!(
                "cannot create lock {}: {e}",
                path.display()
            ))),
        }
    }
}

impl Drop for OutDirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

pub struct Pipeline {
    pub config: RunConfig,
}

impl Pipeline {
    pub fn new(config: RunConfig) -> Self {
        Self { config }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.config.out_dir.join(name)
    }

    fn header(&self) -> String {
        self.config.header_comment()
    }

    /// Runs `build` unless the cached stage key matches and every output
    /// exists. Returns true when the stage was skipped.
    fn cached_stage(
        &self,
        name: &str,
        key_parts: &[String],
        outputs: &[PathBuf],
        build: impl FnOnce() -> Result<(), CliError>,
    ) -> Result<bool, CliError> {
        let cache_dir = self.out(".cache");
        std::fs::create_dir_all(&cache_dir)
            .map_err(|e| CliError::Data(format!("cannot create cache dir: {e}")))?;
        let key = {
            let mut hasher = Sha256::new();
            for part in key_parts {
                hasher.update(part.as_bytes());
                hasher.update([0]);
            }
            hex_prefix(&hasher.finalize(), 16)
        };
        let key_path = cache_dir.join(format!("{name}.key"));
        let fresh = std::fs::read_to_string(&key_path)
            .map(|cached| cached.trim() == key)
            .unwrap_or(false)
            && outputs.iter().all(|p| p.exists());
        if fresh {
            eprintln!("stage {name}: unchanged, skipping");
            return Ok(true);
        }
        build().map_err(|e| e.in_stage(name))?;
        std::fs::write(&key_path, key)
            .map_err(|e| CliError::Data(format!("cannot write cache key: {e}")))?;
        eprintln!("stage {name}: done");
        Ok(false)
    }

    fn known_entities(&self) -> Result<KnownEntities, CliError> {
        match &self.config.known_entities {
            Some(path) => KnownEntities::from_csv_path(path)
                .map_err(|e| CliError::Data(e.to_string())),
            None => Ok(KnownEntities::builtin()),
        }
    }

    /// Stage 1: learn the suffix table from the register.
    pub fn stage_stem(&self) -> Result<bool, CliError> {
        let out_path = self.out("suffix_table.csv");
        let key = vec![
            "stem".to_string(),
            file_hash(&self.config.register)?,
            self.config.suffix_top_k.to_string(),
            self.config.suffix_max_words.to_string(),
            match &self.config.known_entities {
                Some(p) => file_hash(p)?,
                None => "builtin".to_string(),
            },
        ];
        self.cached_stage("stem", &key, &[out_path.clone()], || {
            let register = schema::read_register(&self.config.register)?;
            let known = self.known_entities()?;
            let table = build_suffix_table(
                &register,
                &known,
                self.config.suffix_max_words,
                self.config.suffix_top_k,
            );
            let mut buf = Vec::new();
            writeln!(buf, "# {}", self.header())
                .and_then(|_| table.to_csv(&mut buf).map_err(std::io::Error::other))
                .map_err(|e| CliError::Data(e.to_string()))?;
            std::fs::write(&out_path, buf)
                .map_err(|e| CliError::Data(format!("writing suffix table: {e}")))?;
            Ok(())
        })
    }

    fn load_suffix_table(&self) -> Result<SuffixTable, CliError> {
        SuffixTable::from_csv_path(&self.out("suffix_table.csv"))
            .map_err(|e| CliError::Data(e.to_string()))
    }

    /// Stage 2: build and persist the LSH forest over register stems.
    pub fn stage_index(&self) -> Result<bool, CliError> {
        let forest_path = self.out("forest.bin");
        let key = vec![
            "index".to_string(),
            file_hash(&self.config.register)?,
            file_hash(&self.out("suffix_table.csv"))?,
            self.config.lsh_trees.to_string(),
            self.config.lsh_hashes.to_string(),
            self.config.seed.to_string(),
        ];
        self.cached_stage("index", &key, &[forest_path.clone()], || {
            let register = schema::read_register(&self.config.register)?;
            let table = self.load_suffix_table()?;
            let index = IndexedRegister::build(
                &register,
                &table,
                self.config.lsh_trees,
                self.config.lsh_hashes,
                self.config.seed,
            )
            .map_err(|e| CliError::Data(e.to_string()))?;
            index
                .forest()
                .save(&forest_path)
                .map_err(|e| CliError::Data(e.to_string()))?;
            Ok(())
        })
    }

    /// The indexed register is rebuilt from inputs on demand; the persisted
    /// forest serves external consumers and the cache key.
    fn build_indexed_register(&self) -> Result<(IndexedRegister, SuffixTable), CliError> {
        let register = schema::read_register(&self.config.register)?;
        let table = self.load_suffix_table()?;
        let index = IndexedRegister::build(
            &register,
            &table,
            self.config.lsh_trees,
            self.config.lsh_hashes,
            self.config.seed,
        )
        .map_err(|e| CliError::Data(e.to_string()))?;
        Ok((index, table))
    }

    /// Stage 3: distance feature vectors for every tax filer.
    pub fn stage_link(&self) -> Result<bool, CliError> {
        let out_path = self.out("distance_features.csv");
        let key = vec![
            "link".to_string(),
            file_hash(&self.config.tax_returns)?,
            file_hash(&self.out("forest.bin"))?,
            file_hash(&self.out("suffix_table.csv"))?,
            self.config.top_m.to_string(),
            self.config.min_stem_chars.to_string(),
        ];
        self.cached_stage("link", &key, &[out_path.clone()], || {
            let companies = schema::read_tax_returns(&self.config.tax_returns)?;
            let (index, table) = self.build_indexed_register()?;
            let classes = SuffixClasses::from_known(&self.known_entities()?);
            let pairs: Vec<(String, String)> = companies
                .iter()
                .map(|c| (c.id.clone(), c.name.clone()))
                .collect();
            let linked =
                linkage::link_companies(&pairs, &table, &index, &classes, self.config.top_m);
            let mut buf = Vec::new();
            linkage::write_features_csv(&mut buf, &linked, Some(&self.header()))
                .map_err(|e| CliError::Data(e.to_string()))?;
            std::fs::write(&out_path, buf)
                .map_err(|e| CliError::Data(format!("writing features: {e}")))?;
            Ok(())
        })
    }

    /// Stage 4: web features from the offline page directory.
    pub fn stage_webfeat(&self) -> Result<bool, CliError> {
        let out_path = self.out("web_features.csv");
        let key = vec![
            "webfeat".to_string(),
            file_hash(&self.config.tax_returns)?,
            file_hash(&self.config.url_matches)?,
            hash_dir(&self.config.html_dir)?,
            self.config.match_probability_gate.to_string(),
        ];
        self.cached_stage("webfeat", &key, &[out_path.clone()], || {
            let companies = schema::read_tax_returns(&self.config.tax_returns)?;
            let matches = schema::read_url_matches(&self.config.url_matches)?;
            let pages = collect_pages(&companies, &matches, &self.config.html_dir);
            let rows = webfeat::features_from_pages(&pages);
            let mut buf = Vec::new();
            webfeat::write_features_csv(&mut buf, &rows, Some(&self.header()))
                .map_err(|e| CliError::Data(e.to_string()))?;
            std::fs::write(&out_path, buf)
                .map_err(|e| CliError::Data(format!("writing web features: {e}")))?;
            Ok(())
        })
    }

    /// Stage 5: train both classifiers on the manual set and classify every
    /// company.
    pub fn stage_classify(&self) -> Result<bool, CliError> {
        let out_path = self.out("classifications.csv");
        for (input, stage) in [
            ("distance_features.csv", "link"),
            ("web_features.csv", "webfeat"),
        ] {
            if !self.out(input).exists() {
                return Err(CliError::Config(format!(
                    "{input} not found in {}; run the {stage} stage first",
                    self.config.out_dir.display()
                )));
            }
        }
        let key = vec![
            "classify".to_string(),
            file_hash(&self.out("distance_features.csv"))?,
            file_hash(&self.out("web_features.csv"))?,
            file_hash(&self.config.labels)?,
            file_hash(&self.config.tax_returns)?,
            self.config.br_model.clone(),
            self.config.web_model.clone(),
            self.config.seed.to_string(),
            format!(
                "{},{},{}",
                self.config.threshold_retail,
                self.config.threshold_wholesale,
                self.config.threshold_other
            ),
        ];
        self.cached_stage("classify", &key, &[out_path.clone()], || {
            let companies = schema::read_tax_returns(&self.config.tax_returns)?;
            let labels = schema::read_labels(&self.config.labels)?;
            schema::check_label_coverage(&labels, &companies)?;
            let split = self.split_labeled(&companies, &labels);
            let classifications = self.classify(&companies, &labels, &split)?;
            let mut buf = Vec::new();
            writeln!(buf, "# {}", self.header()).map_err(|e| CliError::Data(e.to_string()))?;
            writeln!(buf, "company_id,s_br,s_web,s_combined")
                .map_err(|e| CliError::Data(e.to_string()))?;
            for (id, row) in &classifications {
                writeln!(buf, "{id},{},{},{}", row.s_br, row.s_web, row.s_combined)
                    .map_err(|e| CliError::Data(e.to_string()))?;
            }
            std::fs::write(&out_path, buf)
                .map_err(|e| CliError::Data(format!("writing classifications: {e}")))?;
            Ok(())
        })
    }

    /// Stage 6: error matrix, bias correction and the estimate report.
    pub fn stage_estimate(&self) -> Result<bool, CliError> {
        let estimates_path = self.out("estimates.csv");
        let matrix_path = self.out("error_matrix.csv");
        let unclassified_path = self.out("unclassified.csv");
        if !self.out("classifications.csv").exists() {
            return Err(CliError::Config(format!(
                "classifications.csv not found in {}; run the classify stage first",
                self.config.out_dir.display()
            )));
        }
        let key = vec![
            "estimate".to_string(),
            file_hash(&self.out("classifications.csv"))?,
            file_hash(&self.config.labels)?,
            file_hash(&self.config.tax_returns)?,
            self.config.lambda_tol.to_string(),
            self.config.lambda_max_iter.to_string(),
            self.config
                .years
                .iter()
                .map(|y| y.to_string())
                .collect::<Vec<_>>()
                .join(","),
        ];
        self.cached_stage(
            "estimate",
            &key,
            &[
                estimates_path.clone(),
                matrix_path.clone(),
                unclassified_path.clone(),
            ],
            || {
                let companies = schema::read_tax_returns(&self.config.tax_returns)?;
                let labels = schema::read_labels(&self.config.labels)?;
                let classifications = read_classifications(&self.out("classifications.csv"))?;
                let split = self.split_labeled(&companies, &labels);
                let outcome =
                    self.estimate(&companies, &labels, &classifications, &split)?;

                let mut buf = Vec::new();
                estimator::write_report_csv(&mut buf, &outcome.estimates, Some(&self.header()))
                    .map_err(|e| CliError::Data(e.to_string()))?;
                std::fs::write(&estimates_path, buf)
                    .map_err(|e| CliError::Data(format!("writing estimates: {e}")))?;

                let mut buf = Vec::new();
                let _ = writeln!(buf, "# {}", self.header());
                let _ = writeln!(buf, "tp,fp,tn,fn,p11,p10,p01,p00");
                let p = outcome.model.p.0;
                let _ = writeln!(
                    buf,
                    "{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
                    outcome.confusion.tp,
                    outcome.confusion.fp,
                    outcome.confusion.tn,
                    outcome.confusion.fn_,
                    p[0][0],
                    p[0][1],
                    p[1][0],
                    p[1][1]
                );
                std::fs::write(&matrix_path, buf)
                    .map_err(|e| CliError::Data(format!("writing error matrix: {e}")))?;

                let mut buf = Vec::new();
                let _ = writeln!(buf, "# {}", self.header());
                let _ = writeln!(buf, "year,unclassified_count,unclassified_turnover");
                for (year, (count, turnover)) in &outcome.unclassified {
                    let _ = writeln!(buf, "{year},{count},{turnover}");
                }
                std::fs::write(&unclassified_path, buf)
                    .map_err(|e| CliError::Data(format!("writing unclassified: {e}")))?;
                Ok(())
            },
        )
    }

    /// The manual set: labeled companies passing the industry-threshold
    /// rule. Labeled companies outside it form the held-out test set.
    pub fn split_labeled(
        &self,
        companies: &[CompanyRecord],
        labels: &BTreeMap<String, LabelRow>,
    ) -> LabeledSplit {
        let thresholds = SampleThresholds {
            retail: self.config.threshold_retail,
            wholesale: self.config.threshold_wholesale,
            other: self.config.threshold_other,
        };
        let selected: HashSet<String> = label_sample_select(companies, &thresholds)
            .into_iter()
            .map(|c| c.id.clone())
            .collect();
        let mut manual = HashSet::new();
        let mut test = HashSet::new();
        for id in labels.keys() {
            if selected.contains(id) {
                manual.insert(id.clone());
            } else {
                test.insert(id.clone());
            }
        }
        LabeledSplit { manual, test }
    }

    /// Assembles the two training sets from the manual split: distance
    /// features with the BR registration labels, and web features (8 TF.IDF
    /// values plus the matching probability) with the webshop labels. Rows
    /// with missing features or a −1 label stay out.
    pub fn training_sets(&self) -> Result<TrainingSets, CliError> {
        let companies = schema::read_tax_returns(&self.config.tax_returns)?;
        let labels = schema::read_labels(&self.config.labels)?;
        schema::check_label_coverage(&labels, &companies)?;
        let split = self.split_labeled(&companies, &labels);
        let distance_rows = read_distance_features(&self.out("distance_features.csv"))?;
        let web_rows = read_web_features(&self.out("web_features.csv"))?;
        let distances: HashMap<&str, &crate::features_io::DistanceRow> = distance_rows
            .iter()
            .map(|r| (r.company_id.as_str(), r))
            .collect();
        let web: HashMap<&str, &crate::features_io::WebRow> =
            web_rows.iter().map(|r| (r.company_id.as_str(), r)).collect();

        let mut br_ids = Vec::new();
        let mut br_features = Vec::new();
        let mut br_labels = Vec::new();
        let mut web_ids = Vec::new();
        let mut web_features = Vec::new();
        let mut web_labels = Vec::new();
        let mut manual: Vec<&String> = split.manual.iter().collect();
        manual.sort();
        for id in manual {
            let label = labels[id];
            if label.label_br >= 0 {
                if let Some(row) = distances.get(id.as_str()) {
                    if !row.missing {
                        br_ids.push(id.clone());
                        br_features.push(row.values.to_vec());
                        br_labels.push(label.label_br as u8);
                    }
                }
            }
            if label.label_web >= 0 {
                if let Some(row) = web.get(id.as_str()) {
                    if !row.missing {
                        web_ids.push(id.clone());
                        let mut features = row.tfidf.to_vec();
                        features.push(row.match_probability);
                        web_features.push(features);
                        web_labels.push(label.label_web as u8);
                    }
                }
            }
        }
        Ok(TrainingSets {
            br: mlkit::LabeledSet::new(br_ids, br_features, br_labels)
                .map_err(|e| CliError::Data(e.to_string()))?,
            web: mlkit::LabeledSet::new(web_ids, web_features, web_labels)
                .map_err(|e| CliError::Data(e.to_string()))?,
        })
    }

    fn classify(
        &self,
        companies: &[CompanyRecord],
        labels: &BTreeMap<String, LabelRow>,
        split: &LabeledSplit,
    ) -> Result<BTreeMap<String, ClassificationRow>, CliError> {
        let _ = (labels, split);
        let distance_rows = read_distance_features(&self.out("distance_features.csv"))?;
        let web_rows = read_web_features(&self.out("web_features.csv"))?;
        let distances: HashMap<&str, &crate::features_io::DistanceRow> = distance_rows
            .iter()
            .map(|r| (r.company_id.as_str(), r))
            .collect();
        let web: HashMap<&str, &crate::features_io::WebRow> =
            web_rows.iter().map(|r| (r.company_id.as_str(), r)).collect();

        let sets = self.training_sets()?;
        let br_spec = RunConfig::parse_model(&self.config.br_model)?;
        if !br_spec.algorithm.suits_continuous_features() {
            return Err(CliError::Config(format!(
                "algorithm {} assumes count features and cannot score continuous distances",
                br_spec.algorithm
            )));
        }
        let web_spec = RunConfig::parse_model(&self.config.web_model)?;
        let br_model = mlkit::train(&br_spec, &sets.br, self.config.seed)
            .map_err(|e| CliError::Data(format!("training BR model: {e}")))?;
        let web_model = mlkit::train(&web_spec, &sets.web, self.config.seed)
            .map_err(|e| CliError::Data(format!("training web model: {e}")))?;

        let mut out = BTreeMap::new();
        for company in companies {
            let s_br = match distances.get(company.id.as_str()) {
                Some(row) if !row.missing => br_model.predict(&row.values) as i8,
                _ => -1,
            };
            let s_web = match web.get(company.id.as_str()) {
                Some(row) if !row.missing => {
                    let mut features = row.tfidf.to_vec();
                    features.push(row.match_probability);
                    web_model.predict(&features) as i8
                }
                _ => -1,
            };
            let combined = estimator::combine(
                Label3::from_i8(s_br).unwrap(),
                Label3::from_i8(s_web).unwrap(),
            );
            out.insert(
                company.id.clone(),
                ClassificationRow {
                    s_br,
                    s_web,
                    s_combined: combined.as_i8(),
                },
            );
        }
        Ok(out)
    }

    fn estimate(
        &self,
        companies: &[CompanyRecord],
        labels: &BTreeMap<String, LabelRow>,
        classifications: &BTreeMap<String, ClassificationRow>,
        split: &LabeledSplit,
    ) -> Result<EstimateOutcome, CliError> {
        // Error matrix from the held-out test set: model vs manual webshop
        // truth, over rows where both are defined.
        let mut confusion = mlkit::ConfusionCounts::default();
        for id in &split.test {
            let truth = labels[id].label_web;
            if truth < 0 {
                continue;
            }
            let Some(row) = classifications.get(id) else {
                continue;
            };
            if row.s_combined < 0 {
                continue;
            }
            match (row.s_combined, truth) {
                (1, 1) => confusion.tp += 1,
                (1, 0) => confusion.fp += 1,
                (0, 0) => confusion.tn += 1,
                (0, 1) => confusion.fn_ += 1,
                _ => unreachable!(),
            }
        }
        let model = estimator::estimate_error_matrix(
            confusion.tp,
            confusion.fp,
            confusion.tn,
            confusion.fn_,
        )
        .map_err(|e| CliError::Data(format!("error matrix from test set: {e}")))?;

        let mut estimates = Vec::new();
        let mut unclassified = BTreeMap::new();
        for &year in &self.config.years {
            let mut y_manual = 0.0f64;
            let mut records: Vec<(Label3, f64)> = Vec::new();
            for company in companies {
                let turnover = company.turnover.get(&year).copied().unwrap_or(0.0);
                if split.manual.contains(&company.id) {
                    if labels[&company.id].label_web == 1 {
                        y_manual += turnover;
                    }
                } else {
                    let label = classifications
                        .get(&company.id)
                        .map(|row| Label3::from_i8(row.s_combined).unwrap())
                        .unwrap_or(Label3::Missing);
                    records.push((label, turnover));
                }
            }
            let aggregate = estimator::aggregate(records);
            let lambda = estimator::optimize_lambda(
                &model,
                aggregate.y,
                aggregate.k,
                self.config.lambda_tol,
                self.config.lambda_max_iter,
            )
            .map_err(|e| CliError::Convergence(format!("year {year}: {e}")))?;
            let result = estimator::corrected_estimate(
                y_manual,
                &model,
                aggregate.y,
                aggregate.k,
                &lambda,
            )
            .map_err(|e| CliError::Data(format!("year {year}: {e}")))?;
            estimates.push(YearEstimate { year, result });
            unclassified.insert(
                year,
                (aggregate.excluded_count, aggregate.excluded_turnover),
            );
        }
        Ok(EstimateOutcome {
            confusion,
            model,
            estimates,
            unclassified,
        })
    }

    /// Runs all stages in order.
    pub fn run_all(&self) -> Result<(), CliError> {
        let _lock = OutDirLock::acquire(&self.config.out_dir)?;
        self.stage_stem()?;
        self.stage_index()?;
        self.stage_link()?;
        self.stage_webfeat()?;
        self.stage_classify()?;
        self.stage_estimate()?;
        Ok(())
    }
}

pub struct LabeledSplit {
    pub manual: HashSet<String>,
    pub test: HashSet<String>,
}

/// The two training sets assembled from the manual split.
pub struct TrainingSets {
    /// Distance features against BR registration labels.
    pub br: mlkit::LabeledSet,
    /// Web features against webshop labels.
    pub web: mlkit::LabeledSet,
}

pub struct EstimateOutcome {
    pub confusion: mlkit::ConfusionCounts,
    pub model: estimator::ErrorModel,
    pub estimates: Vec<YearEstimate>,
    pub unclassified: BTreeMap<i32, (usize, f64)>,
}

/// Page results for the offline input: one `<company_id>.html` per company
/// with a URL match; absent files mean the download failed.
fn collect_pages(
    companies: &[CompanyRecord],
    matches: &HashMap<String, schema::UrlMatch>,
    html_dir: &Path,
) -> Vec<PageResult> {
    companies
        .iter()
        .map(|company| match matches.get(&company.id) {
            Some(url_match) => {
                let path = html_dir.join(format!("{}.html", company.id));
                match std::fs::read(&path) {
                    Ok(bytes) => PageResult {
                        company_id: company.id.clone(),
                        match_probability: url_match.match_probability,
                        fetched: true,
                        text: String::from_utf8_lossy(&bytes).into_owned(),
                    },
                    Err(_) => PageResult {
                        company_id: company.id.clone(),
                        match_probability: url_match.match_probability,
                        fetched: false,
                        text: String::new(),
                    },
                }
            }
            None => PageResult {
                company_id: company.id.clone(),
                match_probability: 0.0,
                fetched: false,
                text: String::new(),
            },
        })
        .collect()
}

/// Content hash of a directory's files (names and bytes), for caching.
fn hash_dir(dir: &Path) -> Result<String, CliError> {
    let mut names: Vec<PathBuf> = match std::fs::read_dir(dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect(),
        Err(_) => return Ok("missing".to_string()),
    };
    names.sort();
    let mut hasher = Sha256::new();
    for path in names {
        hasher.update(path.file_name().unwrap_or_default().as_encoded_bytes());
        let bytes = std::fs::read(&path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        hasher.update(&bytes);
    }
    Ok(hex_prefix(&hasher.finalize(), 16))
}

/// Loads a previously built forest, for standalone inspection commands.
pub fn load_forest(path: &Path) -> Result<LshForest, CliError> {
    LshForest::load(path).map_err(|e| CliError::Data(e.to_string()))
}
