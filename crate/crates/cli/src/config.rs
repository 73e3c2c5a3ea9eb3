//! Run configuration: a flat key-value text file whose defaults mirror the
//! reference parameter choices (8 trees, 64 hashes, top-100 candidates,
//! 5-fold CV, 0.5 probability gate, histogram suppression below 20, the
//! industry thresholds).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct RunConfig {
    // Inputs.
    pub tax_returns: PathBuf,
    pub register: PathBuf,
    pub url_matches: PathBuf,
    pub labels: PathBuf,
    pub html_dir: PathBuf,
    pub known_entities: Option<PathBuf>,
    pub out_dir: PathBuf,
    // Years to estimate.
    pub years: Vec<i32>,
    // Forest parameters.
    pub lsh_trees: usize,
    pub lsh_hashes: usize,
    pub top_m: usize,
    // Suffix table.
    pub suffix_top_k: usize,
    pub suffix_max_words: usize,
    // Feature gates.
    pub match_probability_gate: f64,
    pub min_stem_chars: usize,
    // Model selection.
    pub cv_folds: usize,
    pub br_model: String,
    pub web_model: String,
    pub grid_file: Option<PathBuf>,
    // Estimation.
    pub lambda_tol: f64,
    pub lambda_max_iter: usize,
    // Histogram export.
    pub histogram_min_count: u64,
    pub histogram_bins_per_decade: usize,
    // Label-sample thresholds.
    pub threshold_retail: f64,
    pub threshold_wholesale: f64,
    pub threshold_other: f64,
    // Randomness.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tax_returns: "data/tax_returns.csv".into(),
            register: "data/register.csv".into(),
            url_matches: "data/url_matches.csv".into(),
            labels: "data/labels.csv".into(),
            html_dir: "data/html".into(),
            known_entities: None,
            out_dir: "out".into(),
            years: vec![2014, 2015, 2016],
            lsh_trees: 8,
            lsh_hashes: 64,
            top_m: 100,
            suffix_top_k: 50,
            suffix_max_words: 4,
            match_probability_gate: 0.5,
            min_stem_chars: 3,
            cv_folds: 5,
            br_model: "rbfsvc C=100 gamma=1 class_weight=balanced".into(),
            web_model: "rf n=200 d=1 class_weight=balanced".into(),
            grid_file: None,
            lambda_tol: 1e-6,
            lambda_max_iter: 100,
            histogram_min_count: 20,
            histogram_bins_per_decade: 4,
            threshold_retail: 1e6,
            threshold_wholesale: 2e7,
            threshold_other: 5e7,
            seed: 42,
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut config = Self::parse(&text)?;
        // Relative paths resolve against the config file location.
        if let Some(base) = path.parent() {
            for p in [
                &mut config.tax_returns,
                &mut config.register,
                &mut config.url_matches,
                &mut config.labels,
                &mut config.html_dir,
                &mut config.out_dir,
            ] {
                if p.is_relative() {
                    *p = base.join(&p);
                }
            }
            if let Some(ke) = &mut config.known_entities {
                if ke.is_relative() {
                    *ke = base.join(&ke);
                }
            }
            if let Some(gf) = &mut config.grid_file {
                if gf.is_relative() {
                    *gf = base.join(&gf);
                }
            }
        }
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut config = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "config line {}: expected `key = value`",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if seen.insert(key.to_string(), lineno).is_some() {
                return Err(CliError::Config(format!(
                    "config line {}: duplicate key {key}",
                    lineno + 1
                )));
            }
            config.apply(key, value, lineno + 1)?;
        }
        config.validate()?;
        Ok(config)
    }

    fn apply(&mut self, key: &str, value: &str, lineno: usize) -> Result<(), CliError> {
        let bad = |what: &str| {
            CliError::Config(format!("config line {lineno}: {key} must be {what}, got {value:?}"))
        };
        match key {
            "tax_returns" => self.tax_returns = value.into(),
            "register" => self.register = value.into(),
            "url_matches" => self.url_matches = value.into(),
            "labels" => self.labels = value.into(),
            "html_dir" => self.html_dir = value.into(),
            "known_entities" => self.known_entities = Some(value.into()),
            "out_dir" => self.out_dir = value.into(),
            "grid_file" => self.grid_file = Some(value.into()),
            "years" => {
                let years: Result<Vec<i32>, _> =
                    value.split(',').map(|y| y.trim().parse()).collect();
                self.years = years.map_err(|_| bad("a comma-separated year list"))?;
            }
            "lsh_trees" => self.lsh_trees = value.parse().map_err(|_| bad("an integer"))?,
            "lsh_hashes" => self.lsh_hashes = value.parse().map_err(|_| bad("an integer"))?,
            "top_m" => self.top_m = value.parse().map_err(|_| bad("an integer"))?,
            "suffix_top_k" => self.suffix_top_k = value.parse().map_err(|_| bad("an integer"))?,
            "suffix_max_words" => {
                self.suffix_max_words = value.parse().map_err(|_| bad("an integer"))?
            }
            "match_probability_gate" => {
                self.match_probability_gate = value.parse().map_err(|_| bad("a number"))?
            }
            "min_stem_chars" => {
                self.min_stem_chars = value.parse().map_err(|_| bad("an integer"))?
            }
            "cv_folds" => self.cv_folds = value.parse().map_err(|_| bad("an integer"))?,
            "br_model" => self.br_model = value.to_string(),
            "web_model" => self.web_model = value.to_string(),
            "lambda_tol" => self.lambda_tol = value.parse().map_err(|_| bad("a number"))?,
            "lambda_max_iter" => {
                self.lambda_max_iter = value.parse().map_err(|_| bad("an integer"))?
            }
            "histogram_min_count" => {
                self.histogram_min_count = value.parse().map_err(|_| bad("an integer"))?
            }
            "histogram_bins_per_decade" => {
                self.histogram_bins_per_decade = value.parse().map_err(|_| bad("an integer"))?
            }
            "threshold_retail" => {
                self.threshold_retail = value.parse().map_err(|_| bad("a number"))?
            }
            "threshold_wholesale" => {
                self.threshold_wholesale = value.parse().map_err(|_| bad("a number"))?
            }
            "threshold_other" => {
                self.threshold_other = value.parse().map_err(|_| bad("a number"))?
            }
            "seed" => self.seed = value.parse().map_err(|_| bad("an integer"))?,
            _ => {
                return Err(CliError::Config(format!(
                    "config line {lineno}: unknown key {key:?}"
                )))
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.lsh_trees == 0 || self.lsh_hashes == 0 || self.lsh_hashes % self.lsh_trees != 0 {
            return Err(CliError::Config(format!(
                "lsh_hashes ({}) must be a positive multiple of lsh_trees ({})",
                self.lsh_hashes, self.lsh_trees
            )));
        }
        if self.years.is_empty() {
            return Err(CliError::Config("years must not be empty".into()));
        }
        if !(0.0..=1.0).contains(&self.match_probability_gate) {
            return Err(CliError::Config(
                "match_probability_gate must lie in [0, 1]".into(),
            ));
        }
        if self.cv_folds < 2 {
            return Err(CliError::Config("cv_folds must be at least 2".into()));
        }
        Ok(())
    }

    /// Canonical rendering: every key in fixed order, used for hashing and
    /// for `shopmatch config --print`.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("tax_returns", self.tax_returns.display().to_string());
        kv("register", self.register.display().to_string());
        kv("url_matches", self.url_matches.display().to_string());
        kv("labels", self.labels.display().to_string());
        kv("html_dir", self.html_dir.display().to_string());
        if let Some(ke) = &self.known_entities {
            kv("known_entities", ke.display().to_string());
        }
        kv("out_dir", self.out_dir.display().to_string());
        kv(
            "years",
            self.years
                .iter()
                .map(|y| y.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("lsh_trees", self.lsh_trees.to_string());
        kv("lsh_hashes", self.lsh_hashes.to_string());
        kv("top_m", self.top_m.to_string());
        kv("suffix_top_k", self.suffix_top_k.to_string());
        kv("suffix_max_words", self.suffix_max_words.to_string());
        kv(
            "match_probability_gate",
            self.match_probability_gate.to_string(),
        );
        kv("min_stem_chars", self.min_stem_chars.to_string());
        kv("cv_folds", self.cv_folds.to_string());
        kv("br_model", self.br_model.clone());
        kv("web_model", self.web_model.clone());
        if let Some(gf) = &self.grid_file {
            kv("grid_file", gf.display().to_string());
        }
        kv("lambda_tol", self.lambda_tol.to_string());
        kv("lambda_max_iter", self.lambda_max_iter.to_string());
        kv("histogram_min_count", self.histogram_min_count.to_string());
        kv(
            "histogram_bins_per_decade",
            self.histogram_bins_per_decade.to_string(),
        );
        kv("threshold_retail", self.threshold_retail.to_string());
        kv("threshold_wholesale", self.threshold_wholesale.to_string());
        kv("threshold_other", self.threshold_other.to_string());
        kv("seed", self.seed.to_string());
        out
    }

    /// Short hash of the canonical configuration, stamped into every output
    /// file header.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex_prefix(&digest, 12)
    }

    /// The standard output header: config hash and seed.
    pub fn header_comment(&self) -> String {
        format!("config_hash={} seed={}", self.hash(), self.seed)
    }

    /// Parses a model description like `rbfsvc C=100 gamma=1
    /// class_weight=balanced` into a spec.
    pub fn parse_model(text: &str) -> Result<shopmatch_mlkit::ModelSpec, CliError> {
        let mut parts = text.split_whitespace();
        let name = parts
            .next()
            .ok_or_else(|| CliError::Config("empty model description".into()))?;
        let algorithm = shopmatch_mlkit::Algorithm::parse(name)
            .ok_or_else(|| CliError::Config(format!("unknown algorithm {name:?}")))?;
        let mut spec = shopmatch_mlkit::ModelSpec::new(algorithm);
        for part in parts {
            let Some((key, value)) = part.split_once('=') else {
                return Err(CliError::Config(format!(
                    "model parameter {part:?} must be key=value"
                )));
            };
            spec = spec.with(key, shopmatch_mlkit::ParamValue::parse(value));
        }
        Ok(spec)
    }
}

pub fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    let mut out = String::with_capacity(chars);
    for b in bytes {
        let _ = write!(out, "{b:02x}");
        if out.len() >= chars {
            break;
        }
    }
    out.truncate(chars);
    out
}

/// sha256 of a file's contents, for stage caching.
pub fn file_hash(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    Ok(hex_prefix(&Sha256::digest(&bytes), 16))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_reference_values() {
        let c = RunConfig::default();
        assert_eq!(c.lsh_trees, 8);
        assert_eq!(c.lsh_hashes, 64);
        assert_eq!(c.top_m, 100);
        assert_eq!(c.cv_folds, 5);
        assert_eq!(c.match_probability_gate, 0.5);
        assert_eq!(c.histogram_min_count, 20);
        assert_eq!(c.threshold_retail, 1e6);
        assert_eq!(c.threshold_wholesale, 2e7);
        assert_eq!(c.threshold_other, 5e7);
    }

    #[test]
    fn parse_round_trip_is_stable() {
        let c = RunConfig::default();
        let parsed = RunConfig::parse(&c.canonical()).unwrap();
        assert_eq!(parsed.canonical(), c.canonical());
        assert_eq!(parsed.hash(), c.hash());
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(
            RunConfig::parse("nonsense = 1"),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn duplicate_key_rejected() {
        assert!(RunConfig::parse("seed = 1\nseed = 2").is_err());
    }

    #[test]
    fn invalid_forest_params_rejected() {
        assert!(RunConfig::parse("lsh_trees = 7\nlsh_hashes = 64").is_err());
    }

    #[test]
    fn hash_changes_with_values() {
        let a = RunConfig::parse("seed = 1").unwrap();
        let b = RunConfig::parse("seed = 2").unwrap();
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn model_spec_parses() {
        let spec = RunConfig::parse_model("rbfsvc C=100 gamma=1 class_weight=balanced").unwrap();
        assert_eq!(spec.algorithm, shopmatch_mlkit::Algorithm::RbfSvc);
        assert_eq!(spec.params.len(), 3);
        assert!(RunConfig::parse_model("martian x=1").is_err());
    }
}
