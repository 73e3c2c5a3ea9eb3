//! Company-name cleaning, suffix tables and stemming.
//!
//! Legal company names carry a trailing business-entity marker ("acme trading
//! ltd", "beta gmbh") that is written inconsistently across registers. This
//! module cleans raw names into a restricted alphabet, learns the most common
//! name endings per country from a register, and splits names into a stem and
//! a suffix start. Suffix starts are grouped into classes through an
//! abbreviation relation ("ltd" ~ "limited") so that downstream matching can
//! require compatible entity types without requiring identical spelling.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::types::RegisterEntry;

/// Default number of frequent endings kept per country.
pub const DEFAULT_TOP_K_PER_COUNTRY: usize = 50;
/// Maximum number of words in a name ending considered a suffix.
pub const DEFAULT_MAX_SUFFIX_WORDS: usize = 4;
/// An ending must occur this often to count as common; singleton endings are
/// arbitrary name tails, not entity types.
const MIN_ENDING_SUPPORT: u64 = 2;

/// Curated list of business-entity types per country, shipped with the crate.
/// Editable copies can be loaded with [`KnownEntities::from_csv_path`].
const DEFAULT_KNOWN_ENTITIES: &str = include_str!("../data/known_entities.csv");

#[derive(Debug, Error)]
pub enum NormalizeError {
    #[error("name is empty after cleaning")]
    EmptyName,
    #[error("{path}:{line}: {msg}")]
    BadDataFile {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A cleaned company name: lowercase ASCII alphanumerics separated by single
/// spaces, never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CleanName(String);

impl CleanName {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.0.split(' ')
    }

    pub fn word_count(&self) -> usize {
        self.0.split(' ').count()
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl fmt::Display for CleanName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for CleanName {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Cleans a raw legal name.
///
/// Accented characters are decomposed and their base letter kept (ü → u).
/// Everything that is not an ASCII letter or digit afterwards becomes a word
/// separator, and whitespace is collapsed. Names with no alphanumeric content
/// are rejected.
pub fn clean_name(raw: &str) -> Result<CleanName, NormalizeError> {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for ch in raw.nfkd() {
        if is_combining_mark(ch) {
            continue;
        }
        for low in ch.to_lowercase() {
            if low.is_ascii_alphanumeric() {
                if pending_space && !out.is_empty() {
                    out.push(' ');
                }
                pending_space = false;
                out.push(low);
            } else {
                pending_space = true;
            }
        }
    }
    if out.is_empty() {
        return Err(NormalizeError::EmptyName);
    }
    Ok(CleanName(out))
}

/// A cleaned name split into a stem and the start of its entity suffix.
/// The stem is never empty; `suffix_start` is empty when no suffix was found
/// or when removal would have consumed the whole name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StemmedName {
    pub stem: CleanName,
    pub suffix_start: String,
}

/// One known business-entity type: its cleaned full name and the cleaned
/// abbreviations it is registered under.
#[derive(Debug, Clone)]
pub struct KnownEntity {
    pub country: String,
    pub name: String,
    pub abbreviations: Vec<String>,
}

/// Country-keyed list of known business-entity types.
#[derive(Debug, Clone, Default)]
pub struct KnownEntities {
    pub entries: Vec<KnownEntity>,
}

impl KnownEntities {
    /// The list shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse_csv(DEFAULT_KNOWN_ENTITIES, "<builtin>")
            .expect("builtin entity list must parse")
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, NormalizeError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_csv(&text, &path.display().to_string())
    }

    /// Parses `country,entity,abbreviations` lines; abbreviations are
    /// `|`-separated. Lines starting with `#` and the header row are skipped.
    fn parse_csv(text: &str, path: &str) -> Result<Self, NormalizeError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if i == 0 && line.starts_with("country,") {
                continue;
            }
            let mut parts = line.splitn(3, ',');
            let country = parts.next().unwrap_or("").trim().to_uppercase();
            let name = parts.next().unwrap_or("").trim();
            let abbrev = parts.next().unwrap_or("").trim();
            if country.is_empty() || name.is_empty() {
                return Err(NormalizeError::BadDataFile {
                    path: path.to_string(),
                    line: i + 1,
                    msg: "expected country,entity[,abbreviations]".into(),
                });
            }
            let name = clean_name(name)
                .map_err(|_| NormalizeError::BadDataFile {
                    path: path.to_string(),
                    line: i + 1,
                    msg: format!("entity name {name:?} is empty after cleaning"),
                })?
                .into_string();
            let abbreviations = abbrev
                .split('|')
                .filter(|s| !s.trim().is_empty())
                .filter_map(|s| clean_name(s).ok().map(CleanName::into_string))
                .collect();
            entries.push(KnownEntity {
                country,
                name,
                abbreviations,
            });
        }
        Ok(Self { entries })
    }
}

/// Where a suffix-table entry came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuffixSource {
    /// Learned from ending frequencies in the register.
    Frequency,
    /// Taken from the known business-entity list.
    Known,
}

impl SuffixSource {
    fn as_str(self) -> &'static str {
        match self {
            SuffixSource::Frequency => "frequency",
            SuffixSource::Known => "known",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "frequency" => Some(SuffixSource::Frequency),
            "known" => Some(SuffixSource::Known),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuffixEntry {
    pub country: String,
    pub text: String,
    pub source: SuffixSource,
}

/// Ordered collection of suffix starts used for stemming.
///
/// Entries are stored in table order (frequency rank per country, then known
/// entities). Stemming matches the longest entry that forms the ending of a
/// name at a word boundary, over the union of all countries.
#[derive(Debug, Clone, Default)]
pub struct SuffixTable {
    entries: Vec<SuffixEntry>,
    /// Entry texts grouped by word count, for longest-match-first lookup.
    by_word_count: BTreeMap<usize, HashSet<String>>,
    max_words: usize,
}

impl SuffixTable {
    pub fn entries(&self) -> &[SuffixEntry] {
        &self.entries
    }

    pub fn max_words(&self) -> usize {
        self.max_words
    }

    fn insert(&mut self, country: &str, text: &str, source: SuffixSource) {
        let words = text.split(' ').count();
        let set = self.by_word_count.entry(words).or_default();
        let known_text = set.contains(text);
        if !known_text {
            set.insert(text.to_string());
        }
        // Keep one row per (country, text) for round-trippable export.
        if !self
            .entries
            .iter()
            .any(|e| e.country == country && e.text == text)
        {
            self.entries.push(SuffixEntry {
                country: country.to_string(),
                text: text.to_string(),
                source,
            });
        }
        self.max_words = self.max_words.max(words);
    }

    /// Splits `name` into stem and suffix start. The longest table entry that
    /// matches whole trailing words is removed; a match that would consume
    /// every word is ignored so the stem stays non-empty.
    pub fn stem(&self, name: &CleanName) -> StemmedName {
        let words: Vec<&str> = name.words().collect();
        let n = words.len();
        if n >= 2 {
            let longest = self.max_words.min(n - 1);
            for w in (1..=longest).rev() {
                let ending = words[n - w..].join(" ");
                if self
                    .by_word_count
                    .get(&w)
                    .is_some_and(|set| set.contains(&ending))
                {
                    let stem = words[..n - w].join(" ");
                    return StemmedName {
                        stem: CleanName(stem),
                        suffix_start: ending,
                    };
                }
            }
        }
        StemmedName {
            stem: name.clone(),
            suffix_start: String::new(),
        }
    }

    /// Writes the table as `country,suffix_start,source` CSV.
    pub fn to_csv<W: Write>(&self, mut w: W) -> Result<(), NormalizeError> {
        writeln!(w, "country,suffix_start,source")?;
        for e in &self.entries {
            writeln!(w, "{},{},{}", e.country, e.text, e.source.as_str())?;
        }
        Ok(())
    }

    pub fn from_csv<R: BufRead>(r: R, path: &str) -> Result<Self, NormalizeError> {
        let mut table = SuffixTable::default();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line == "country,suffix_start,source" {
                continue;
            }
            let mut parts = line.splitn(3, ',');
            let country = parts.next().unwrap_or("").trim();
            let text = parts.next().unwrap_or("").trim();
            let source = parts.next().unwrap_or("").trim();
            let source = SuffixSource::parse(source).ok_or_else(|| NormalizeError::BadDataFile {
                path: path.to_string(),
                line: i + 1,
                msg: format!("unknown source {source:?}"),
            })?;
            if country.is_empty() || text.is_empty() {
                return Err(NormalizeError::BadDataFile {
                    path: path.to_string(),
                    line: i + 1,
                    msg: "expected country,suffix_start,source".into(),
                });
            }
            table.insert(country, text, source);
        }
        Ok(table)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, NormalizeError> {
        let file = std::fs::File::open(path)?;
        Self::from_csv(std::io::BufReader::new(file), &path.display().to_string())
    }
}

/// Builds the suffix table from register name endings and known entities.
///
/// Per country, every 1..=`max_words`-word ending that leaves at least one
/// stem word is counted; the `top_k` most frequent endings are kept and then
/// reduced to suffix starts: an ending whose word-prefix is itself a retained
/// ending is folded into that shorter start. Known entity names and their
/// abbreviations are unioned in afterwards.
pub fn build_suffix_table(
    register: &[RegisterEntry],
    known: &KnownEntities,
    max_words: usize,
    top_k_per_country: usize,
) -> SuffixTable {
    let mut counts: BTreeMap<String, HashMap<String, u64>> = BTreeMap::new();
    for entry in register {
        let Ok(clean) = clean_name(&entry.name) else {
            continue;
        };
        let words: Vec<&str> = clean.words().collect();
        let n = words.len();
        if n < 2 {
            continue;
        }
        let bucket = counts.entry(entry.country.to_uppercase()).or_default();
        for w in 1..=max_words.min(n - 1) {
            let ending = words[n - w..].join(" ");
            *bucket.entry(ending).or_insert(0) += 1;
        }
    }

    let mut table = SuffixTable::default();
    for (country, bucket) in &counts {
        let mut ranked: Vec<(String, u64)> = bucket
            .iter()
            .filter(|(_, c)| **c >= MIN_ENDING_SUPPORT)
            .map(|(e, c)| (e.clone(), *c))
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(top_k_per_country);
        for (ending, _) in reduce_endings(ranked) {
            table.insert(country, &ending, SuffixSource::Frequency);
        }
    }

    for entity in &known.entries {
        table.insert(&entity.country, &entity.name, SuffixSource::Known);
        for abbrev in &entity.abbreviations {
            table.insert(&entity.country, abbrev, SuffixSource::Known);
        }
    }
    table
}

/// Reduction to suffix starts: an ending that merely prepends extra words
/// to a shorter retained ending ("commerce sarl" around the marker "sarl")
/// is folded into that marker, pooling their frequencies. Matching is
/// anchored at the end of a name, so the shorter form recognizes every name
/// the longer one did, while the longer form would grab brand words into
/// the suffix. Input and output are (ending, count) ranked by descending
/// count.
fn reduce_endings(ranked: Vec<(String, u64)>) -> Vec<(String, u64)> {
    let retained: HashSet<String> = ranked.iter().map(|(e, _)| e.clone()).collect();
    let mut folded: Vec<(String, u64)> = Vec::new();
    for (ending, count) in &ranked {
        let covered = word_suffixes(ending)
            .any(|s| s.len() < ending.len() && retained.contains(s));
        if !covered {
            folded.push((ending.clone(), *count));
        }
    }
    for (ending, count) in &ranked {
        if let Some(slot) = folded
            .iter_mut()
            .find(|(kept, _)| kept.len() < ending.len() && is_word_suffix(kept, ending))
        {
            slot.1 += count;
        }
    }
    folded.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    folded
}

fn is_word_prefix(prefix: &str, full: &str) -> bool {
    full == prefix || (full.starts_with(prefix) && full.as_bytes()[prefix.len()] == b' ')
}

fn is_word_suffix(suffix: &str, full: &str) -> bool {
    full == suffix
        || (full.ends_with(suffix) && full.as_bytes()[full.len() - suffix.len() - 1] == b' ')
}

fn word_suffixes(text: &str) -> impl Iterator<Item = &str> {
    text.char_indices()
        .filter(|(i, c)| *c == ' ' && *i + 1 < text.len())
        .map(move |(i, _)| &text[i + 1..])
        .chain(std::iter::once(text))
}

/// Abbreviation relation between suffix starts, built from the known-entity
/// list. Two starts are related when one abbreviates an entity type the other
/// is the start of. The relation is reflexive and symmetric but deliberately
/// not closed transitively.
#[derive(Debug, Clone, Default)]
pub struct SuffixClasses {
    /// (entity full name, abbreviations), aggregated over countries.
    entities: Vec<(String, Vec<String>)>,
}

impl SuffixClasses {
    pub fn from_known(known: &KnownEntities) -> Self {
        let mut entities: Vec<(String, Vec<String>)> = Vec::new();
        for e in &known.entries {
            if let Some(slot) = entities.iter_mut().find(|(name, _)| *name == e.name) {
                for a in &e.abbreviations {
                    if !slot.1.contains(a) {
                        slot.1.push(a.clone());
                    }
                }
            } else {
                entities.push((e.name.clone(), e.abbreviations.clone()));
            }
        }
        Self { entities }
    }

    /// Whether `a` abbreviates an entity that `b` starts, or vice versa.
    /// Equal inputs are always related.
    pub fn related(&self, a: &str, b: &str) -> bool {
        if a == b {
            return true;
        }
        self.abbreviates_start_of(a, b) || self.abbreviates_start_of(b, a)
    }

    fn abbreviates_start_of(&self, abbrev: &str, start: &str) -> bool {
        self.entities.iter().any(|(name, abbrevs)| {
            abbrevs.iter().any(|x| x == abbrev) && is_word_prefix(start, name)
        })
    }

    /// Compatibility rule used by candidate filtering: names without a suffix
    /// are allowed to match any suffix class.
    pub fn compatible(&self, a: &str, b: &str) -> bool {
        a.is_empty() || b.is_empty() || self.related(a, b)
    }
}
