//! The eight string-distance measures used as matching features.
//!
//! All distances are mapped into `[0, 1]`: normalized Levenshtein,
//! Jaro-Winkler, Jaccard distance on character 1/2/3-gram sets and cosine
//! distance on 1/2/3-gram frequency vectors. Levenshtein is normalized by the
//! maximum length of the two inputs; the others are `1 - similarity` by
//! construction.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StrDistError {
    #[error("no candidates to compare against")]
    NoCandidates,
}

/// Identifier of one distance measure. The declaration order fixes the layout
/// of the 8-dimensional feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetricId {
    LevNorm,
    JaroWinkler,
    Jaccard1,
    Jaccard2,
    Jaccard3,
    Cosine1,
    Cosine2,
    Cosine3,
}

impl MetricId {
    pub const ALL: [MetricId; 8] = [
        MetricId::LevNorm,
        MetricId::JaroWinkler,
        MetricId::Jaccard1,
        MetricId::Jaccard2,
        MetricId::Jaccard3,
        MetricId::Cosine1,
        MetricId::Cosine2,
        MetricId::Cosine3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricId::LevNorm => "lev_norm",
            MetricId::JaroWinkler => "jaro_winkler",
            MetricId::Jaccard1 => "jaccard_1",
            MetricId::Jaccard2 => "jaccard_2",
            MetricId::Jaccard3 => "jaccard_3",
            MetricId::Cosine1 => "cosine_1",
            MetricId::Cosine2 => "cosine_2",
            MetricId::Cosine3 => "cosine_3",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|m| *m == self).unwrap()
    }
}

/// Character n-grams of a string with their frequencies, sorted by gram.
/// Jaccard uses the grams as a set, cosine uses the frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramSet {
    pub n: usize,
    grams: Vec<(String, u32)>,
}

impl NGramSet {
    pub fn distinct(&self) -> usize {
        self.grams.len()
    }

    pub fn contains(&self, gram: &str) -> bool {
        self.grams.binary_search_by(|(g, _)| g.as_str().cmp(gram)).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.grams.iter().map(|(g, c)| (g.as_str(), *c))
    }
}

/// Extracts all length-`n` character windows of `s`. Strings shorter than
/// `n` yield the whole string as a single gram, so no input produces an
/// empty set.
pub fn ngrams(s: &str, n: usize) -> NGramSet {
    assert!(n >= 1, "n-gram size must be at least 1");
    let chars: Vec<char> = s.chars().collect();
    let mut grams: Vec<String> = if chars.len() < n {
        vec![s.to_string()]
    } else {
        chars.windows(n).map(|w| w.iter().collect()).collect()
    };
    grams.sort_unstable();
    let mut counted: Vec<(String, u32)> = Vec::with_capacity(grams.len());
    for g in grams {
        match counted.last_mut() {
            Some((last, c)) if *last == g => *c += 1,
            _ => counted.push((g, 1)),
        }
    }
    NGramSet { n, grams: counted }
}

/// Precomputed character vector and 1/2/3-gram sets of one string, so that
/// repeated comparisons against the same string avoid re-derivation.
#[derive(Debug, Clone)]
pub struct StringProfile {
    text: String,
    chars: Vec<char>,
    grams: [NGramSet; 3],
}

impl StringProfile {
    pub fn new(s: &str) -> Self {
        Self {
            text: s.to_string(),
            chars: s.chars().collect(),
            grams: [ngrams(s, 1), ngrams(s, 2), ngrams(s, 3)],
        }
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

/// Distance between two strings under the given metric. Always in `[0, 1]`
/// and symmetric in its arguments.
pub fn distance(metric: MetricId, a: &str, b: &str) -> f64 {
    distance_profiled(metric, &StringProfile::new(a), &StringProfile::new(b))
}

pub fn distance_profiled(metric: MetricId, a: &StringProfile, b: &StringProfile) -> f64 {
    match metric {
        MetricId::LevNorm => levenshtein_normalized(&a.chars, &b.chars),
        MetricId::JaroWinkler => 1.0 - jaro_winkler_similarity(&a.chars, &b.chars),
        MetricId::Jaccard1 => jaccard(&a.grams[0], &b.grams[0]),
        MetricId::Jaccard2 => jaccard(&a.grams[1], &b.grams[1]),
        MetricId::Jaccard3 => jaccard(&a.grams[2], &b.grams[2]),
        MetricId::Cosine1 => cosine(&a.grams[0], &b.grams[0]),
        MetricId::Cosine2 => cosine(&a.grams[1], &b.grams[1]),
        MetricId::Cosine3 => cosine(&a.grams[2], &b.grams[2]),
    }
}

/// Minimum distance from `a` to any candidate, with the index of the first
/// candidate attaining it.
pub fn min_distance_over<S: AsRef<str>>(
    metric: MetricId,
    a: &str,
    candidates: &[S],
) -> Result<(f64, usize), StrDistError> {
    let profile = StringProfile::new(a);
    let mut best: Option<(f64, usize)> = None;
    for (i, cand) in candidates.iter().enumerate() {
        let d = distance_profiled(metric, &profile, &StringProfile::new(cand.as_ref()));
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, i));
        }
    }
    best.ok_or(StrDistError::NoCandidates)
}

fn levenshtein_normalized(a: &[char], b: &[char]) -> f64 {
    let max_len = a.len().max(b.len());
    if max_len == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / max_len as f64
}

fn levenshtein(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Jaro similarity with the Winkler common-prefix boost: scale 0.1, at most
/// 4 prefix characters, applied only when the Jaro similarity exceeds 0.7.
fn jaro_winkler_similarity(a: &[char], b: &[char]) -> f64 {
    let jaro = jaro_similarity(a, b);
    if jaro <= 0.7 {
        return jaro;
    }
    let prefix = a
        .iter()
        .zip(b.iter())
        .take(4)
        .take_while(|(x, y)| x == y)
        .count();
    jaro + prefix as f64 * 0.1 * (1.0 - jaro)
}

fn jaro_similarity(a: &[char], b: &[char]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let window = (a.len().max(b.len()) / 2).saturating_sub(1);
    let mut b_used = vec![false; b.len()];
    let mut a_matched = Vec::with_capacity(a.len());
    for (i, &ca) in a.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window + 1).min(b.len());
        for j in lo..hi {
            if !b_used[j] && b[j] == ca {
                b_used[j] = true;
                a_matched.push((j, ca));
                break;
            }
        }
    }
    let m = a_matched.len();
    if m == 0 {
        return 0.0;
    }
    // Transpositions: matched characters compared in the order they appear
    // in each string.
    let mut b_order: Vec<char> = Vec::with_capacity(m);
    for (j, used) in b_used.iter().enumerate() {
        if *used {
            b_order.push(b[j]);
        }
    }
    let t = a_matched
        .iter()
        .zip(b_order.iter())
        .filter(|((_, ca), cb)| ca != *cb)
        .count() as f64
        / 2.0;
    let m = m as f64;
    (m / a.len() as f64 + m / b.len() as f64 + (m - t) / m) / 3.0
}

fn jaccard(a: &NGramSet, b: &NGramSet) -> f64 {
    let mut inter = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.grams.len() && j < b.grams.len() {
        match a.grams[i].0.cmp(&b.grams[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.grams.len() + b.grams.len() - inter;
    if union == 0 {
        return 0.0;
    }
    1.0 - inter as f64 / union as f64
}

/// Cosine distance on term-frequency vectors. If exactly one vector is zero
/// the distance is 1; if both are zero it is 0. Identical vectors short-
/// circuit to 0 so rounding never blurs exact matches.
fn cosine(a: &NGramSet, b: &NGramSet) -> f64 {
    if a.grams == b.grams {
        return 0.0;
    }
    let mut dot = 0.0f64;
    let (mut i, mut j) = (0, 0);
    while i < a.grams.len() && j < b.grams.len() {
        match a.grams[i].0.cmp(&b.grams[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a.grams[i].1 as f64 * b.grams[j].1 as f64;
                i += 1;
                j += 1;
            }
        }
    }
    let norm = |s: &NGramSet| {
        s.grams
            .iter()
            .map(|(_, c)| (*c as f64) * (*c as f64))
            .sum::<f64>()
            .sqrt()
    };
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 && nb == 0.0 {
        return 0.0;
    }
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    // Clamp for monotone rounding at identical inputs.
    (1.0 - dot / (na * nb)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Naive exponential recursion, the independent edit-distance oracle.
    fn lev_oracle(a: &[char], b: &[char]) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        let cost = usize::from(a[a.len() - 1] != b[b.len() - 1]);
        let del = lev_oracle(&a[..a.len() - 1], b) + 1;
        let ins = lev_oracle(a, &b[..b.len() - 1]) + 1;
        let sub = lev_oracle(&a[..a.len() - 1], &b[..b.len() - 1]) + cost;
        del.min(ins).min(sub)
    }

    #[test]
    fn trigrams_of_spaced_webshop() {
        let set = ngrams("web shop", 3);
        let expected = ["web", "eb ", "b s", " sh", "sho", "hop"];
        assert_eq!(set.distinct(), expected.len());
        for g in expected {
            assert!(set.contains(g), "missing gram {g:?}");
        }
    }

    #[test]
    fn unigrams_and_short_string_fallback() {
        let set = ngrams("ab", 1);
        assert_eq!(set.distinct(), 2);
        assert!(set.contains("a") && set.contains("b"));

        let set = ngrams("ab", 3);
        assert_eq!(set.distinct(), 1);
        assert!(set.contains("ab"));
    }

    #[test]
    fn identical_strings_have_zero_jaccard() {
        assert_eq!(distance(MetricId::Jaccard3, "web shop", "web shop"), 0.0);
    }

    #[test]
    fn levenshtein_muller_mueller() {
        let d = distance(MetricId::LevNorm, "muller", "mueller");
        assert!((d - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn jaro_winkler_disjoint_strings() {
        assert_eq!(distance(MetricId::JaroWinkler, "abc", "xyz"), 1.0);
    }

    #[test]
    fn jaro_winkler_known_value() {
        // "abcdefgh" vs "abcdefgx": 7 matches, 0 transpositions, prefix
        // capped at 4 characters.
        let jaro: f64 = (7.0 / 8.0 + 7.0 / 8.0 + 1.0) / 3.0;
        let expect = 1.0 - (jaro + 4.0 * 0.1 * (1.0 - jaro));
        let d = distance(MetricId::JaroWinkler, "abcdefgh", "abcdefgx");
        assert!((d - expect).abs() < 1e-12, "got {d}, expected {expect}");
    }

    #[test]
    fn min_distance_over_prefers_first_tie() {
        let (d, i) = min_distance_over(MetricId::Jaccard3, "acme", &["acme", "zzz"]).unwrap();
        assert_eq!((d, i), (0.0, 0));

        let (d, i) = min_distance_over(MetricId::LevNorm, "abc", &["abd", "zzz"]).unwrap();
        assert!((d - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(i, 0);

        let empty: [&str; 0] = [];
        assert_eq!(
            min_distance_over(MetricId::Jaccard1, "a", &empty),
            Err(StrDistError::NoCandidates)
        );
    }

    #[test]
    fn dp_levenshtein_matches_recursive_oracle_small() {
        let alphabet = ['a', 'b', 'c'];
        let mut strings = Vec::new();
        for len in 0..=4usize {
            let count = alphabet.len().pow(len as u32);
            for idx in 0..count {
                let mut s = Vec::with_capacity(len);
                let mut rem = idx;
                for _ in 0..len {
                    s.push(alphabet[rem % 3]);
                    rem /= 3;
                }
                strings.push(s);
            }
        }
        for a in &strings {
            for b in &strings {
                assert_eq!(levenshtein(a, b), lev_oracle(a, b));
            }
        }
    }

    proptest! {
        #[test]
        fn all_metrics_in_unit_interval(a in "[a-z0-9 ]{1,12}", b in "[a-z0-9 ]{1,12}") {
            for m in MetricId::ALL {
                let d = distance(m, &a, &b);
                prop_assert!((0.0..=1.0).contains(&d), "{m:?} out of range: {d}");
            }
        }

        #[test]
        fn all_metrics_symmetric(a in "[a-z ]{1,10}", b in "[a-z ]{1,10}") {
            for m in MetricId::ALL {
                prop_assert_eq!(distance(m, &a, &b), distance(m, &b, &a));
            }
        }

        #[test]
        fn lev_zero_iff_equal(a in "[a-c]{1,8}", b in "[a-c]{1,8}") {
            let d = distance(MetricId::LevNorm, &a, &b);
            prop_assert_eq!(d == 0.0, a == b);
        }

        #[test]
        fn jaccard_triangle_inequality(
            a in "[a-d]{1,9}",
            b in "[a-d]{1,9}",
            c in "[a-d]{1,9}",
        ) {
            for m in [MetricId::Jaccard1, MetricId::Jaccard2, MetricId::Jaccard3] {
                let ab = distance(m, &a, &b);
                let bc = distance(m, &b, &c);
                let ac = distance(m, &a, &c);
                prop_assert!(ac <= ab + bc + 1e-12, "{m:?}: d({a},{c}) > d({a},{b}) + d({b},{c})");
            }
        }

        #[test]
        fn dp_matches_oracle_sampled(a in "[a-c]{0,8}", b in "[a-c]{0,8}") {
            let av: Vec<char> = a.chars().collect();
            let bv: Vec<char> = b.chars().collect();
            prop_assert_eq!(levenshtein(&av, &bv), lev_oracle(&av, &bv));
        }
    }
}
