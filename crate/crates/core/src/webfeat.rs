//! Website-based shop features.
//!
//! Counts occurrences of the eight shop words in raw page text, transforms
//! the counts to TF.IDF values in `[0, 1]`, and gates records on the URL
//! matching probability: a company whose best URL match scored below 0.5, or
//! whose page could not be downloaded, carries missing web features and is
//! later classified as −1.

use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::strdist::MetricId;

/// The fixed shop-word list, in feature order: shop/cart/basket in Dutch and
/// English plus the German shopping cart.
pub const SHOP_WORDS: [&str; 8] = [
    "winkel",
    "wagen",
    "mand",
    "shop",
    "cart",
    "bag",
    "basket",
    "warenkorb",
];

/// Matching probabilities below this leave the record unusable.
pub const MATCH_PROBABILITY_GATE: f64 = 0.5;

/// Raw shop-word counts for one company page.
#[derive(Debug, Clone, PartialEq)]
pub struct ShopWordCounts {
    pub counts: [u32; 8],
    pub match_probability: f64,
    pub fetched: bool,
}

/// Gated TF.IDF features for one company.
#[derive(Debug, Clone, PartialEq)]
pub struct WebFeatures {
    pub tfidf: [f64; 8],
    pub match_probability: f64,
    pub missing: bool,
}

/// Case-insensitive substring occurrence counts of the eight shop words.
/// Substring semantics are intentional: "shopping" counts towards "shop",
/// and HTML attribute values like "cart-icon" count towards "cart".
pub fn count_shop_words(page_text: &str) -> [u32; 8] {
    let lower = page_text.to_lowercase();
    let mut counts = [0u32; 8];
    for (i, word) in SHOP_WORDS.iter().enumerate() {
        counts[i] = lower.matches(word).count() as u32;
    }
    counts
}

/// TF.IDF transformation of a corpus of shop-word counts.
///
/// A smoothing document containing each word exactly once is appended before
/// document frequencies are computed (and excluded from the output), so no
/// IDF divides by zero. Per document: `tf(w) = count / max count`,
/// `idf(w) = ln(1 + N / df(w))`, and the resulting vector is rescaled by its
/// maximum component into `[0, 1]`.
pub fn tfidf_transform(corpus: &[[u32; 8]]) -> Vec<[f64; 8]> {
    let n_docs = corpus.len() + 1; // + smoothing document
    let mut df = [1u32; 8]; // smoothing document contains every word once
    for counts in corpus {
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                df[i] += 1;
            }
        }
    }
    let idf: [f64; 8] =
        std::array::from_fn(|i| (1.0 + n_docs as f64 / df[i] as f64).ln());

    corpus
        .iter()
        .map(|counts| {
            let max_count = *counts.iter().max().unwrap_or(&0);
            if max_count == 0 {
                return [0.0; 8];
            }
            let mut values: [f64; 8] =
                std::array::from_fn(|i| counts[i] as f64 / max_count as f64 * idf[i]);
            let max_value = values.iter().cloned().fold(0.0f64, f64::max);
            if max_value > 0.0 {
                for v in &mut values {
                    *v /= max_value;
                }
            }
            values
        })
        .collect()
}

/// Applies the missingness rule: features are unusable when the matching
/// probability is below 0.5 (exactly 0.5 is kept) or no page was downloaded.
pub fn gate(tfidf: [f64; 8], match_probability: f64, fetched: bool) -> WebFeatures {
    let missing = match_probability < MATCH_PROBABILITY_GATE || !fetched;
    WebFeatures {
        tfidf,
        match_probability,
        missing,
    }
}

/// One company's page-fetch outcome.
#[derive(Debug, Clone)]
pub struct PageResult {
    pub company_id: String,
    pub match_probability: f64,
    pub fetched: bool,
    pub text: String,
}

/// Computes gated web features for a batch of page results. The TF.IDF
/// corpus consists of all fetched pages; unfetched companies keep zero
/// vectors and are marked missing.
pub fn features_from_pages(pages: &[PageResult]) -> Vec<(String, WebFeatures)> {
    let counts: Vec<[u32; 8]> = pages
        .iter()
        .map(|p| {
            if p.fetched {
                count_shop_words(&p.text)
            } else {
                [0; 8]
            }
        })
        .collect();
    let tfidf = tfidf_transform(&counts);
    pages
        .iter()
        .zip(tfidf)
        .map(|(p, values)| {
            (
                p.company_id.clone(),
                gate(values, p.match_probability, p.fetched),
            )
        })
        .collect()
}

/// Writes `web_features.csv`:
/// `company_id,missing,tfidf_<word>...,match_probability`.
pub fn write_features_csv<W: Write>(
    out: &mut W,
    rows: &[(String, WebFeatures)],
    header_comment: Option<&str>,
) -> std::io::Result<()> {
    if let Some(comment) = header_comment {
        writeln!(out, "# {comment}")?;
    }
    write!(out, "company_id,missing")?;
    for word in SHOP_WORDS {
        write!(out, ",tfidf_{word}")?;
    }
    writeln!(out, ",match_probability")?;
    for (id, features) in rows {
        write!(out, "{},{}", id, features.missing)?;
        for v in features.tfidf {
            write!(out, ",{v}")?;
        }
        writeln!(out, ",{}", features.match_probability)?;
    }
    Ok(())
}

/// A single-page downloader. Implementations are expected to be blocking;
/// scheduling and politeness are handled by [`fetch_pages`].
pub trait Fetch: Sync {
    fn fetch(&self, url: &str) -> Result<String, String>;
}

/// One fetch job: company id, URL and its matching probability.
#[derive(Debug, Clone)]
pub struct FetchJob {
    pub company_id: String,
    pub url: String,
    pub match_probability: f64,
}

/// Downloads each URL once with at most `max_in_flight` parallel fetches and
/// a per-host politeness delay. Failures become `fetched = false`. Results
/// are returned in job order.
pub fn fetch_pages<F: Fetch>(
    fetcher: &F,
    jobs: &[FetchJob],
    max_in_flight: usize,
    politeness: Duration,
) -> Vec<PageResult> {
    let next = std::sync::atomic::AtomicUsize::new(0);
    let results: Mutex<Vec<Option<PageResult>>> = Mutex::new(vec![None; jobs.len()]);
    let last_hit: Mutex<std::collections::HashMap<String, Instant>> =
        Mutex::new(std::collections::HashMap::new());
    let workers = max_in_flight.max(1).min(jobs.len().max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= jobs.len() {
                    break;
                }
                let job = &jobs[i];
                let host = host_of(&job.url);
                loop {
                    let wait = {
                        let mut map = last_hit.lock().unwrap();
                        match map.get(&host) {
                            Some(&t) if t.elapsed() < politeness => politeness - t.elapsed(),
                            _ => {
                                map.insert(host.clone(), Instant::now());
                                Duration::ZERO
                            }
                        }
                    };
                    if wait.is_zero() {
                        break;
                    }
                    std::thread::sleep(wait);
                }
                let outcome = fetcher.fetch(&job.url);
                let result = match outcome {
                    Ok(text) => PageResult {
                        company_id: job.company_id.clone(),
                        match_probability: job.match_probability,
                        fetched: true,
                        text,
                    },
                    Err(_) => PageResult {
                        company_id: job.company_id.clone(),
                        match_probability: job.match_probability,
                        fetched: false,
                        text: String::new(),
                    },
                };
                results.lock().unwrap()[i] = Some(result);
            });
        }
    });

    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("all jobs completed"))
        .collect()
}

fn host_of(url: &str) -> String {
    let stripped = url
        .strip_prefix("https://")
        .or_else(|| url.strip_prefix("http://"))
        .unwrap_or(url);
    stripped
        .split(['/', '?', '#'])
        .next()
        .unwrap_or("")
        .to_string()
}

// Feature width sanity: web features extend the 8 distances by one
// probability column downstream.
const _: () = assert!(SHOP_WORDS.len() == MetricId::ALL.len());
