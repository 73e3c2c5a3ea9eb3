//! Synthetic population generator.
//!
//! Substitutes the confidential microdata: tax filers with skewed log-normal
//! turnover and a low webshop base rate, a register of corrupted name
//! copies plus decoys, URL matches and home pages. Classification noise is
//! injected through two channels — whether a company is registered as
//! retail (the BR route) and whether its page looks like a shop (the web
//! route) — with rates derived from a target combined error matrix, so the
//! confusion realized by the trained classifiers approximates that target.
//!
//! Population structure (names, turnover, webshop flags) is drawn from
//! `population_seed`; the noisy channel assignments use `assignment_seed`,
//! so replications can redraw classification noise over a fixed population.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shopmatch_core::types::{CompanyRecord, RegisterEntry};

use crate::schema::LabelRow;
use crate::CliError;

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub population: usize,
    /// Webshop share of the population, in (0, 1).
    pub base_rate: f64,
    pub years: Vec<i32>,
    /// Log-normal turnover parameters (natural log scale).
    pub turnover_log_mean: f64,
    pub turnover_log_sd: f64,
    /// Extra register-only retail companies.
    pub decoy_count: usize,
    /// Name-corruption rates for register copies.
    pub suffix_swap_rate: f64,
    pub char_edit_rate: f64,
    pub whitespace_rate: f64,
    /// Target combined classification-error matrix
    /// `[[P(ŝ=1|s=1), P(ŝ=0|s=1)], [P(ŝ=1|s=0), P(ŝ=0|s=0)]]`.
    pub target_p: [[f64; 2]; 2],
    /// Probability that web features are unusable (bad URL match or failed
    /// download).
    pub web_missing_rate: f64,
    /// Randomly drawn labeled companies outside the threshold selection,
    /// forming the held-out test set.
    pub test_sample: usize,
    /// Industry shares (retail, wholesale, other) for webshops and for the
    /// rest.
    pub shop_industry: [f64; 3],
    pub nonshop_industry: [f64; 3],
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            population: 2_000,
            base_rate: 0.12,
            years: vec![2014, 2015, 2016],
            turnover_log_mean: 11.0,
            turnover_log_sd: 2.0,
            decoy_count: 2_000,
            suffix_swap_rate: 0.3,
            char_edit_rate: 0.15,
            whitespace_rate: 0.1,
            target_p: [[8.0 / 13.0, 5.0 / 13.0], [4.0 / 66.0, 62.0 / 66.0]],
            web_missing_rate: 0.05,
            test_sample: 300,
            shop_industry: [0.5, 0.3, 0.2],
            nonshop_industry: [0.06, 0.15, 0.79],
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), CliError> {
        if !(0.0 < self.base_rate && self.base_rate < 1.0) {
            return Err(CliError::Config(format!(
                "base_rate must lie in (0, 1), got {}",
                self.base_rate
            )));
        }
        for rate in [
            self.suffix_swap_rate,
            self.char_edit_rate,
            self.whitespace_rate,
            self.web_missing_rate,
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(CliError::Config(format!("rate {rate} outside [0, 1]")));
            }
        }
        for row in self.target_p {
            for v in row {
                if !(0.0..=1.0).contains(&v) {
                    return Err(CliError::Config(format!(
                        "target_p entry {v} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Splits the combined target rates into BR and web channel rates given
    /// the AND combination rule. With web-missing rate m the combined
    /// positive rate is `r_br (m + (1 − m) r_w)`; the BR channel takes the
    /// square root of the target and the web rate absorbs the rest.
    fn channel_rates(&self) -> Result<ChannelRates, CliError> {
        let split = |target: f64| -> Result<(f64, f64), CliError> {
            let br = target.sqrt();
            let m = self.web_missing_rate;
            let web = if br == 0.0 {
                0.0
            } else {
                (target / br - m) / (1.0 - m)
            };
            if !(0.0..=1.0).contains(&web) {
                return Err(CliError::Config(format!(
                    "target rate {target} infeasible with web_missing_rate {m}"
                )));
            }
            Ok((br, web))
        };
        let (br_pos, web_pos) = split(self.target_p[0][0])?;
        let (br_neg, web_neg) = split(self.target_p[1][0])?;
        Ok(ChannelRates {
            br_pos,
            web_pos,
            br_neg,
            web_neg,
        })
    }
}

struct ChannelRates {
    /// P(registered as retail | webshop), P(shop-looking page | webshop).
    br_pos: f64,
    web_pos: f64,
    /// The same for non-webshops.
    br_neg: f64,
    web_neg: f64,
}

/// A complete synthetic dataset with retained ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub tax: Vec<CompanyRecord>,
    pub register: Vec<RegisterEntry>,
    pub url_matches: Vec<(String, String, f64)>,
    pub labels: BTreeMap<String, LabelRow>,
    /// company id → true webshop flag.
    pub truth: BTreeMap<String, bool>,
    /// company id → home-page HTML (absent means download failed).
    pub pages: BTreeMap<String, String>,
}

const SYLLABLES: [&str; 24] = [
    "ber", "lin", "ta", "mo", "ker", "sol", "ven", "dra", "ple", "net", "ho", "ka", "fir", "lux",
    "mar", "tel", "gro", "vis", "pan", "rix", "dal", "nor", "wim", "zet",
];

const TRADE_WORDS: [&str; 8] = [
    "handel", "trading", "retail", "commerce", "goods", "store", "outlet", "supply",
];

/// (country, common suffix, spelled-out swap within the same suffix class).
const SUFFIX_POOL: [(&str, &str, &str); 5] = [
    ("DE", "gmbh", "gesellschaft mit beschrankter haftung"),
    ("GB", "ltd", "limited"),
    ("NL", "bv", "besloten vennootschap"),
    ("FR", "sarl", "societe a responsabilite limitee"),
    ("BE", "nv", "naamloze vennootschap"),
];

fn brand(rng: &mut ChaCha8Rng, taken: &mut HashSet<String>) -> String {
    loop {
        let syllable_count = rng.random_range(3..=4);
        let mut word = String::new();
        for _ in 0..syllable_count {
            word.push_str(SYLLABLES[rng.random_range(0..SYLLABLES.len())]);
        }
        let name = if rng.random_bool(0.8) {
            format!("{word} {}", TRADE_WORDS[rng.random_range(0..TRADE_WORDS.len())])
        } else {
            word
        };
        if taken.insert(name.clone()) {
            return name;
        }
    }
}

/// Register-side spelling corruption: a suffix swap within the suffix
/// class, a single character edit in the brand part, or a whitespace
/// merge/split.
fn corrupt_name(
    brand_part: &str,
    suffix: &str,
    swap: &str,
    spec: &SyntheticSpec,
    rng: &mut ChaCha8Rng,
) -> String {
    let mut brand_part = brand_part.to_string();
    if rng.random_bool(spec.char_edit_rate) && brand_part.len() > 4 {
        let chars: Vec<char> = brand_part.chars().collect();
        let pos = rng.random_range(1..chars.len() - 1);
        let mut edited = chars.clone();
        match rng.random_range(0..3u8) {
            0 => edited[pos] = (b'a' + rng.random_range(0..26u8)) as char,
            1 => edited.insert(pos, (b'a' + rng.random_range(0..26u8)) as char),
            _ => {
                edited.remove(pos);
            }
        }
        brand_part = edited.into_iter().collect();
    }
    if rng.random_bool(spec.whitespace_rate) {
        if let Some(space) = brand_part.find(' ') {
            // Merge the two words.
            brand_part.remove(space);
        } else if brand_part.len() >= 6 {
            // Split in the middle.
            let mid = brand_part.len() / 2;
            brand_part.insert(mid, ' ');
        }
    }
    let suffix_text = if rng.random_bool(spec.suffix_swap_rate) {
        swap
    } else {
        suffix
    };
    format!("{brand_part} {suffix_text}")
}

fn shop_page(rng: &mut ChaCha8Rng, shoppy: bool) -> String {
    let mut body = String::from("<html><head><title>home</title></head><body>");
    if shoppy {
        let words = ["shop", "cart", "basket", "winkel", "wagen", "mand", "warenkorb", "bag"];
        let kinds = rng.random_range(2..=4usize);
        for _ in 0..kinds {
            let word = words[rng.random_range(0..words.len())];
            let repeats = rng.random_range(2..=9usize);
            for _ in 0..repeats {
                body.push_str(word);
                body.push(' ');
            }
        }
        body.push_str("<div class=\"cart-icon\"></div>");
    } else {
        body.push_str("welcome to our company page informatie kontakt ");
        if rng.random_bool(0.1) {
            body.push_str("workshop ");
        }
    }
    body.push_str("</body></html>");
    body
}

/// Generates the dataset. Population structure comes from
/// `population_seed`; channel noise, name corruption and page contents from
/// `assignment_seed`.
pub fn synthesize(
    spec: &SyntheticSpec,
    population_seed: u64,
    assignment_seed: u64,
) -> Result<SyntheticData, CliError> {
    spec.validate()?;
    let rates = spec.channel_rates()?;
    let mut pop_rng = ChaCha8Rng::seed_from_u64(population_seed);
    let mut assign_rng = ChaCha8Rng::seed_from_u64(assignment_seed);

    let mut taken = HashSet::new();
    let mut tax = Vec::with_capacity(spec.population);
    let mut truth = BTreeMap::new();
    let mut register = Vec::new();
    let mut url_matches = Vec::new();
    let mut pages = BTreeMap::new();
    let mut labels = BTreeMap::new();

    struct Company {
        id: String,
        brand_part: String,
        suffix: &'static str,
        swap: &'static str,
        webshop: bool,
        max_turnover: f64,
        industry: &'static str,
        threshold: f64,
    }
    let mut companies = Vec::with_capacity(spec.population);

    for i in 0..spec.population {
        let id = format!("C{i:06}");
        let webshop = pop_rng.random_bool(spec.base_rate);
        let (country_idx, industry, threshold) = if webshop {
            // Webshops mostly file under the outdated retail code.
            let roll: f64 = pop_rng.random();
            if roll < 0.7 {
                (pop_rng.random_range(0..SUFFIX_POOL.len()), "Retail", 1e6)
            } else if roll < 0.9 {
                (pop_rng.random_range(0..SUFFIX_POOL.len()), "Wholesale", 2e7)
            } else {
                (pop_rng.random_range(0..SUFFIX_POOL.len()), "Other", 5e7)
            }
        } else {
            let roll: f64 = pop_rng.random();
            if roll < 0.06 {
                (pop_rng.random_range(0..SUFFIX_POOL.len()), "Retail", 1e6)
            } else if roll < 0.21 {
                (pop_rng.random_range(0..SUFFIX_POOL.len()), "Wholesale", 2e7)
            } else {
                (pop_rng.random_range(0..SUFFIX_POOL.len()), "Other", 5e7)
            }
        };
        let (_, suffix, swap) = SUFFIX_POOL[country_idx];
        let brand_part = brand(&mut pop_rng, &mut taken);

        // Skewed turnover, correlated across years.
        let z: f64 = {
            // Box-Muller from two uniforms.
            let u1: f64 = pop_rng.random();
            let u2: f64 = pop_rng.random();
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        };
        let base = (spec.turnover_log_mean + spec.turnover_log_sd * z).exp();
        let mut turnover = BTreeMap::new();
        let mut max_turnover = 0.0f64;
        for &year in &spec.years {
            let factor: f64 = pop_rng.random_range(0.8..1.25);
            let value = if pop_rng.random_bool(0.05) {
                0.0
            } else {
                (base * factor).round()
            };
            max_turnover = max_turnover.max(value);
            turnover.insert(year, value);
        }

        tax.push(CompanyRecord {
            id: id.clone(),
            name: format!("{brand_part} {suffix}"),
            industry: industry.to_string(),
            turnover,
        });
        truth.insert(id.clone(), webshop);
        companies.push(Company {
            id,
            brand_part,
            suffix,
            swap,
            webshop,
            max_turnover,
            industry,
            threshold,
        });
    }

    // Decoys: register-only retail companies, plus some non-retail rows that
    // ingestion must filter out.
    for _ in 0..spec.decoy_count {
        let (country, suffix, _) = SUFFIX_POOL[pop_rng.random_range(0..SUFFIX_POOL.len())];
        let name = format!("{} {suffix}", brand(&mut pop_rng, &mut taken));
        register.push(RegisterEntry {
            name,
            country: country.to_string(),
            retail: pop_rng.random_bool(0.9),
        });
    }

    // Test-set membership is a population property.
    let below_threshold: Vec<usize> = companies
        .iter()
        .enumerate()
        .filter(|(_, c)| c.max_turnover <= c.threshold)
        .map(|(i, _)| i)
        .collect();
    let test_ids: HashSet<String> = {
        let mut pool = below_threshold.clone();
        let mut picked = HashSet::new();
        let count = spec.test_sample.min(pool.len());
        for _ in 0..count {
            let at = pop_rng.random_range(0..pool.len());
            picked.insert(companies[pool.swap_remove(at)].id.clone());
        }
        picked
    };

    for company in &companies {
        // BR channel: registered as a retail company, with error rates per
        // the true class.
        let br_rate = if company.webshop { rates.br_pos } else { rates.br_neg };
        let registered = assign_rng.random_bool(br_rate);
        if registered {
            let country = SUFFIX_POOL
                .iter()
                .find(|(_, s, _)| *s == company.suffix)
                .map(|(c, _, _)| *c)
                .unwrap_or("EU");
            register.push(RegisterEntry {
                name: corrupt_name(
                    &company.brand_part,
                    company.suffix,
                    company.swap,
                    spec,
                    &mut assign_rng,
                ),
                country: country.to_string(),
                retail: true,
            });
        }

        // Web channel: page appearance plus the missingness gate.
        let missing = assign_rng.random_bool(spec.web_missing_rate);
        let web_rate = if company.webshop { rates.web_pos } else { rates.web_neg };
        let shoppy = assign_rng.random_bool(web_rate);
        let url = format!("http://www.{}.example/", company.id.to_lowercase());
        if missing {
            // Half the missing cases: bad URL match; other half: download
            // failure (no page file despite a confident match).
            if assign_rng.random_bool(0.5) {
                let p: f64 = assign_rng.random_range(0.02..0.45);
                url_matches.push((company.id.clone(), url, p));
                pages.insert(company.id.clone(), shop_page(&mut assign_rng, shoppy));
            } else {
                let p: f64 = assign_rng.random_range(0.55..0.98);
                url_matches.push((company.id.clone(), url, p));
                // No page written: fetch failed.
            }
        } else {
            let p: f64 = assign_rng.random_range(0.55..0.98);
            url_matches.push((company.id.clone(), url, p));
            pages.insert(company.id.clone(), shop_page(&mut assign_rng, shoppy));
        }

        // Manual labels: the threshold selection plus the random test
        // sample.
        let selected = company.max_turnover > company.threshold;
        if selected || test_ids.contains(&company.id) {
            labels.insert(
                company.id.clone(),
                LabelRow {
                    label_br: i8::from(registered),
                    label_web: i8::from(company.webshop),
                },
            );
        }
        let _ = company.industry;
    }

    Ok(SyntheticData {
        tax,
        register,
        url_matches,
        labels,
        truth,
        pages,
    })
}

impl SyntheticData {
    /// Writes the dataset in the pipeline's input schemas.
    pub fn write_to(&self, dir: &Path) -> Result<(), CliError> {
        let io_err =
            |e: std::io::Error| CliError::Data(format!("writing {}: {e}", dir.display()));
        std::fs::create_dir_all(dir.join("html")).map_err(io_err)?;

        let mut tax = std::fs::File::create(dir.join("tax_returns.csv")).map_err(io_err)?;
        writeln!(tax, "company_id,name,industry_1974,year,turnover").map_err(io_err)?;
        for record in &self.tax {
            for (year, turnover) in &record.turnover {
                writeln!(
                    tax,
                    "{},{},{},{},{}",
                    record.id, record.name, record.industry, year, turnover
                )
                .map_err(io_err)?;
            }
        }

        let mut reg = std::fs::File::create(dir.join("register.csv")).map_err(io_err)?;
        writeln!(reg, "name,country,retail_flag").map_err(io_err)?;
        for entry in &self.register {
            writeln!(reg, "{},{},{}", entry.name, entry.country, entry.retail)
                .map_err(io_err)?;
        }

        let mut urls = std::fs::File::create(dir.join("url_matches.csv")).map_err(io_err)?;
        writeln!(urls, "company_id,url,match_probability").map_err(io_err)?;
        for (id, url, p) in &self.url_matches {
            writeln!(urls, "{id},{url},{p}").map_err(io_err)?;
        }

        let mut labels = std::fs::File::create(dir.join("labels.csv")).map_err(io_err)?;
        writeln!(labels, "company_id,label_br,label_web").map_err(io_err)?;
        for (id, row) in &self.labels {
            writeln!(labels, "{id},{},{}", row.label_br, row.label_web).map_err(io_err)?;
        }

        let mut truth = std::fs::File::create(dir.join("truth.csv")).map_err(io_err)?;
        writeln!(truth, "company_id,is_webshop").map_err(io_err)?;
        for (id, &webshop) in &self.truth {
            writeln!(truth, "{id},{}", u8::from(webshop)).map_err(io_err)?;
        }

        for (id, html) in &self.pages {
            std::fs::write(dir.join("html").join(format!("{id}.html")), html).map_err(io_err)?;
        }
        Ok(())
    }

    /// True aggregate webshop turnover per year.
    pub fn true_totals(&self) -> BTreeMap<i32, f64> {
        let mut totals = BTreeMap::new();
        for record in &self.tax {
            if self.truth[&record.id] {
                for (&year, &turnover) in &record.turnover {
                    *totals.entry(year).or_insert(0.0) += turnover;
                }
            }
        }
        totals
    }
}
