use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Parser, Subcommand};

use shopmatch_cli::config::RunConfig;
use shopmatch_cli::histogram::{histogram, write_histogram_csv, LogBinSpec};
use shopmatch_cli::sample::{label_sample_select, SampleThresholds};
use shopmatch_cli::stages::{OutDirLock, Pipeline};
use shopmatch_cli::synth::{synthesize, SyntheticSpec};
use shopmatch_cli::{schema, CliError};
use shopmatch_mlkit as mlkit;

/// Webshop identification and turnover estimation pipeline.
#[derive(Parser)]
#[command(name = "shopmatch", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the suffix table from the register.
    Stem(ConfigArg),
    /// Build and persist the LSH forest over register stems.
    Index(ConfigArg),
    /// Compute distance feature vectors for all tax filers.
    Link(ConfigArg),
    /// Compute web features from the page directory (or fetch pages).
    Webfeat {
        #[command(flatten)]
        config: ConfigArg,
        /// Download pages listed in url_matches.csv into html_dir first.
        #[arg(long)]
        fetch: bool,
        /// Maximum parallel downloads.
        #[arg(long, default_value_t = 4)]
        max_in_flight: usize,
        /// Per-host politeness delay in milliseconds.
        #[arg(long, default_value_t = 500)]
        politeness_ms: u64,
        /// Request timeout in seconds.
        #[arg(long, default_value_t = 10)]
        timeout_s: u64,
        /// User-agent header.
        #[arg(long, default_value = "shopmatch/0.1")]
        user_agent: String,
    },
    /// Train one classifier on the manual set and save it.
    Train {
        #[command(flatten)]
        config: ConfigArg,
        /// Which feature set to train on.
        #[arg(long, value_parser = ["br", "web"])]
        target: String,
        /// Model description, e.g. "rbfsvc C=100 gamma=1"; defaults to the
        /// configured model for the target.
        #[arg(long)]
        model: Option<String>,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validated grid search over parameter grids.
    Gridsearch {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_parser = ["br", "web"])]
        target: String,
        /// Restrict to one algorithm (default: all applicable).
        #[arg(long)]
        algorithm: Option<String>,
    },
    /// Train both classifiers and classify every company.
    Classify(ConfigArg),
    /// Estimate the error matrix and the corrected totals.
    Estimate(ConfigArg),
    /// Print a readable summary of the estimate outputs.
    Report(ConfigArg),
    /// Run all pipeline stages in order.
    Run(ConfigArg),
    /// Generate a synthetic dataset.
    Synth {
        /// Output directory for the dataset files.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        population: usize,
        #[arg(long, default_value_t = 0.12)]
        base_rate: f64,
        #[arg(long, default_value_t = 2000)]
        decoys: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Separate seed for the noisy channel assignments; defaults to
        /// seed + 1.
        #[arg(long)]
        assignment_seed: Option<u64>,
        #[arg(long, value_delimiter = ',', default_values_t = [2014, 2015, 2016])]
        years: Vec<i32>,
    },
    /// List companies selected for manual labeling.
    LabelSample {
        #[command(flatten)]
        config: ConfigArg,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export a privacy-suppressed turnover histogram.
    Histogram {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        year: i32,
        /// Output CSV (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration and its hash.
    Config(ConfigArg),
}

#[derive(clap::Args)]
struct ConfigArg {
    /// Path to the run configuration file.
    #[arg(long, short)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<RunConfig, CliError> {
        match &self.config {
            Some(path) => RunConfig::from_path(path),
            None => Ok(RunConfig::default()),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Stem(c) => {
            let pipeline = Pipeline::new(c.load()?);
            let _lock = OutDirLock::acquire(&pipeline.config.out_dir)?;
            pipeline.stage_stem()?;
        }
        Command::Index(c) => {
            let pipeline = Pipeline::new(c.load()?);
            let _lock = OutDirLock::acquire(&pipeline.config.out_dir)?;
            pipeline.stage_stem()?;
            pipeline.stage_index()?;
        }
        Command::Link(c) => {
            let pipeline = Pipeline::new(c.load()?);
            let _lock = OutDirLock::acquire(&pipeline.config.out_dir)?;
            pipeline.stage_stem()?;
            pipeline.stage_index()?;
            pipeline.stage_link()?;
        }
        Command::Webfeat {
            config,
            fetch,
            max_in_flight,
            politeness_ms,
            timeout_s,
            user_agent,
        } => {
            let pipeline = Pipeline::new(config.load()?);
            let _lock = OutDirLock::acquire(&pipeline.config.out_dir)?;
            if fetch {
                fetch_pages_to_dir(
                    &pipeline.config,
                    max_in_flight,
                    Duration::from_millis(politeness_ms),
                    Duration::from_secs(timeout_s),
                    &user_agent,
                )?;
            }
            pipeline.stage_webfeat()?;
        }
        Command::Train {
            config,
            target,
            model,
            out,
        } => {
            let config = config.load()?;
            let pipeline = Pipeline::new(config);
            let sets = pipeline.training_sets()?;
            let (set, default_model) = match target.as_str() {
                "br" => (&sets.br, pipeline.config.br_model.clone()),
                _ => (&sets.web, pipeline.config.web_model.clone()),
            };
            let spec = RunConfig::parse_model(model.as_deref().unwrap_or(&default_model))?;
            if target == "br" && !spec.algorithm.suits_continuous_features() {
                return Err(CliError::Config(format!(
                    "algorithm {} assumes count features and cannot score continuous distances",
                    spec.algorithm
                )));
            }
            let trained = mlkit::train(&spec, set, pipeline.config.seed)
                .map_err(|e| CliError::Data(e.to_string()))?;
            trained
                .save(&out)
                .map_err(|e| CliError::Data(e.to_string()))?;
            println!(
                "trained {} on {} rows ({} positives); saved to {}",
                spec,
                set.len(),
                set.positives(),
                out.display()
            );
        }
        Command::Gridsearch {
            config,
            target,
            algorithm,
        } => {
            let config = config.load()?;
            run_gridsearch(config, &target, algorithm.as_deref())?;
        }
        Command::Classify(c) => {
            let pipeline = Pipeline::new(c.load()?);
            let _lock = OutDirLock::acquire(&pipeline.config.out_dir)?;
            pipeline.stage_classify()?;
        }
        Command::Estimate(c) => {
            let pipeline = Pipeline::new(c.load()?);
            let _lock = OutDirLock::acquire(&pipeline.config.out_dir)?;
            pipeline.stage_estimate()?;
        }
        Command::Report(c) => {
            let config = c.load()?;
            print_report(&config)?;
        }
        Command::Run(c) => {
            let pipeline = Pipeline::new(c.load()?);
            pipeline.run_all()?;
            print_report(&pipeline.config)?;
        }
        Command::Synth {
            out,
            population,
            base_rate,
            decoys,
            seed,
            assignment_seed,
            years,
        } => {
            let spec = SyntheticSpec {
                population,
                base_rate,
                decoy_count: decoys,
                years,
                ..SyntheticSpec::default()
            };
            let data = synthesize(&spec, seed, assignment_seed.unwrap_or(seed + 1))?;
            data.write_to(&out)?;
            let webshops = data.truth.values().filter(|&&w| w).count();
            println!(
                "wrote {} companies ({webshops} webshops), {} register rows, {} labels to {}",
                data.tax.len(),
                data.register.len(),
                data.labels.len(),
                out.display()
            );
        }
        Command::LabelSample { config, out } => {
            let config = config.load()?;
            let companies = schema::read_tax_returns(&config.tax_returns)?;
            let thresholds = SampleThresholds {
                retail: config.threshold_retail,
                wholesale: config.threshold_wholesale,
                other: config.threshold_other,
            };
            let selected = label_sample_select(&companies, &thresholds);
            let mut buf = Vec::new();
            writeln!(buf, "# {}", config.header_comment())
                .map_err(|e| CliError::Data(e.to_string()))?;
            writeln!(buf, "company_id,name,industry_1974,max_turnover")
                .map_err(|e| CliError::Data(e.to_string()))?;
            for company in selected {
                writeln!(
                    buf,
                    "{},{},{},{}",
                    company.id,
                    company.name,
                    company.industry,
                    company.max_turnover().unwrap_or(0.0)
                )
                .map_err(|e| CliError::Data(e.to_string()))?;
            }
            write_output(out.as_deref(), &buf)?;
        }
        Command::Histogram { config, year, out } => {
            let config = config.load()?;
            let companies = schema::read_tax_returns(&config.tax_returns)?;
            let values: Vec<f64> = companies
                .iter()
                .filter_map(|c| c.turnover.get(&year).copied())
                .collect();
            let bins = histogram(
                &values,
                LogBinSpec {
                    bins_per_decade: config.histogram_bins_per_decade,
                },
                config.histogram_min_count,
            );
            let mut buf = Vec::new();
            write_histogram_csv(&mut buf, &bins, Some(&config.header_comment()))?;
            write_output(out.as_deref(), &buf)?;
        }
        Command::Config(c) => {
            let config = c.load()?;
            print!("{}", config.canonical());
            println!("# hash: {}", config.hash());
        }
    }
    Ok(())
}

fn write_output(path: Option<&std::path::Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliError::Data(format!("writing {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Data(e.to_string())),
    }
}

fn run_gridsearch(
    config: RunConfig,
    target: &str,
    only_algorithm: Option<&str>,
) -> Result<(), CliError> {
    let pipeline = Pipeline::new(config);
    let sets = pipeline.training_sets()?;
    let (set, continuous) = match target {
        "br" => (&sets.br, true),
        _ => (&sets.web, false),
    };

    let grids: Vec<mlkit::Grid> = match &pipeline.config.grid_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            mlkit::Grid::parse_file(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => mlkit::Algorithm::ALL
            .into_iter()
            .map(mlkit::Grid::table_default)
            .collect(),
    };
    let grids: Vec<mlkit::Grid> = grids
        .into_iter()
        .filter(|g| !continuous || g.algorithm.suits_continuous_features())
        .filter(|g| match only_algorithm {
            Some(name) => g.algorithm.name() == name,
            None => true,
        })
        .collect();
    if grids.is_empty() {
        return Err(CliError::Config("no applicable grids selected".into()));
    }

    let mut all_reports = Vec::new();
    let mut best_overall: Option<mlkit::CvResult> = None;
    for grid in &grids {
        let outcome = mlkit::grid_search(grid, set, pipeline.config.cv_folds, pipeline.config.seed)
            .map_err(|e| CliError::Data(format!("grid {}: {e}", grid.algorithm)))?;
        println!(
            "{}: best mean F1 {:.3} (±{:.3}) at {}",
            grid.algorithm,
            outcome.best.mean_f1,
            outcome.best.std_f1,
            outcome.best.spec.params_display()
        );
        if best_overall
            .as_ref()
            .is_none_or(|b| outcome.best.mean_f1 > b.mean_f1)
        {
            best_overall = Some(outcome.best.clone());
        }
        all_reports.push(outcome);
    }
    if let Some(best) = best_overall {
        println!(
            "overall best: {} with mean F1 {:.3} (±{:.3})",
            best.spec, best.mean_f1, best.std_f1
        );
    }

    std::fs::create_dir_all(&pipeline.config.out_dir)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let report_path = pipeline
        .config
        .out_dir
        .join(format!("cv_report_{target}.csv"));
    let mut buf = Vec::new();
    for (i, outcome) in all_reports.iter().enumerate() {
        let header = if i == 0 {
            Some(pipeline.config.header_comment())
        } else {
            None
        };
        mlkit::grid::write_report_csv(&mut buf, outcome, header.as_deref())
            .map_err(|e| CliError::Data(e.to_string()))?;
    }
    std::fs::write(&report_path, buf)
        .map_err(|e| CliError::Data(format!("writing {}: {e}", report_path.display())))?;
    println!("report written to {}", report_path.display());
    Ok(())
}

fn print_report(config: &RunConfig) -> Result<(), CliError> {
    let estimates = config.out_dir.join("estimates.csv");
    let text = std::fs::read_to_string(&estimates).map_err(|e| {
        CliError::Data(format!(
            "cannot read {} (run the estimate stage first): {e}",
            estimates.display()
        ))
    })?;
    println!("estimates (currency units):");
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        println!("  {line}");
    }
    let matrix = config.out_dir.join("error_matrix.csv");
    if let Ok(text) = std::fs::read_to_string(&matrix) {
        println!("error model:");
        for line in text.lines().filter(|l| !l.starts_with('#')) {
            println!("  {line}");
        }
    }
    let unclassified = config.out_dir.join("unclassified.csv");
    if let Ok(text) = std::fs::read_to_string(&unclassified) {
        println!("coverage loss (missing combined label):");
        for line in text.lines().filter(|l| !l.starts_with('#')) {
            println!("  {line}");
        }
    }
    Ok(())
}

fn fetch_pages_to_dir(
    config: &RunConfig,
    max_in_flight: usize,
    politeness: Duration,
    timeout: Duration,
    user_agent: &str,
) -> Result<(), CliError> {
    use shopmatch_cli::fetch::HttpFetcher;
    use shopmatch_core::webfeat::{fetch_pages, FetchJob};

    let matches = schema::read_url_matches(&config.url_matches)?;
    std::fs::create_dir_all(&config.html_dir)
        .map_err(|e| CliError::Data(format!("cannot create html dir: {e}")))?;
    let mut jobs: Vec<FetchJob> = matches
        .values()
        .map(|m| FetchJob {
            company_id: m.company_id.clone(),
            url: m.url.clone(),
            match_probability: m.match_probability,
        })
        .collect();
    jobs.sort_by(|a, b| a.company_id.cmp(&b.company_id));
    let fetcher = HttpFetcher::new(timeout, user_agent);
    let results = fetch_pages(&fetcher, &jobs, max_in_flight, politeness);
    let mut fetched = 0usize;
    for result in &results {
        if result.fetched {
            std::fs::write(
                config.html_dir.join(format!("{}.html", result.company_id)),
                &result.text,
            )
            .map_err(|e| CliError::Data(format!("writing page: {e}")))?;
            fetched += 1;
        }
    }
    eprintln!("fetched {fetched} of {} pages", results.len());
    Ok(())
}
