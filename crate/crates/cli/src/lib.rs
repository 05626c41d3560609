//! Subcommands of the `rankexp` binary. Each returns its report so tests can
//! drive them without spawning processes.

mod error;
mod output;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use rankexp::log::{read_jsonl, validate_log, write_jsonl, LogError};
use rankexp::sim::{
    power_analysis, run_experiment, run_meta, ExperimentConfig, MetaConfig, MetaReport, PowerConfig, PowerReport,
};
use rankexp::stats::{fit_gamma, gamma_candidates, GammaFit, StatsError};
use rankexp::{analyze, AnalysisParams, AnalysisReport, EventKind, EventRecord, ExposureRecord, Mode, ModeReport};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "rankexp",
    version,
    about = "Interleaving and counterfactual ranking experiments"
)]
pub struct Cli {
    /// Worker threads for simulation; output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an experiment and write its logs and report.
    Run(RunArgs),
    /// Compute the metrics of an exposure log and an event log.
    Analyze(AnalyzeArgs),
    /// Run the validation corpus and write correlation tables.
    Validate(ValidateArgs),
    /// Fit the attention decay from click positions.
    TuneGamma(TuneGammaArgs),
    /// Required sample sizes and speedups over A/B conversion.
    Power(PowerArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides master_seed from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub exposures: PathBuf,
    #[arg(long)]
    pub events: PathBuf,
    /// Expected mode; the log's own mode is used when omitted.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// TOML file with analysis parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TuneGammaArgs {
    #[arg(long)]
    pub events: PathBuf,
    /// Exposure log for click ranks; defaults to exposures.jsonl next to the events.
    #[arg(long)]
    pub exposures: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated online metrics; overrides the config.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Option<Vec<String>>,
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Result of one invocation: a JSON document and a human-readable table.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub json: String,
    pub table: String,
}

impl Cli {
    /// Whether the JSON report goes to standard output instead of a file.
    pub fn json_to_stdout(&self) -> bool {
        matches!(
            &self.command,
            Command::Analyze(AnalyzeArgs { out: None, .. }) | Command::Power(PowerArgs { out: None, .. })
        )
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let go = || match &cli.command {
        Command::Run(a) => cmd_run(a).map(|r| outcome(&r, output::report_table(&r))),
        Command::Analyze(a) => cmd_analyze(a).map(|r| outcome(&r, output::report_table(&r))),
        Command::Validate(a) => cmd_validate(a).map(|r| outcome(&r, output::meta_table(&r))),
        Command::TuneGamma(a) => cmd_tune_gamma(a).map(|r| outcome(&r, output::gamma_table(&r))),
        Command::Power(a) => cmd_power(a).map(|r| outcome(&r, output::power_table(&r))),
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}

fn outcome<T: Serialize>(value: &T, table: String) -> Outcome {
    Outcome {
        json: to_json(value),
        table,
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Parses a TOML config; unreadable or malformed files are config errors.
pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::config(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_log<T: Serialize>(path: &Path, records: &[T]) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_jsonl(BufWriter::new(file), records).map_err(|e| match e {
        LogError::Io(source) => CliError::io(path, source),
        other => CliError::Invalid(other.to_string()),
    })
}

fn read_log<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_jsonl(BufReader::new(file)).map_err(|e| match e {
        LogError::Io(source) => CliError::io(path, source),
        other => CliError::config(path, other),
    })
}

/// Simulates the configured experiment into `exposures.jsonl`,
/// `events.jsonl` and `report.json` under `--out`, plus `quality.csv` for
/// interleaving runs.
pub fn cmd_run(args: &RunArgs) -> Result<AnalysisReport, CliError> {
    let mut cfg: ExperimentConfig = load_toml(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    cfg.validate().map_err(|e| CliError::config(&args.config, e))?;
    let run = run_experiment(&cfg)?;
    create_dir(&args.out)?;
    write_log(&args.out.join("exposures.jsonl"), &run.exposures)?;
    write_log(&args.out.join("events.jsonl"), &run.events)?;
    write_file(&args.out.join("report.json"), &to_json(&run.report))?;
    if let ModeReport::Interleaving { quality, .. } = &run.report.result {
        write_file(&args.out.join("quality.csv"), &output::quality_csv(quality))?;
    }
    Ok(run.report)
}

/// Analysis parameters as read from `--params`; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ParamsFile {
    experiment: Option<String>,
    window: Option<rankexp::AttributionWindow>,
    preference_event: Option<EventKind>,
    cf_hyperparams: Option<rankexp::CfHyperparams>,
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<AnalysisReport, CliError> {
    let exposures: Vec<ExposureRecord> = read_log(&args.exposures)?;
    let events: Vec<EventRecord> = read_log(&args.events)?;
    let validation = validate_log(&exposures, &events);
    if !validation.is_valid() {
        return Err(CliError::Validation(Box::new(validation)));
    }
    let file: ParamsFile = match &args.params {
        Some(p) => load_toml(p)?,
        None => ParamsFile::default(),
    };
    let defaults = AnalysisParams::new(file.experiment.unwrap_or_else(|| "experiment".into()));
    let params = AnalysisParams {
        window: file.window.unwrap_or(defaults.window),
        preference_event: file.preference_event.unwrap_or(defaults.preference_event),
        cf_hyperparams: file.cf_hyperparams.unwrap_or(defaults.cf_hyperparams),
        ..defaults
    };
    params
        .cf_hyperparams
        .validate()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    params.window.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
    if let Some(expected) = args.mode {
        let found = rankexp::analysis::log_mode(&exposures)?;
        if found != expected {
            return Err(CliError::Invalid(format!("--mode {expected} but the log is {found}")));
        }
    }
    let report = analyze(&exposures, &events, &params)?;
    if let Some(out) = &args.out {
        write_file(out, &to_json(&report))?;
    }
    Ok(report)
}

/// Runs the validation corpus and writes `meta_report.json` and the CSV tables under `--out`.
pub fn cmd_validate(args: &ValidateArgs) -> Result<MetaReport, CliError> {
    let cfg: MetaConfig = load_toml(&args.config)?;
    let report = run_meta(&cfg)?;
    create_dir(&args.out)?;
    write_file(&args.out.join("meta_report.json"), &to_json(&report))?;
    write_file(&args.out.join("correlations.csv"), &output::correlation_csv(&report))?;
    write_file(
        &args.out.join("alpha_sweep.csv"),
        &output::sweep_csv(&report.alpha_sweep, "alpha"),
    )?;
    write_file(
        &args.out.join("gamma_sweep.csv"),
        &output::sweep_csv(&report.gamma_sweep, "gamma"),
    )?;
    write_file(&args.out.join("scatter.csv"), &output::scatter_csv(&report))?;
    write_file(&args.out.join("agreement.csv"), &output::agreement_csv(&report))?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub gamma_0: f64,
    pub candidates: Vec<f64>,
    pub n_clicks: u64,
    pub histogram: BTreeMap<u32, u64>,
    pub fit: GammaFit,
}

/// Click counts by shown rank.
pub fn click_histogram(exposures: &[ExposureRecord], events: &[EventRecord]) -> Result<BTreeMap<u32, u64>, CliError> {
    let by_search: std::collections::HashMap<_, _> = exposures.iter().map(|e| (e.search, e)).collect();
    let mut hist = BTreeMap::new();
    for ev in events.iter().filter(|e| e.kind == EventKind::Click) {
        let rank = by_search
            .get(&ev.search)
            .and_then(|e| e.shown_rank(ev.listing))
            .ok_or_else(|| {
                CliError::Invalid(format!(
                    "click on listing {} in search {} has no shown rank",
                    ev.listing, ev.search
                ))
            })?;
        *hist.entry(rank as u32).or_insert(0) += 1;
    }
    Ok(hist)
}

/// Fits the decay; candidates step by 0.05 around it and stay inside (0, 1).
pub fn tune_gamma(hist: &BTreeMap<u32, u64>) -> Result<GammaReport, CliError> {
    let fit = fit_gamma(hist).map_err(|e| match e {
        StatsError::DegenerateHistogram(m) => CliError::Invalid(format!("degenerate click histogram: {m}")),
        other => CliError::Invalid(other.to_string()),
    })?;
    Ok(GammaReport {
        gamma_0: fit.gamma,
        candidates: gamma_candidates(fit.gamma, 0.05, 1),
        n_clicks: hist.values().sum(),
        histogram: hist.clone(),
        fit,
    })
}

pub fn cmd_tune_gamma(args: &TuneGammaArgs) -> Result<GammaReport, CliError> {
    let exposures_path = match &args.exposures {
        Some(p) => p.clone(),
        None => args
            .events
            .parent()
            .map(|d| d.join("exposures.jsonl"))
            .unwrap_or_else(|| PathBuf::from("exposures.jsonl")),
    };
    let events: Vec<EventRecord> = read_log(&args.events)?;
    let exposures: Vec<ExposureRecord> = read_log(&exposures_path)?;
    tune_gamma(&click_histogram(&exposures, &events)?)
}

pub fn cmd_power(args: &PowerArgs) -> Result<PowerReport, CliError> {
    let mut cfg: PowerConfig = load_toml(&args.config)?;
    if let Some(m) = &args.metrics {
        cfg.metrics = m.clone();
    }
    let report = power_analysis(&cfg)?;
    if let Some(out) = &args.out {
        write_file(out, &to_json(&report))?;
    }
    Ok(report)
}
