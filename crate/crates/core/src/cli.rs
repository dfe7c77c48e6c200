//! Command-line front end: `prep`, `train`, `eval`, `analyze` and `gradcheck`.
//!
//! Exit codes: 0 success, 1 usage or invalid argument, 2 data or format
//! problem, 3 numeric failure (including failed gradient checks).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::data::{binarize, filter_activity, ingest_ratings, popularity, read_data_dir, split, tail_intervals, write_data_dir, RatingsFormat, SplitDataset};
use crate::error::{Error, Result};
use crate::eval::{analysis_json, evaluate, preference_histogram, tail_distribution, EvalOptions, ModelScorer, NovIdeal, UndefinedNovelty, PREF_EDGES};
use crate::losses::LossKind;
use crate::model::ModelKind;
use crate::numeric::RngState;
use crate::train::{grad_check, load_checkpoint, parse_kv, save_checkpoint, train, Checkpoint, GradCheckOptions, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "milrec", version, about = "Train and evaluate implicit-feedback recommenders")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Binarize, filter and split a ratings file into a data directory.
    Prep(PrepArgs),
    /// Train a model on a data directory.
    Train(TrainArgs),
    /// Ranking metrics on the test split.
    Eval(EvalArgs),
    /// Preference histogram and popularity-tail report.
    Analyze(AnalyzeArgs),
    /// Compare analytic and finite-difference gradients.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Tsv,
    Csv,
}

#[derive(Debug, clap::Args)]
pub struct PrepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: FormatArg,
    /// Ratings at or above this value are positive feedback.
    #[arg(long, default_value_t = 4.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 5)]
    pub min_user_items: usize,
    #[arg(long, default_value_t = 0)]
    pub min_item_users: usize,
    #[arg(long, default_value_t = 0.1)]
    pub valid_frac: f64,
    #[arg(long, default_value_t = 0.1)]
    pub test_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint path; the metadata and log are written next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NovIdealArg {
    Max,
    Sorted,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [1usize, 20, 50, 100])]
    pub ks: Vec<usize>,
    /// JSON output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, value_enum, default_value = "max")]
    pub nov_ideal: NovIdealArg,
    /// Fail when a test item never occurs in training instead of leaving it out of Nov-NDCG.
    #[arg(long)]
    pub strict_novelty: bool,
}

#[derive(Debug, clap::Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub k: usize,
    /// Output directory for `analysis.json` and `tail_rank_profile.tsv`; JSON to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, clap::Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 1e-5)]
    pub tolerance: f64,
    #[arg(long)]
    pub loss: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

pub const ANALYSIS_FILE: &str = "analysis.json";
pub const PROFILE_FILE: &str = "tail_rank_profile.tsv";

/// Maps an error to its exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => EXIT_USAGE,
        Error::Input { .. } | Error::Format(_) | Error::Io(_) | Error::Evaluation(_) => EXIT_DATA,
        Error::NumericFailure(_) => EXIT_NUMERIC,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Prep(a) => run_prep(&a, stdout),
        Command::Train(a) => run_train(&a, stdout),
        Command::Eval(a) => run_eval(&a, stdout),
        Command::Analyze(a) => run_analyze(&a, stdout),
        Command::Gradcheck(a) => run_gradcheck(&a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "milrec: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

pub fn run_prep(a: &PrepArgs, out: &mut dyn Write) -> Result<i32> {
    let format = match a.format {
        FormatArg::Tsv => RatingsFormat::Tsv,
        FormatArg::Csv => RatingsFormat::Csv,
    };
    if !a.threshold.is_finite() {
        return Err(Error::invalid("threshold must be finite"));
    }
    let raw = ingest_ratings(&a.input, format).map_err(|e| with_file(e, &a.input))?;
    let corpus = filter_activity(&binarize(&raw, a.threshold), a.min_user_items, a.min_item_users)?;
    let parts = split(&corpus, a.valid_frac, a.test_frac, &mut RngState::new(a.seed))?;
    fs::create_dir_all(&a.out)?;
    let stats = write_data_dir(&a.out, &parts)?;
    out.write_all(stats.render().as_bytes())?;
    Ok(EXIT_OK)
}

fn with_file(e: Error, path: &Path) -> Error {
    match e {
        Error::Input { message, row } => Error::Input { message: format!("{}: {message}", path.display()), row },
        other => other,
    }
}

/// Preset, then config file, then command-line overrides.
pub fn resolve_config(a: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    let entries = match &a.config {
        Some(p) => parse_kv(&fs::read_to_string(p)?)?,
        None => Vec::new(),
    };
    let file_preset = entries.iter().find(|(k, _)| k == "preset").map(|(_, v)| v.clone());
    if let Some(p) = a.preset.clone().or(file_preset) {
        cfg.apply_preset(&p)?;
    }
    for (k, v) in entries.iter().filter(|(k, _)| k != "preset") {
        cfg.set(k, v)?;
    }
    for o in &a.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| Error::invalid(format!("override `{o}` is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.iterations {
        cfg.iterations = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn log_path(checkpoint: &Path) -> PathBuf {
    let mut s = checkpoint.as_os_str().to_owned();
    s.push(".log.tsv");
    PathBuf::from(s)
}

pub fn run_train(a: &TrainArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = resolve_config(a)?;
    let data = read_data_dir(&a.data)?;
    let (ckpt, log) = train(&cfg, &data)?;
    if let Some(dir) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    save_checkpoint(&ckpt, &a.out)?;
    fs::write(log_path(&a.out), log.to_tsv(cfg.valid_k))?;
    if let Some(last) = log.records.last() {
        writeln!(out, "iteration {}: train_loss {:.6} valid_ndcg@{} {:.6}", last.iteration, last.train_loss, cfg.valid_k, last.valid_ndcg)?;
    }
    writeln!(out, "checkpoint written to {}", a.out.display())?;
    Ok(EXIT_OK)
}

fn load_pair(ckpt: &Path, data: &Path) -> Result<(Checkpoint, SplitDataset)> {
    let c = load_checkpoint(ckpt)?;
    let d = read_data_dir(data)?;
    c.check_vocabularies(&d.users.fingerprint(), &d.items.fingerprint())?;
    Ok((c, d))
}

fn emit_json(value: &serde_json::Value, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::format(e.to_string()))?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn run_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<i32> {
    let (ckpt, data) = load_pair(&a.checkpoint, &a.data)?;
    let pop = popularity(&data.train)?;
    let scorer = ModelScorer::new(&ckpt.params, &data.train, ckpt.config.normalize_input);
    let opts = EvalOptions {
        ks: a.ks.clone(),
        nov_ideal: match a.nov_ideal {
            NovIdealArg::Max => NovIdeal::MaxNovelty,
            NovIdealArg::Sorted => NovIdeal::Sorted,
        },
        undefined_novelty: if a.strict_novelty { UndefinedNovelty::Error } else { UndefinedNovelty::Exclude },
        threads: a.threads,
    };
    let report = evaluate(&scorer, &data, &pop, &opts)?;
    emit_json(&report.to_json(), a.out.as_deref(), out)?;
    Ok(EXIT_OK)
}

pub fn run_analyze(a: &AnalyzeArgs, out: &mut dyn Write) -> Result<i32> {
    let (ckpt, data) = load_pair(&a.checkpoint, &a.data)?;
    let scorer = ModelScorer::new(&ckpt.params, &data.train, ckpt.config.normalize_input);
    let intervals = tail_intervals(&popularity(&data.train)?)?;
    let hist = match preference_histogram(&scorer, &data, &PREF_EDGES, a.threads) {
        Ok(h) => Some(h),
        Err(Error::Evaluation(msg)) if !ckpt.params.decoder.eq(&crate::numeric::ActivationKind::Sigmoid) => {
            eprintln!("notice: {msg}");
            None
        }
        Err(e) => return Err(e),
    };
    let tail = tail_distribution(&scorer, &data, &intervals, a.k, a.threads)?;
    let doc = analysis_json(hist.as_ref(), &tail);
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            emit_json(&doc, Some(&dir.join(ANALYSIS_FILE)), out)?;
            fs::write(dir.join(PROFILE_FILE), tail.profile_tsv())?;
        }
        None => emit_json(&doc, None, out)?,
    }
    Ok(EXIT_OK)
}

pub fn run_gradcheck(a: &GradcheckArgs, out: &mut dyn Write) -> Result<i32> {
    let opts = GradCheckOptions {
        tolerance: a.tolerance,
        loss: a.loss.as_deref().map(str::parse::<LossKind>).transpose()?,
        model: a.model.as_deref().map(str::parse::<ModelKind>).transpose()?,
        seed: a.seed,
    };
    let report = grad_check(&opts)?;
    out.write_all(report.render().as_bytes())?;
    Ok(if report.passed() { EXIT_OK } else { EXIT_NUMERIC })
}
