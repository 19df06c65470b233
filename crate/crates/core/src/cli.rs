//! The `splitgauntlet` command line.
//!
//! Subcommands compose through files: `gen` writes a corpus, `split` writes
//! manifests, and `diagnose`/`evaluate` read them back. Exit codes are 0 on
//! success, 1 on usage errors and 2 on data errors. `SPLITGAUNTLET_THREADS`
//! caps the worker pool.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::corpus::{generate_synthetic, load_corpus, write_corpus, Corpus, Format, SyntheticConfig};
use crate::diagnostics::{
    separability_probe, split_divergence, DivergenceReport, SeparabilityReport, DEFAULT_PROBE_FOLDS,
    DEFAULT_TOP_UNIGRAMS,
};
use crate::error::Error;
use crate::evalharness::{
    drift_analysis, evaluate_strategies, render_table, EvaluationConfig, Metric, ModelConfig, EVAL_LEARNING_RATE,
};
use crate::exec::init_thread_pool;
use crate::features::{build_vocabulary, FeatureConfig, Vocabulary};
use crate::io::{to_json_bytes, write_atomic};
use crate::splitters::{
    split_with, temporal_split, SplitManifest, SplitterConfig, Strategy, StrategyParams, TemporalMode, TemporalSplit,
    DEFAULT_MIN_DAY_SIZE,
};

pub const THREADS_ENV: &str = "SPLITGAUNTLET_THREADS";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Parser)]
#[command(name = "splitgauntlet", version, about = "Dataset splits that stress-test evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic corpus.
    Gen(GenArgs),
    /// Split a corpus and write one manifest per repeat plus a summary.
    Split(SplitArgs),
    /// Divergence and separability reports for manifests.
    Diagnose(DiagnoseArgs),
    /// Compare split strategies against a new sample.
    Evaluate(EvaluateArgs),
    /// Train on each day slice and correlate score with temporal gap.
    Drift(DriftArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Corpus file (JSONL or TSV).
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<Format>,
}

impl InputArgs {
    fn load(&self) -> Result<Corpus, Error> {
        load_corpus(&self.input, self.format.unwrap_or_else(|| Format::from_path(&self.input)))
    }
}

#[derive(Debug, Args)]
struct VocabArgs {
    /// Keep only the most frequent tokens.
    #[arg(long)]
    max_vocab: Option<usize>,
    #[arg(long, default_value_t = 1)]
    min_count: usize,
    /// Keep case when tokenizing.
    #[arg(long)]
    keep_case: bool,
}

impl VocabArgs {
    fn config(&self) -> FeatureConfig {
        FeatureConfig {
            lowercase: !self.keep_case,
            max_vocab: self.max_vocab,
            min_count: self.min_count,
        }
    }
}

#[derive(Debug, Args)]
struct SplitterArgs {
    #[arg(long, default_value_t = 0.1)]
    test_fraction: f64,
    /// Share of the non-test remainder held out as dev.
    #[arg(long, default_value_t = 0.1)]
    dev_fraction: f64,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Cross-validation folds for the random strategy.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Train/dev/test proportions for a standard split of untagged data.
    #[arg(long, value_parser = parse_proportions, default_value = "0.8,0.1,0.1")]
    proportions: (f64, f64, f64),
}

impl SplitterArgs {
    fn config(&self, seed: Option<u64>) -> SplitterConfig {
        SplitterConfig {
            test_fraction: self.test_fraction,
            dev_fraction: self.dev_fraction,
            repeats: self.repeats,
            seed: seed.unwrap_or(0),
            ..SplitterConfig::default()
        }
    }

    fn params(&self) -> StrategyParams {
        StrategyParams {
            folds: self.folds,
            proportions: self.proportions,
        }
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long = "out", value_name = "PATH")]
    output: PathBuf,
    #[arg(long, default_value = "jsonl")]
    format: Format,
    #[arg(long, default_value_t = 2000)]
    n_records: usize,
    #[arg(long, default_value_t = 2000)]
    vocab_size: usize,
    #[arg(long, default_value_t = 4)]
    n_labels: usize,
    /// Strength of the planted length/label signal in [0, 1].
    #[arg(long, default_value_t = 0.6)]
    correlation: f64,
    /// Per-period spelling drift rate in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    drift: f64,
    #[arg(long, default_value_t = 1)]
    periods: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum TemporalModeArg {
    HoldoutLatest,
    DaySlices,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output directory.
    #[arg(long = "out", value_name = "DIR")]
    output: PathBuf,
    #[arg(long)]
    strategy: String,
    /// Required for random, bootstrap, random_length and adversarial.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    splitter: SplitterArgs,
    #[command(flatten)]
    vocab: VocabArgs,
    #[arg(long, value_enum, default_value = "holdout-latest")]
    temporal_mode: TemporalModeArg,
    #[arg(long, default_value_t = DEFAULT_MIN_DAY_SIZE)]
    min_day_size: usize,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Manifest files or directories of manifests.
    #[arg(long, required = true, num_args = 1.., value_name = "PATH")]
    manifests: Vec<PathBuf>,
    #[arg(long = "out", value_name = "DIR")]
    output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOP_UNIGRAMS)]
    top_unigrams: usize,
    #[arg(long, default_value_t = DEFAULT_PROBE_FOLDS)]
    probe_folds: usize,
    /// Seed for the probe's class balancing.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    vocab: VocabArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum MetricArg {
    Accuracy,
    Rmse,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    /// The new sample the estimates are judged against.
    #[arg(long, value_name = "PATH")]
    new_sample: PathBuf,
    /// Comma-separated strategies to split and evaluate.
    #[arg(long, value_delimiter = ',', conflicts_with = "manifests")]
    strategies: Vec<String>,
    /// Existing manifest files or directories, grouped by strategy.
    #[arg(long, num_args = 1.., value_name = "PATH")]
    manifests: Vec<PathBuf>,
    #[arg(long = "out", value_name = "DIR")]
    output: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    splitter: SplitterArgs,
    #[command(flatten)]
    vocab: VocabArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "accuracy")]
    metric: MetricArg,
    /// Random carves of the corpus scored on the new sample.
    #[arg(long, default_value_t = 5)]
    reference_repeats: usize,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 0.01)]
    l2: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = EVAL_LEARNING_RATE)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, default_value_t = 100)]
    patience: usize,
}

impl ModelArgs {
    fn config(&self, seed: u64) -> ModelConfig {
        ModelConfig {
            l2_strength: self.l2,
            max_iters: self.max_iters,
            learning_rate: self.learning_rate,
            tolerance: self.tolerance,
            patience: self.patience,
            seed,
        }
    }
}

#[derive(Debug, Args)]
struct DriftArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Output JSON file.
    #[arg(long = "out", value_name = "PATH")]
    output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_DAY_SIZE)]
    min_day_size: usize,
    #[command(flatten)]
    vocab: VocabArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(m) => Failure::Usage(m),
            other => Failure::Data(other),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn parse_proportions(s: &str) -> std::result::Result<(f64, f64, f64), String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err("expected three comma-separated numbers".into()),
    }
}

fn parse_strategy(name: &str) -> CliResult<Strategy> {
    name.parse().map_err(Failure::Usage)
}

fn require_seed(strategy: Strategy, seed: Option<u64>) -> CliResult<()> {
    if strategy.is_stochastic() && seed.is_none() {
        return Err(Failure::Usage(format!("strategy '{strategy}' is stochastic and needs --seed")));
    }
    Ok(())
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::Data(Error::Io {
        path: dir.to_path_buf(),
        source: e,
    }))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    Ok(write_atomic(path, &to_json_bytes(value)?)?)
}

fn manifest_file_name(m: &SplitManifest) -> String {
    format!("{}-run{:02}.json", m.strategy, m.run_index)
}

/// Expands directories to their `*.json` manifests (summary excluded), in
/// name order.
fn manifest_paths(paths: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = fs::read_dir(p).map_err(|e| Failure::Data(Error::Io {
                path: p.clone(),
                source: e,
            }))?;
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.extension().is_some_and(|x| x == "json")
                        && f.file_name().is_some_and(|n| n != SUMMARY_FILE)
                })
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Failure::Usage("no manifest files found".into()));
    }
    Ok(out)
}

fn read_manifest(path: &Path) -> CliResult<SplitManifest> {
    let bytes = fs::read(path).map_err(|e| Failure::Data(Error::Io {
        path: path.to_path_buf(),
        source: e,
    }))?;
    SplitManifest::from_json(&bytes).map_err(|e| Failure::Data(Error::InvalidInput(format!("{}: {e}", path.display()))))
}

fn vocabulary(corpus: &Corpus, args: &VocabArgs) -> CliResult<Vocabulary> {
    Ok(build_vocabulary(corpus, &args.config())?)
}

fn cmd_gen(args: GenArgs) -> CliResult<()> {
    let config = SyntheticConfig {
        n_records: args.n_records,
        vocab_size: args.vocab_size,
        n_labels: args.n_labels,
        length_label_correlation: args.correlation,
        temporal_drift_rate: args.drift,
        n_periods: args.periods,
        seed: args.seed,
    };
    let corpus = generate_synthetic(&config)?;
    Ok(write_corpus(&corpus, &args.output, args.format)?)
}

#[derive(Serialize)]
struct SummaryEntry<'a> {
    file: String,
    run_index: usize,
    n_train: usize,
    n_dev: usize,
    n_test: usize,
    stats: &'a crate::splitters::SplitStats,
}

#[derive(Serialize)]
struct SplitSummary<'a> {
    strategy: Strategy,
    seed: Option<u64>,
    n_records: usize,
    manifests: Vec<SummaryEntry<'a>>,
}

fn write_manifests(dir: &Path, corpus: &Corpus, strategy: Strategy, seed: Option<u64>, manifests: &[SplitManifest]) -> CliResult<()> {
    let mut entries = Vec::with_capacity(manifests.len());
    for m in manifests {
        let file = manifest_file_name(m);
        write_atomic(&dir.join(&file), &m.to_json()?)?;
        entries.push(SummaryEntry {
            file,
            run_index: m.run_index,
            n_train: m.train.total_count(),
            n_dev: m.dev.total_count(),
            n_test: m.test.len(),
            stats: &m.stats,
        });
    }
    write_json(
        &dir.join(SUMMARY_FILE),
        &SplitSummary {
            strategy,
            seed,
            n_records: corpus.len(),
            manifests: entries,
        },
    )
}

fn cmd_split(args: SplitArgs) -> CliResult<()> {
    let strategy = parse_strategy(&args.strategy)?;
    require_seed(strategy, args.seed)?;
    let config = args.splitter.config(args.seed);
    config.validate()?;
    let corpus = args.input.load()?;
    ensure_dir(&args.output)?;

    if strategy == Strategy::Temporal && args.temporal_mode == TemporalModeArg::DaySlices {
        let mode = TemporalMode::DaySlices {
            min_day_size: args.min_day_size,
        };
        if let TemporalSplit::DaySlices(slices) = temporal_split(&corpus, mode, &config)? {
            return write_json(&args.output.join("day_slices.json"), &slices);
        }
    }
    let vocab = vocabulary(&corpus, &args.vocab)?;
    let manifests = split_with(strategy, &corpus, &vocab, &config, &args.splitter.params())?;
    write_manifests(&args.output, &corpus, strategy, args.seed, &manifests)
}

#[derive(Serialize)]
struct Diagnosis {
    manifest: String,
    strategy: Strategy,
    run_index: usize,
    divergence: DivergenceReport,
    separability: SeparabilityReport,
}

fn cmd_diagnose(args: DiagnoseArgs) -> CliResult<()> {
    let corpus = args.input.load()?;
    let vocab = vocabulary(&corpus, &args.vocab)?;
    let paths = manifest_paths(&args.manifests)?;
    ensure_dir(&args.output)?;
    for path in paths {
        let manifest = read_manifest(&path)?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let report = Diagnosis {
            manifest: path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            strategy: manifest.strategy,
            run_index: manifest.run_index,
            divergence: split_divergence(&corpus, &manifest, &vocab)?,
            separability: separability_probe(&corpus, &manifest, args.top_unigrams, args.probe_folds, args.seed)?,
        };
        write_json(&args.output.join(format!("{stem}.diagnostics.json")), &report)?;
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> CliResult<String> {
    if args.strategies.is_empty() && args.manifests.is_empty() {
        return Err(Failure::Usage("give --strategies or --manifests".into()));
    }
    let strategies = args
        .strategies
        .iter()
        .map(|s| parse_strategy(s))
        .collect::<CliResult<Vec<_>>>()?;
    for s in &strategies {
        require_seed(*s, args.seed)?;
    }
    let seed = args.seed.unwrap_or(0);
    let splitter = args.splitter.config(args.seed);
    splitter.validate()?;
    let eval = EvaluationConfig {
        model: args.model.config(seed),
        features: args.vocab.config(),
        metric: match args.metric {
            MetricArg::Accuracy => Metric::Accuracy,
            MetricArg::Rmse => Metric::Rmse,
        },
        reference_repeats: args.reference_repeats,
        dev_fraction: args.splitter.dev_fraction,
        seed,
        ..EvaluationConfig::default()
    };
    eval.model.validate()?;

    let corpus = args.input.load()?;
    let new_sample = load_corpus(&args.new_sample, Format::from_path(&args.new_sample))?;
    let groups: Vec<Vec<SplitManifest>> = if strategies.is_empty() {
        let mut by_strategy: BTreeMap<Strategy, Vec<SplitManifest>> = BTreeMap::new();
        for path in manifest_paths(&args.manifests)? {
            let m = read_manifest(&path)?;
            by_strategy.entry(m.strategy).or_default().push(m);
        }
        by_strategy.into_values().collect()
    } else {
        let vocab = vocabulary(&corpus, &args.vocab)?;
        strategies
            .iter()
            .map(|s| split_with(*s, &corpus, &vocab, &splitter, &args.splitter.params()))
            .collect::<Result<_, _>>()?
    };

    let summary = evaluate_strategies(&corpus, &groups, &new_sample, &eval)?;
    let table = render_table(&summary);
    ensure_dir(&args.output)?;
    write_json(&args.output.join("report.json"), &summary)?;
    write_atomic(&args.output.join("report.txt"), table.as_bytes())?;
    Ok(table)
}

fn cmd_drift(args: DriftArgs) -> CliResult<()> {
    let config = EvaluationConfig {
        model: args.model.config(args.seed),
        features: args.vocab.config(),
        seed: args.seed,
        ..EvaluationConfig::default()
    };
    config.model.validate()?;
    let corpus = args.input.load()?;
    let report = drift_analysis(&corpus, args.min_day_size, &config)?;
    write_json(&args.output, &report)
}

fn threads_from_env() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    match value.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            init_thread_pool(n);
            Ok(())
        }
        _ => Err(Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got '{value}'"))),
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = threads_from_env().and_then(|()| match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Split(a) => cmd_split(a),
        Command::Diagnose(a) => cmd_diagnose(a),
        Command::Evaluate(a) => cmd_evaluate(a).map(|table| print!("{table}")),
        Command::Drift(a) => cmd_drift(a),
    });
    match outcome {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}
