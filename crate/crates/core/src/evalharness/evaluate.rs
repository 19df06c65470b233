//! Training on manifests, scoring against new samples, and drift analysis.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::metrics::{accuracy, error_reduction, mse_of_estimates, multinomial_baseline, regression_score};
use super::model::{train_linear_model, train_ridge, FeatureMatrix, ModelConfig};
use super::stats::{drift_correlation, DriftCorrelation};
use crate::corpus::{Corpus, Record};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::features::{build_vocabulary_from, count_vector, FeatureConfig, Vocabulary};
use crate::io::ser_f64;
use crate::rng::{self, streams};
use crate::splitters::{day_slices, SplitManifest, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Accuracy,
    /// Labels are parsed as real numbers; the score is `1 − RMSE/range`.
    Rmse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationConfig {
    pub model: ModelConfig,
    pub features: FeatureConfig,
    pub metric: Metric,
    /// Random train/dev carves of the full corpus scored on the new sample.
    pub reference_repeats: usize,
    /// Dev share of each reference carve.
    pub dev_fraction: f64,
    pub seed: u64,
    pub execution: Execution,
}

/// Step size used by the harness. Count features on short texts give small
/// gradients, and at the model's default of 0.1 the 500 full-batch steps stop
/// far from the optimum.
pub const EVAL_LEARNING_RATE: f64 = 2.0;

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            model: ModelConfig {
                learning_rate: EVAL_LEARNING_RATE,
                ..ModelConfig::default()
            },
            features: FeatureConfig::default(),
            metric: Metric::Accuracy,
            reference_repeats: 5,
            dev_fraction: 0.1,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub run_index: usize,
    #[serde(serialize_with = "ser_f64")]
    pub p_s: f64,
    #[serde(serialize_with = "ser_f64")]
    pub p_b: f64,
    #[serde(serialize_with = "ser_f64")]
    pub error_reduction: f64,
    pub n_test: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub strategy: String,
    pub metric: Metric,
    /// Means over runs.
    #[serde(serialize_with = "ser_f64")]
    pub p_s: f64,
    #[serde(serialize_with = "ser_f64")]
    pub p_b: f64,
    #[serde(serialize_with = "ser_f64")]
    pub error_reduction: f64,
    pub per_run: Vec<RunScore>,
}

impl EvaluationReport {
    fn from_runs(strategy: String, metric: Metric, per_run: Vec<RunScore>) -> Result<EvaluationReport> {
        if per_run.is_empty() {
            return Err(Error::InvalidInput(format!("no runs to report for {strategy}")));
        }
        let mean = |f: fn(&RunScore) -> f64| per_run.iter().map(f).sum::<f64>() / per_run.len() as f64;
        Ok(EvaluationReport {
            strategy,
            metric,
            p_s: mean(|r| r.p_s),
            p_b: mean(|r| r.p_b),
            error_reduction: mean(|r| r.error_reduction),
            per_run,
        })
    }
}

/// Name of the new-sample reference row.
pub const NEW_SAMPLES: &str = "new_samples";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub reports: Vec<EvaluationReport>,
    pub new_samples: EvaluationReport,
    /// Per strategy: squared gap between its run-averaged error reduction and
    /// the new-sample one. Pooling several corpora is [`pooled_mse`].
    pub mse: BTreeMap<String, f64>,
}

/// Owned training/scoring sets with multiplicities already expanded.
struct Sides<'a> {
    train: Vec<&'a Record>,
    dev: Vec<&'a Record>,
    test: Vec<&'a Record>,
}

fn features(records: &[&Record], vocab: &Vocabulary) -> Result<FeatureMatrix> {
    FeatureMatrix::new(records.iter().map(|r| count_vector(&r.text, vocab)).collect(), vocab.len())
}

fn labels(records: &[&Record]) -> Vec<String> {
    records.iter().map(|r| r.label.clone()).collect()
}

fn numeric(records: &[&Record]) -> Result<Vec<f64>> {
    records
        .iter()
        .map(|r| {
            r.label
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidInput(format!("record {}: label '{}' is not a number", r.id, r.label)))
        })
        .collect()
}

/// Trains on `train` (early-stopping on `dev`) and scores `test`. Returns
/// `(p_s, p_b, warnings)`.
fn fit_and_score(sides: &Sides<'_>, config: &EvaluationConfig) -> Result<(f64, f64, Vec<String>)> {
    if sides.train.is_empty() || sides.test.is_empty() {
        return Err(Error::InvalidSplit("train and test must be non-empty".into()));
    }
    let mut distinct: Vec<&Record> = sides.train.clone();
    distinct.sort_by_key(|r| r.id);
    distinct.dedup_by_key(|r| r.id);
    let vocab = build_vocabulary_from(distinct.iter().copied(), &config.features)?;
    let x_train = features(&sides.train, &vocab)?;
    let x_test = features(&sides.test, &vocab)?;
    let mut warnings = Vec::new();

    match config.metric {
        Metric::Accuracy => {
            let y_train = labels(&sides.train);
            let y_test = labels(&sides.test);
            let seen: BTreeSet<&String> = y_train.iter().collect();
            let unseen: BTreeSet<&String> = y_test.iter().filter(|l| !seen.contains(l)).collect();
            if !unseen.is_empty() {
                warnings.push(format!(
                    "test labels never seen in training are scored as errors: {}",
                    unseen.into_iter().cloned().collect::<Vec<_>>().join(", ")
                ));
            }
            let x_dev = features(&sides.dev, &vocab)?;
            let y_dev = labels(&sides.dev);
            let model = train_linear_model(&x_train, &y_train, &config.model, Some((&x_dev, &y_dev)))?;
            let predicted = model.predict_labels(&x_test)?;
            let gold: Vec<&str> = y_test.iter().map(String::as_str).collect();
            let p_s = accuracy(&predicted, &gold)?;
            Ok((p_s, multinomial_baseline(&y_train, &y_test)?, warnings))
        }
        Metric::Rmse => {
            let y_train = numeric(&sides.train)?;
            let y_test = numeric(&sides.test)?;
            let model = train_ridge(&x_train, &y_train, &config.model)?;
            let p_s = regression_score(&model.predict(&x_test)?, &y_test)?;
            let mean = y_train.iter().sum::<f64>() / y_train.len() as f64;
            let p_b = regression_score(&vec![mean; y_test.len()], &y_test)?;
            Ok((p_s, p_b, warnings))
        }
    }
}

fn run_score(run_index: usize, n_test: usize, scored: (f64, f64, Vec<String>)) -> Result<RunScore> {
    let (p_s, p_b, warnings) = scored;
    Ok(RunScore {
        run_index,
        p_s,
        p_b,
        error_reduction: error_reduction(p_s, p_b)?,
        n_test,
        warnings,
    })
}

/// Scores one manifest: train on its train side (with multiplicities),
/// early-stop on dev, test on test.
pub fn evaluate_manifest(corpus: &Corpus, manifest: &SplitManifest, config: &EvaluationConfig) -> Result<RunScore> {
    manifest.validate(corpus.len())?;
    let pick = |ids: Vec<usize>| ids.into_iter().map(|i| &corpus.records()[i]).collect::<Vec<_>>();
    let sides = Sides {
        train: pick(manifest.train.expanded()),
        dev: pick(manifest.dev.expanded()),
        test: pick(manifest.test.clone()),
    };
    run_score(manifest.run_index, sides.test.len(), fit_and_score(&sides, config)?)
}

/// Scores every manifest of one strategy and averages over runs.
pub fn evaluate_strategy(corpus: &Corpus, manifests: &[SplitManifest], config: &EvaluationConfig) -> Result<EvaluationReport> {
    let first = manifests
        .first()
        .ok_or_else(|| Error::InvalidInput("no manifests to evaluate".into()))?;
    let per_run = exec::map_slice(config.execution, manifests, |m| evaluate_manifest(corpus, m, config))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    EvaluationReport::from_runs(first.strategy.name().to_string(), config.metric, per_run)
}

/// The reference column: models trained on random train/dev carves of the
/// whole corpus, scored on the new sample.
pub fn new_sample_reference(corpus: &Corpus, new_sample: &Corpus, config: &EvaluationConfig) -> Result<EvaluationReport> {
    if config.reference_repeats == 0 {
        return Err(Error::InvalidConfig("reference_repeats must be positive".into()));
    }
    if !(0.0..1.0).contains(&config.dev_fraction) {
        return Err(Error::InvalidConfig("dev_fraction must be in [0, 1)".into()));
    }
    let test: Vec<&Record> = new_sample.records().iter().collect();
    let per_run = exec::map_range(config.execution, config.reference_repeats, |run| {
        let mut ids: Vec<usize> = (0..corpus.len()).collect();
        let mut rng = rng::stream(config.seed, streams::per_run(streams::HOLDOUT, run));
        rand::seq::SliceRandom::shuffle(ids.as_mut_slice(), &mut rng);
        let dev_size = ((config.dev_fraction * ids.len() as f64).round() as usize).min(ids.len() - 1);
        let dev_ids = ids.split_off(ids.len() - dev_size);
        ids.sort_unstable();
        let sides = Sides {
            train: ids.iter().map(|&i| &corpus.records()[i]).collect(),
            dev: dev_ids.iter().map(|&i| &corpus.records()[i]).collect(),
            test: test.clone(),
        };
        run_score(run, test.len(), fit_and_score(&sides, config)?)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    EvaluationReport::from_runs(NEW_SAMPLES.to_string(), config.metric, per_run)
}

/// Evaluates each strategy's manifests, the new-sample reference, and the
/// MSE of every strategy's averaged error reduction against the reference.
pub fn evaluate_strategies(
    corpus: &Corpus,
    manifests: &[Vec<SplitManifest>],
    new_sample: &Corpus,
    config: &EvaluationConfig,
) -> Result<EvaluationSummary> {
    let new_samples = new_sample_reference(corpus, new_sample, config)?;
    let mut reports = Vec::with_capacity(manifests.len());
    let mut mse = BTreeMap::new();
    for group in manifests {
        let report = evaluate_strategy(corpus, group, config)?;
        let pair = (report.error_reduction, new_samples.error_reduction);
        mse.insert(report.strategy.clone(), mse_of_estimates(&[pair])?);
        reports.push(report);
    }
    reports.sort_by_key(|r| column_rank(&r.strategy));
    Ok(EvaluationSummary {
        reports,
        new_samples,
        mse,
    })
}

/// MSE per strategy over several evaluations (one pair per corpus, as in a
/// table with one column per task). Strategies missing from any summary are
/// left out.
pub fn pooled_mse(summaries: &[EvaluationSummary]) -> Result<BTreeMap<String, f64>> {
    let first = summaries
        .first()
        .ok_or_else(|| Error::InvalidInput("no summaries to pool".into()))?;
    let mut out = BTreeMap::new();
    for report in &first.reports {
        let pairs: Option<Vec<(f64, f64)>> = summaries
            .iter()
            .map(|s| {
                s.reports
                    .iter()
                    .find(|r| r.strategy == report.strategy)
                    .map(|r| (r.error_reduction, s.new_samples.error_reduction))
            })
            .collect();
        if let Some(pairs) = pairs {
            out.insert(report.strategy.clone(), mse_of_estimates(&pairs)?);
        }
    }
    Ok(out)
}

/// Table position: strategies in declaration order, then anything unknown.
pub(crate) fn column_rank(name: &str) -> usize {
    name.parse::<Strategy>()
        .ok()
        .and_then(|s| Strategy::ALL.iter().position(|t| *t == s))
        .unwrap_or(Strategy::ALL.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftPoint {
    pub date: NaiveDate,
    pub gap_days: i64,
    #[serde(serialize_with = "ser_f64")]
    pub score: f64,
    pub n_train: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub test_date: NaiveDate,
    pub n_test: usize,
    pub points: Vec<DriftPoint>,
    pub correlation: DriftCorrelation,
}

/// Trains one model per day slice (days with at least `min_day_size`
/// records) and scores each on the final slice. Reports the score against
/// the gap in days and their Pearson correlation.
pub fn drift_analysis(corpus: &Corpus, min_day_size: usize, config: &EvaluationConfig) -> Result<DriftReport> {
    let mut slices = day_slices(corpus, min_day_size)?;
    if slices.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "drift analysis needs at least 4 days with {min_day_size}+ records, found {}",
            slices.len()
        )));
    }
    let test_slice = slices.pop().expect("non-empty");
    let test: Vec<&Record> = test_slice.ids.iter().map(|&i| &corpus.records()[i]).collect();
    let points = exec::map_slice(config.execution, &slices, |slice| {
        let sides = Sides {
            train: slice.ids.iter().map(|&i| &corpus.records()[i]).collect(),
            dev: Vec::new(),
            test: test.clone(),
        };
        let (score, _, _) = fit_and_score(&sides, config)?;
        Ok(DriftPoint {
            date: slice.date,
            gap_days: (test_slice.date - slice.date).num_days(),
            score,
            n_train: slice.ids.len(),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = points.iter().map(|p| p.gap_days as f64).collect();
    let scores: Vec<f64> = points.iter().map(|p| p.score).collect();
    Ok(DriftReport {
        test_date: test_slice.date,
        n_test: test.len(),
        correlation: drift_correlation(&gaps, &scores)?,
        points,
    })
}
