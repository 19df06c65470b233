//! Split strategies and the [`SplitManifest`] they produce.
//!
//! Every splitter is a pure function of its inputs and config. Stochastic
//! choices draw from per-run streams of `config.seed` (see [`crate::rng`]), so
//! reruns are bit-identical and parallel repeats cannot change results.
//!
//! For the biased strategies (length threshold, random length, rare words,
//! temporal, adversarial) only the train/test boundary is biased: the dev set
//! is a seeded random `dev_fraction` of the non-test remainder.

mod adversarial;
mod heuristic;
mod random;
mod temporal;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::features::Vocabulary;
use crate::io::{ser_f64, ser_opt_f64};
use crate::rng::SeededRng;

pub use adversarial::{adversarial_k, adversarial_splits, adversarial_test_set};
pub use heuristic::{length_threshold_split, random_length_splits, rare_words_split};
pub use random::{bootstrap_split, bootstrap_splits, random_cv_splits, standard_split};
pub use temporal::{day_slices, DEFAULT_MIN_DAY_SIZE, temporal_holdout_split, temporal_split, DaySlice, TemporalMode, TemporalSplit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Standard,
    Random,
    Bootstrap,
    LengthThreshold,
    RandomLength,
    RareWords,
    Temporal,
    Adversarial,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::Standard,
        Strategy::Random,
        Strategy::Bootstrap,
        Strategy::LengthThreshold,
        Strategy::RandomLength,
        Strategy::RareWords,
        Strategy::Temporal,
        Strategy::Adversarial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Standard => "standard",
            Strategy::Random => "random",
            Strategy::Bootstrap => "bootstrap",
            Strategy::LengthThreshold => "length_threshold",
            Strategy::RandomLength => "random_length",
            Strategy::RareWords => "rare_words",
            Strategy::Temporal => "temporal",
            Strategy::Adversarial => "adversarial",
        }
    }

    /// Whether test membership itself is random (and so needs a seed).
    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            Strategy::Random | Strategy::Bootstrap | Strategy::RandomLength | Strategy::Adversarial
        )
    }

    pub fn valid_names() -> String {
        Strategy::ALL.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "random_cv" => return Ok(Strategy::Random),
            "length" | "heuristic" => return Ok(Strategy::LengthThreshold),
            _ => {}
        }
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy '{s}' (valid: {})", Strategy::valid_names()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CountedId {
    pub id: usize,
    pub count: usize,
}

/// Side membership: plain ids, or ids with multiplicities for bootstrap
/// resamples. Ids are kept sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Members {
    Ids(Vec<usize>),
    Counted(Vec<CountedId>),
}

impl Default for Members {
    fn default() -> Self {
        Members::Ids(Vec::new())
    }
}

impl Members {
    pub fn from_ids(mut ids: Vec<usize>) -> Members {
        ids.sort_unstable();
        ids.dedup();
        Members::Ids(ids)
    }

    /// Aggregates a draw with replacement into counted membership.
    pub fn from_draws(draws: &[usize]) -> Members {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        for &d in draws {
            *counts.entry(d).or_default() += 1;
        }
        Members::Counted(counts.into_iter().map(|(id, count)| CountedId { id, count }).collect())
    }

    /// Distinct ids, ascending.
    pub fn ids(&self) -> Vec<usize> {
        match self {
            Members::Ids(ids) => ids.clone(),
            Members::Counted(c) => c.iter().map(|c| c.id).collect(),
        }
    }

    /// (id, multiplicity) pairs, ascending by id.
    pub fn weighted(&self) -> Vec<(usize, usize)> {
        match self {
            Members::Ids(ids) => ids.iter().map(|&i| (i, 1)).collect(),
            Members::Counted(c) => c.iter().map(|c| (c.id, c.count)).collect(),
        }
    }

    /// Ids repeated by multiplicity.
    pub fn expanded(&self) -> Vec<usize> {
        self.weighted()
            .into_iter()
            .flat_map(|(id, n)| std::iter::repeat_n(id, n))
            .collect()
    }

    /// Number of distinct ids.
    pub fn len(&self) -> usize {
        match self {
            Members::Ids(ids) => ids.len(),
            Members::Counted(c) => c.len(),
        }
    }

    pub fn total_count(&self) -> usize {
        match self {
            Members::Ids(ids) => ids.len(),
            Members::Counted(c) => c.iter().map(|c| c.count).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SplitStats {
    /// Realized |test| / |corpus|.
    #[serde(serialize_with = "ser_f64")]
    pub test_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_threshold: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled_lengths: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rare_words: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_cut: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centroid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Train-side vs test-side Wasserstein divergence (adversarial splits).
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_f64")]
    pub divergence: Option<f64>,
    /// Records left out of every side (e.g. no in-vocabulary tokens).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub strategy: Strategy,
    pub params: BTreeMap<String, serde_json::Value>,
    pub seed: Option<u64>,
    pub run_index: usize,
    pub train: Members,
    pub dev: Members,
    pub test: Vec<usize>,
    pub stats: SplitStats,
}

impl SplitManifest {
    pub(crate) fn new(strategy: Strategy, seed: Option<u64>, run_index: usize) -> SplitManifest {
        SplitManifest {
            strategy,
            params: BTreeMap::new(),
            seed,
            run_index,
            train: Members::default(),
            dev: Members::default(),
            test: Vec::new(),
            stats: SplitStats::default(),
        }
    }

    pub(crate) fn param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub(crate) fn param_f64(self, key: &str, value: f64) -> Self {
        self.param(key, crate::io::round_sig6(value))
    }

    /// Fills in sides, sorting ids and recording the realized test fraction.
    pub(crate) fn with_sides(mut self, train: Members, dev: Members, mut test: Vec<usize>, n: usize) -> Self {
        test.sort_unstable();
        self.stats.test_fraction = test.len() as f64 / n as f64;
        self.train = train;
        self.dev = dev;
        self.test = test;
        self
    }

    /// Distinct ids on the non-test side (train ∪ dev), ascending.
    pub fn non_test_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.train.ids();
        ids.extend(self.dev.ids());
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// True for resampled manifests whose sides carry multiplicities.
    pub fn is_resampled(&self) -> bool {
        matches!(self.train, Members::Counted(_)) || matches!(self.dev, Members::Counted(_))
    }

    /// Checks range, non-empty train/test and disjointness. Resampled
    /// (bootstrap) manifests may share ids between train and dev, never with
    /// test.
    pub fn validate(&self, corpus_len: usize) -> Result<()> {
        if self.test.is_empty() {
            return Err(Error::InvalidSplit("test side is empty".into()));
        }
        if self.train.is_empty() {
            return Err(Error::InvalidSplit("train side is empty".into()));
        }
        let test: BTreeSet<usize> = self.test.iter().copied().collect();
        if test.len() != self.test.len() {
            return Err(Error::InvalidSplit("duplicate id in test".into()));
        }
        let mut non_test = BTreeSet::new();
        for (side, ids) in [("train", self.train.ids()), ("dev", self.dev.ids()), ("test", self.test.clone())] {
            for id in ids {
                if id >= corpus_len {
                    return Err(Error::InvalidSplit(format!(
                        "{side} id {id} out of range for corpus of {corpus_len}"
                    )));
                }
                if side != "test" {
                    if test.contains(&id) {
                        return Err(Error::InvalidSplit(format!("id {id} is on both {side} and test")));
                    }
                    if !non_test.insert(id) && !self.is_resampled() {
                        return Err(Error::InvalidSplit(format!("id {id} is on both train and dev")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        crate::io::to_json_bytes(self)
    }

    pub fn from_json(bytes: &[u8]) -> Result<SplitManifest> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitterConfig {
    pub test_fraction: f64,
    /// Fraction of the non-test remainder that goes to dev.
    pub dev_fraction: f64,
    pub repeats: usize,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for SplitterConfig {
    fn default() -> Self {
        SplitterConfig {
            test_fraction: 0.10,
            dev_fraction: 0.10,
            repeats: 5,
            seed: 0,
            execution: Execution::default(),
        }
    }
}

impl SplitterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidConfig("test_fraction must be in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return Err(Error::InvalidConfig("dev_fraction must be in [0, 1)".into()));
        }
        if self.test_fraction + (1.0 - self.test_fraction) * self.dev_fraction >= 1.0 {
            return Err(Error::InvalidConfig("test and dev fractions leave no training data".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be positive".into()));
        }
        Ok(())
    }

    pub(crate) fn base_manifest(&self, strategy: Strategy, seed: Option<u64>, run_index: usize) -> SplitManifest {
        SplitManifest::new(strategy, seed, run_index)
            .param_f64("test_fraction", self.test_fraction)
            .param_f64("dev_fraction", self.dev_fraction)
    }
}

/// Splits `remainder` into (train, dev) with a seeded random dev share.
/// Train always keeps at least one record.
pub(crate) fn carve_dev(mut remainder: Vec<usize>, dev_fraction: f64, rng: &mut SeededRng) -> (Members, Members) {
    remainder.sort_unstable();
    let dev_size = ((dev_fraction * remainder.len() as f64).round() as usize).min(remainder.len().saturating_sub(1));
    remainder.shuffle(rng);
    let dev = remainder.split_off(remainder.len() - dev_size);
    (Members::from_ids(remainder), Members::from_ids(dev))
}

/// Strategy-specific knobs not covered by [`SplitterConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyParams {
    pub folds: usize,
    pub proportions: (f64, f64, f64),
}

impl Default for StrategyParams {
    fn default() -> Self {
        StrategyParams {
            folds: 5,
            proportions: (0.8, 0.1, 0.1),
        }
    }
}

/// Runs any strategy, returning its manifests in run order. Temporal runs in
/// holdout-latest mode.
pub fn split_with(
    strategy: Strategy,
    corpus: &Corpus,
    vocab: &Vocabulary,
    config: &SplitterConfig,
    params: &StrategyParams,
) -> Result<Vec<SplitManifest>> {
    match strategy {
        Strategy::Standard => Ok(vec![standard_split(corpus, params.proportions)?]),
        Strategy::Random => random_cv_splits(corpus, params.folds, config),
        Strategy::Bootstrap => bootstrap_splits(corpus, config),
        Strategy::LengthThreshold => Ok(vec![length_threshold_split(corpus, config)?]),
        Strategy::RandomLength => random_length_splits(corpus, config),
        Strategy::RareWords => Ok(vec![rare_words_split(corpus, vocab, config)?]),
        Strategy::Temporal => Ok(vec![temporal_holdout_split(corpus, config)?]),
        Strategy::Adversarial => adversarial_splits(corpus, vocab, config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_names_parse() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert_eq!("random_cv".parse::<Strategy>().unwrap(), Strategy::Random);
        let err = "worst".parse::<Strategy>().unwrap_err();
        assert!(err.contains("adversarial") && err.contains("rare_words"));
    }

    #[test]
    fn config_validation() {
        assert!(SplitterConfig::default().validate().is_ok());
        let bad = SplitterConfig {
            test_fraction: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SplitterConfig {
            test_fraction: 0.5,
            dev_fraction: 0.99,
            ..Default::default()
        };
        assert!(bad.validate().is_ok());
        let bad = SplitterConfig {
            repeats: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn members_json_shapes() {
        let plain = Members::from_ids(vec![3, 1, 2]);
        assert_eq!(serde_json::to_string(&plain).unwrap(), "[1,2,3]");
        let counted = Members::from_draws(&[4, 2, 4]);
        assert_eq!(
            serde_json::to_string(&counted).unwrap(),
            r#"[{"id":2,"count":1},{"id":4,"count":2}]"#
        );
        let back: Members = serde_json::from_str(r#"[{"id":2,"count":1},{"id":4,"count":2}]"#).unwrap();
        assert_eq!(back, counted);
        assert_eq!(counted.total_count(), 3);
        assert_eq!(counted.expanded(), vec![2, 4, 4]);
    }

    #[test]
    fn validate_catches_overlap() {
        let m = SplitManifest::new(Strategy::Random, Some(0), 0).with_sides(
            Members::from_ids(vec![0, 1]),
            Members::from_ids(vec![]),
            vec![1, 2],
            3,
        );
        assert!(m.validate(3).is_err());
        let m = SplitManifest::new(Strategy::Random, Some(0), 0).with_sides(
            Members::from_ids(vec![0, 1]),
            Members::from_ids(vec![]),
            vec![2],
            3,
        );
        assert!(m.validate(3).is_ok());
        assert!(m.validate(2).is_err());
    }
}
