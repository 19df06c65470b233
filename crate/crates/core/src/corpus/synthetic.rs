//! Synthetic corpora with a planted length/label signal, topics and temporal
//! drift.
//!
//! Each record has a length drawn from a shifted geometric distribution. With
//! probability `length_label_correlation` its label is the length bucket
//! (buckets are quantiles of the length distribution), otherwise a uniform
//! draw. Each record also has a topic (Zipfian prevalence). Its text is
//! Zipfian background words from the topic's block of the background
//! vocabulary plus two cue words from the topic's block of cues; a cue belongs
//! to the record's label with probability 0.8, otherwise to a random label.
//!
//! Cue words drift: in period `t`, each cue occurrence is written in spelling
//! generation `g ~ Binomial(t, temporal_drift_rate)`, i.e. at every period
//! boundary a spelling is replaced by its successor with probability
//! `temporal_drift_rate`. Generation 0 is the old form (`k1_7`), later
//! generations are new forms (`k1_7.v1`, `k1_7.v2`, ...). Periods are
//! consecutive calendar days starting 2020-01-01 and records are emitted in
//! time order.

use std::fmt;

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Geometric};

use super::{Corpus, RecordData};
use crate::error::{Error, Result};
use crate::rng;

pub const MIN_LENGTH: usize = 3;
pub const MAX_LENGTH: usize = 80;
/// Success probability of the geometric length excess (mean excess 9 tokens).
const LENGTH_P: f64 = 0.1;
/// Cue words per record, independent of length.
const CUES_PER_RECORD: usize = 2;
/// Topics partition the background and cue vocabularies; topic prevalence is
/// Zipfian, so rare topics occupy the high-rank end of the vocabulary.
const TOPICS: usize = 8;
/// Probability that a cue word comes from the record's own label.
const CUE_PURITY: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_records: usize,
    pub vocab_size: usize,
    pub n_labels: usize,
    pub length_label_correlation: f64,
    pub temporal_drift_rate: f64,
    pub n_periods: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_records: 2000,
            vocab_size: 2000,
            n_labels: 4,
            length_label_correlation: 0.6,
            temporal_drift_rate: 0.0,
            n_periods: 1,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_records == 0 {
            return bad("n_records must be positive".into());
        }
        if self.n_labels < 2 {
            return bad("n_labels must be at least 2".into());
        }
        if self.vocab_size < 10 * self.n_labels {
            return bad(format!(
                "vocab_size {} must be at least 10 * n_labels = {}",
                self.vocab_size,
                10 * self.n_labels
            ));
        }
        if !(0.0..=1.0).contains(&self.length_label_correlation) {
            return bad("length_label_correlation must be in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.temporal_drift_rate) {
            return bad("temporal_drift_rate must be in [0, 1]".into());
        }
        if self.n_periods == 0 {
            return bad("n_periods must be positive".into());
        }
        Ok(())
    }

    pub fn cues_per_label(&self) -> usize {
        (self.vocab_size / (10 * self.n_labels)).max(1)
    }

    /// Number of topics, capped so every topic owns at least one cue per label.
    pub fn topics(&self) -> usize {
        TOPICS.min(self.cues_per_label())
    }

    pub fn background_size(&self) -> usize {
        self.vocab_size - self.n_labels * self.cues_per_label()
    }
}

/// First day of period 0.
pub fn epoch() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date")
}

pub fn period_date(period: usize) -> NaiveDate {
    epoch() + Days::new(period as u64)
}

pub fn label_name(label: usize) -> String {
    format!("class{label}")
}

/// A token emitted by the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticToken {
    Background {
        index: usize,
        generation: u64,
    },
    Cue {
        label: usize,
        index: usize,
        generation: u64,
    },
}

impl SyntheticToken {
    pub fn parse(s: &str) -> Option<SyntheticToken> {
        let (base, generation) = match s.split_once(".v") {
            Some((b, g)) => (b, g.parse().ok()?),
            None => (s, 0),
        };
        if let Some(rest) = base.strip_prefix('w') {
            return Some(SyntheticToken::Background {
                index: rest.parse().ok()?,
                generation,
            });
        }
        let (label, index) = base.strip_prefix('k')?.split_once('_')?;
        Some(SyntheticToken::Cue {
            label: label.parse().ok()?,
            index: index.parse().ok()?,
            generation,
        })
    }
}

impl fmt::Display for SyntheticToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let generation = match *self {
            SyntheticToken::Background { index, generation } => {
                write!(f, "w{index}")?;
                generation
            }
            SyntheticToken::Cue {
                label,
                index,
                generation,
            } => {
                write!(f, "k{label}_{index}")?;
                generation
            }
        };
        if generation > 0 {
            write!(f, ".v{generation}")?;
        }
        Ok(())
    }
}

fn length_pmf() -> Vec<f64> {
    // pmf over MIN_LENGTH..=MAX_LENGTH, with the geometric tail folded into MAX_LENGTH.
    let span = MAX_LENGTH - MIN_LENGTH;
    let mut pmf: Vec<f64> = (0..span).map(|k| LENGTH_P * (1.0 - LENGTH_P).powi(k as i32)).collect();
    pmf.push((1.0 - LENGTH_P).powi(span as i32));
    pmf
}

/// Length cut points: bucket of length `l` is the number of cuts below `l`.
pub fn length_bucket_cuts(n_labels: usize) -> Vec<usize> {
    let pmf = length_pmf();
    let mut cuts = Vec::with_capacity(n_labels - 1);
    let mut cdf = 0.0;
    let mut j = 1;
    for (k, p) in pmf.iter().enumerate() {
        cdf += p;
        while j < n_labels && cdf >= j as f64 / n_labels as f64 {
            cuts.push(MIN_LENGTH + k);
            j += 1;
        }
    }
    cuts
}

pub fn length_bucket(length: usize, cuts: &[usize]) -> usize {
    cuts.iter().filter(|&&c| length > c).count()
}

struct Zipf {
    cumulative: Vec<f64>,
}

impl Zipf {
    fn new(n: usize) -> Zipf {
        let mut acc = 0.0;
        let cumulative = (0..n)
            .map(|i| {
                acc += 1.0 / (i as f64 + 1.0);
                acc
            })
            .collect();
        Zipf { cumulative }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Corpus> {
    config.validate()?;
    let mut rng = rng::seeded(config.seed);
    let geometric = Geometric::new(LENGTH_P).expect("valid p");
    let cuts = length_bucket_cuts(config.n_labels);
    let topics = config.topics();
    let block = config.background_size() / topics;
    let cue_block = config.cues_per_label() / topics;
    let zipf = Zipf::new(block);
    let topic_zipf = Zipf::new(topics);
    let cue_zipf = Zipf::new(cue_block);

    let mut rows: Vec<(usize, RecordData)> = Vec::with_capacity(config.n_records);
    for _ in 0..config.n_records {
        let period = rng.random_range(0..config.n_periods);
        let excess = geometric.sample(&mut rng).min((MAX_LENGTH - MIN_LENGTH) as u64) as usize;
        let length = MIN_LENGTH + excess;
        let label = if rng.random::<f64>() < config.length_label_correlation {
            length_bucket(length, &cuts)
        } else {
            rng.random_range(0..config.n_labels)
        };

        let topic = topic_zipf.sample(&mut rng);
        let generations = Binomial::new(period as u64, config.temporal_drift_rate).expect("valid binomial");
        let mut tokens: Vec<SyntheticToken> = (0..length - CUES_PER_RECORD)
            .map(|_| SyntheticToken::Background {
                index: topic * block + zipf.sample(&mut rng),
                generation: 0,
            })
            .collect();
        for _ in 0..CUES_PER_RECORD {
            let cue_label = if rng.random::<f64>() < CUE_PURITY {
                label
            } else {
                rng.random_range(0..config.n_labels)
            };
            let token = SyntheticToken::Cue {
                label: cue_label,
                index: topic * cue_block + cue_zipf.sample(&mut rng),
                generation: generations.sample(&mut rng),
            };
            let pos = rng.random_range(0..=tokens.len());
            tokens.insert(pos, token);
        }

        let text = tokens.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
        let data = RecordData::new(text, label_name(label)).with_timestamp(period_date(period));
        rows.push((period, data));
    }
    rows.sort_by_key(|(period, _)| *period);
    Corpus::from_rows(rows.into_iter().map(|(_, d)| d).collect())
}
