//! Dataset splitting and split-aware evaluation for labeled text corpora.
//!
//! The crate covers the whole pipeline:
//!
//! * [`corpus`]: JSONL/TSV loading and a synthetic generator with planted
//!   length/label correlation and temporal token drift.
//! * [`features`]: whitespace tokenization, frequency-ranked vocabularies and
//!   per-record token distributions.
//! * [`metricspace`]: 1-D Wasserstein distance, a pivot ball tree and exact
//!   k-nearest-neighbor search.
//! * [`splitters`]: standard, random CV, bootstrap, length threshold, random
//!   length, rare words, temporal and adversarial splits.
//! * [`diagnostics`]: train/test divergence and a linear separability probe.
//! * [`evalharness`]: a regularized multinomial logistic regression, error
//!   reduction over a multinomial random baseline, significance tests and the
//!   strategy-vs-new-sample comparison.
//! * [`cli`]: the `splitgauntlet` command line.
//!
//! Data-parallel loops go through [`exec`], which uses rayon when the
//! `parallel` feature is enabled and runs sequentially otherwise. Results never
//! depend on the schedule.

pub mod cli;
pub mod corpus;
pub mod diagnostics;
pub mod error;
pub mod evalharness;
pub mod exec;
pub mod features;
pub mod io;
pub mod metricspace;
pub mod rng;
pub mod splitters;

pub use error::{Error, Result};
