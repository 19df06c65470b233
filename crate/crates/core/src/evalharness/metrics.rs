//! Scores, the multinomial random baseline and error reduction.

use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

fn counts<T: Eq + Hash>(labels: &[T]) -> HashMap<&T, u64> {
    let mut d: HashMap<&T, u64> = HashMap::new();
    for l in labels {
        *d.entry(l).or_default() += 1;
    }
    d
}

/// Expected accuracy of guessing test labels from the training label
/// distribution q: `Σ_c q_c · t_c`. Computed from integer counts with a single
/// final division.
pub fn multinomial_baseline<T: Eq + Hash>(train_labels: &[T], test_labels: &[T]) -> Result<f64> {
    if train_labels.is_empty() || test_labels.is_empty() {
        return Err(Error::InvalidInput("baseline needs non-empty label lists".into()));
    }
    let q = counts(train_labels);
    let agree: u64 = counts(test_labels)
        .iter()
        .map(|(l, tc)| q.get(l).copied().unwrap_or(0) * tc)
        .sum();
    Ok(agree as f64 / (train_labels.len() as f64 * test_labels.len() as f64))
}

/// `r = (p_s − p_b) / (1 − p_b)`.
pub fn error_reduction(p_s: f64, p_b: f64) -> Result<f64> {
    if p_b.is_nan() || p_b >= 1.0 {
        return Err(Error::InvalidInput(format!("baseline score {p_b} leaves no error to reduce")));
    }
    Ok((p_s - p_b) / (1.0 - p_b))
}

/// Mean of `(estimate − reference)²`.
pub fn mse_of_estimates(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no estimates".into()));
    }
    Ok(pairs.iter().map(|(e, r)| (e - r).powi(2)).sum::<f64>() / pairs.len() as f64)
}

pub fn accuracy<T: PartialEq>(predicted: &[T], gold: &[T]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != gold.len() {
        return Err(Error::InvalidInput("accuracy needs equal non-empty lists".into()));
    }
    Ok(predicted.iter().zip(gold).filter(|(p, g)| p == g).count() as f64 / gold.len() as f64)
}

pub fn rmse(predicted: &[f64], gold: &[f64]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != gold.len() {
        return Err(Error::InvalidInput("rmse needs equal non-empty lists".into()));
    }
    Ok((predicted.iter().zip(gold).map(|(p, g)| (p - g).powi(2)).sum::<f64>() / gold.len() as f64).sqrt())
}

/// Regression score `1 − RMSE / range(gold)`, so that higher is better and
/// error reduction applies unchanged. A constant gold vector has range 1.
pub fn regression_score(predicted: &[f64], gold: &[f64]) -> Result<f64> {
    let e = rmse(predicted, gold)?;
    let (lo, hi) = gold
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| (lo.min(g), hi.max(g)));
    let range = if hi > lo { hi - lo } else { 1.0 };
    Ok(1.0 - e / range)
}
