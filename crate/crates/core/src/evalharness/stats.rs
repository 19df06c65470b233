//! Paired significance tests and the drift correlation.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF, StudentsT};

use crate::error::{Error, Result};
use crate::io::ser_f64;
use crate::rng::{self, streams};

/// Below this many discordant pairs McNemar uses the exact binomial test.
pub const MCNEMAR_EXACT_BELOW: u64 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestName {
    Mcnemar,
    PairedBootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemComparison {
    /// Score of system 1 minus score of system 2. For the count-only McNemar
    /// form this is `b − c`.
    #[serde(serialize_with = "ser_f64")]
    pub delta: f64,
    pub test_name: TestName,
    #[serde(serialize_with = "ser_f64")]
    pub statistic: f64,
    #[serde(serialize_with = "ser_f64")]
    pub p_value: f64,
}

/// McNemar's test on `b` (only system 1 correct) and `c` (only system 2
/// correct). With `b + c < 25` the exact two-sided binomial test is used and
/// the statistic is `min(b, c)`; otherwise the continuity-corrected
/// chi-square `(|b − c| − 1)² / (b + c)`.
pub fn mcnemar_test(b: u64, c: u64) -> Result<SystemComparison> {
    let n = b + c;
    if n == 0 {
        return Err(Error::InvalidInput("McNemar needs at least one discordant pair".into()));
    }
    let (statistic, p_value) = if n < MCNEMAR_EXACT_BELOW {
        let k = b.min(c);
        let bin = Binomial::new(0.5, n).expect("valid binomial");
        (k as f64, (2.0 * bin.cdf(k)).min(1.0))
    } else {
        let diff = (b as f64 - c as f64).abs() - 1.0;
        let stat = diff.powi(2) / n as f64;
        let chi = ChiSquared::new(1.0).expect("valid chi-square");
        (stat, chi.sf(stat))
    };
    Ok(SystemComparison {
        delta: b as f64 - c as f64,
        test_name: TestName::Mcnemar,
        statistic,
        p_value,
    })
}

/// McNemar's test from per-item correctness; `delta` is the accuracy
/// difference.
pub fn mcnemar_from_predictions(correct1: &[bool], correct2: &[bool]) -> Result<SystemComparison> {
    if correct1.is_empty() || correct1.len() != correct2.len() {
        return Err(Error::InvalidInput("correctness vectors must be equal and non-empty".into()));
    }
    let b = correct1.iter().zip(correct2).filter(|(x, y)| **x && !**y).count() as u64;
    let c = correct1.iter().zip(correct2).filter(|(x, y)| !**x && **y).count() as u64;
    let mut cmp = mcnemar_test(b, c)?;
    cmp.delta = (b as f64 - c as f64) / correct1.len() as f64;
    Ok(cmp)
}

/// Paired bootstrap over per-item scores. The two-sided p-value is
/// `2·min(P[mean₁ > mean₂], P[mean₂ > mean₁])` over `resamples` index
/// resamples, clamped to [0, 1]; ties count toward neither side, so identical
/// inputs give 1. The statistic is the fraction of resamples where system 1
/// wins.
pub fn paired_bootstrap_test(scores1: &[f64], scores2: &[f64], resamples: usize, seed: u64) -> Result<SystemComparison> {
    let n = scores1.len();
    if n < 2 || n != scores2.len() {
        return Err(Error::InvalidInput(format!(
            "paired bootstrap needs equal lengths of at least 2 (got {} and {})",
            n,
            scores2.len()
        )));
    }
    if resamples == 0 {
        return Err(Error::InvalidConfig("resamples must be positive".into()));
    }
    let diffs: Vec<f64> = scores1.iter().zip(scores2).map(|(a, b)| a - b).collect();
    let delta = diffs.iter().sum::<f64>() / n as f64;
    let mut rng = rng::stream(seed, streams::RESAMPLE);
    let (mut wins1, mut wins2) = (0usize, 0usize);
    for _ in 0..resamples {
        let s: f64 = (0..n).map(|_| diffs[rng.random_range(0..n)]).sum();
        if s > 0.0 {
            wins1 += 1;
        } else if s < 0.0 {
            wins2 += 1;
        }
    }
    let (f1, f2) = (wins1 as f64 / resamples as f64, wins2 as f64 / resamples as f64);
    let p_value = if wins1 == 0 && wins2 == 0 {
        1.0
    } else {
        (2.0 * f1.min(f2)).clamp(0.0, 1.0)
    };
    Ok(SystemComparison {
        delta,
        test_name: TestName::PairedBootstrap,
        statistic: f1,
        p_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftCorrelation {
    #[serde(serialize_with = "ser_f64")]
    pub pearson_r: f64,
    #[serde(serialize_with = "ser_f64")]
    pub p_value: f64,
    pub n: usize,
}

fn variance_free(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

/// Pearson correlation with a two-sided Student-t p-value on `n − 2` degrees
/// of freedom.
pub fn drift_correlation(gaps: &[f64], scores: &[f64]) -> Result<DriftCorrelation> {
    let n = gaps.len();
    if n < 3 || n != scores.len() {
        return Err(Error::InvalidInput(format!(
            "correlation needs equal lengths of at least 3 (got {} and {})",
            n,
            scores.len()
        )));
    }
    if variance_free(gaps) || variance_free(scores) {
        return Err(Error::InvalidInput("correlation undefined for a constant vector".into()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(gaps), mean(scores));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in gaps.iter().zip(scores) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if n == 2 || r.abs() >= 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("valid t");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(DriftCorrelation {
        pearson_r: r,
        p_value,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mcnemar_branches() {
        let small = mcnemar_test(5, 15).unwrap();
        assert!((small.p_value - 2.0 * 21700.0 / 1048576.0).abs() < 1e-12);
        let tie = mcnemar_test(50, 50).unwrap();
        assert!((tie.statistic - 0.01).abs() < 1e-15);
        assert!((tie.p_value - 0.9203).abs() < 1e-3);
        let skew = mcnemar_test(0, 30).unwrap();
        assert!((skew.statistic - 841.0 / 30.0).abs() < 1e-12);
        assert!(skew.p_value < 1e-6);
        assert!(mcnemar_test(0, 0).is_err());
    }

    #[test]
    fn bootstrap_degenerate_cases() {
        let a = vec![1.0, 0.0, 1.0, 1.0];
        let same = paired_bootstrap_test(&a, &a, 1000, 3).unwrap();
        assert_eq!((same.delta, same.p_value), (0.0, 1.0));
        let all = paired_bootstrap_test(&[1.0; 50], &[0.0; 50], 1000, 3).unwrap();
        assert_eq!(all.p_value, 0.0);
        assert!(paired_bootstrap_test(&[1.0], &[1.0], 10, 0).is_err());
        assert!(paired_bootstrap_test(&[1.0, 0.0], &[1.0], 10, 0).is_err());
    }

    #[test]
    fn correlation_cases() {
        let gaps: Vec<f64> = (1..=6).map(f64::from).collect();
        let scores: Vec<f64> = gaps.iter().map(|g| 3.0 - 0.5 * g).collect();
        let c = drift_correlation(&gaps, &scores).unwrap();
        assert!((c.pearson_r + 1.0).abs() < 1e-12);
        // Symmetric scores around the gap mean are uncorrelated.
        let c = drift_correlation(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0, 0.0, -1.0, 0.0, 1.0]).unwrap();
        assert!(c.pearson_r.abs() < 1e-12 && (c.p_value - 1.0).abs() < 1e-9);
        assert!(drift_correlation(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
