//! How different are a split's two sides?
//!
//! [`split_divergence`] compares the mean token distribution of the
//! non-test side (train plus dev) with that of the test side.
//! [`separability_probe`] asks whether a linear classifier over frequent
//! unigrams can tell the sides apart; its held-out accuracy `acc` gives the
//! proxy `2·(2·acc − 1)` for the 𝒜-distance.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Record};
use crate::error::{Error, Result};
use crate::evalharness::{train_linear_model, FeatureMatrix, ModelConfig};
use crate::features::{build_vocabulary_from, featurize, presence_vector, sentence_length, FeatureConfig, TokenDistribution, Vocabulary};
use crate::io::{ser_f64, ser_vec_f64};
use crate::metricspace::wasserstein_1d;
use crate::rng::{self, streams};
use crate::splitters::SplitManifest;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthStats {
    pub min: usize,
    #[serde(serialize_with = "ser_f64")]
    pub mean: f64,
    pub max: usize,
}

impl LengthStats {
    fn of(lengths: &[(usize, usize)]) -> Option<LengthStats> {
        let total: usize = lengths.iter().map(|(_, w)| w).sum();
        if total == 0 {
            return None;
        }
        Some(LengthStats {
            min: lengths.iter().map(|(l, _)| *l).min().expect("non-empty"),
            max: lengths.iter().map(|(l, _)| *l).max().expect("non-empty"),
            mean: lengths.iter().map(|(l, w)| (l * w) as f64).sum::<f64>() / total as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideLengths {
    pub train: LengthStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev: Option<LengthStats>,
    pub test: LengthStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    #[serde(serialize_with = "ser_f64")]
    pub wasserstein_train_test: f64,
    pub length_stats: SideLengths,
    #[serde(serialize_with = "ser_f64")]
    pub test_fraction_realized: f64,
    /// Side members with no in-vocabulary token, left out of the means.
    pub unfeaturized: usize,
}

/// Mean token distribution of weighted members; records without any
/// in-vocabulary token are skipped and counted.
fn side_mean(corpus: &Corpus, members: &[(usize, usize)], vocab: &Vocabulary) -> Result<(TokenDistribution, usize)> {
    let mut parts = Vec::with_capacity(members.len());
    let mut skipped = 0;
    for &(id, weight) in members {
        match featurize(&corpus.records()[id], vocab) {
            Ok(d) => parts.push((d, weight as f64)),
            Err(_) => skipped += 1,
        }
    }
    let total: f64 = parts.iter().map(|(_, w)| w).sum();
    if total == 0.0 {
        return Err(Error::InvalidSplit("a side has no featurizable records".into()));
    }
    let mean = TokenDistribution::mixture(parts.iter().map(|(d, w)| (d, w / total)))?;
    Ok((mean, skipped))
}

fn merge_weighted(mut a: Vec<(usize, usize)>, b: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    a.extend(b);
    a.sort_unstable();
    let mut out: Vec<(usize, usize)> = Vec::with_capacity(a.len());
    for (id, w) in a {
        match out.last_mut() {
            Some(last) if last.0 == id => last.1 += w,
            _ => out.push((id, w)),
        }
    }
    out
}

/// Divergence between the non-test side (train and dev, multiplicities
/// honored) and the test side.
pub fn split_divergence(corpus: &Corpus, manifest: &SplitManifest, vocab: &Vocabulary) -> Result<DivergenceReport> {
    manifest.validate(corpus.len())?;
    let train = manifest.train.weighted();
    let dev = manifest.dev.weighted();
    let test: Vec<(usize, usize)> = manifest.test.iter().map(|&i| (i, 1)).collect();
    let non_test = merge_weighted(train.clone(), dev.clone());

    let (mean_train, skip_train) = side_mean(corpus, &non_test, vocab)?;
    let (mean_test, skip_test) = side_mean(corpus, &test, vocab)?;

    let lengths = |m: &[(usize, usize)]| -> Vec<(usize, usize)> {
        m.iter().map(|&(i, w)| (sentence_length(&corpus.records()[i].text), w)).collect()
    };
    Ok(DivergenceReport {
        wasserstein_train_test: wasserstein_1d(&mean_train, &mean_test),
        length_stats: SideLengths {
            train: LengthStats::of(&lengths(&train)).ok_or_else(|| Error::InvalidSplit("train side is empty".into()))?,
            dev: LengthStats::of(&lengths(&dev)),
            test: LengthStats::of(&lengths(&test)).ok_or_else(|| Error::InvalidSplit("test side is empty".into()))?,
        },
        test_fraction_realized: manifest.test.len() as f64 / corpus.len() as f64,
        unfeaturized: skip_train + skip_test,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    /// Mean held-out accuracy over folds.
    #[serde(serialize_with = "ser_f64")]
    pub accuracy: f64,
    #[serde(serialize_with = "ser_f64")]
    pub a_distance_proxy: f64,
    pub n_features: usize,
    #[serde(serialize_with = "ser_vec_f64")]
    pub per_fold: Vec<f64>,
}

pub const DEFAULT_TOP_UNIGRAMS: usize = 1000;
pub const DEFAULT_PROBE_FOLDS: usize = 5;

pub fn a_distance_proxy(accuracy: f64) -> f64 {
    2.0 * (2.0 * accuracy - 1.0)
}

/// Side-membership probe. Non-test records (train and dev, distinct) are
/// class 0 and test records class 1. The larger class is downsampled at
/// random to the size of the smaller one; features are binary presence of
/// the `top_n` most frequent unigrams among the probe records; accuracy is
/// measured by stratified `folds`-fold cross-validation of the linear model.
pub fn separability_probe(
    corpus: &Corpus,
    manifest: &SplitManifest,
    top_n: usize,
    folds: usize,
    seed: u64,
) -> Result<SeparabilityReport> {
    manifest.validate(corpus.len())?;
    if folds < 2 {
        return Err(Error::InvalidConfig("probe needs at least 2 folds".into()));
    }
    if top_n == 0 {
        return Err(Error::InvalidConfig("top_n must be positive".into()));
    }
    let mut sides = [manifest.non_test_ids(), manifest.test.clone()];
    if sides.iter().any(|s| s.len() < folds) {
        return Err(Error::InvalidSplit(format!(
            "each side needs at least {folds} records (train side {}, test side {})",
            sides[0].len(),
            sides[1].len()
        )));
    }
    let mut rng = rng::stream(seed, streams::PROBE);
    let size = sides[0].len().min(sides[1].len());
    for side in sides.iter_mut() {
        side.shuffle(&mut rng);
        side.truncate(size);
    }

    let records: Vec<&Record> = sides.iter().flatten().map(|&i| &corpus.records()[i]).collect();
    let config = FeatureConfig {
        max_vocab: Some(top_n),
        ..FeatureConfig::default()
    };
    let vocab = build_vocabulary_from(records.iter().copied(), &config)?;
    let x = FeatureMatrix::new(records.iter().map(|r| presence_vector(&r.text, &vocab)).collect(), vocab.len())?;
    let y: Vec<String> = (0..2 * size).map(|i| if i < size { "train" } else { "test" }.to_string()).collect();

    // Position p within each (already shuffled) class goes to fold p % folds.
    let fold_of = |i: usize| (i % size) % folds;
    let model_config = ModelConfig::default();
    let per_fold = (0..folds)
        .map(|f| {
            let (held, kept): (Vec<usize>, Vec<usize>) = (0..2 * size).partition(|&i| fold_of(i) == f);
            let train_y: Vec<String> = kept.iter().map(|&i| y[i].clone()).collect();
            let model = train_linear_model(&x.select(&kept), &train_y, &model_config, None)?;
            let predicted = model.predict_labels(&x.select(&held))?;
            let hits = held.iter().zip(&predicted).filter(|(&i, p)| y[i] == **p).count();
            Ok(hits as f64 / held.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let accuracy = per_fold.iter().sum::<f64>() / folds as f64;
    Ok(SeparabilityReport {
        accuracy,
        a_distance_proxy: a_distance_proxy(accuracy),
        n_features: vocab.len(),
        per_fold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RecordData;
    use crate::features::build_vocabulary;
    use crate::splitters::{Members, SplitManifest};

    fn manifest(train: Vec<usize>, test: Vec<usize>) -> SplitManifest {
        let json = serde_json::json!({
            "strategy": "standard", "params": {}, "seed": null, "run_index": 0,
            "train": train, "dev": [], "test": test, "stats": {"test_fraction": 0.0}
        });
        SplitManifest::from_json(json.to_string().as_bytes()).unwrap()
    }

    #[test]
    fn identical_profiles_have_zero_divergence() {
        let c = Corpus::from_rows(
            ["a b", "c", "a b", "c"].iter().map(|t| RecordData::new(*t, "l")).collect(),
        )
        .unwrap();
        let v = build_vocabulary(&c, &FeatureConfig::default()).unwrap();
        let r = split_divergence(&c, &manifest(vec![0, 1], vec![2, 3]), &v).unwrap();
        assert_eq!(r.wasserstein_train_test, 0.0);
        assert_eq!(r.test_fraction_realized, 0.5);
        let swapped = split_divergence(&c, &manifest(vec![2, 3], vec![0, 1]), &v).unwrap();
        assert_eq!(swapped.wasserstein_train_test, r.wasserstein_train_test);
    }

    #[test]
    fn multiplicities_shift_the_mean() {
        let c = Corpus::from_rows(["a", "b", "a"].iter().map(|t| RecordData::new(*t, "l")).collect()).unwrap();
        let v = build_vocabulary(&c, &FeatureConfig::default()).unwrap();
        let mut m = manifest(vec![0, 1], vec![2]);
        let plain = split_divergence(&c, &m, &v).unwrap().wasserstein_train_test;
        m.train = Members::from_draws(&[0, 1, 1, 1]);
        let weighted = split_divergence(&c, &m, &v).unwrap().wasserstein_train_test;
        assert!((plain - 0.5).abs() < 1e-12);
        assert!((weighted - 0.75).abs() < 1e-12);
    }

    #[test]
    fn proxy_formula() {
        assert_eq!(a_distance_proxy(0.5), 0.0);
        assert_eq!(a_distance_proxy(1.0), 2.0);
        assert_eq!(a_distance_proxy(0.0), -2.0);
    }

    #[test]
    fn probe_separates_disjoint_vocabularies() {
        let rows = (0..40)
            .map(|i| RecordData::new(if i < 30 { format!("x{} common", i % 3) } else { format!("y{} common", i % 3) }, "l"))
            .collect();
        let c = Corpus::from_rows(rows).unwrap();
        let m = manifest((0..30).collect(), (30..40).collect());
        let r = separability_probe(&c, &m, 100, 5, 1).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.per_fold.len(), 5);
        assert_eq!(r, separability_probe(&c, &m, 100, 5, 1).unwrap());
        let small = manifest((0..37).collect(), (37..40).collect());
        assert!(separability_probe(&c, &small, 100, 5, 1).is_err());
    }
}
