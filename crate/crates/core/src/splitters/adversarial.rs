//! Adversarial splits: a random centroid and its nearest neighbors under the
//! 1-D Wasserstein distance form the test set.

use rand::Rng;

use super::{carve_dev, SplitManifest, SplitterConfig, Strategy};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::exec;
use crate::features::{featurize_all, TokenDistribution, Vocabulary};
use crate::metricspace::{wasserstein_1d, BallTree, DEFAULT_LEAF_SIZE};
use crate::rng::{self, streams};

/// Neighbor count `round(test_fraction·n) − 1`, so that the test set
/// (centroid plus neighbors) holds about `test_fraction·n` records. May be
/// zero or negative for tiny corpora.
pub fn adversarial_k(test_fraction: f64, n: usize) -> i64 {
    (test_fraction * n as f64).round() as i64 - 1
}

/// Tree indices of the test set: the centroid followed by its `k` nearest
/// other points, ascending by (distance, index).
pub fn adversarial_test_set(tree: &BallTree, centroid: usize, k: usize) -> Result<Vec<usize>> {
    if centroid >= tree.len() {
        return Err(Error::InvalidInput(format!("centroid {centroid} out of range")));
    }
    let mut test = vec![centroid];
    if k > 0 {
        let query = &tree.points()[centroid];
        test.extend(tree.knn_excluding(query, k, Some(centroid))?.into_iter().map(|nb| nb.index));
    }
    Ok(test)
}

fn side_mean(points: &[TokenDistribution], members: impl IntoIterator<Item = usize>) -> Result<TokenDistribution> {
    let members: Vec<usize> = members.into_iter().collect();
    let w = 1.0 / members.len() as f64;
    TokenDistribution::mixture(members.into_iter().map(|i| (&points[i], w)))
}

/// `config.repeats` adversarial splits sharing one ball tree. Records with
/// no in-vocabulary token are left out of every side and listed in
/// `stats.excluded`.
pub fn adversarial_splits(corpus: &Corpus, vocab: &Vocabulary, config: &SplitterConfig) -> Result<Vec<SplitManifest>> {
    config.validate()?;
    let (featurized, excluded) = featurize_all(corpus, vocab);
    let n = featurized.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "adversarial split needs at least 3 featurizable records, got {n}"
        )));
    }
    let k = adversarial_k(config.test_fraction, n);
    if k >= n as i64 - 1 {
        return Err(Error::InvalidConfig(format!(
            "k = {k} leaves no training data for {n} records"
        )));
    }
    let k_used = k.max(0) as usize;

    let ids: Vec<usize> = featurized.iter().map(|(id, _)| *id).collect();
    let points: Vec<TokenDistribution> = featurized.into_iter().map(|(_, d)| d).collect();
    let tree = BallTree::build(points, DEFAULT_LEAF_SIZE)?;

    exec::map_range(config.execution, config.repeats, |run| {
        let mut rng = rng::stream(config.seed, streams::per_run(streams::ADVERSARIAL, run));
        let centroid = rng.random_range(0..n);
        let test_idx = adversarial_test_set(&tree, centroid, k_used)?;

        let mut in_test = vec![false; n];
        for &i in &test_idx {
            in_test[i] = true;
        }
        let rest_idx: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
        let divergence = wasserstein_1d(
            &side_mean(tree.points(), rest_idx.iter().copied())?,
            &side_mean(tree.points(), test_idx.iter().copied())?,
        );

        let test: Vec<usize> = test_idx.iter().map(|&i| ids[i]).collect();
        let remainder: Vec<usize> = rest_idx.iter().map(|&i| ids[i]).collect();
        let mut dev_rng = rng::stream(config.seed, streams::per_run(streams::DEV, run));
        let (train, dev) = carve_dev(remainder, config.dev_fraction, &mut dev_rng);
        let mut m = config
            .base_manifest(Strategy::Adversarial, Some(config.seed), run)
            .with_sides(train, dev, test, corpus.len());
        m.stats.centroid = Some(ids[centroid]);
        m.stats.k = Some(k_used);
        m.stats.divergence = Some(divergence);
        if !excluded.is_empty() {
            m.stats.excluded = Some(excluded.clone());
        }
        if k <= 0 {
            m.stats.warnings.push("test fraction too small for any neighbor; test is the centroid alone".into());
        }
        Ok(m)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RecordData;
    use crate::features::{build_vocabulary, FeatureConfig};
    use crate::metricspace::brute_force_knn;

    #[test]
    fn k_formula() {
        assert_eq!(adversarial_k(0.1, 2000), 199);
        assert_eq!(adversarial_k(0.1, 4), -1);
        assert_eq!(adversarial_k(0.5, 6), 2);
    }

    #[test]
    fn point_mass_example() {
        let points: Vec<TokenDistribution> = [0, 1, 2, 10, 11, 12].iter().map(|&r| TokenDistribution::point_mass(r)).collect();
        let tree = BallTree::build(points, 2).unwrap();
        assert_eq!(adversarial_test_set(&tree, 5, 2).unwrap(), vec![5, 4, 3]);
    }

    fn corpus(n: usize) -> Corpus {
        let rows = (0..n)
            .map(|i| {
                let words: Vec<String> = (0..(i % 7 + 1)).map(|j| format!("w{}", (i * 3 + j * 5) % 23)).collect();
                RecordData::new(words.join(" "), "l")
            })
            .collect();
        Corpus::from_rows(rows).unwrap()
    }

    #[test]
    fn matches_brute_force_and_is_deterministic() {
        let c = corpus(120);
        let v = build_vocabulary(&c, &FeatureConfig::default()).unwrap();
        let cfg = SplitterConfig::default();
        let ms = adversarial_splits(&c, &v, &cfg).unwrap();
        assert_eq!(ms.len(), 5);
        let points: Vec<TokenDistribution> = featurize_all(&c, &v).0.into_iter().map(|(_, d)| d).collect();
        for m in &ms {
            m.validate(c.len()).unwrap();
            let centroid = m.stats.centroid.unwrap();
            let k = m.stats.k.unwrap();
            assert_eq!(k, 11);
            let mut expected: Vec<usize> = brute_force_knn(&points, &points[centroid], k, Some(centroid))
                .into_iter()
                .map(|nb| nb.index)
                .collect();
            expected.push(centroid);
            expected.sort();
            assert_eq!(m.test, expected);
        }
        assert_eq!(ms, adversarial_splits(&c, &v, &cfg).unwrap());
    }

    #[test]
    fn tiny_fraction_warns_and_large_errors() {
        let c = corpus(10);
        let v = build_vocabulary(&c, &FeatureConfig::default()).unwrap();
        let cfg = SplitterConfig {
            test_fraction: 0.05,
            repeats: 1,
            ..Default::default()
        };
        let m = &adversarial_splits(&c, &v, &cfg).unwrap()[0];
        assert_eq!(m.test.len(), 1);
        assert!(!m.stats.warnings.is_empty());
        let cfg = SplitterConfig {
            test_fraction: 0.95,
            dev_fraction: 0.0,
            repeats: 1,
            ..Default::default()
        };
        assert!(adversarial_splits(&c, &v, &cfg).is_err());
    }
}
