//! Standard (order-based), random cross-validation and bootstrap splits.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{carve_dev, Members, SplitManifest, SplitterConfig, Strategy};
use crate::corpus::{Corpus, SplitTag};
use crate::error::{Error, Result};
use crate::exec;
use crate::rng::{self, streams};

/// Mirrors the corpus' split tags if it has them, otherwise cuts contiguous
/// train/dev/test blocks in id order. Dev and test sizes are rounded to the
/// nearest integer; train takes the remainder.
pub fn standard_split(corpus: &Corpus, proportions: (f64, f64, f64)) -> Result<SplitManifest> {
    let n = corpus.len();
    let base = SplitManifest::new(Strategy::Standard, None, 0);
    if corpus.has_split_tags() {
        let side = |tag| {
            corpus
                .records()
                .iter()
                .filter(|r| r.split_tag == Some(tag))
                .map(|r| r.id)
                .collect::<Vec<_>>()
        };
        let m = base.param("source", "tags").with_sides(
            Members::from_ids(side(SplitTag::Train)),
            Members::from_ids(side(SplitTag::Dev)),
            side(SplitTag::Test),
            n,
        );
        m.validate(n)?;
        return Ok(m);
    }

    let (p_train, p_dev, p_test) = proportions;
    if [p_train, p_dev, p_test].iter().any(|p| !(0.0..=1.0).contains(p))
        || (p_train + p_dev + p_test - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidConfig(format!(
            "proportions ({p_train}, {p_dev}, {p_test}) must be in [0, 1] and sum to 1"
        )));
    }
    let dev = (p_dev * n as f64).round() as usize;
    let test = (p_test * n as f64).round() as usize;
    if dev == 0 || test == 0 || dev + test >= n {
        return Err(Error::InvalidSplit(format!(
            "proportions ({p_train}, {p_dev}, {p_test}) leave an empty part for {n} records"
        )));
    }
    let train_end = n - dev - test;
    Ok(base
        .param("source", "order")
        .param_f64("train", p_train)
        .param_f64("dev", p_dev)
        .param_f64("test", p_test)
        .with_sides(
            Members::Ids((0..train_end).collect()),
            Members::Ids((train_end..train_end + dev).collect()),
            (train_end + dev..n).collect(),
            n,
        ))
}

/// Seeded k-fold cross-validation. Fold `f` tests on the `f`-th contiguous
/// block of one shuffle of the ids; the first `n % folds` blocks are one
/// larger. Test sets of all folds partition the corpus.
pub fn random_cv_splits(corpus: &Corpus, folds: usize, config: &SplitterConfig) -> Result<Vec<SplitManifest>> {
    config.validate()?;
    let n = corpus.len();
    if folds < 2 {
        return Err(Error::InvalidConfig("folds must be at least 2".into()));
    }
    if folds > n {
        return Err(Error::InvalidConfig(format!("folds = {folds} exceeds corpus size {n}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(config.seed, streams::SHUFFLE));

    let (base, extra) = (n / folds, n % folds);
    let mut bounds = Vec::with_capacity(folds + 1);
    bounds.push(0);
    for f in 0..folds {
        bounds.push(bounds[f] + base + usize::from(f < extra));
    }

    Ok(exec::map_range(config.execution, folds, |f| {
        let test = order[bounds[f]..bounds[f + 1]].to_vec();
        let remainder: Vec<usize> = order[..bounds[f]].iter().chain(&order[bounds[f + 1]..]).copied().collect();
        let mut rng = rng::stream(config.seed, streams::per_run(streams::DEV, f));
        let (train, dev) = carve_dev(remainder, config.dev_fraction, &mut rng);
        config
            .base_manifest(Strategy::Random, Some(config.seed), f)
            .param("folds", folds)
            .with_sides(train, dev, test, n)
    }))
}

/// One bootstrap resample: a random `test_fraction` of ids is held out
/// without replacement, then train and dev are drawn with replacement from
/// the remainder with sizes `(1 - dev_fraction)·m` and `dev_fraction·m`.
pub fn bootstrap_split(corpus: &Corpus, config: &SplitterConfig) -> Result<SplitManifest> {
    bootstrap_run(corpus, config, 0)
}

/// `config.repeats` independent bootstrap resamples.
pub fn bootstrap_splits(corpus: &Corpus, config: &SplitterConfig) -> Result<Vec<SplitManifest>> {
    config.validate()?;
    exec::map_range(config.execution, config.repeats, |r| bootstrap_run(corpus, config, r))
        .into_iter()
        .collect()
}

fn bootstrap_run(corpus: &Corpus, config: &SplitterConfig, run: usize) -> Result<SplitManifest> {
    config.validate()?;
    let n = corpus.len();
    if n < 10 {
        return Err(Error::InvalidInput(format!("bootstrap needs at least 10 records, got {n}")));
    }
    let mut rng = rng::stream(config.seed, streams::per_run(streams::BOOTSTRAP, run));
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let test_size = ((config.test_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let remainder = order.split_off(test_size);
    let test = order;

    let m = remainder.len();
    let dev_size = ((config.dev_fraction * m as f64).round() as usize).min(m - 1);
    let train_size = m - dev_size;
    let mut draw = |size: usize| -> Vec<usize> {
        (0..size).map(|_| remainder[rng.random_range(0..m)]).collect()
    };
    let train = draw(train_size);
    let dev = draw(dev_size);

    // A record may be drawn into both train and dev.
    Ok(config
        .base_manifest(Strategy::Bootstrap, Some(config.seed), run)
        .with_sides(Members::from_draws(&train), Members::from_draws(&dev), test, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RecordData;

    fn corpus(n: usize) -> Corpus {
        Corpus::from_rows((0..n).map(|i| RecordData::new(format!("t {i}"), "l")).collect()).unwrap()
    }

    #[test]
    fn standard_contiguous() {
        let m = standard_split(&corpus(10), (0.8, 0.1, 0.1)).unwrap();
        assert_eq!(m.train.ids(), (0..8).collect::<Vec<_>>());
        assert_eq!(m.dev.ids(), vec![8]);
        assert_eq!(m.test, vec![9]);
        assert!(standard_split(&corpus(5), (0.9, 0.05, 0.05)).is_err());
        assert!(standard_split(&corpus(10), (0.8, 0.1, 0.2)).is_err());
    }

    #[test]
    fn standard_mirrors_tags() {
        let tags = [SplitTag::Test, SplitTag::Train, SplitTag::Dev, SplitTag::Train];
        let rows = tags
            .iter()
            .enumerate()
            .map(|(i, t)| RecordData::new(format!("x{i}"), "l").with_split_tag(*t))
            .collect();
        let c = Corpus::from_rows(rows).unwrap();
        let m = standard_split(&c, (0.0, 0.0, 1.0)).unwrap();
        assert_eq!(m.train.ids(), vec![1, 3]);
        assert_eq!(m.dev.ids(), vec![2]);
        assert_eq!(m.test, vec![0]);
    }

    #[test]
    fn cv_partitions() {
        let cfg = SplitterConfig::default();
        let ms = random_cv_splits(&corpus(10), 5, &cfg).unwrap();
        assert_eq!(ms.iter().map(|m| m.test.len()).collect::<Vec<_>>(), vec![2; 5]);
        let mut all: Vec<usize> = ms.iter().flat_map(|m| m.test.clone()).collect();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        for m in &ms {
            m.validate(10).unwrap();
            assert_eq!(m.train.len() + m.dev.len() + m.test.len(), 10);
        }
        assert_eq!(ms, random_cv_splits(&corpus(10), 5, &cfg).unwrap());

        let ms = random_cv_splits(&corpus(11), 5, &cfg).unwrap();
        assert_eq!(ms.iter().map(|m| m.test.len()).collect::<Vec<_>>(), vec![3, 2, 2, 2, 2]);
        assert!(random_cv_splits(&corpus(4), 5, &cfg).is_err());
        assert!(random_cv_splits(&corpus(4), 1, &cfg).is_err());
    }

    #[test]
    fn bootstrap_sizes() {
        let m = bootstrap_split(&corpus(100), &SplitterConfig::default()).unwrap();
        assert_eq!(m.test.len(), 10);
        assert_eq!(m.train.total_count(), 81);
        assert_eq!(m.dev.total_count(), 9);
        let test: std::collections::HashSet<_> = m.test.iter().collect();
        assert!(m.train.ids().iter().chain(m.dev.ids().iter()).all(|i| !test.contains(i)));
        assert!(bootstrap_split(&corpus(9), &SplitterConfig::default()).is_err());
    }
}
