//! Covariate-driven splits: length threshold, random length, rare words.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;

use super::{carve_dev, SplitManifest, SplitterConfig, Strategy};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::exec;
use crate::features::{sentence_length, Vocabulary};
use crate::rng::{self, streams};

fn lengths(corpus: &Corpus) -> Vec<usize> {
    corpus.records().iter().map(|r| sentence_length(&r.text)).collect()
}

/// Record ids grouped by sentence length.
fn ids_by_length(corpus: &Corpus) -> BTreeMap<usize, Vec<usize>> {
    let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (id, len) in lengths(corpus).into_iter().enumerate() {
        by_len.entry(len).or_default().push(id);
    }
    by_len
}

/// Puts every record longer than a threshold `L` in test. `L` minimizes
/// `|fraction(length > L) - test_fraction|`; ties go to the larger test set.
pub fn length_threshold_split(corpus: &Corpus, config: &SplitterConfig) -> Result<SplitManifest> {
    config.validate()?;
    let n = corpus.len();
    let by_len = ids_by_length(corpus);
    if by_len.len() < 2 {
        return Err(Error::InvalidInput(
            "all records have the same length; no threshold exists".into(),
        ));
    }

    // Candidate thresholds are every length but the largest, ascending, so
    // the test fraction decreases along the scan.
    let mut above = n;
    let mut best: Option<(usize, usize, f64)> = None; // (threshold, test size, gap)
    for (&len, ids) in by_len.iter().take(by_len.len() - 1) {
        above -= ids.len();
        let gap = (above as f64 / n as f64 - config.test_fraction).abs();
        if best.is_none_or(|(_, _, g)| gap < g - 1e-12) {
            best = Some((len, above, gap));
        }
    }
    let (threshold, _, _) = best.expect("at least one candidate");

    let lens = lengths(corpus);
    let (test, remainder): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| lens[i] > threshold);
    let mut rng = rng::stream(config.seed, streams::DEV);
    let (train, dev) = carve_dev(remainder, config.dev_fraction, &mut rng);
    let mut m = config
        .base_manifest(Strategy::LengthThreshold, Some(config.seed), 0)
        .with_sides(train, dev, test, n);
    m.stats.length_threshold = Some(threshold);
    Ok(m)
}

/// Per repeat, samples distinct lengths uniformly without replacement and
/// moves all records of each sampled length to test, stopping at the first
/// length that brings the test fraction to `test_fraction` or above. The
/// overshoot is kept. A length whose inclusion would leave no training data
/// is skipped.
pub fn random_length_splits(corpus: &Corpus, config: &SplitterConfig) -> Result<Vec<SplitManifest>> {
    config.validate()?;
    let n = corpus.len();
    let by_len = ids_by_length(corpus);
    if by_len.len() < 2 {
        return Err(Error::InvalidInput("random-length split needs at least 2 distinct lengths".into()));
    }
    let distinct: Vec<usize> = by_len.keys().copied().collect();

    Ok(exec::map_range(config.execution, config.repeats, |run| {
        let mut rng = rng::stream(config.seed, streams::per_run(streams::RANDOM_LENGTH, run));
        let mut order = distinct.clone();
        order.shuffle(&mut rng);

        let mut test: Vec<usize> = Vec::new();
        let mut sampled = Vec::new();
        for len in order {
            let ids = &by_len[&len];
            if test.len() + ids.len() >= n {
                continue;
            }
            test.extend_from_slice(ids);
            sampled.push(len);
            if test.len() as f64 / n as f64 >= config.test_fraction {
                break;
            }
        }

        let chosen: BTreeSet<usize> = test.iter().copied().collect();
        let remainder: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
        let mut dev_rng = rng::stream(config.seed, streams::per_run(streams::DEV, run));
        let (train, dev) = carve_dev(remainder, config.dev_fraction, &mut dev_rng);
        let mut m = config
            .base_manifest(Strategy::RandomLength, Some(config.seed), run)
            .with_sides(train, dev, test, n);
        if m.stats.test_fraction < config.test_fraction {
            m.stats
                .warnings
                .push("target test fraction not reachable at whole-length granularity".into());
        }
        m.stats.sampled_lengths = Some(sampled);
        m
    }))
}

/// Walks the vocabulary from the rarest token upward (count ascending,
/// lexicographic tie-break) and moves every record containing the current
/// token to test, until the test fraction reaches `test_fraction`. Test
/// membership is deterministic; only the dev carve uses the seed.
pub fn rare_words_split(corpus: &Corpus, vocab: &Vocabulary, config: &SplitterConfig) -> Result<SplitManifest> {
    config.validate()?;
    if vocab.len() < 2 {
        return Err(Error::InvalidInput("rare-words split needs at least 2 vocabulary tokens".into()));
    }
    let n = corpus.len();
    let mut records_with: Vec<Vec<usize>> = vec![Vec::new(); vocab.len()];
    for r in corpus.records() {
        let mut ranks = vocab.ranks_of(&r.text);
        ranks.sort_unstable();
        ranks.dedup();
        for rank in ranks {
            records_with[rank].push(r.id);
        }
    }

    let mut in_test = vec![false; n];
    let mut test_size = 0;
    let mut listed = Vec::new();
    for rank in vocab.ranks_rarest_first() {
        let fresh: Vec<usize> = records_with[rank].iter().copied().filter(|&i| !in_test[i]).collect();
        if test_size + fresh.len() >= n {
            break;
        }
        for i in fresh {
            in_test[i] = true;
            test_size += 1;
        }
        listed.push(vocab.token(rank).expect("rank in range").to_string());
        if test_size as f64 / n as f64 >= config.test_fraction {
            break;
        }
    }
    if test_size == 0 {
        return Err(Error::InvalidSplit("no rare word selects a proper subset of records".into()));
    }

    let (test, remainder): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| in_test[i]);
    let mut rng = rng::stream(config.seed, streams::DEV);
    let (train, dev) = carve_dev(remainder, config.dev_fraction, &mut rng);
    let mut m = config
        .base_manifest(Strategy::RareWords, Some(config.seed), 0)
        .with_sides(train, dev, test, n);
    m.stats.rare_words = Some(listed);
    Ok(m)
}
