//! Tokenization, frequency-ranked vocabularies and token distributions.
//!
//! A record is represented for the metric machinery as a [`TokenDistribution`]:
//! normalized counts of its in-vocabulary tokens, indexed by vocabulary rank.
//! Rank 0 is the most frequent token, so neighbouring ranks share a frequency
//! regime and the rank line is a meaningful ground space for Wasserstein
//! distances. This representation is a documented choice; distances are
//! qualitative and not comparable across vocabularies.

use std::collections::{BTreeMap, HashMap};

use crate::corpus::{Corpus, Record};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureConfig {
    pub lowercase: bool,
    /// `None` keeps every token that passes `min_count`.
    pub max_vocab: Option<usize>,
    pub min_count: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            lowercase: true,
            max_vocab: None,
            min_count: 1,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_vocab == Some(0) {
            return Err(Error::InvalidConfig("max_vocab must be at least 1".into()));
        }
        if self.min_count == 0 {
            return Err(Error::InvalidConfig("min_count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Splits on Unicode whitespace, optionally lowercasing.
pub fn tokenize(text: &str, config: &FeatureConfig) -> Vec<String> {
    text.split_whitespace()
        .map(|t| if config.lowercase { t.to_lowercase() } else { t.to_string() })
        .collect()
}

/// Sentence length in tokens. Every length-based splitter uses this.
pub fn sentence_length(text: &str) -> usize {
    // Lowercasing never changes the token count.
    text.split_whitespace().count()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    config: FeatureConfig,
    rank_of_token: HashMap<String, usize>,
    tokens_by_rank: Vec<String>,
    counts: Vec<u64>,
}

impl Vocabulary {
    /// Builds a vocabulary from raw token counts.
    pub fn from_counts(counts: HashMap<String, u64>, config: &FeatureConfig) -> Result<Vocabulary> {
        config.validate()?;
        let mut entries: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= config.min_count as u64)
            .collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if let Some(max) = config.max_vocab {
            entries.truncate(max);
        }
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let rank_of_token = entries
            .iter()
            .enumerate()
            .map(|(r, (t, _))| (t.clone(), r))
            .collect();
        let (tokens_by_rank, counts) = entries.into_iter().unzip();
        Ok(Vocabulary {
            config: config.clone(),
            rank_of_token,
            tokens_by_rank,
            counts,
        })
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.tokens_by_rank.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens_by_rank.is_empty()
    }

    pub fn rank(&self, token: &str) -> Option<usize> {
        self.rank_of_token.get(token).copied()
    }

    pub fn token(&self, rank: usize) -> Option<&str> {
        self.tokens_by_rank.get(rank).map(String::as_str)
    }

    pub fn tokens_by_rank(&self) -> &[String] {
        &self.tokens_by_rank
    }

    pub fn count(&self, rank: usize) -> u64 {
        self.counts[rank]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Ranks of the record's in-vocabulary tokens, in text order.
    pub fn ranks_of(&self, text: &str) -> Vec<usize> {
        tokenize(text, &self.config)
            .iter()
            .filter_map(|t| self.rank(t))
            .collect()
    }

    /// Ranks ordered from rarest to most frequent; count ties go to the
    /// lexicographically smaller token first.
    pub fn ranks_rarest_first(&self) -> Vec<usize> {
        let mut ranks: Vec<usize> = (0..self.len()).collect();
        ranks.sort_by(|&a, &b| {
            self.counts[a]
                .cmp(&self.counts[b])
                .then_with(|| self.tokens_by_rank[a].cmp(&self.tokens_by_rank[b]))
        });
        ranks
    }
}

pub fn count_tokens<'a>(texts: impl IntoIterator<Item = &'a str>, config: &FeatureConfig) -> HashMap<String, u64> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for text in texts {
        for tok in tokenize(text, config) {
            *counts.entry(tok).or_default() += 1;
        }
    }
    counts
}

pub fn build_vocabulary(corpus: &Corpus, config: &FeatureConfig) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    build_vocabulary_from(corpus.records().iter(), config)
}

/// Vocabulary over a subset of records (e.g. a training side).
pub fn build_vocabulary_from<'a>(
    records: impl IntoIterator<Item = &'a Record>,
    config: &FeatureConfig,
) -> Result<Vocabulary> {
    let counts = count_tokens(records.into_iter().map(|r| r.text.as_str()), config);
    Vocabulary::from_counts(counts, config)
}

/// A normalized discrete distribution over vocabulary ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDistribution {
    support: Vec<usize>,
    weights: Vec<f64>,
}

impl TokenDistribution {
    /// Builds a distribution from (rank, non-negative mass) pairs in any
    /// order. Duplicate ranks are merged, zero masses dropped, the result
    /// normalized.
    pub fn from_masses(masses: impl IntoIterator<Item = (usize, f64)>) -> Result<TokenDistribution> {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for (rank, m) in masses {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidInput(format!("invalid mass {m} at rank {rank}")));
            }
            if m > 0.0 {
                *merged.entry(rank).or_default() += m;
            }
        }
        let total: f64 = merged.values().sum();
        if merged.is_empty() || total <= 0.0 {
            return Err(Error::InvalidInput("distribution has no mass".into()));
        }
        let (support, weights) = merged.into_iter().map(|(r, m)| (r, m / total)).unzip();
        Ok(TokenDistribution { support, weights })
    }

    pub fn point_mass(rank: usize) -> TokenDistribution {
        TokenDistribution {
            support: vec![rank],
            weights: vec![1.0],
        }
    }

    /// Normalized histogram of the given ranks.
    pub fn from_ranks(ranks: &[usize]) -> Result<TokenDistribution> {
        TokenDistribution::from_masses(ranks.iter().map(|&r| (r, 1.0)))
    }

    /// Weighted average of distributions.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (&'a TokenDistribution, f64)>) -> Result<TokenDistribution> {
        let mut dense: Vec<f64> = Vec::new();
        for (d, w) in parts {
            if let Some(&max) = d.support.last() {
                if dense.len() <= max {
                    dense.resize(max + 1, 0.0);
                }
            }
            for (&r, &p) in d.support.iter().zip(&d.weights) {
                dense[r] += w * p;
            }
        }
        TokenDistribution::from_masses(dense.into_iter().enumerate())
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }
}

pub fn featurize(record: &Record, vocab: &Vocabulary) -> Result<TokenDistribution> {
    let ranks = vocab.ranks_of(&record.text);
    if ranks.is_empty() {
        return Err(Error::NoInVocabularyTokens { id: record.id });
    }
    TokenDistribution::from_ranks(&ranks)
}

/// Featurizes every record, keeping failures separate.
pub fn featurize_all(corpus: &Corpus, vocab: &Vocabulary) -> (Vec<(usize, TokenDistribution)>, Vec<usize>) {
    let mut ok = Vec::with_capacity(corpus.len());
    let mut failed = Vec::new();
    for r in corpus.records() {
        match featurize(r, vocab) {
            Ok(d) => ok.push((r.id, d)),
            Err(_) => failed.push(r.id),
        }
    }
    (ok, failed)
}

/// Sparse feature vector: strictly increasing indices with values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> SparseVector {
        let merged: BTreeMap<usize, f64> = pairs.into_iter().fold(BTreeMap::new(), |mut m, (i, v)| {
            *m.entry(i).or_default() += v;
            m
        });
        let (indices, values) = merged.into_iter().filter(|(_, v)| *v != 0.0).unzip();
        SparseVector { indices, values }
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.indices.iter().zip(&self.values).map(|(&i, &v)| dense[i] * v).sum()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices.last().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Scales to unit Euclidean norm (no-op for the zero vector).
    pub fn l2_normalized(mut self) -> SparseVector {
        let norm = self.values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= norm);
        }
        self
    }
}

impl From<&TokenDistribution> for SparseVector {
    fn from(d: &TokenDistribution) -> Self {
        SparseVector {
            indices: d.support.clone(),
            values: d.weights.clone(),
        }
    }
}

/// Token counts over the vocabulary, L2-normalized. Out-of-vocabulary tokens
/// are dropped, so a record may map to the zero vector.
pub fn count_vector(text: &str, vocab: &Vocabulary) -> SparseVector {
    SparseVector::from_pairs(vocab.ranks_of(text).into_iter().map(|r| (r, 1.0))).l2_normalized()
}

/// Binary presence of each in-vocabulary token.
pub fn presence_vector(text: &str, vocab: &Vocabulary) -> SparseVector {
    let mut ranks = vocab.ranks_of(text);
    ranks.sort_unstable();
    ranks.dedup();
    SparseVector {
        values: vec![1.0; ranks.len()],
        indices: ranks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RecordData;

    fn corpus(texts: &[&str]) -> Corpus {
        Corpus::from_rows(texts.iter().map(|t| RecordData::new(*t, "l")).collect()).unwrap()
    }

    #[test]
    fn tokenize_examples() {
        let cfg = FeatureConfig::default();
        assert_eq!(tokenize("The cat sat", &cfg), vec!["the", "cat", "sat"]);
        assert!(tokenize("", &cfg).is_empty());
        assert_eq!(tokenize("a  b\tc", &cfg), vec!["a", "b", "c"]);
        assert_eq!(sentence_length("a  b\tc"), 3);
        let keep = FeatureConfig {
            lowercase: false,
            ..cfg
        };
        assert_eq!(tokenize("The", &keep), vec!["The"]);
    }

    fn abc() -> Corpus {
        // counts a:5, b:3, c:3
        corpus(&["a a b c", "a b c", "a a b c"])
    }

    #[test]
    fn ranks_by_count_then_lexicographic() {
        let v = build_vocabulary(&abc(), &FeatureConfig::default()).unwrap();
        assert_eq!(v.tokens_by_rank(), ["a", "b", "c"]);
        assert_eq!(v.counts(), [5, 3, 3]);
        assert_eq!(v.rank("c"), Some(2));
    }

    #[test]
    fn truncation_and_threshold() {
        let cfg = FeatureConfig {
            max_vocab: Some(2),
            ..Default::default()
        };
        assert_eq!(build_vocabulary(&abc(), &cfg).unwrap().tokens_by_rank(), ["a", "b"]);
        let cfg = FeatureConfig {
            min_count: 4,
            ..Default::default()
        };
        assert_eq!(build_vocabulary(&abc(), &cfg).unwrap().tokens_by_rank(), ["a"]);
        let cfg = FeatureConfig {
            min_count: 6,
            ..Default::default()
        };
        assert!(matches!(build_vocabulary(&abc(), &cfg), Err(Error::EmptyVocabulary)));
    }

    #[test]
    fn featurize_examples() {
        let v = build_vocabulary(&corpus(&["a a a b", "b"]), &FeatureConfig::default()).unwrap();
        assert_eq!(v.rank("a"), Some(0));
        let c = corpus(&["a a b", "b", "zzz"]);
        let d = featurize(&c.records()[0], &v).unwrap();
        assert_eq!(d.support(), [0, 1]);
        assert!((d.weights()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((d.weights()[1] - 1.0 / 3.0).abs() < 1e-15);
        let d = featurize(&c.records()[1], &v).unwrap();
        assert_eq!((d.support(), d.weights()), (&[1][..], &[1.0][..]));
        assert!(matches!(
            featurize(&c.records()[2], &v),
            Err(Error::NoInVocabularyTokens { id: 2 })
        ));
    }

    #[test]
    fn mixture_averages() {
        let a = TokenDistribution::point_mass(0);
        let b = TokenDistribution::point_mass(2);
        let m = TokenDistribution::mixture([(&a, 1.0), (&b, 3.0)]).unwrap();
        assert_eq!(m.support(), [0, 2]);
        assert_eq!(m.weights(), [0.25, 0.75]);
    }

    #[test]
    fn sparse_vectors() {
        let v = build_vocabulary(&corpus(&["a a a b", "b c"]), &FeatureConfig::default()).unwrap();
        let p = presence_vector("a a c q", &v);
        assert_eq!(p.indices, vec![0, 2]);
        assert_eq!(p.values, vec![1.0, 1.0]);
        let c = count_vector("a a", &v);
        assert_eq!(c.indices, vec![0]);
        assert!((c.values[0] - 1.0).abs() < 1e-15);
        assert_eq!(c.dot(&[2.0, 0.0, 0.0]), 2.0);
    }
}
