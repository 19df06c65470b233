//! Time-based splits: hold out the latest days, or slice the corpus by day.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{carve_dev, SplitManifest, SplitterConfig, Strategy};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::rng::{self, streams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemporalMode {
    HoldoutLatest,
    /// One slice per calendar day with at least `min_day_size` records.
    DaySlices { min_day_size: usize },
}

/// Default minimum day size at desk scale.
pub const DEFAULT_MIN_DAY_SIZE: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaySlice {
    pub date: NaiveDate,
    pub ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum TemporalSplit {
    Holdout(SplitManifest),
    DaySlices(Vec<DaySlice>),
}

fn ids_by_day(corpus: &Corpus) -> Result<BTreeMap<NaiveDate, Vec<usize>>> {
    if !corpus.has_timestamps() {
        return Err(Error::InvalidInput("temporal split needs timestamps on every record".into()));
    }
    let mut days: BTreeMap<NaiveDate, Vec<usize>> = BTreeMap::new();
    for r in corpus.records() {
        days.entry(r.timestamp.expect("checked")).or_default().push(r.id);
    }
    if days.len() < 2 {
        return Err(Error::InvalidInput("temporal split needs at least 2 distinct days".into()));
    }
    Ok(days)
}

pub fn temporal_split(corpus: &Corpus, mode: TemporalMode, config: &SplitterConfig) -> Result<TemporalSplit> {
    match mode {
        TemporalMode::HoldoutLatest => temporal_holdout_split(corpus, config).map(TemporalSplit::Holdout),
        TemporalMode::DaySlices { min_day_size } => day_slices(corpus, min_day_size).map(TemporalSplit::DaySlices),
    }
}

/// Test = the most recent whole days, added newest first until the test
/// fraction reaches `test_fraction`. A day is never split and at least one
/// day always stays on the training side.
pub fn temporal_holdout_split(corpus: &Corpus, config: &SplitterConfig) -> Result<SplitManifest> {
    config.validate()?;
    let n = corpus.len();
    let days = ids_by_day(corpus)?;
    let mut test = Vec::new();
    let mut cut = None;
    for (date, ids) in days.iter().rev().take(days.len() - 1) {
        test.extend_from_slice(ids);
        cut = Some(*date);
        if test.len() as f64 / n as f64 >= config.test_fraction {
            break;
        }
    }
    let cut = cut.expect("at least two days");
    let remainder: Vec<usize> = days.range(..cut).flat_map(|(_, ids)| ids.iter().copied()).collect();
    let mut rng = rng::stream(config.seed, streams::DEV);
    let (train, dev) = carve_dev(remainder, config.dev_fraction, &mut rng);
    let mut m = config
        .base_manifest(Strategy::Temporal, Some(config.seed), 0)
        .param("mode", "holdout_latest")
        .with_sides(train, dev, test, n);
    m.stats.date_cut = Some(cut);
    Ok(m)
}

/// Record ids per calendar day, oldest first, keeping days with at least
/// `min_day_size` records.
pub fn day_slices(corpus: &Corpus, min_day_size: usize) -> Result<Vec<DaySlice>> {
    Ok(ids_by_day(corpus)?
        .into_iter()
        .filter(|(_, ids)| ids.len() >= min_day_size)
        .map(|(date, ids)| DaySlice { date, ids })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RecordData;

    fn day(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 5, d).unwrap()
    }

    fn corpus(days: &[(u32, usize)]) -> Corpus {
        let rows = days
            .iter()
            .flat_map(|&(d, n)| (0..n).map(move |i| RecordData::new(format!("r{d} {i}"), "l").with_timestamp(day(d))))
            .collect();
        Corpus::from_rows(rows).unwrap()
    }

    #[test]
    fn holdout_takes_whole_latest_day() {
        let c = corpus(&[(1, 5), (2, 5), (3, 5)]);
        let cfg = SplitterConfig {
            test_fraction: 0.3,
            ..Default::default()
        };
        let m = temporal_holdout_split(&c, &cfg).unwrap();
        assert_eq!(m.test, (10..15).collect::<Vec<_>>());
        assert_eq!(m.stats.date_cut, Some(day(3)));
        let max_train = m
            .non_test_ids()
            .iter()
            .map(|&i| c.records()[i].timestamp.unwrap())
            .max()
            .unwrap();
        assert!(day(3) > max_train);
    }

    #[test]
    fn holdout_keeps_a_training_day() {
        let c = corpus(&[(1, 2), (2, 8)]);
        let cfg = SplitterConfig {
            test_fraction: 0.9,
            dev_fraction: 0.0,
            ..Default::default()
        };
        let m = temporal_holdout_split(&c, &cfg).unwrap();
        assert_eq!(m.test.len(), 8);
        assert_eq!(m.train.ids(), vec![0, 1]);
    }

    #[test]
    fn slices_partition_by_day() {
        let c = corpus(&[(1, 2), (2, 3), (4, 1)]);
        let slices = day_slices(&c, 1).unwrap();
        assert_eq!(slices.len(), 3);
        let mut all: Vec<usize> = slices.iter().flat_map(|s| s.ids.clone()).collect();
        all.sort();
        assert_eq!(all, (0..6).collect::<Vec<_>>());
        assert_eq!(day_slices(&c, 2).unwrap().len(), 2);
    }

    #[test]
    fn errors() {
        let c = Corpus::from_rows(vec![RecordData::new("a", "l"), RecordData::new("b", "l")]).unwrap();
        assert!(temporal_holdout_split(&c, &SplitterConfig::default()).is_err());
        let c = corpus(&[(1, 4)]);
        assert!(day_slices(&c, 1).is_err());
    }
}
