//! Labeled text corpora: records, validation, JSONL/TSV I/O.
//!
//! A [`Corpus`] is immutable once built. Record ids are positions in load
//! order. Timestamps and split tags are all-or-none across rows.

mod synthetic;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use synthetic::{
    epoch, generate_synthetic, label_name, length_bucket, length_bucket_cuts, period_date, SyntheticConfig, SyntheticToken,
    MAX_LENGTH, MIN_LENGTH,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Dev,
    Test,
}

impl FromStr for SplitTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitTag::Train),
            "dev" => Ok(SplitTag::Dev),
            "test" => Ok(SplitTag::Test),
            other => Err(format!("invalid split '{other}' (expected train, dev or test)")),
        }
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitTag::Train => "train",
            SplitTag::Dev => "dev",
            SplitTag::Test => "test",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: usize,
    pub text: String,
    pub label: String,
    pub timestamp: Option<NaiveDate>,
    pub split_tag: Option<SplitTag>,
}

/// Row contents before ids are assigned and corpus-level rules are checked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordData {
    pub text: String,
    pub label: String,
    pub timestamp: Option<NaiveDate>,
    pub split_tag: Option<SplitTag>,
}

impl RecordData {
    pub fn new(text: impl Into<String>, label: impl Into<String>) -> Self {
        RecordData {
            text: text.into(),
            label: label.into(),
            timestamp: None,
            split_tag: None,
        }
    }

    pub fn with_timestamp(mut self, date: NaiveDate) -> Self {
        self.timestamp = Some(date);
        self
    }

    pub fn with_split_tag(mut self, tag: SplitTag) -> Self {
        self.split_tag = Some(tag);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<Record>,
    label_set: BTreeSet<String>,
    has_timestamps: bool,
    has_split_tags: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Tsv,
}

impl Format {
    /// Guesses the format from a file extension (`.tsv` or JSONL otherwise).
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => Format::Tsv,
            _ => Format::Jsonl,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "tsv" => Ok(Format::Tsv),
            other => Err(format!("unknown format '{other}' (expected jsonl or tsv)")),
        }
    }
}

impl Corpus {
    /// Builds a corpus from rows, assigning ids in order. Row numbers in
    /// errors start at 1.
    pub fn from_rows(rows: Vec<RecordData>) -> Result<Corpus> {
        if rows.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.text.is_empty() {
                return Err(Error::row(i + 1, "empty text"));
            }
            if row.label.is_empty() {
                return Err(Error::row(i + 1, "empty label"));
            }
        }
        let with_ts = rows.iter().filter(|r| r.timestamp.is_some()).count();
        if with_ts != 0 && with_ts != rows.len() {
            return Err(Error::MixedTimestamps);
        }
        let with_tags = rows.iter().filter(|r| r.split_tag.is_some()).count();
        if with_tags != 0 && with_tags != rows.len() {
            return Err(Error::MixedSplitTags);
        }
        let label_set = rows.iter().map(|r| r.label.clone()).collect();
        let records = rows
            .into_iter()
            .enumerate()
            .map(|(id, r)| Record {
                id,
                text: r.text,
                label: r.label,
                timestamp: r.timestamp,
                split_tag: r.split_tag,
            })
            .collect::<Vec<_>>();
        Ok(Corpus {
            has_timestamps: with_ts == records.len(),
            has_split_tags: with_tags == records.len(),
            records,
            label_set,
        })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn record(&self, id: usize) -> Option<&Record> {
        self.records.get(id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn label_set(&self) -> &BTreeSet<String> {
        &self.label_set
    }

    pub fn has_timestamps(&self) -> bool {
        self.has_timestamps
    }

    pub fn has_split_tags(&self) -> bool {
        self.has_split_tags
    }

    /// A new corpus of the given records, renumbered from 0 in the given order.
    pub fn subset(&self, ids: &[usize]) -> Result<Corpus> {
        let rows = ids
            .iter()
            .map(|&id| {
                self.records
                    .get(id)
                    .map(Record::data)
                    .ok_or_else(|| Error::InvalidInput(format!("record id {id} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Corpus::from_rows(rows)
    }

    pub fn to_rows(&self) -> Vec<RecordData> {
        self.records.iter().map(Record::data).collect()
    }
}

impl Record {
    pub fn data(&self) -> RecordData {
        RecordData {
            text: self.text.clone(),
            label: self.label.clone(),
            timestamp: self.timestamp,
            split_tag: self.split_tag,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRow {
    text: String,
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<String>,
}

fn parse_date(row: usize, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|_| Error::row(row, format!("timestamp: invalid ISO-8601 date '{s}'")))
}

fn parse_tag(row: usize, s: &str) -> Result<SplitTag> {
    s.parse().map_err(|e: String| Error::row(row, format!("split: {e}")))
}

pub fn load_corpus(path: &Path, format: Format) -> Result<Corpus> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, format)
}

/// Parses corpus text. Blank lines are ignored and do not count as rows.
pub fn parse_corpus(text: &str, format: Format) -> Result<Corpus> {
    let rows = match format {
        Format::Jsonl => parse_jsonl(text)?,
        Format::Tsv => parse_tsv(text)?,
    };
    Corpus::from_rows(rows)
}

fn parse_jsonl(text: &str) -> Result<Vec<RecordData>> {
    let mut rows = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let row = rows.len() + 1;
        let raw: JsonRow =
            serde_json::from_str(line).map_err(|e| Error::row(row, format!("malformed JSON: {e}")))?;
        rows.push(RecordData {
            timestamp: raw.timestamp.as_deref().map(|s| parse_date(row, s)).transpose()?,
            split_tag: raw.split.as_deref().map(|s| parse_tag(row, s)).transpose()?,
            text: raw.text,
            label: raw.label,
        });
    }
    Ok(rows)
}

fn parse_tsv(text: &str) -> Result<Vec<RecordData>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = match lines.next() {
        Some(h) => h.split('\t').collect(),
        None => return Ok(Vec::new()),
    };
    let col = |name: &str| header.iter().position(|h| *h == name);
    let text_col = col("text").ok_or_else(|| Error::InvalidInput("TSV header lacks 'text' column".into()))?;
    let label_col =
        col("label").ok_or_else(|| Error::InvalidInput("TSV header lacks 'label' column".into()))?;
    let ts_col = col("timestamp");
    let split_col = col("split");
    if let Some(unknown) = header
        .iter()
        .find(|h| !matches!(**h, "text" | "label" | "timestamp" | "split"))
    {
        return Err(Error::InvalidInput(format!("TSV header has unknown column '{unknown}'")));
    }

    let mut rows = Vec::new();
    for line in lines {
        let row = rows.len() + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != header.len() {
            return Err(Error::row(
                row,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        // An empty timestamp/split cell means the field is absent on this row.
        let opt = |c: Option<usize>| c.map(|i| fields[i]).filter(|s| !s.is_empty());
        rows.push(RecordData {
            text: fields[text_col].to_string(),
            label: fields[label_col].to_string(),
            timestamp: opt(ts_col).map(|s| parse_date(row, s)).transpose()?,
            split_tag: opt(split_col).map(|s| parse_tag(row, s)).transpose()?,
        });
    }
    Ok(rows)
}

/// Serializes a corpus. Optional columns are written only when present.
pub fn serialize_corpus(corpus: &Corpus, format: Format) -> Result<String> {
    let mut out = String::new();
    match format {
        Format::Jsonl => {
            for r in corpus.records() {
                let row = JsonRow {
                    text: r.text.clone(),
                    label: r.label.clone(),
                    timestamp: r.timestamp.map(|d| d.format("%Y-%m-%d").to_string()),
                    split: r.split_tag.map(|t| t.to_string()),
                };
                out.push_str(&serde_json::to_string(&row)?);
                out.push('\n');
            }
        }
        Format::Tsv => {
            let mut header = vec!["text", "label"];
            if corpus.has_timestamps() {
                header.push("timestamp");
            }
            if corpus.has_split_tags() {
                header.push("split");
            }
            out.push_str(&header.join("\t"));
            out.push('\n');
            for r in corpus.records() {
                for field in [&r.text, &r.label] {
                    if field.contains(['\t', '\n', '\r']) {
                        return Err(Error::InvalidInput(format!(
                            "record {}: tabs and newlines cannot be written to TSV",
                            r.id
                        )));
                    }
                }
                let mut fields = vec![r.text.clone(), r.label.clone()];
                if let Some(d) = r.timestamp {
                    fields.push(d.format("%Y-%m-%d").to_string());
                }
                if let Some(t) = r.split_tag {
                    fields.push(t.to_string());
                }
                out.push_str(&fields.join("\t"));
                out.push('\n');
            }
        }
    }
    Ok(out)
}

pub fn write_corpus(corpus: &Corpus, path: &Path, format: Format) -> Result<()> {
    let text = serialize_corpus(corpus, format)?;
    crate::io::write_atomic(path, text.as_bytes())
}
