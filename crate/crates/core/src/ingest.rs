//! Per-source record files: parsing, validation and the birth-year filter.
//!
//! Each source exports one JSON object per line into
//! `<source>.authors.jsonl`, `<source>.works.jsonl` and
//! `<source>.editions.jsonl`. Lines that violate the schema are reported
//! with their line number and never abort the parse.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::isbn::{self, Isbn};

/// Default temporal cutoff: writers born before this year are dropped.
pub const BIRTH_YEAR_CUTOFF: i32 = 1808;
pub const MIN_BIRTH_YEAR: i32 = 1000;
pub const MAX_BIRTH_YEAR: i32 = 2100;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot infer record kind from file name {0} (expected <source>.<authors|works|editions>.jsonl)")]
    FileName(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Source {
    WD,
    OL,
    GR,
    GB,
}

impl Source {
    pub const ALL: [Source; 4] = [Source::WD, Source::OL, Source::GR, Source::GB];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::WD => "WD",
            Source::OL => "OL",
            Source::GR => "GR",
            Source::GB => "GB",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "WD" => Ok(Source::WD),
            "OL" => Ok(Source::OL),
            "GR" => Ok(Source::GR),
            "GB" => Ok(Source::GB),
            other => Err(format!("unknown source `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
    Nonbinary,
    Unknown,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Nonbinary => "nonbinary",
            Gender::Unknown => "unknown",
        }
    }
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "male" => Ok(Gender::Male),
            "female" => Ok(Gender::Female),
            "nonbinary" => Ok(Gender::Nonbinary),
            "unknown" => Ok(Gender::Unknown),
            other => Err(format!("unknown gender `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawAuthorRecord {
    pub source_id: String,
    pub source: Source,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birth_year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub death_year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country_of_birth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ethnic_group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub external_ids: BTreeMap<Source, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawWorkRecord {
    pub source_id: String,
    pub source: Source,
    pub title: String,
    #[serde(default)]
    pub author_source_ids: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subjects: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blurb: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publish_year: Option<i32>,
    /// Normalized (hyphens and spaces stripped). Invalid entries stay here;
    /// see [`RawWorkRecord::valid_isbns`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub isbn_list: Vec<String>,
}

impl RawWorkRecord {
    /// Checksum-valid ISBNs in canonical ISBN-13 form, deduplicated, in
    /// list order.
    pub fn valid_isbns(&self) -> Vec<Isbn> {
        let mut seen = HashSet::new();
        self.isbn_list
            .iter()
            .filter_map(|s| Isbn::parse(s).ok())
            .filter(|i| seen.insert(i.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEditionRecord {
    pub source_id: String,
    /// Defaults to the source declared by the file name.
    pub source: Source,
    pub work_source_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publisher: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publish_year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publish_country: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub isbn: Option<String>,
}

impl RawEditionRecord {
    pub fn valid_isbn(&self) -> Option<Isbn> {
        self.isbn.as_deref().and_then(|s| Isbn::parse(s).ok())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordKind {
    Authors,
    Works,
    Editions,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Authors => "authors",
            RecordKind::Works => "works",
            RecordKind::Editions => "editions",
        }
    }

    fn known_fields(self) -> &'static [&'static str] {
        match self {
            RecordKind::Authors => &[
                "source_id",
                "source",
                "name",
                "birth_year",
                "death_year",
                "country_of_birth",
                "ethnic_group",
                "gender",
                "external_ids",
            ],
            RecordKind::Works => &[
                "source_id",
                "source",
                "title",
                "author_source_ids",
                "language",
                "subjects",
                "blurb",
                "publish_year",
                "isbn_list",
            ],
            RecordKind::Editions => &[
                "source_id",
                "source",
                "work_source_id",
                "publisher",
                "publish_year",
                "publish_country",
                "isbn",
            ],
        }
    }
}

/// File name for a (source, kind) pair, e.g. `OL.works.jsonl`.
pub fn file_name(source: Source, kind: RecordKind) -> String {
    format!("{}.{}.jsonl", source, kind.as_str())
}

/// Infers `(source, kind)` from a `<source>.<kind>.jsonl` file name.
pub fn classify_file_name(path: &Path) -> Option<(Source, RecordKind)> {
    let name = path.file_name()?.to_str()?;
    let stem = name.strip_suffix(".jsonl")?;
    let (source, kind) = stem.split_once('.')?;
    let kind = match kind {
        "authors" => RecordKind::Authors,
        "works" => RecordKind::Works,
        "editions" => RecordKind::Editions,
        _ => return None,
    };
    Some((source.parse().ok()?, kind))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceRecord {
    Author(RawAuthorRecord),
    Work(RawWorkRecord),
    Edition(RawEditionRecord),
}

impl SourceRecord {
    pub fn source(&self) -> Source {
        match self {
            SourceRecord::Author(a) => a.source,
            SourceRecord::Work(w) => w.source,
            SourceRecord::Edition(e) => e.source,
        }
    }

    pub fn source_id(&self) -> &str {
        match self {
            SourceRecord::Author(a) => &a.source_id,
            SourceRecord::Work(w) => &w.source_id,
            SourceRecord::Edition(e) => &e.source_id,
        }
    }

    /// One line of the record-file format (no trailing newline).
    pub fn to_line(&self) -> String {
        let result = match self {
            SourceRecord::Author(a) => serde_json::to_string(a),
            SourceRecord::Work(w) => serde_json::to_string(w),
            SourceRecord::Edition(e) => serde_json::to_string(e),
        };
        result.expect("record types always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    /// 1-based; 0 for warnings not tied to a line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseOutput {
    pub records: Vec<SourceRecord>,
    pub warnings: Vec<Warning>,
}

/// Parses one record file, inferring source and kind from its name.
pub fn parse_source_file(path: &Path) -> Result<ParseOutput, IngestError> {
    let (source, kind) =
        classify_file_name(path).ok_or_else(|| IngestError::FileName(path.to_path_buf()))?;
    let bytes = fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_records(&bytes, source, kind))
}

/// Parses line-delimited records. Never panics; every problem becomes a
/// warning. `(source, source_id)` duplicates after the first occurrence are
/// rejected.
pub fn parse_records(bytes: &[u8], source: Source, kind: RecordKind) -> ParseOutput {
    let mut out = ParseOutput::default();
    let mut seen_ids = HashSet::new();

    for (idx, raw_line) in bytes.split(|b| *b == b'\n').enumerate() {
        let line_no = idx + 1;
        let raw_line = raw_line.strip_suffix(b"\r").unwrap_or(raw_line);
        if raw_line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let mut warn = |message: String| {
            out.warnings.push(Warning {
                line: line_no,
                message,
            })
        };
        let text = match std::str::from_utf8(raw_line) {
            Ok(t) => t,
            Err(e) => {
                warn(format!("invalid UTF-8: {e}"));
                continue;
            }
        };
        let value: Value = match serde_json::from_str(text) {
            Ok(v) => v,
            Err(e) => {
                warn(format!("invalid JSON: {e}"));
                continue;
            }
        };
        let Value::Object(mut map) = value else {
            warn("record is not a JSON object".to_string());
            continue;
        };
        for key in map.keys() {
            if !kind.known_fields().contains(&key.as_str()) {
                log::debug!("{source}.{}: line {line_no}: ignoring unknown field `{key}`", kind.as_str());
            }
        }
        map.retain(|k, _| kind.known_fields().contains(&k.as_str()));
        match map.get("source") {
            None => {
                map.insert("source".into(), Value::String(source.as_str().into()));
            }
            Some(Value::String(s)) if s == source.as_str() => {}
            Some(other) => {
                warn(format!("source field {other} does not match file source {source}"));
                continue;
            }
        }

        let record = match decode(Value::Object(map), kind) {
            Ok(r) => r,
            Err(message) => {
                warn(message);
                continue;
            }
        };
        if let Err(message) = validate(&record) {
            warn(message);
            continue;
        }
        if !seen_ids.insert(record.source_id().to_string()) {
            warn(format!("duplicate source_id `{}`", record.source_id()));
            continue;
        }
        for flag in isbn_flags(&record) {
            warn(flag);
        }
        out.records.push(normalize_record(record));
    }
    out
}

fn decode(value: Value, kind: RecordKind) -> Result<SourceRecord, String> {
    let describe = |e: serde_json::Error| e.to_string();
    Ok(match kind {
        RecordKind::Authors => SourceRecord::Author(serde_json::from_value(value).map_err(describe)?),
        RecordKind::Works => SourceRecord::Work(serde_json::from_value(value).map_err(describe)?),
        RecordKind::Editions => {
            SourceRecord::Edition(serde_json::from_value(value).map_err(describe)?)
        }
    })
}

fn validate(record: &SourceRecord) -> Result<(), String> {
    if record.source_id().trim().is_empty() {
        return Err("empty source_id".into());
    }
    match record {
        SourceRecord::Author(a) => {
            if a.name.trim().is_empty() {
                return Err("empty name".into());
            }
            if let Some(y) = a.birth_year {
                if !(MIN_BIRTH_YEAR..=MAX_BIRTH_YEAR).contains(&y) {
                    return Err(format!(
                        "birth_year {y} outside [{MIN_BIRTH_YEAR}, {MAX_BIRTH_YEAR}]"
                    ));
                }
            }
        }
        SourceRecord::Work(w) => {
            if w.title.trim().is_empty() {
                return Err("empty title".into());
            }
        }
        SourceRecord::Edition(e) => {
            if e.work_source_id.trim().is_empty() {
                return Err("empty work_source_id".into());
            }
        }
    }
    Ok(())
}

fn isbn_flags(record: &SourceRecord) -> Vec<String> {
    let candidates: Vec<&String> = match record {
        SourceRecord::Work(w) => w.isbn_list.iter().collect(),
        SourceRecord::Edition(e) => e.isbn.iter().collect(),
        SourceRecord::Author(_) => Vec::new(),
    };
    candidates
        .into_iter()
        .filter_map(|raw| Isbn::parse(raw).err())
        .map(|e| format!("record `{}`: {e} (kept, flagged invalid)", record.source_id()))
        .collect()
}

fn normalize_record(record: SourceRecord) -> SourceRecord {
    match record {
        SourceRecord::Work(mut w) => {
            w.isbn_list = w.isbn_list.iter().map(|s| isbn::normalize(s)).collect();
            SourceRecord::Work(w)
        }
        SourceRecord::Edition(mut e) => {
            e.isbn = e.isbn.map(|s| isbn::normalize(&s));
            SourceRecord::Edition(e)
        }
        other => other,
    }
}

/// All records of one ingest run, split by kind.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestBatch {
    pub authors: Vec<RawAuthorRecord>,
    pub works: Vec<RawWorkRecord>,
    pub editions: Vec<RawEditionRecord>,
    pub warnings: Vec<FileWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileWarning {
    pub file: String,
    pub line: usize,
    pub message: String,
}

impl IngestBatch {
    pub fn extend(&mut self, file: &str, parsed: ParseOutput) {
        for record in parsed.records {
            match record {
                SourceRecord::Author(a) => self.authors.push(a),
                SourceRecord::Work(w) => self.works.push(w),
                SourceRecord::Edition(e) => self.editions.push(e),
            }
        }
        self.warnings.extend(parsed.warnings.into_iter().map(|w| FileWarning {
            file: file.to_string(),
            line: w.line,
            message: w.message,
        }));
    }

    /// Drops editions whose `work_source_id` has no work from the same
    /// source in this batch.
    pub fn drop_dangling_editions(&mut self) {
        let works: BTreeSet<(Source, &str)> = self
            .works
            .iter()
            .map(|w| (w.source, w.source_id.as_str()))
            .collect();
        let mut dangling = Vec::new();
        let mut kept = Vec::with_capacity(self.editions.len());
        for e in self.editions.drain(..) {
            if works.contains(&(e.source, e.work_source_id.as_str())) {
                kept.push(e);
            } else {
                dangling.push(FileWarning {
                    file: file_name(e.source, RecordKind::Editions),
                    line: 0,
                    message: format!(
                        "edition `{}` references unknown work `{}`; dropped",
                        e.source_id, e.work_source_id
                    ),
                });
            }
        }
        self.editions = kept;
        self.warnings.extend(dangling);
    }
}

/// Reads every `<source>.<kind>.jsonl` file in `dir` (sorted by name) into
/// one batch. Files are parsed in parallel; merge order is deterministic.
pub fn ingest_dir(dir: &Path) -> Result<IngestBatch, IngestError> {
    use rayon::prelude::*;

    let entries = fs::read_dir(dir).map_err(|source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| IngestError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if classify_file_name(&path).is_some() {
            paths.push(path);
        }
    }
    paths.sort();

    let parsed: Vec<(String, ParseOutput)> = paths
        .par_iter()
        .map(|p| {
            let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
            parse_source_file(p).map(|out| (name, out))
        })
        .collect::<Result<_, _>>()?;

    let mut batch = IngestBatch::default();
    for (name, out) in parsed {
        batch.extend(&name, out);
    }
    batch.drop_dangling_editions();
    Ok(batch)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterOutcome {
    pub kept: Vec<RawAuthorRecord>,
    pub removed: usize,
}

/// Keeps authors with a known birth year `>= cutoff`, in input order.
pub fn filter_by_birth_year(records: Vec<RawAuthorRecord>, cutoff: i32) -> FilterOutcome {
    let before = records.len();
    let kept: Vec<_> = records
        .into_iter()
        .filter(|r| r.birth_year.is_some_and(|y| y >= cutoff))
        .collect();
    FilterOutcome {
        removed: before - kept.len(),
        kept,
    }
}
