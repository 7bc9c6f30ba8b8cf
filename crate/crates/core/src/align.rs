//! Cross-source author linking and ISBN enrichment.
//!
//! Two heuristics link Wikidata authors to external catalogues:
//!
//! * OpenLibrary: normalized names equal *and* birth years present and equal.
//! * Goodreads: names occurring more than once on the Goodreads side are
//!   discarded first, then names are matched on equality alone.
//!
//! Neither matcher ever resolves ambiguity by guessing. When a Wikidata
//! author has several candidates, or a candidate is claimed by several
//! Wikidata authors, no link is produced.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::ingest::{Gender, RawAuthorRecord, RawEditionRecord, RawWorkRecord, Source};
use crate::isbn::Isbn;

/// Casefolds, applies NFC and collapses internal whitespace. Diacritics
/// are preserved.
pub fn normalize_name(name: &str) -> String {
    let folded: String = caseless::default_case_fold_str(&name.nfc().collect::<String>());
    let collapsed: Vec<&str> = folded.split_whitespace().collect();
    collapsed.join(" ").nfc().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AlignmentKey {
    pub normalized_name: String,
    pub birth_year: Option<i32>,
}

impl AlignmentKey {
    pub fn of(record: &RawAuthorRecord) -> Self {
        AlignmentKey {
            normalized_name: normalize_name(&record.name),
            birth_year: record.birth_year,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnmatchedReason {
    NoNameMatch,
    NoBirthYear,
    YearMismatch,
    Ambiguous,
}

impl UnmatchedReason {
    pub fn as_str(self) -> &'static str {
        match self {
            UnmatchedReason::NoNameMatch => "no-name-match",
            UnmatchedReason::NoBirthYear => "no-birth-year",
            UnmatchedReason::YearMismatch => "year-mismatch",
            UnmatchedReason::Ambiguous => "ambiguous",
        }
    }
}

impl fmt::Display for UnmatchedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Output of one matcher. Both lists are sorted by WD id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchOutcome {
    pub pairs: Vec<(String, String)>,
    pub unmatched: Vec<(String, UnmatchedReason)>,
}

impl MatchOutcome {
    fn finish(mut self) -> Self {
        self.pairs.sort();
        self.unmatched.sort();
        self
    }
}

fn index_by_name(records: &[RawAuthorRecord]) -> HashMap<String, Vec<&RawAuthorRecord>> {
    let mut index: HashMap<String, Vec<&RawAuthorRecord>> = HashMap::new();
    for r in records {
        index.entry(normalize_name(&r.name)).or_default().push(r);
    }
    index
}

/// Candidate ids per WD author, before the ambiguity rule.
fn resolve_ambiguity(
    candidates: BTreeMap<String, BTreeSet<String>>,
    mut outcome: MatchOutcome,
) -> MatchOutcome {
    let mut claims: HashMap<&str, usize> = HashMap::new();
    for id in candidates.values().flatten() {
        *claims.entry(id.as_str()).or_default() += 1;
    }
    for (wd, ids) in &candidates {
        let mut it = ids.iter();
        match (it.next(), it.next()) {
            (Some(id), None) if claims.get(id.as_str()) == Some(&1) => {
                outcome.pairs.push((wd.clone(), id.clone()))
            }
            _ => outcome.unmatched.push((wd.clone(), UnmatchedReason::Ambiguous)),
        }
    }
    outcome.finish()
}

/// Name + birth-year heuristic against OpenLibrary author records.
pub fn match_openlibrary(
    wd_authors: &[RawAuthorRecord],
    ol_authors: &[RawAuthorRecord],
) -> MatchOutcome {
    let index = index_by_name(ol_authors);
    let mut outcome = MatchOutcome::default();
    let mut candidates: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();

    for wd in wd_authors {
        let Some(named) = index.get(&normalize_name(&wd.name)) else {
            outcome
                .unmatched
                .push((wd.source_id.clone(), UnmatchedReason::NoNameMatch));
            continue;
        };
        let Some(year) = wd.birth_year else {
            outcome
                .unmatched
                .push((wd.source_id.clone(), UnmatchedReason::NoBirthYear));
            continue;
        };
        let same_year: BTreeSet<String> = named
            .iter()
            .filter(|ol| ol.birth_year == Some(year))
            .map(|ol| ol.source_id.clone())
            .collect();
        if same_year.is_empty() {
            let reason = if named.iter().all(|ol| ol.birth_year.is_none()) {
                UnmatchedReason::NoBirthYear
            } else {
                UnmatchedReason::YearMismatch
            };
            outcome.unmatched.push((wd.source_id.clone(), reason));
            continue;
        }
        candidates.insert(wd.source_id.clone(), same_year);
    }
    resolve_ambiguity(candidates, outcome)
}

/// Homonym-filtered name heuristic against Goodreads author names.
pub fn match_goodreads(
    wd_authors: &[RawAuthorRecord],
    gr_names: &[RawAuthorRecord],
) -> MatchOutcome {
    let index = index_by_name(gr_names);
    let mut outcome = MatchOutcome::default();
    let mut candidates: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();

    for wd in wd_authors {
        match index.get(&normalize_name(&wd.name)) {
            None => outcome
                .unmatched
                .push((wd.source_id.clone(), UnmatchedReason::NoNameMatch)),
            // homonyms on the Goodreads side are discarded before matching
            Some(gr) if gr.len() > 1 => outcome
                .unmatched
                .push((wd.source_id.clone(), UnmatchedReason::Ambiguous)),
            Some(gr) => {
                candidates.insert(
                    wd.source_id.clone(),
                    gr.iter().map(|g| g.source_id.clone()).collect(),
                );
            }
        }
    }
    resolve_ambiguity(candidates, outcome)
}

/// Canonical aligned author. Wikidata values are authoritative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorEntity {
    /// The Wikidata id.
    pub canonical_id: String,
    pub name: String,
    pub birth_year: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub death_year: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country_of_birth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ethnic_group: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<Gender>,
    /// Always holds a WD entry; at most one id per source.
    pub cross_ids: BTreeMap<Source, String>,
    /// Where this author's works are collected from: OL if linked there,
    /// else GR if linked there, else WD.
    pub work_source: Source,
}

impl AuthorEntity {
    /// A GR id recorded on an author whose works come from OL.
    pub fn has_non_primary_gr(&self) -> bool {
        self.work_source == Source::OL && self.cross_ids.contains_key(&Source::GR)
    }
}

/// Builds one entity per WD author. OL links take precedence as the work
/// source; GR links are kept as metadata either way. Sorted by
/// `canonical_id`. WD authors without a birth year are skipped.
pub fn resolve_precedence(
    wd_authors: &[RawAuthorRecord],
    ol_pairs: &[(String, String)],
    gr_pairs: &[(String, String)],
) -> Vec<AuthorEntity> {
    let ol: BTreeMap<&str, &str> = ol_pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let gr: BTreeMap<&str, &str> = gr_pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();

    let mut entities: Vec<AuthorEntity> = wd_authors
        .iter()
        .filter_map(|wd| {
            let birth_year = wd.birth_year?;
            let mut cross_ids = BTreeMap::new();
            cross_ids.insert(Source::WD, wd.source_id.clone());
            let ol_id = ol.get(wd.source_id.as_str());
            let gr_id = gr.get(wd.source_id.as_str());
            if let Some(id) = ol_id {
                cross_ids.insert(Source::OL, id.to_string());
            }
            if let Some(id) = gr_id {
                cross_ids.insert(Source::GR, id.to_string());
            }
            let work_source = match (ol_id, gr_id) {
                (Some(_), _) => Source::OL,
                (None, Some(_)) => Source::GR,
                (None, None) => Source::WD,
            };
            Some(AuthorEntity {
                canonical_id: wd.source_id.clone(),
                name: wd.name.clone(),
                birth_year,
                death_year: wd.death_year,
                country_of_birth: wd.country_of_birth.clone(),
                ethnic_group: wd.ethnic_group.clone(),
                gender: wd.gender,
                cross_ids,
                work_source,
            })
        })
        .collect();
    entities.sort_by(|a, b| a.canonical_id.cmp(&b.canonical_id));
    entities
}

/// Keeps the works (and their editions) that the collection policy
/// gathers: WD works of any author, plus OL/GR works of authors whose
/// `work_source` is that source. `author_source_ids` are rewritten to
/// canonical ids; works left with no collected author are dropped.
pub fn collect_works(
    entities: &[AuthorEntity],
    works: &[RawWorkRecord],
    editions: &[RawEditionRecord],
) -> (Vec<RawWorkRecord>, Vec<RawEditionRecord>) {
    let mut by_source_id: HashMap<(Source, &str), &str> = HashMap::new();
    for e in entities {
        by_source_id.insert((Source::WD, e.canonical_id.as_str()), e.canonical_id.as_str());
        if e.work_source != Source::WD {
            if let Some(id) = e.cross_ids.get(&e.work_source) {
                by_source_id.insert((e.work_source, id.as_str()), e.canonical_id.as_str());
            }
        }
    }

    let mut kept_works = Vec::new();
    let mut kept_ids = BTreeSet::new();
    for w in works {
        if !matches!(w.source, Source::WD | Source::OL | Source::GR) {
            continue;
        }
        let mut authors: Vec<String> = w
            .author_source_ids
            .iter()
            .filter_map(|id| by_source_id.get(&(w.source, id.as_str())))
            .map(|id| id.to_string())
            .collect();
        authors.sort();
        authors.dedup();
        if authors.is_empty() {
            continue;
        }
        let mut w = w.clone();
        w.author_source_ids = authors;
        kept_ids.insert((w.source, w.source_id.clone()));
        kept_works.push(w);
    }
    let kept_editions = editions
        .iter()
        .filter(|e| kept_ids.contains(&(e.source, e.work_source_id.clone())))
        .cloned()
        .collect();
    (kept_works, kept_editions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnrichedField {
    Blurb,
    Subjects,
    PublishYear,
}

/// A work plus the fields that were filled from Google Books.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichedWork {
    pub record: RawWorkRecord,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub filled_by_gb: BTreeSet<EnrichedField>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrichedEdition {
    pub record: RawEditionRecord,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub filled_by_gb: BTreeSet<EnrichedField>,
}

/// Google Books records keyed by canonical ISBN-13. When several records
/// carry the same ISBN the one with the smallest `source_id` wins.
pub fn index_gb(gb_records: &[RawWorkRecord]) -> BTreeMap<Isbn, &RawWorkRecord> {
    let mut sorted: Vec<&RawWorkRecord> = gb_records.iter().collect();
    sorted.sort_by(|a, b| a.source_id.cmp(&b.source_id));
    let mut index = BTreeMap::new();
    for r in sorted {
        for isbn in r.valid_isbns() {
            index.entry(isbn).or_insert(r);
        }
    }
    index
}

/// Fills missing blurb, subjects and publish year from Google Books by
/// ISBN. A work is looked up by its own ISBNs first, then by those of its
/// editions. Existing values are never overwritten.
pub fn join_isbn(
    works: Vec<RawWorkRecord>,
    editions: Vec<RawEditionRecord>,
    gb_records: &[RawWorkRecord],
) -> (Vec<EnrichedWork>, Vec<EnrichedEdition>) {
    let gb = index_gb(gb_records);
    let mut edition_isbns: HashMap<(Source, String), Vec<Isbn>> = HashMap::new();
    for e in &editions {
        if let Some(isbn) = e.valid_isbn() {
            edition_isbns
                .entry((e.source, e.work_source_id.clone()))
                .or_default()
                .push(isbn);
        }
    }

    let works = works
        .into_iter()
        .map(|mut record| {
            let mut lookups = record.valid_isbns();
            if let Some(more) = edition_isbns.get(&(record.source, record.source_id.clone())) {
                lookups.extend(more.iter().cloned());
            }
            let hits: Vec<&RawWorkRecord> = lookups.iter().filter_map(|i| gb.get(i).copied()).collect();
            let mut filled = BTreeSet::new();
            if record.blurb.is_none() {
                if let Some(b) = hits.iter().find_map(|g| g.blurb.clone()) {
                    record.blurb = Some(b);
                    filled.insert(EnrichedField::Blurb);
                }
            }
            if record.subjects.is_empty() {
                if let Some(s) = hits.iter().find(|g| !g.subjects.is_empty()) {
                    record.subjects = s.subjects.clone();
                    filled.insert(EnrichedField::Subjects);
                }
            }
            if record.publish_year.is_none() {
                if let Some(y) = hits.iter().find_map(|g| g.publish_year) {
                    record.publish_year = Some(y);
                    filled.insert(EnrichedField::PublishYear);
                }
            }
            EnrichedWork {
                record,
                filled_by_gb: filled,
            }
        })
        .collect();

    let editions = editions
        .into_iter()
        .map(|mut record| {
            let mut filled = BTreeSet::new();
            if record.publish_year.is_none() {
                if let Some(y) = record
                    .valid_isbn()
                    .and_then(|i| gb.get(&i).and_then(|g| g.publish_year))
                {
                    record.publish_year = Some(y);
                    filled.insert(EnrichedField::PublishYear);
                }
            }
            EnrichedEdition {
                record,
                filled_by_gb: filled,
            }
        })
        .collect();
    (works, editions)
}

/// One row of the alignment report.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AlignmentRow {
    pub wd_id: String,
    pub matched_source: Source,
    pub matched_id: String,
    pub reason: String,
}

/// One row per (WD author, external source). Matched rows carry reason
/// `matched`, or `matched-non-primary` for GR ids on OL-collected authors.
pub fn alignment_rows(
    entities: &[AuthorEntity],
    ol: &MatchOutcome,
    gr: &MatchOutcome,
) -> Vec<AlignmentRow> {
    let mut rows = Vec::new();
    let by_id: HashMap<&str, &AuthorEntity> =
        entities.iter().map(|e| (e.canonical_id.as_str(), e)).collect();
    for (source, outcome) in [(Source::OL, ol), (Source::GR, gr)] {
        for (wd, id) in &outcome.pairs {
            let non_primary = by_id
                .get(wd.as_str())
                .is_some_and(|e| source == Source::GR && e.has_non_primary_gr());
            rows.push(AlignmentRow {
                wd_id: wd.clone(),
                matched_source: source,
                matched_id: id.clone(),
                reason: if non_primary { "matched-non-primary" } else { "matched" }.into(),
            });
        }
        for (wd, reason) in &outcome.unmatched {
            rows.push(AlignmentRow {
                wd_id: wd.clone(),
                matched_source: source,
                matched_id: String::new(),
                reason: reason.to_string(),
            });
        }
    }
    rows.sort();
    rows
}

pub fn write_alignment_csv<W: io::Write>(rows: &[AlignmentRow], writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
