//! Typed triple graph of writers, works and editions.
//!
//! Births and publications are reified: an author points to a birth
//! situation that carries place, time and status, and an edition points to
//! a publication that carries publisher, year and country. Every statement
//! records the source it was derived from.
//!
//! On disk the graph is a quad file, one statement per line:
//! `subject<TAB>predicate<TAB>object<TAB>provenance`. Literal objects are
//! JSON-quoted strings; entity objects are bare ids. Entity kinds are
//! encoded in the id prefix, so the entity set is recovered from the
//! statements alone.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::align::{normalize_name, AuthorEntity, EnrichedEdition, EnrichedField, EnrichedWork};
use crate::classify::StatusAssignment;
use crate::ingest::Source;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("dangling reference: {from} refers to unknown {kind} `{id}`")]
    Dangling { from: String, kind: &'static str, id: String },
    #[error("work {0} has no author")]
    Unattributed(String),
    #[error("duplicate {kind} `{id}`")]
    Duplicate { kind: &'static str, id: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum EntityKind {
    Author,
    Work,
    Edition,
    BirthSituation,
    Publication,
    Subject,
    Publisher,
    Place,
    TimeInterval,
}

impl EntityKind {
    pub const ALL: [EntityKind; 9] = [
        EntityKind::Author,
        EntityKind::Work,
        EntityKind::Edition,
        EntityKind::BirthSituation,
        EntityKind::Publication,
        EntityKind::Subject,
        EntityKind::Publisher,
        EntityKind::Place,
        EntityKind::TimeInterval,
    ];

    fn prefix(self) -> &'static str {
        match self {
            EntityKind::Author => "author",
            EntityKind::Work => "work",
            EntityKind::Edition => "edition",
            EntityKind::BirthSituation => "birth",
            EntityKind::Publication => "publication",
            EntityKind::Subject => "subject",
            EntityKind::Publisher => "publisher",
            EntityKind::Place => "place",
            EntityKind::TimeInterval => "time",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Author => "Author",
            EntityKind::Work => "Work",
            EntityKind::Edition => "Edition",
            EntityKind::BirthSituation => "BirthSituation",
            EntityKind::Publication => "Publication",
            EntityKind::Subject => "Subject",
            EntityKind::Publisher => "Publisher",
            EntityKind::Place => "Place",
            EntityKind::TimeInterval => "TimeInterval",
        }
    }

    /// Kind encoded in an id's `<prefix>:` part.
    pub fn of_id(id: &str) -> Option<EntityKind> {
        let (prefix, rest) = id.split_once(':')?;
        if rest.is_empty() {
            return None;
        }
        EntityKind::ALL.into_iter().find(|k| k.prefix() == prefix)
    }

    pub fn id(self, local: &str) -> String {
        let cleaned: String = local
            .chars()
            .map(|c| if c.is_whitespace() || c.is_control() { '_' } else { c })
            .collect();
        format!("{}:{}", self.prefix(), cleaned)
    }
}

/// The closed relation vocabulary, declared in name order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Relation {
    AttributedTo,
    BirthPlace,
    BirthTime,
    EmbodiedIn,
    Gender,
    HasBirthSituation,
    HasBlurb,
    HasPublication,
    HasStatus,
    HasSubject,
    PublicationCountry,
    PublicationYear,
    PublishedBy,
    SameAsExternal,
}

impl Relation {
    pub const ALL: [Relation; 14] = [
        Relation::AttributedTo,
        Relation::BirthPlace,
        Relation::BirthTime,
        Relation::EmbodiedIn,
        Relation::Gender,
        Relation::HasBirthSituation,
        Relation::HasBlurb,
        Relation::HasPublication,
        Relation::HasStatus,
        Relation::HasSubject,
        Relation::PublicationCountry,
        Relation::PublicationYear,
        Relation::PublishedBy,
        Relation::SameAsExternal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::AttributedTo => "attributedTo",
            Relation::BirthPlace => "birthPlace",
            Relation::BirthTime => "birthTime",
            Relation::EmbodiedIn => "embodiedIn",
            Relation::Gender => "gender",
            Relation::HasBirthSituation => "hasBirthSituation",
            Relation::HasBlurb => "hasBlurb",
            Relation::HasPublication => "hasPublication",
            Relation::HasStatus => "hasStatus",
            Relation::HasSubject => "hasSubject",
            Relation::PublicationCountry => "publicationCountry",
            Relation::PublicationYear => "publicationYear",
            Relation::PublishedBy => "publishedBy",
            Relation::SameAsExternal => "sameAsExternal",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown predicate `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Object {
    Entity(String),
    Literal(String),
}

impl Object {
    pub fn entity(&self) -> Option<&str> {
        match self {
            Object::Entity(id) => Some(id),
            Object::Literal(_) => None,
        }
    }

    fn encode(&self) -> String {
        match self {
            Object::Entity(id) => id.clone(),
            Object::Literal(s) => serde_json::to_string(s).expect("strings serialize"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: String,
    pub predicate: Relation,
    pub object: Object,
    pub provenance: Source,
}

impl Triple {
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.subject,
            self.predicate,
            self.object.encode(),
            self.provenance
        )
    }

    pub fn parse_line(line: &str) -> Result<Triple, String> {
        let fields: Vec<&str> = line.split('\t').collect();
        let [subject, predicate, object, provenance] = fields[..] else {
            return Err(format!("expected 4 tab-separated fields, found {}", fields.len()));
        };
        if EntityKind::of_id(subject).is_none() {
            return Err(format!("subject `{subject}` is not a typed entity id"));
        }
        let predicate: Relation = predicate.parse()?;
        let object = if object.starts_with('"') {
            Object::Literal(
                serde_json::from_str::<String>(object).map_err(|e| format!("bad literal: {e}"))?,
            )
        } else if EntityKind::of_id(object).is_some() {
            Object::Entity(object.to_string())
        } else {
            return Err(format!("object `{object}` is neither a literal nor an entity id"));
        };
        Ok(Triple {
            subject: subject.to_string(),
            predicate,
            object,
            provenance: provenance.parse()?,
        })
    }
}

/// Immutable once built. Entities are exactly the ids mentioned by the
/// triples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    entities: BTreeMap<String, EntityKind>,
    triples: BTreeSet<Triple>,
}

impl Graph {
    /// Ids must carry a kind prefix.
    pub fn from_triples(triples: impl IntoIterator<Item = Triple>) -> Result<Graph, String> {
        let triples: BTreeSet<Triple> = triples.into_iter().collect();
        let mut entities = BTreeMap::new();
        for t in &triples {
            for id in std::iter::once(t.subject.as_str()).chain(t.object.entity()) {
                let kind = EntityKind::of_id(id).ok_or_else(|| format!("untyped id `{id}`"))?;
                entities.insert(id.to_string(), kind);
            }
        }
        Ok(Graph { entities, triples })
    }

    pub fn entities(&self) -> &BTreeMap<String, EntityKind> {
        &self.entities
    }

    pub fn triples(&self) -> &BTreeSet<Triple> {
        &self.triples
    }

    pub fn kind(&self, id: &str) -> Option<EntityKind> {
        self.entities.get(id).copied()
    }

    pub fn ids_of_kind(&self, kind: EntityKind) -> impl Iterator<Item = &str> {
        self.entities
            .iter()
            .filter(move |(_, k)| **k == kind)
            .map(|(id, _)| id.as_str())
    }

    /// Sub-graph of statements derived from `source`, plus Google Books
    /// statements about subjects that remain in it. `None` keeps the whole
    /// graph.
    pub fn portion(&self, source: Option<Source>) -> Graph {
        let Some(source) = source else {
            return self.clone();
        };
        let kept: Vec<Triple> = self
            .triples
            .iter()
            .filter(|t| t.provenance == source)
            .cloned()
            .collect();
        let subjects: HashSet<&str> = kept.iter().map(|t| t.subject.as_str()).collect();
        let enrichments: Vec<Triple> = self
            .triples
            .iter()
            .filter(|t| t.provenance == Source::GB && source != Source::GB)
            .filter(|t| subjects.contains(t.subject.as_str()))
            .cloned()
            .collect();
        Graph::from_triples(kept.into_iter().chain(enrichments)).expect("ids already typed")
    }

    /// Pattern and closure violations; empty when the graph is well formed.
    pub fn check_patterns(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut out_count: HashMap<(&str, Relation), usize> = HashMap::new();
        for t in &self.triples {
            *out_count.entry((t.subject.as_str(), t.predicate)).or_default() += 1;
            for id in std::iter::once(t.subject.as_str()).chain(t.object.entity()) {
                if !self.entities.contains_key(id) {
                    problems.push(format!("dangling id `{id}`"));
                }
            }
            if t.predicate == Relation::EmbodiedIn {
                let target = t.object.entity().and_then(|id| self.kind(id));
                if target != Some(EntityKind::Edition) {
                    problems.push(format!("embodiedIn object of {} is not an Edition", t.subject));
                }
            }
        }
        let mut exactly_one = |kind: EntityKind, rel: Relation| {
            for id in self.ids_of_kind(kind) {
                let n = out_count.get(&(id, rel)).copied().unwrap_or(0);
                if n != 1 {
                    problems.push(format!("{} {id} has {n} {rel} statements", kind.as_str()));
                }
            }
        };
        exactly_one(EntityKind::Author, Relation::HasBirthSituation);
        exactly_one(EntityKind::Edition, Relation::HasPublication);
        problems
    }
}

fn literal(s: impl Into<String>) -> Object {
    Object::Literal(s.into())
}

pub fn author_id(canonical_id: &str) -> String {
    EntityKind::Author.id(canonical_id)
}

fn scoped(kind: EntityKind, source: Source, id: &str) -> String {
    kind.id(&format!("{source}:{id}"))
}

/// Materializes aligned, classified and enriched records. Work authors
/// must be canonical ids (see [`crate::align::collect_works`]).
pub fn build_graph(
    authors: &[AuthorEntity],
    assignments: &[StatusAssignment],
    works: &[EnrichedWork],
    editions: &[EnrichedEdition],
) -> Result<Graph, GraphError> {
    let mut triples = Vec::new();
    let mut push = |subject: &str, predicate, object, provenance| {
        triples.push(Triple {
            subject: subject.to_string(),
            predicate,
            object,
            provenance,
        })
    };

    let status: HashMap<&str, &StatusAssignment> =
        assignments.iter().map(|a| (a.canonical_id.as_str(), a)).collect();
    let mut author_ids = HashSet::new();
    for a in authors {
        if !author_ids.insert(a.canonical_id.as_str()) {
            return Err(GraphError::Duplicate { kind: "author", id: a.canonical_id.clone() });
        }
        let author = author_id(&a.canonical_id);
        let birth = EntityKind::BirthSituation.id(&a.canonical_id);
        push(&author, Relation::HasBirthSituation, Object::Entity(birth.clone()), Source::WD);
        push(&birth, Relation::BirthTime, literal(a.birth_year.to_string()), Source::WD);
        if let Some(country) = &a.country_of_birth {
            push(
                &birth,
                Relation::BirthPlace,
                Object::Entity(EntityKind::Place.id(&country.to_uppercase())),
                Source::WD,
            );
        }
        if let Some(s) = status.get(a.canonical_id.as_str()) {
            push(&birth, Relation::HasStatus, literal(s.status.as_str()), Source::WD);
        }
        if let Some(g) = a.gender {
            push(&author, Relation::Gender, literal(g.as_str()), Source::WD);
        }
        for (source, id) in &a.cross_ids {
            if *source != Source::WD {
                push(&author, Relation::SameAsExternal, literal(format!("{source}:{id}")), *source);
            }
        }
    }
    for id in status.keys() {
        if !author_ids.contains(id) {
            return Err(GraphError::Dangling {
                from: "status assignment".into(),
                kind: "author",
                id: id.to_string(),
            });
        }
    }

    let mut work_ids = HashSet::new();
    for w in works {
        let r = &w.record;
        let work = scoped(EntityKind::Work, r.source, &r.source_id);
        if !work_ids.insert((r.source, r.source_id.as_str())) {
            return Err(GraphError::Duplicate { kind: "work", id: work });
        }
        if r.author_source_ids.is_empty() {
            return Err(GraphError::Unattributed(work));
        }
        for a in &r.author_source_ids {
            if !author_ids.contains(a.as_str()) {
                return Err(GraphError::Dangling { from: work, kind: "author", id: a.clone() });
            }
            push(&work, Relation::AttributedTo, Object::Entity(author_id(a)), r.source);
        }
        let prov = |field| if w.filled_by_gb.contains(&field) { Source::GB } else { r.source };
        let mut subjects: Vec<String> = r
            .subjects
            .iter()
            .map(|s| normalize_name(s))
            .filter(|s| !s.is_empty())
            .collect();
        subjects.sort();
        subjects.dedup();
        for s in subjects {
            push(
                &work,
                Relation::HasSubject,
                Object::Entity(EntityKind::Subject.id(&s)),
                prov(EnrichedField::Subjects),
            );
        }
        if let Some(b) = &r.blurb {
            push(&work, Relation::HasBlurb, literal(b.clone()), prov(EnrichedField::Blurb));
        }
        if let Some(y) = r.publish_year {
            push(&work, Relation::PublicationYear, literal(y.to_string()), prov(EnrichedField::PublishYear));
        }
    }

    let mut edition_ids = HashSet::new();
    for e in editions {
        let r = &e.record;
        let edition = scoped(EntityKind::Edition, r.source, &r.source_id);
        if !edition_ids.insert((r.source, r.source_id.as_str())) {
            return Err(GraphError::Duplicate { kind: "edition", id: edition });
        }
        if !work_ids.contains(&(r.source, r.work_source_id.as_str())) {
            return Err(GraphError::Dangling {
                from: edition,
                kind: "work",
                id: r.work_source_id.clone(),
            });
        }
        let work = scoped(EntityKind::Work, r.source, &r.work_source_id);
        let publication = scoped(EntityKind::Publication, r.source, &r.source_id);
        push(&work, Relation::EmbodiedIn, Object::Entity(edition.clone()), r.source);
        push(&edition, Relation::HasPublication, Object::Entity(publication.clone()), r.source);
        if let Some(p) = r.publisher.as_deref().map(normalize_name).filter(|p| !p.is_empty()) {
            push(&publication, Relation::PublishedBy, Object::Entity(EntityKind::Publisher.id(&p)), r.source);
        }
        if let Some(y) = r.publish_year {
            let prov = if e.filled_by_gb.contains(&EnrichedField::PublishYear) { Source::GB } else { r.source };
            push(&publication, Relation::PublicationYear, literal(y.to_string()), prov);
        }
        if let Some(c) = &r.publish_country {
            push(
                &publication,
                Relation::PublicationCountry,
                Object::Entity(EntityKind::Place.id(&c.to_uppercase())),
                r.source,
            );
        }
    }

    Graph::from_triples(triples).map_err(|message| GraphError::Parse { line: 0, message })
}

/// Writes the quad file in sorted order.
pub fn write_quads<W: Write>(graph: &Graph, writer: W) -> io::Result<()> {
    let mut w = BufWriter::new(writer);
    for t in graph.triples() {
        writeln!(w, "{}", t.to_line())?;
    }
    w.flush()
}

pub fn read_quads<R: BufRead>(reader: R) -> Result<Graph, GraphError> {
    let mut triples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| GraphError::Parse { line: line_no, message: e.to_string() })?;
        if line.is_empty() {
            continue;
        }
        let triple = Triple::parse_line(&line).map_err(|message| GraphError::Parse { line: line_no, message })?;
        triples.push(triple);
    }
    Graph::from_triples(triples).map_err(|message| GraphError::Parse { line: 0, message })
}

pub fn serialize(graph: &Graph, path: &Path) -> Result<(), GraphError> {
    let io_err = |source| GraphError::Io { path: path.to_path_buf(), source };
    let file = fs::File::create(path).map_err(io_err)?;
    write_quads(graph, file).map_err(io_err)
}

pub fn deserialize(path: &Path) -> Result<Graph, GraphError> {
    let file = fs::File::open(path).map_err(|source| GraphError::Io { path: path.to_path_buf(), source })?;
    read_quads(io::BufReader::new(file))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountRow {
    pub kind: String,
    pub wikidata: u64,
    pub external: u64,
    pub total: u64,
}

/// Per entity kind (and for blurbs), how many are backed by Wikidata
/// statements, by external statements, and in total. An entity backed by
/// both counts in both columns, so the two columns need not add up to the
/// total. `sameAsExternal` links are not counted as backing.
pub fn count_stats(graph: &Graph) -> Vec<CountRow> {
    let mut backing: BTreeMap<&str, (bool, bool)> = BTreeMap::new();
    let mut blurbs = (0u64, 0u64);
    for t in graph.triples() {
        if t.predicate == Relation::SameAsExternal {
            continue;
        }
        if t.predicate == Relation::HasBlurb {
            if t.provenance == Source::WD {
                blurbs.0 += 1;
            } else {
                blurbs.1 += 1;
            }
        }
        for id in std::iter::once(t.subject.as_str()).chain(t.object.entity()) {
            let entry = backing.entry(id).or_default();
            if t.provenance == Source::WD {
                entry.0 = true;
            } else {
                entry.1 = true;
            }
        }
    }
    let mut rows: Vec<CountRow> = EntityKind::ALL
        .into_iter()
        .map(|kind| {
            let mut row = CountRow { kind: kind.as_str().into(), wikidata: 0, external: 0, total: 0 };
            for id in graph.ids_of_kind(kind) {
                let (wd, ext) = backing.get(id).copied().unwrap_or_default();
                row.wikidata += wd as u64;
                row.external += ext as u64;
                row.total += 1;
            }
            row
        })
        .collect();
    rows.push(CountRow {
        kind: "Blurb".into(),
        wikidata: blurbs.0,
        external: blurbs.1,
        total: blurbs.0 + blurbs.1,
    });
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{Basis, Generation, Status};
    use crate::ingest::{Gender, RawEditionRecord, RawWorkRecord};

    fn author(id: &str, country: Option<&str>) -> AuthorEntity {
        AuthorEntity {
            canonical_id: id.into(),
            name: id.into(),
            birth_year: 1950,
            death_year: None,
            country_of_birth: country.map(Into::into),
            ethnic_group: None,
            gender: Some(Gender::Female),
            cross_ids: [(Source::WD, id.to_string())].into(),
            work_source: Source::WD,
        }
    }

    fn assignment(id: &str) -> StatusAssignment {
        StatusAssignment {
            canonical_id: id.into(),
            status: Status::Transnational,
            basis: Basis::BirthCountry,
            generation: Some(Generation::Boomer),
        }
    }

    fn work(source: Source, id: &str, author: &str) -> EnrichedWork {
        EnrichedWork {
            record: RawWorkRecord {
                source_id: id.into(),
                source,
                title: "Title".into(),
                author_source_ids: vec![author.into()],
                language: None,
                subjects: vec![],
                blurb: None,
                publish_year: None,
                isbn_list: vec![],
            },
            filled_by_gb: BTreeSet::new(),
        }
    }

    fn edition(source: Source, id: &str, work: &str) -> EnrichedEdition {
        EnrichedEdition {
            record: RawEditionRecord {
                source_id: id.into(),
                source,
                work_source_id: work.into(),
                publisher: None,
                publish_year: None,
                publish_country: None,
                isbn: None,
            },
            filled_by_gb: BTreeSet::new(),
        }
    }

    #[test]
    fn minimal_pattern() {
        let g = build_graph(
            &[author("Q1", None)],
            &[assignment("Q1")],
            &[work(Source::OL, "W1", "Q1")],
            &[edition(Source::OL, "E1", "W1")],
        )
        .unwrap();
        let kinds: BTreeSet<_> = g.entities().values().copied().collect();
        assert_eq!(
            kinds,
            [
                EntityKind::Author,
                EntityKind::Work,
                EntityKind::Edition,
                EntityKind::BirthSituation,
                EntityKind::Publication
            ]
            .into()
        );
        assert!(g.triples().len() >= 6);
        assert!(g.check_patterns().is_empty(), "{:?}", g.check_patterns());
    }

    #[test]
    fn gb_filled_blurb_has_gb_provenance() {
        let mut w = work(Source::OL, "W1", "Q1");
        w.record.blurb = Some("A novel.".into());
        w.filled_by_gb.insert(EnrichedField::Blurb);
        let g = build_graph(&[author("Q1", Some("ng"))], &[], &[w], &[]).unwrap();
        let blurb = g.triples().iter().find(|t| t.predicate == Relation::HasBlurb).unwrap();
        assert_eq!(blurb.provenance, Source::GB);
        assert!(g.entities().contains_key("place:NG"));
    }

    #[test]
    fn author_without_works() {
        let g = build_graph(&[author("Q1", None)], &[], &[], &[]).unwrap();
        let kinds: BTreeSet<_> = g.entities().values().copied().collect();
        assert_eq!(kinds, [EntityKind::Author, EntityKind::BirthSituation].into());
    }

    #[test]
    fn dangling_references_abort() {
        let err = build_graph(&[author("Q1", None)], &[], &[work(Source::OL, "W1", "Q9")], &[]).unwrap_err();
        assert!(err.to_string().contains("Q9"), "{err}");
        let err = build_graph(&[author("Q1", None)], &[], &[], &[edition(Source::OL, "E1", "W7")]).unwrap_err();
        assert!(err.to_string().contains("W7"), "{err}");
        let err = build_graph(&[author("Q1", None)], &[assignment("Q2")], &[], &[]).unwrap_err();
        assert!(err.to_string().contains("Q2"), "{err}");
    }

    #[test]
    fn hand_written_quads_load() {
        let text = "author:Q1\thasBirthSituation\tbirth:Q1\tWD\n\
                    birth:Q1\tbirthTime\t\"1950\"\tWD\n\
                    work:OL:W1\tattributedTo\tauthor:Q1\tOL\n";
        let g = read_quads(text.as_bytes()).unwrap();
        assert_eq!(g.triples().len(), 3);
        assert_eq!(g.entities().len(), 3);
    }

    #[test]
    fn malformed_quads_report_line() {
        let text = "author:Q1\thasBirthSituation\tbirth:Q1\tWD\nauthor:Q1\tlikes\tbirth:Q1\tWD\n";
        match read_quads(text.as_bytes()) {
            Err(GraphError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        for bad in ["a\tb\tc", "author:Q1\tgender\tQ2\tWD", "author:Q1\tgender\t\"x\"\tZZ", "nokind\tgender\t\"x\"\tWD"] {
            assert!(read_quads(bad.as_bytes()).is_err(), "{bad}");
        }
    }

    #[test]
    fn literals_with_tabs_round_trip() {
        let mut w = work(Source::GR, "W1", "Q1");
        w.record.blurb = Some("line one\n\tline \"two\"".into());
        w.record.subjects = vec!["Science  Fiction".into()];
        let g = build_graph(&[author("Q1", None)], &[], &[w], &[]).unwrap();
        let mut buf = Vec::new();
        write_quads(&g, &mut buf).unwrap();
        assert_eq!(read_quads(buf.as_slice()).unwrap(), g);
        assert!(g.entities().contains_key("subject:science_fiction"));
    }

    #[test]
    fn counts_by_provenance() {
        let authors = [author("Q1", None)];
        let mut works = vec![work(Source::WD, "W1", "Q1"), work(Source::WD, "W2", "Q1")];
        for id in ["O1", "O2", "O3"] {
            works.push(work(Source::OL, id, "Q1"));
        }
        works[2].record.blurb = Some("b".into());
        works[3].record.blurb = Some("c".into());
        works[3].filled_by_gb.insert(EnrichedField::Blurb);
        works[0].record.blurb = Some("d".into());
        let g = build_graph(&authors, &[], &works, &[edition(Source::OL, "E1", "O1")]).unwrap();
        let stats = count_stats(&g);
        let row = |k: &str| stats.iter().find(|r| r.kind == k).unwrap().clone();
        let w = row("Work");
        assert_eq!((w.wikidata, w.external, w.total), (2, 3, 5));
        let b = row("Blurb");
        assert_eq!((b.wikidata, b.external, b.total), (1, 2, 3));
        let e = row("Edition");
        assert_eq!((e.wikidata, e.external), (0, 1));
    }

    #[test]
    fn portions() {
        let mut w = work(Source::OL, "W1", "Q1");
        w.record.blurb = Some("x".into());
        w.filled_by_gb.insert(EnrichedField::Blurb);
        let g = build_graph(&[author("Q1", None)], &[], &[w, work(Source::GR, "W2", "Q1")], &[]).unwrap();
        let ol = g.portion(Some(Source::OL));
        assert!(ol.triples().iter().all(|t| matches!(t.provenance, Source::OL | Source::GB)));
        assert_eq!(ol.triples().len(), 2);
        let wd = g.portion(Some(Source::WD));
        assert!(wd.triples().iter().all(|t| t.provenance == Source::WD));
        assert_eq!(g.portion(None), g);
    }
}
