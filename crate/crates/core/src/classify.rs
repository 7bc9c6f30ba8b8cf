//! Western / Transnational status, generation buckets and representation
//! statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::AuthorEntity;
use crate::ingest::Gender;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("author {author} has no country of birth")]
    MissingCountry { author: String },
    #[error("author {author}: country `{country}` is not in the taxonomy")]
    UnknownCountry { author: String, country: String },
    #[error("taxonomy line {line}: {message}")]
    Config { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl ClassifyError {
    pub fn author(&self) -> Option<&str> {
        match self {
            ClassifyError::MissingCountry { author } | ClassifyError::UnknownCountry { author, .. } => {
                Some(author)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountryClass {
    Western,
    FormerColony,
}

/// Country code to class. Codes are compared uppercased.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CountryTaxonomy {
    pub classes: BTreeMap<String, CountryClass>,
    pub provenance: String,
}

/// Country code to the ethnic groups counted as minorities there.
/// Groups are compared casefolded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MinorityList {
    pub groups: BTreeMap<String, BTreeSet<String>>,
}

fn country_key(code: &str) -> String {
    code.trim().to_uppercase()
}

fn group_key(group: &str) -> String {
    crate::align::normalize_name(group)
}

#[derive(Deserialize)]
struct TaxonomyRow {
    country_code: String,
    class: String,
}

#[derive(Deserialize)]
struct MinorityRow {
    country_code: String,
    ethnic_group: String,
}

impl CountryTaxonomy {
    /// Reads `country_code,class` CSV. Duplicate codes are an error.
    pub fn from_csv<R: io::Read>(reader: R, provenance: &str) -> Result<Self, ClassifyError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
        let mut classes = BTreeMap::new();
        for (i, row) in rdr.deserialize::<TaxonomyRow>().enumerate() {
            let row = row?;
            let line = i + 2;
            let class = match row.class.as_str() {
                "western" => CountryClass::Western,
                "former_colony" => CountryClass::FormerColony,
                other => {
                    return Err(ClassifyError::Config {
                        line,
                        message: format!("unknown class `{other}`"),
                    })
                }
            };
            if classes.insert(country_key(&row.country_code), class).is_some() {
                return Err(ClassifyError::Config {
                    line,
                    message: format!("duplicate country `{}`", row.country_code),
                });
            }
        }
        Ok(CountryTaxonomy {
            classes,
            provenance: provenance.to_string(),
        })
    }

    pub fn class_of(&self, code: &str) -> Option<CountryClass> {
        self.classes.get(&country_key(code)).copied()
    }
}

impl MinorityList {
    pub fn from_csv<R: io::Read>(reader: R) -> Result<Self, ClassifyError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
        let mut groups: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for row in rdr.deserialize::<MinorityRow>() {
            let row = row?;
            groups
                .entry(country_key(&row.country_code))
                .or_default()
                .insert(group_key(&row.ethnic_group));
        }
        Ok(MinorityList { groups })
    }

    pub fn contains(&self, country: &str, group: &str) -> bool {
        self.groups
            .get(&country_key(country))
            .is_some_and(|g| g.contains(&group_key(group)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Status {
    Western,
    Transnational,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Western => "Western",
            Status::Transnational => "Transnational",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Western" => Ok(Status::Western),
            "Transnational" => Ok(Status::Transnational),
            other => Err(format!("unknown status `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    BirthCountry,
    EthnicMinority,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Generation {
    Silent,
    Boomer,
    GenX,
    Millennial,
    Other,
}

impl Generation {
    pub const ALL: [Generation; 5] = [
        Generation::Silent,
        Generation::Boomer,
        Generation::GenX,
        Generation::Millennial,
        Generation::Other,
    ];

    /// Inclusive birth-year interval, `None` for `Other`.
    pub fn interval(self) -> Option<(i32, i32)> {
        match self {
            Generation::Silent => Some((1928, 1945)),
            Generation::Boomer => Some((1946, 1964)),
            Generation::GenX => Some((1965, 1980)),
            Generation::Millennial => Some((1981, 1996)),
            Generation::Other => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Generation::Silent => "Silent",
            Generation::Boomer => "Boomer",
            Generation::GenX => "GenX",
            Generation::Millennial => "Millennial",
            Generation::Other => "Other",
        }
    }
}

pub fn assign_generation(birth_year: i32) -> Generation {
    match birth_year {
        1928..=1945 => Generation::Silent,
        1946..=1964 => Generation::Boomer,
        1965..=1980 => Generation::GenX,
        1981..=1996 => Generation::Millennial,
        _ => Generation::Other,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusAssignment {
    pub canonical_id: String,
    pub status: Status,
    pub basis: Basis,
    pub generation: Option<Generation>,
}

/// Transnational iff born in a former colony, or born in a Western country
/// and listed as one of its ethnic minorities.
pub fn classify_author(
    author: &AuthorEntity,
    taxonomy: &CountryTaxonomy,
    minorities: &MinorityList,
) -> Result<StatusAssignment, ClassifyError> {
    let country = author
        .country_of_birth
        .as_deref()
        .ok_or_else(|| ClassifyError::MissingCountry {
            author: author.canonical_id.clone(),
        })?;
    let class = taxonomy
        .class_of(country)
        .ok_or_else(|| ClassifyError::UnknownCountry {
            author: author.canonical_id.clone(),
            country: country.to_string(),
        })?;
    let (status, basis) = match class {
        CountryClass::FormerColony => (Status::Transnational, Basis::BirthCountry),
        CountryClass::Western => match author.ethnic_group.as_deref() {
            Some(group) if minorities.contains(country, group) => {
                (Status::Transnational, Basis::EthnicMinority)
            }
            _ => (Status::Western, Basis::BirthCountry),
        },
    };
    Ok(StatusAssignment {
        canonical_id: author.canonical_id.clone(),
        status,
        basis,
        generation: Some(assign_generation(author.birth_year)),
    })
}

#[derive(Debug, Default)]
pub struct Classification {
    /// Sorted by canonical id.
    pub assignments: Vec<StatusAssignment>,
    pub errors: Vec<ClassifyError>,
}

pub fn classify_all(
    authors: &[AuthorEntity],
    taxonomy: &CountryTaxonomy,
    minorities: &MinorityList,
) -> Classification {
    use rayon::prelude::*;

    let results: Vec<_> = authors
        .par_iter()
        .map(|a| classify_author(a, taxonomy, minorities))
        .collect();
    let mut out = Classification::default();
    for r in results {
        match r {
            Ok(a) => out.assignments.push(a),
            Err(e) => out.errors.push(e),
        }
    }
    out.assignments.sort_by(|a, b| a.canonical_id.cmp(&b.canonical_id));
    out
}

/// `1:x` with `x = western / transnational` rounded to one decimal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorksRatio {
    pub western_works: u64,
    pub transnational_works: u64,
}

impl WorksRatio {
    /// `None` when there are no Transnational works.
    pub fn value(&self) -> Option<f64> {
        if self.transnational_works == 0 {
            return None;
        }
        let x = self.western_works as f64 / self.transnational_works as f64;
        Some((x * 10.0).round() / 10.0)
    }
}

impl fmt::Display for WorksRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(x) => write!(f, "1:{x:.1}"),
            None => f.write_str("1:∞"),
        }
    }
}

/// Percentage of `part` in `whole`; 0 when `whole` is 0.
pub fn percent(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatusCount {
    pub status: Status,
    pub authors: u64,
    pub percent: f64,
}

/// One (generation, gender, status) cell; `percent` is relative to the
/// authors of that generation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationCell {
    pub generation: Generation,
    pub gender: Gender,
    pub status: Status,
    pub count: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationReport {
    pub total_authors: u64,
    pub classified: u64,
    /// Authors excluded from status-conditioned counts.
    pub unclassified: u64,
    pub by_status: Vec<StatusCount>,
    pub cells: Vec<GenerationCell>,
    pub works: WorksRatio,
}

/// Author and works counts per status. `total_authors` includes authors
/// that could not be classified; they appear only in the residual.
pub fn representation_stats(
    total_authors: u64,
    assignments: &[StatusAssignment],
    genders: &BTreeMap<String, Gender>,
    works_per_author: &BTreeMap<String, u64>,
) -> RepresentationReport {
    // Dense counters indexed by declaration order, which is also the Ord
    // order the cells are reported in.
    const STATUSES: [Status; 2] = [Status::Western, Status::Transnational];
    const GENDERS: [Gender; 4] = [Gender::Male, Gender::Female, Gender::Nonbinary, Gender::Unknown];
    let mut status_counts = [0u64; 2];
    let mut cells = [[[0u64; 2]; 4]; Generation::ALL.len()];
    let mut per_generation = [0u64; Generation::ALL.len()];
    let mut works = WorksRatio {
        western_works: 0,
        transnational_works: 0,
    };
    for a in assignments {
        let s = a.status as usize;
        let g = a.generation.unwrap_or(Generation::Other) as usize;
        let gender = if genders.is_empty() {
            Gender::Unknown
        } else {
            genders.get(&a.canonical_id).copied().unwrap_or(Gender::Unknown)
        };
        status_counts[s] += 1;
        cells[g][gender as usize][s] += 1;
        per_generation[g] += 1;
        if !works_per_author.is_empty() {
            let n = works_per_author.get(&a.canonical_id).copied().unwrap_or(0);
            match a.status {
                Status::Western => works.western_works += n,
                Status::Transnational => works.transnational_works += n,
            }
        }
    }
    let classified = assignments.len() as u64;
    let by_status = STATUSES
        .into_iter()
        .map(|status| StatusCount {
            status,
            authors: status_counts[status as usize],
            percent: percent(status_counts[status as usize], classified),
        })
        .collect();
    let mut report_cells = Vec::new();
    for generation in Generation::ALL {
        for gender in GENDERS {
            for status in STATUSES {
                let count = cells[generation as usize][gender as usize][status as usize];
                if count > 0 {
                    report_cells.push(GenerationCell {
                        generation,
                        gender,
                        status,
                        count,
                        percent: percent(count, per_generation[generation as usize]),
                    });
                }
            }
        }
    }
    let cells = report_cells;
    RepresentationReport {
        total_authors,
        classified,
        unclassified: total_authors.saturating_sub(classified),
        by_status,
        cells,
        works,
    }
}

impl RepresentationReport {
    /// Writes `section,generation,gender,status,count,percent` rows: status
    /// totals, the unclassified residual, then generation cells.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["section", "generation", "gender", "status", "count", "percent"])?;
        for s in &self.by_status {
            w.write_record([
                "status",
                "all",
                "all",
                s.status.as_str(),
                &s.authors.to_string(),
                &format!("{:.1}", s.percent),
            ])?;
        }
        w.write_record([
            "residual",
            "all",
            "all",
            "unclassified",
            &self.unclassified.to_string(),
            &format!("{:.1}", percent(self.unclassified, self.total_authors)),
        ])?;
        for c in &self.cells {
            w.write_record([
                "generation",
                c.generation.as_str(),
                c.gender.as_str(),
                c.status.as_str(),
                &c.count.to_string(),
                &format!("{:.1}", c.percent),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
