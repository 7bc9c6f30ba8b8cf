//! Exposure of Western targets to Transnational authors through
//! cosine-similarity neighbour lists.
//!
//! For every sampled Western author all other classified authors are
//! ranked by cosine similarity of their entity vectors. The top
//! `⌈k% × list length⌉` of each list is inspected and Transnational
//! members are pooled over the whole sample.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::io;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::classify::Status;
use crate::embed::{IdMap, ModelKind, ModelParams};
use crate::kgstore::author_id;

pub const DEFAULT_K_LEVELS: [u32; 3] = [1, 5, 10];
pub const UNKNOWN_CONTINENT: &str = "unknown";

#[derive(Debug, Error)]
pub enum ExposeError {
    #[error("no embedding for author {0}")]
    MissingEmbedding(String),
    #[error("target {0} has a zero vector")]
    ZeroTarget(String),
    #[error("target {0} is also a candidate")]
    TargetIsCandidate(String),
    #[error("target {0} is not a Western author")]
    NotWestern(String),
    #[error("sample of {requested} exceeds the Western population of {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("k level {0}% is outside 1..=100")]
    KLevel(u32),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Entity vectors of authors, keyed by canonical id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuthorVectors {
    vectors: BTreeMap<String, Vec<f64>>,
}

impl AuthorVectors {
    pub fn new(vectors: BTreeMap<String, Vec<f64>>) -> Self {
        AuthorVectors { vectors }
    }

    /// Rows of `params` for every author in `authors` that has an entity
    /// in `map`; others are skipped.
    pub fn from_params<'a>(params: &ModelParams, map: &IdMap, authors: impl IntoIterator<Item = &'a str>) -> Self {
        let vectors = authors
            .into_iter()
            .filter_map(|a| {
                let row = map.entity_id(&author_id(a))?;
                Some((a.to_string(), params.entity(row).to_vec()))
            })
            .collect();
        AuthorVectors { vectors }
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let vectors = self
            .vectors
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().map(|x| x * factor).collect()))
            .collect();
        AuthorVectors { vectors }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `None` when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ranking {
    /// Descending similarity, ties by ascending id.
    pub neighbours: Vec<(String, f64)>,
    /// Candidates dropped for having a zero vector.
    pub zero_norm: Vec<String>,
}

fn by_similarity(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0))
}

pub fn similar_authors<'a>(
    vectors: &AuthorVectors,
    target: &str,
    candidates: impl IntoIterator<Item = &'a str>,
) -> Result<Ranking, ExposeError> {
    let tv = vectors.get(target).ok_or_else(|| ExposeError::MissingEmbedding(target.into()))?;
    if norm(tv) == 0.0 {
        return Err(ExposeError::ZeroTarget(target.into()));
    }
    let mut ranking = Ranking::default();
    for c in candidates {
        if c == target {
            return Err(ExposeError::TargetIsCandidate(target.into()));
        }
        let cv = vectors.get(c).ok_or_else(|| ExposeError::MissingEmbedding(c.into()))?;
        match cosine(tv, cv) {
            Some(s) => ranking.neighbours.push((c.to_string(), s)),
            None => {
                log::warn!("candidate {c} has a zero vector; excluded");
                ranking.zero_norm.push(c.to_string());
            }
        }
    }
    ranking.neighbours.sort_by(by_similarity);
    Ok(ranking)
}

/// `⌈k% × n⌉`.
pub fn top_len(k_percent: u32, n: usize) -> usize {
    (k_percent as usize * n).div_ceil(100)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KRatio {
    /// Pooled Transnational share of the inspected list slots, in percent.
    pub percent: f64,
    pub count: usize,
    /// List slots inspected over the whole sample.
    pub slots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExposureReport {
    pub portion_label: String,
    pub model: ModelKind,
    pub sample_size: usize,
    /// Transnational share of the classified authors with embeddings.
    pub population_percent: f64,
    pub ratios: BTreeMap<u32, KRatio>,
    /// Each target's list, truncated to the largest k level.
    pub per_target: Vec<(String, Vec<String>)>,
}

/// Uniform sample of Western authors that have vectors, sorted by id.
pub fn sample_western<R: Rng>(
    vectors: &AuthorVectors,
    statuses: &BTreeMap<String, Status>,
    size: usize,
    rng: &mut R,
) -> Result<Vec<String>, ExposeError> {
    let western: Vec<&str> = vectors
        .ids()
        .filter(|id| statuses.get(*id) == Some(&Status::Western))
        .collect();
    if size > western.len() {
        return Err(ExposeError::SampleTooLarge { requested: size, available: western.len() });
    }
    let mut picked: Vec<String> = index::sample(rng, western.len(), size)
        .into_iter()
        .map(|i| western[i].to_string())
        .collect();
    picked.sort();
    Ok(picked)
}

fn classified<'a>(vectors: &'a AuthorVectors, statuses: &'a BTreeMap<String, Status>) -> Vec<&'a str> {
    vectors.ids().filter(|id| statuses.contains_key(*id)).collect()
}

pub fn exposure_ratios(
    portion_label: &str,
    model: ModelKind,
    vectors: &AuthorVectors,
    statuses: &BTreeMap<String, Status>,
    sample: &[String],
    k_levels: &[u32],
) -> Result<ExposureReport, ExposeError> {
    if let Some(k) = k_levels.iter().find(|k| !(1..=100).contains(*k)) {
        return Err(ExposeError::KLevel(*k));
    }
    let western = vectors.ids().filter(|id| statuses.get(*id) == Some(&Status::Western)).count();
    if sample.len() > western {
        return Err(ExposeError::SampleTooLarge { requested: sample.len(), available: western });
    }
    for t in sample {
        if statuses.get(t) != Some(&Status::Western) {
            return Err(ExposeError::NotWestern(t.clone()));
        }
    }
    let population = classified(vectors, statuses);
    let transnational = population.iter().filter(|id| statuses[**id] == Status::Transnational).count();
    let max_k = k_levels.iter().copied().max().unwrap_or(0);

    // (target, per-k (k, hits, list length), list at the largest k)
    type TargetRow = (String, Vec<(u32, usize, usize)>, Vec<String>);
    let per_target: Vec<TargetRow> = sample
        .par_iter()
        .map(|target| {
            let candidates = population.iter().copied().filter(|c| *c != target.as_str());
            let ranking = similar_authors(vectors, target, candidates)?;
            let n = ranking.neighbours.len();
            let counts = k_levels
                .iter()
                .map(|&k| {
                    let len = top_len(k, n);
                    let hits = ranking.neighbours[..len]
                        .iter()
                        .filter(|(id, _)| statuses[id] == Status::Transnational)
                        .count();
                    (k, hits, len)
                })
                .collect();
            let top = ranking.neighbours[..top_len(max_k, n)].iter().map(|(id, _)| id.clone()).collect();
            Ok((target.clone(), counts, top))
        })
        .collect::<Result<_, ExposeError>>()?;

    let mut pooled: BTreeMap<u32, (usize, usize)> = k_levels.iter().map(|k| (*k, (0, 0))).collect();
    for (_, counts, _) in &per_target {
        for (k, hits, len) in counts {
            let e = pooled.get_mut(k).expect("k level registered");
            e.0 += hits;
            e.1 += len;
        }
    }
    let ratios = pooled
        .into_iter()
        .map(|(k, (count, slots))| {
            let percent = if slots == 0 { 0.0 } else { 100.0 * count as f64 / slots as f64 };
            (k, KRatio { percent, count, slots })
        })
        .collect();
    Ok(ExposureReport {
        portion_label: portion_label.to_string(),
        model,
        sample_size: sample.len(),
        population_percent: if population.is_empty() {
            0.0
        } else {
            100.0 * transnational as f64 / population.len() as f64
        },
        ratios,
        per_target: per_target.into_iter().map(|(t, _, top)| (t, top)).collect(),
    })
}

/// Counts of (Western continent, nearest Transnational continent).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContinentFlow {
    pub cells: BTreeMap<(String, String), usize>,
}

impl ContinentFlow {
    /// Targets whose pair involves no unknown continent.
    pub fn known_total(&self) -> usize {
        self.cells
            .iter()
            .filter(|((w, t), _)| w != UNKNOWN_CONTINENT && t != UNKNOWN_CONTINENT)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn unknown_total(&self) -> usize {
        self.cells.values().sum::<usize>() - self.known_total()
    }

    pub fn write_csv<W: io::Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["western_continent", "transnational_continent", "count"])?;
        for ((a, b), n) in &self.cells {
            w.write_record([a.as_str(), b.as_str(), &n.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Most similar Transnational author to `target`, ties by ascending id.
pub fn nearest_transnational(
    vectors: &AuthorVectors,
    statuses: &BTreeMap<String, Status>,
    target: &str,
) -> Result<Option<(String, f64)>, ExposeError> {
    let candidates = vectors
        .ids()
        .filter(|id| *id != target && statuses.get(*id) == Some(&Status::Transnational));
    Ok(similar_authors(vectors, target, candidates)?.neighbours.into_iter().next())
}

/// Authors without a country, or whose country has no continent, land in
/// the `unknown` row or column.
pub fn continent_flows(
    vectors: &AuthorVectors,
    statuses: &BTreeMap<String, Status>,
    sample: &[String],
    countries: &BTreeMap<String, String>,
    continents: &ContinentMap,
) -> Result<ContinentFlow, ExposeError> {
    let continent_of = |id: &str| {
        countries
            .get(id)
            .and_then(|c| continents.get(c))
            .unwrap_or(UNKNOWN_CONTINENT)
            .to_string()
    };
    let pairs: Vec<(String, String)> = sample
        .par_iter()
        .map(|target| {
            if statuses.get(target) != Some(&Status::Western) {
                return Err(ExposeError::NotWestern(target.clone()));
            }
            let nearest = nearest_transnational(vectors, statuses, target)?;
            let other = nearest.map_or(UNKNOWN_CONTINENT.to_string(), |(id, _)| continent_of(&id));
            Ok((continent_of(target), other))
        })
        .collect::<Result<_, ExposeError>>()?;
    let mut flow = ContinentFlow::default();
    for p in pairs {
        *flow.cells.entry(p).or_default() += 1;
    }
    Ok(flow)
}

/// Country code (uppercased) to continent name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ContinentMap {
    map: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct ContinentRow {
    country_code: String,
    continent: String,
}

impl ContinentMap {
    pub fn from_csv<R: io::Read>(reader: R) -> Result<Self, ExposeError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
        let mut map = BTreeMap::new();
        for row in rdr.deserialize::<ContinentRow>() {
            let row = row?;
            map.insert(row.country_code.to_uppercase(), row.continent);
        }
        Ok(ContinentMap { map })
    }

    pub fn get(&self, country: &str) -> Option<&str> {
        self.map.get(&country.to_uppercase()).map(String::as_str)
    }
}

impl FromIterator<(String, String)> for ContinentMap {
    fn from_iter<T: IntoIterator<Item = (String, String)>>(iter: T) -> Self {
        ContinentMap { map: iter.into_iter().map(|(k, v)| (k.to_uppercase(), v)).collect() }
    }
}

/// Table-shaped CSV: one row per model, one column per (k level,
/// portion), cells `percent (count)`.
pub fn write_exposure_csv<W: io::Write>(reports: &[ExposureReport], writer: W) -> csv::Result<()> {
    let portions: BTreeSet<&str> = reports.iter().map(|r| r.portion_label.as_str()).collect();
    let ks: BTreeSet<u32> = reports.iter().flat_map(|r| r.ratios.keys().copied()).collect();
    let models: BTreeSet<ModelKind> = reports.iter().map(|r| r.model).collect();

    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["model".to_string()];
    for k in &ks {
        for p in &portions {
            header.push(format!("top{k}%_{p}"));
        }
    }
    w.write_record(&header)?;
    let mut population = vec!["population".to_string()];
    for _ in &ks {
        for p in &portions {
            let share = reports.iter().find(|r| r.portion_label == *p).map(|r| r.population_percent);
            population.push(share.map_or(String::new(), |s| format!("{s:.1}%")));
        }
    }
    for m in &models {
        let mut row = vec![m.to_string()];
        for k in &ks {
            for p in &portions {
                let cell = reports
                    .iter()
                    .find(|r| r.model == *m && r.portion_label == *p)
                    .and_then(|r| r.ratios.get(k))
                    .map_or(String::new(), |r| format!("{:.1}% ({})", r.percent, r.count));
                row.push(cell);
            }
        }
        w.write_record(&row)?;
    }
    w.write_record(&population)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vecs(entries: &[(&str, &[f64])]) -> AuthorVectors {
        AuthorVectors::new(entries.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect())
    }

    #[test]
    fn identical_and_orthogonal() {
        let v = vecs(&[("t", &[1.0, 2.0]), ("same", &[2.0, 4.0]), ("orth", &[-2.0, 1.0])]);
        let r = similar_authors(&v, "t", ["orth", "same"]).unwrap();
        assert_eq!(r.neighbours[0].0, "same");
        assert!((r.neighbours[0].1 - 1.0).abs() < 1e-12);
        assert_eq!(r.neighbours[1], ("orth".to_string(), 0.0));
    }

    #[test]
    fn ties_break_by_id_and_zero_vectors_drop() {
        let v = vecs(&[("t", &[1.0, 0.0]), ("b", &[1.0, 1.0]), ("a", &[1.0, -1.0]), ("z", &[0.0, 0.0])]);
        let r = similar_authors(&v, "t", ["b", "z", "a"]).unwrap();
        let ids: Vec<_> = r.neighbours.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert_eq!(r.zero_norm, ["z"]);
    }

    #[test]
    fn ranking_errors() {
        let v = vecs(&[("t", &[1.0]), ("z", &[0.0])]);
        assert!(matches!(similar_authors(&v, "t", ["t"]), Err(ExposeError::TargetIsCandidate(_))));
        assert!(matches!(similar_authors(&v, "t", ["q"]), Err(ExposeError::MissingEmbedding(_))));
        assert!(matches!(similar_authors(&v, "z", ["t"]), Err(ExposeError::ZeroTarget(_))));
    }

    #[test]
    fn ceiling_rule() {
        assert_eq!(top_len(10, 7), 1);
        assert_eq!(top_len(1, 250), 3);
        assert_eq!(top_len(5, 20), 1);
        assert_eq!(top_len(10, 0), 0);
        assert_eq!(top_len(100, 9), 9);
    }

    fn statuses(pairs: &[(&str, Status)]) -> BTreeMap<String, Status> {
        pairs.iter().map(|(k, s)| (k.to_string(), *s)).collect()
    }

    #[test]
    fn all_transnational_candidates() {
        let v = vecs(&[("w", &[1.0, 0.0]), ("a", &[0.0, 1.0]), ("b", &[1.0, 1.0]), ("c", &[0.5, 1.0])]);
        let st = statuses(&[
            ("w", Status::Western),
            ("a", Status::Transnational),
            ("b", Status::Transnational),
            ("c", Status::Transnational),
        ]);
        let r = exposure_ratios("WD", ModelKind::DistMult, &v, &st, &["w".into()], &DEFAULT_K_LEVELS).unwrap();
        for k in DEFAULT_K_LEVELS {
            assert_eq!(r.ratios[&k].percent, 100.0);
            assert_eq!(r.ratios[&k].count, 1);
        }
        assert_eq!(r.per_target[0].1, ["b"]);
    }

    #[test]
    fn sample_validation() {
        let v = vecs(&[("w", &[1.0]), ("t", &[1.0]), ("u", &[1.0])]);
        let st = statuses(&[("w", Status::Western), ("t", Status::Transnational)]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(sample_western(&v, &st, 2, &mut rng), Err(ExposeError::SampleTooLarge { .. })));
        assert_eq!(sample_western(&v, &st, 1, &mut rng).unwrap(), ["w"]);
        assert!(matches!(
            exposure_ratios("x", ModelKind::TransE, &v, &st, &["t".into()], &[10]),
            Err(ExposeError::NotWestern(_))
        ));
        assert!(matches!(
            exposure_ratios("x", ModelKind::TransE, &v, &st, &["w".into()], &[0]),
            Err(ExposeError::KLevel(0))
        ));
        // unclassified "u" is not a candidate
        let r = exposure_ratios("x", ModelKind::TransE, &v, &st, &["w".into()], &[100]).unwrap();
        assert_eq!(r.ratios[&100].slots, 1);
    }

    #[test]
    fn single_flow() {
        let v = vecs(&[("w", &[1.0, 0.0]), ("t1", &[1.0, 0.1]), ("t2", &[0.0, 1.0])]);
        let st = statuses(&[("w", Status::Western), ("t1", Status::Transnational), ("t2", Status::Transnational)]);
        let countries = [("w", "FR"), ("t1", "BR"), ("t2", "NG")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let continents: ContinentMap = [("FR", "Europe"), ("BR", "Latin America"), ("NG", "Africa")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let flow = continent_flows(&v, &st, &["w".into()], &countries, &continents).unwrap();
        assert_eq!(flow.cells, [(("Europe".to_string(), "Latin America".to_string()), 1)].into());
        assert_eq!(flow.known_total(), 1);

        let no_country = BTreeMap::new();
        let flow = continent_flows(&v, &st, &["w".into()], &no_country, &continents).unwrap();
        assert_eq!(flow.unknown_total(), 1);
        let mut buf = Vec::new();
        flow.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "western_continent,transnational_continent,count\nunknown,unknown,1\n");
    }

    #[test]
    fn exposure_table_layout() {
        let v = vecs(&[("w", &[1.0, 0.0]), ("a", &[0.0, 1.0])]);
        let st = statuses(&[("w", Status::Western), ("a", Status::Transnational)]);
        let r = exposure_ratios("GR", ModelKind::DistMult, &v, &st, &["w".into()], &[1, 10]).unwrap();
        let mut buf = Vec::new();
        write_exposure_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "model,top1%_GR,top10%_GR\nDistMult,100.0% (1),100.0% (1)\npopulation,50.0%,50.0%\n"
        );
    }
}
