//! The eight pipeline stages. Each reads its predecessors' files under the
//! output directory and writes its own under fixed names:
//!
//! | stage    | writes                                                        |
//! |----------|---------------------------------------------------------------|
//! | ingest   | `ingest/records.jsonl`, `ingest/warnings.csv`, `ingest/summary.csv` |
//! | align    | `align/alignment.csv`, `align/{authors,works,editions}.jsonl` |
//! | classify | `classify/assignments.csv`, `classify/errors.csv`             |
//! | build    | `graph.quads`                                                 |
//! | stats    | `report/{stats,works,graph_counts}.csv`                       |
//! | train    | `models/<portion>/{entities,relations}.tsv`, `<model>.params`, `<model>.losses.csv` |
//! | expose   | `report/{exposure,flows,neighbours}.csv`                      |
//! | report   | `report/{generations,works,exposure,flows}.svg`               |

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use kgef_core::align::{
    alignment_rows, collect_works, join_isbn, match_goodreads, match_openlibrary, resolve_precedence, write_alignment_csv,
    AuthorEntity, EnrichedEdition, EnrichedWork,
};
use kgef_core::classify::{
    classify_all, percent, representation_stats, CountryTaxonomy, Generation, MinorityList, Status, StatusAssignment,
};
use kgef_core::embed::dataset::{read_labels, write_labels};
use kgef_core::embed::io::{read_params, write_params, ParamsFile};
use kgef_core::embed::{train, training_set, IdMap, ModelKind};
use kgef_core::expose::{
    continent_flows, exposure_ratios, sample_western, write_exposure_csv, AuthorVectors, ContinentMap, ExposureReport,
};
use kgef_core::ingest::{classify_file_name, filter_by_birth_year, ingest_dir, Gender, RecordKind, Source, SourceRecord};
use kgef_core::kgstore::{build_graph, count_stats, deserialize, serialize, Graph, Object, Relation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::{PipelineConfig, Portion};
use crate::manifest::{Manifest, Roots, Stage};
use crate::svg;
use crate::CliError;

pub const RECORDS: &str = "ingest/records.jsonl";
pub const INGEST_WARNINGS: &str = "ingest/warnings.csv";
pub const INGEST_SUMMARY: &str = "ingest/summary.csv";
pub const ALIGNMENT: &str = "align/alignment.csv";
pub const AUTHORS: &str = "align/authors.jsonl";
pub const WORKS: &str = "align/works.jsonl";
pub const EDITIONS: &str = "align/editions.jsonl";
pub const ASSIGNMENTS: &str = "classify/assignments.csv";
pub const CLASSIFY_ERRORS: &str = "classify/errors.csv";
pub const GRAPH: &str = "graph.quads";
pub const STATS: &str = "report/stats.csv";
pub const WORKS_RATIO: &str = "report/works.csv";
pub const GRAPH_COUNTS: &str = "report/graph_counts.csv";
pub const MODELS_DIR: &str = "models";
pub const EXPOSURE: &str = "report/exposure.csv";
pub const FLOWS: &str = "report/flows.csv";
pub const NEIGHBOURS: &str = "report/neighbours.csv";
pub const GENERATIONS_SVG: &str = "report/generations.svg";
pub const WORKS_SVG: &str = "report/works.svg";
pub const EXPOSURE_SVG: &str = "report/exposure.svg";
pub const FLOWS_SVG: &str = "report/flows.svg";

/// Narrows `train` and `expose` to one model or one portion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Selection {
    pub model: Option<ModelKind>,
    pub portion: Option<Portion>,
}

impl Selection {
    fn models(&self, cfg: &PipelineConfig) -> Vec<ModelKind> {
        self.model.map_or_else(|| cfg.models.clone(), |m| vec![m])
    }

    fn portions(&self, cfg: &PipelineConfig) -> Vec<Portion> {
        self.portion.map_or_else(|| cfg.portions.clone(), |p| vec![p])
    }
}

/// Files a stage read and wrote, for the manifest.
#[derive(Debug, Default)]
struct StageIo {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    stage: Stage,
    selection: Selection,
}

impl Ctx<'_> {
    fn path(&self, rel: &str) -> PathBuf {
        self.cfg.out.join(rel)
    }

    fn fail(&self, message: impl std::fmt::Display) -> CliError {
        CliError::Stage { stage: self.stage, message: message.to_string() }
    }

    fn create(&self, rel: &str) -> Result<(PathBuf, BufWriter<fs::File>), CliError> {
        let path = self.path(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        }
        let file = fs::File::create(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
        Ok((path, BufWriter::new(file)))
    }

    fn open(&self, path: &Path) -> Result<BufReader<fs::File>, CliError> {
        fs::File::open(path)
            .map(BufReader::new)
            .map_err(|source| CliError::Io { path: path.to_path_buf(), source })
    }

    fn write_jsonl<T: Serialize>(&self, rel: &str, items: &[T]) -> Result<PathBuf, CliError> {
        let (path, mut w) = self.create(rel)?;
        for item in items {
            let line = serde_json::to_string(item).map_err(|e| self.fail(e))?;
            writeln!(w, "{line}").map_err(|source| CliError::Io { path: path.clone(), source })?;
        }
        w.flush().map_err(|source| CliError::Io { path: path.clone(), source })?;
        Ok(path)
    }

    fn read_jsonl<T: DeserializeOwned>(&self, rel: &str) -> Result<Vec<T>, CliError> {
        let path = self.path(rel);
        let mut items = Vec::new();
        for (i, line) in self.open(&path)?.lines().enumerate() {
            let line = line.map_err(|source| CliError::Io { path: path.clone(), source })?;
            if line.is_empty() {
                continue;
            }
            items.push(serde_json::from_str(&line).map_err(|e| self.fail(format!("{rel}:{}: {e}", i + 1)))?);
        }
        Ok(items)
    }

    fn write_csv<T: Serialize>(&self, rel: &str, rows: &[T]) -> Result<PathBuf, CliError> {
        let (path, w) = self.create(rel)?;
        let mut w = csv::Writer::from_writer(w);
        for row in rows {
            w.serialize(row).map_err(|e| self.fail(e))?;
        }
        w.flush().map_err(|source| CliError::Io { path: path.clone(), source })?;
        Ok(path)
    }

    fn read_csv<T: DeserializeOwned>(&self, rel: &str) -> Result<Vec<T>, CliError> {
        let path = self.path(rel);
        let mut rdr = csv::Reader::from_reader(self.open(&path)?);
        rdr.deserialize().collect::<Result<_, _>>().map_err(|e| self.fail(format!("{rel}: {e}")))
    }

    /// Writes with a closure that reports `csv`/`io` errors.
    fn write_with<E: std::fmt::Display>(
        &self,
        rel: &str,
        f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<(), E>,
    ) -> Result<PathBuf, CliError> {
        let (path, mut w) = self.create(rel)?;
        f(&mut w).map_err(|e| self.fail(format!("{rel}: {e}")))?;
        w.flush().map_err(|source| CliError::Io { path: path.clone(), source })?;
        Ok(path)
    }

    fn open_input(&self, path: &Path) -> Result<fs::File, CliError> {
        fs::File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
    }
}

/// Runs one stage: checks the manifest, executes, records the result.
pub fn run_stage(cfg: &PipelineConfig, stage: Stage, selection: Selection) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out).map_err(|source| CliError::Io { path: cfg.out.clone(), source })?;
    let roots = Roots { out: cfg.out.clone(), base: cfg.base_dir.clone() };
    let mut manifest = Manifest::load(&cfg.out)?;
    manifest.check_ready(stage, &roots)?;
    let ctx = Ctx { cfg, stage, selection };
    log::info!("stage {stage}: running");
    let io = match stage {
        Stage::Ingest => ingest(&ctx),
        Stage::Align => align(&ctx),
        Stage::Classify => classify(&ctx),
        Stage::Build => build(&ctx),
        Stage::Stats => stats(&ctx),
        Stage::Train => train_models(&ctx),
        Stage::Expose => expose(&ctx),
        Stage::Report => report(&ctx),
    }?;
    manifest.record(stage, &roots, &io.inputs, &io.outputs)?;
    manifest.save(&cfg.out)?;
    log::info!("stage {stage}: wrote {} files", io.outputs.len());
    Ok(())
}

/// Every stage in order.
pub fn run_all(cfg: &PipelineConfig) -> Result<(), CliError> {
    cfg.validate()?;
    for stage in Stage::ALL {
        run_stage(cfg, stage, Selection::default())?;
    }
    Ok(())
}

fn ingest(ctx: &Ctx) -> Result<StageIo, CliError> {
    let cfg = ctx.cfg;
    cfg.validate()?;
    let mut inputs: Vec<PathBuf> = fs::read_dir(&cfg.sources_dir)
        .map_err(|source| CliError::Io { path: cfg.sources_dir.clone(), source })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| classify_file_name(p).is_some())
        .collect();
    inputs.sort();

    let batch = ingest_dir(&cfg.sources_dir).map_err(|e| ctx.fail(e))?;
    let (wd, others): (Vec<_>, Vec<_>) = batch.authors.into_iter().partition(|a| a.source == Source::WD);
    let filtered = filter_by_birth_year(wd, cfg.birth_cutoff);
    log::info!(
        "kept {} Wikidata authors, removed {} born before {} or undated",
        filtered.kept.len(),
        filtered.removed,
        cfg.birth_cutoff
    );
    for w in &batch.warnings {
        log::warn!("{}:{}: {}", w.file, w.line, w.message);
    }

    let mut summary: BTreeMap<(Source, &str), usize> = BTreeMap::new();
    let records: Vec<SourceRecord> = filtered
        .kept
        .into_iter()
        .chain(others)
        .map(SourceRecord::Author)
        .chain(batch.works.into_iter().map(SourceRecord::Work))
        .chain(batch.editions.into_iter().map(SourceRecord::Edition))
        .collect();
    for r in &records {
        let kind = match r {
            SourceRecord::Author(_) => RecordKind::Authors,
            SourceRecord::Work(_) => RecordKind::Works,
            SourceRecord::Edition(_) => RecordKind::Editions,
        };
        *summary.entry((r.source(), kind.as_str())).or_default() += 1;
    }

    let records_path = ctx.write_jsonl(RECORDS, &records)?;
    let warnings = ctx.write_csv(INGEST_WARNINGS, &batch.warnings)?;
    let summary_path = ctx.write_with(INGEST_SUMMARY, |w| -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["source", "kind", "count"])?;
        for ((source, kind), n) in &summary {
            w.write_record([source.as_str(), kind, &n.to_string()])?;
        }
        w.write_record(["WD", "authors_removed_by_birth_year", &filtered.removed.to_string()])?;
        w.flush()?;
        Ok(())
    })?;
    Ok(StageIo { inputs, outputs: vec![records_path, warnings, summary_path] })
}

fn align(ctx: &Ctx) -> Result<StageIo, CliError> {
    let records: Vec<SourceRecord> = ctx.read_jsonl(RECORDS)?;
    let (mut wd, mut ol, mut gr) = (Vec::new(), Vec::new(), Vec::new());
    let (mut works, mut gb, mut editions) = (Vec::new(), Vec::new(), Vec::new());
    for r in records {
        match r {
            SourceRecord::Author(a) => match a.source {
                Source::WD => wd.push(a),
                Source::OL => ol.push(a),
                Source::GR => gr.push(a),
                Source::GB => log::debug!("ignoring Google Books author {}", a.source_id),
            },
            SourceRecord::Work(w) if w.source == Source::GB => gb.push(w),
            SourceRecord::Work(w) => works.push(w),
            SourceRecord::Edition(e) => editions.push(e),
        }
    }

    let ol_match = match_openlibrary(&wd, &ol);
    let gr_match = match_goodreads(&wd, &gr);
    let entities = resolve_precedence(&wd, &ol_match.pairs, &gr_match.pairs);
    let (works, editions) = collect_works(&entities, &works, &editions);
    let (works, editions) = join_isbn(works, editions, &gb);
    log::info!(
        "{} authors: {} linked to OL, {} linked to GR; {} works, {} editions",
        entities.len(),
        ol_match.pairs.len(),
        gr_match.pairs.len(),
        works.len(),
        editions.len()
    );

    let rows = alignment_rows(&entities, &ol_match, &gr_match);
    let alignment = ctx.write_with(ALIGNMENT, |w| write_alignment_csv(&rows, w))?;
    let outputs = vec![
        alignment,
        ctx.write_jsonl(AUTHORS, &entities)?,
        ctx.write_jsonl(WORKS, &works)?,
        ctx.write_jsonl(EDITIONS, &editions)?,
    ];
    Ok(StageIo { inputs: vec![ctx.path(RECORDS)], outputs })
}

#[derive(Serialize)]
struct ErrorRow {
    author: String,
    error: String,
}

fn classify(ctx: &Ctx) -> Result<StageIo, CliError> {
    let cfg = ctx.cfg;
    cfg.validate()?;
    let authors: Vec<AuthorEntity> = ctx.read_jsonl(AUTHORS)?;
    let taxonomy =
        CountryTaxonomy::from_csv(ctx.open_input(&cfg.taxonomy)?, &cfg.taxonomy_label).map_err(|e| ctx.fail(e))?;
    let minorities = MinorityList::from_csv(ctx.open_input(&cfg.minorities)?).map_err(|e| ctx.fail(e))?;
    let result = classify_all(&authors, &taxonomy, &minorities);
    // Unclassifiable authors are reported, not fatal.
    let mut errors: Vec<ErrorRow> = result
        .errors
        .iter()
        .map(|e| {
            log::warn!("{e}");
            ErrorRow { author: e.author().unwrap_or_default().to_string(), error: e.to_string() }
        })
        .collect();
    errors.sort_by(|a, b| a.author.cmp(&b.author));
    let outputs = vec![ctx.write_csv(ASSIGNMENTS, &result.assignments)?, ctx.write_csv(CLASSIFY_ERRORS, &errors)?];
    Ok(StageIo {
        inputs: vec![ctx.path(AUTHORS), cfg.taxonomy.clone(), cfg.minorities.clone()],
        outputs,
    })
}

fn build(ctx: &Ctx) -> Result<StageIo, CliError> {
    let authors: Vec<AuthorEntity> = ctx.read_jsonl(AUTHORS)?;
    let works: Vec<EnrichedWork> = ctx.read_jsonl(WORKS)?;
    let editions: Vec<EnrichedEdition> = ctx.read_jsonl(EDITIONS)?;
    let assignments: Vec<StatusAssignment> = ctx.read_csv(ASSIGNMENTS)?;
    let graph = build_graph(&authors, &assignments, &works, &editions).map_err(|e| ctx.fail(e))?;
    let problems = graph.check_patterns();
    if !problems.is_empty() {
        return Err(ctx.fail(format!("graph violates its patterns: {}", problems.join("; "))));
    }
    log::info!("graph: {} entities, {} statements", graph.entities().len(), graph.triples().len());
    let path = ctx.path(GRAPH);
    serialize(&graph, &path).map_err(|e| ctx.fail(e))?;
    Ok(StageIo {
        inputs: vec![ctx.path(AUTHORS), ctx.path(WORKS), ctx.path(EDITIONS), ctx.path(ASSIGNMENTS)],
        outputs: vec![path],
    })
}

/// Works attributed to each author, by canonical id.
pub fn works_per_author(graph: &Graph) -> BTreeMap<String, u64> {
    let mut works: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for t in graph.triples() {
        if t.predicate != Relation::AttributedTo {
            continue;
        }
        if let Object::Entity(author) = &t.object {
            let id = author.strip_prefix("author:").unwrap_or(author);
            works.entry(id.to_string()).or_default().insert(t.subject.as_str());
        }
    }
    works.into_iter().map(|(a, w)| (a, w.len() as u64)).collect()
}

fn stats(ctx: &Ctx) -> Result<StageIo, CliError> {
    let graph = deserialize(&ctx.path(GRAPH)).map_err(|e| ctx.fail(e))?;
    let authors: Vec<AuthorEntity> = ctx.read_jsonl(AUTHORS)?;
    let assignments: Vec<StatusAssignment> = ctx.read_csv(ASSIGNMENTS)?;
    let genders: BTreeMap<String, Gender> =
        authors.iter().filter_map(|a| a.gender.map(|g| (a.canonical_id.clone(), g))).collect();
    let report = representation_stats(authors.len() as u64, &assignments, &genders, &works_per_author(&graph));
    log::info!("works ratio Transnational:Western = {}", report.works);

    let stats = ctx.write_with(STATS, |w| report.write_csv(w))?;
    let works = ctx.write_with(WORKS_RATIO, |w| -> csv::Result<()> {
        let wr = report.works;
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["metric", "value"])?;
        w.write_record(["western_works", &wr.western_works.to_string()])?;
        w.write_record(["transnational_works", &wr.transnational_works.to_string()])?;
        let total = wr.western_works + wr.transnational_works;
        w.write_record(["transnational_percent", &format!("{:.1}", percent(wr.transnational_works, total))])?;
        w.write_record(["ratio", &wr.to_string()])?;
        w.flush()?;
        Ok(())
    })?;
    let counts = ctx.write_csv(GRAPH_COUNTS, &count_stats(&graph))?;
    Ok(StageIo {
        inputs: vec![ctx.path(GRAPH), ctx.path(AUTHORS), ctx.path(ASSIGNMENTS)],
        outputs: vec![stats, works, counts],
    })
}

fn model_dir(portion: Portion) -> String {
    format!("{MODELS_DIR}/{}", portion.label())
}

fn params_rel(portion: Portion, model: ModelKind) -> String {
    format!("{}/{}.params", model_dir(portion), model.as_str())
}

fn list_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    if !dir.exists() {
        return Ok(files);
    }
    let entries = fs::read_dir(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    for entry in entries {
        let path = entry.map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?.path();
        if path.is_dir() {
            files.extend(list_files(&path)?);
        } else {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn train_models(ctx: &Ctx) -> Result<StageIo, CliError> {
    let cfg = ctx.cfg;
    let graph = deserialize(&ctx.path(GRAPH)).map_err(|e| ctx.fail(e))?;
    let models = ctx.selection.models(cfg);

    let mut jobs = Vec::new();
    for portion in ctx.selection.portions(cfg) {
        let sub = graph.portion(portion.source());
        let (data, map) = training_set(&sub, cfg.relations.as_deref());
        log::info!(
            "portion {portion}: {} entities, {} relations, {} triples",
            data.num_entities,
            data.num_relations,
            data.triples.len()
        );
        let dir = model_dir(portion);
        ctx.write_with(&format!("{dir}/entities.tsv"), |w| write_labels(&map.entities, w))?;
        ctx.write_with(&format!("{dir}/relations.tsv"), |w| write_labels(&map.relations, w))?;
        let data = std::sync::Arc::new(data);
        for &model in &models {
            jobs.push((portion, model, data.clone()));
        }
    }

    // Independent models train in parallel; each run is itself sequential.
    let trained: Vec<_> = jobs
        .par_iter()
        .map(|(portion, model, data)| {
            train(*model, data, &cfg.train)
                .map(|out| (*portion, *model, out))
                .map_err(|e| ctx.fail(format!("{model} on portion {portion}: {e}")))
        })
        .collect::<Result<_, _>>()?;

    for (portion, model, out) in trained {
        if out.skipped > 0 {
            log::warn!("{model} on {portion}: {} positives had no valid negative", out.skipped);
        }
        let file = ParamsFile { params: out.params, seed: cfg.train.seed };
        ctx.write_with(&params_rel(portion, model), |w| write_params(&file, w))?;
        let losses = ctx.write_with(&format!("{}/{}.losses.csv", model_dir(portion), model.as_str()), |w| {
            writeln!(w, "epoch,loss")?;
            for (e, l) in out.epoch_losses.iter().enumerate() {
                writeln!(w, "{e},{l}")?;
            }
            std::io::Result::Ok(())
        })?;
        log::debug!("wrote {}", losses.display());
    }
    Ok(StageIo { inputs: vec![ctx.path(GRAPH)], outputs: list_files(&ctx.path(MODELS_DIR))? })
}

/// Entity labels and params of one trained model.
pub fn load_model(out: &Path, portion: Portion, model: ModelKind) -> Result<(IdMap, ParamsFile), String> {
    let dir = out.join(model_dir(portion));
    let read = |name: &str| -> Result<Vec<String>, String> {
        let file = fs::File::open(dir.join(name)).map_err(|e| format!("{}: {e}", dir.join(name).display()))?;
        read_labels(BufReader::new(file)).map_err(|e| format!("{name}: {e}"))
    };
    let map = IdMap { entities: read("entities.tsv")?, relations: read("relations.tsv")? };
    let path = out.join(params_rel(portion, model));
    let file = fs::File::open(&path).map_err(|e| format!("{}: {e} (train {model} on {portion} first)", path.display()))?;
    let params = read_params(BufReader::new(file)).map_err(|e| format!("{}: {e}", path.display()))?;
    if params.params.num_entities != map.entities.len() {
        return Err(format!("{}: entity count does not match entities.tsv", path.display()));
    }
    Ok((map, params))
}

#[derive(Serialize)]
struct NeighbourRow<'a> {
    portion: &'a str,
    model: &'a str,
    target: &'a str,
    rank: usize,
    neighbour: &'a str,
}

fn expose(ctx: &Ctx) -> Result<StageIo, CliError> {
    let cfg = ctx.cfg;
    cfg.validate()?;
    let assignments: Vec<StatusAssignment> = ctx.read_csv(ASSIGNMENTS)?;
    let authors: Vec<AuthorEntity> = ctx.read_jsonl(AUTHORS)?;
    let continents = ContinentMap::from_csv(ctx.open_input(&cfg.continents)?).map_err(|e| ctx.fail(e))?;
    let statuses: BTreeMap<String, Status> = assignments.iter().map(|a| (a.canonical_id.clone(), a.status)).collect();
    let countries: BTreeMap<String, String> = authors
        .iter()
        .filter_map(|a| a.country_of_birth.clone().map(|c| (a.canonical_id.clone(), c)))
        .collect();

    let mut inputs = vec![ctx.path(ASSIGNMENTS), ctx.path(AUTHORS), cfg.continents.clone()];
    let mut reports: Vec<ExposureReport> = Vec::new();
    let mut flows = None;
    let mut portions = ctx.selection.portions(cfg);
    if !portions.contains(&cfg.flow_portion) {
        portions.push(cfg.flow_portion);
    }
    for portion in portions {
        let mut models = if ctx.selection.portion.is_none_or(|p| p == portion) {
            ctx.selection.models(cfg)
        } else {
            Vec::new()
        };
        let wants_flows = portion == cfg.flow_portion;
        if wants_flows && !models.contains(&cfg.flow_model) {
            models.push(cfg.flow_model);
        }
        // One sample per portion, shared by its models.
        let mut sample = None;
        for model in models {
            let (map, file) = load_model(&cfg.out, portion, model).map_err(|e| ctx.fail(e))?;
            inputs.push(ctx.path(&params_rel(portion, model)));
            inputs.push(ctx.path(&format!("{}/entities.tsv", model_dir(portion))));
            let vectors = AuthorVectors::from_params(&file.params, &map, statuses.keys().map(String::as_str));
            let sample = match &sample {
                Some(s) => s,
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(portion.stream());
                    let drawn = sample_western(&vectors, &statuses, cfg.sample_size, &mut rng)
                        .map_err(|e| ctx.fail(format!("portion {portion}: {e}")))?;
                    sample.insert(drawn)
                }
            };
            if ctx.selection.models(cfg).contains(&model) && ctx.selection.portion.is_none_or(|p| p == portion) {
                let report = exposure_ratios(portion.label(), model, &vectors, &statuses, sample, &cfg.k_levels)
                    .map_err(|e| ctx.fail(format!("{model} on {portion}: {e}")))?;
                reports.push(report);
            }
            if wants_flows && model == cfg.flow_model {
                flows = Some(
                    continent_flows(&vectors, &statuses, sample, &countries, &continents)
                        .map_err(|e| ctx.fail(format!("flows: {e}")))?,
                );
            }
        }
    }
    inputs.sort();
    inputs.dedup();

    let exposure = ctx.write_with(EXPOSURE, |w| write_exposure_csv(&reports, w))?;
    let flows = flows.expect("flow model is always evaluated");
    let flows_path = ctx.write_with(FLOWS, |w| flows.write_csv(w))?;
    let mut rows = Vec::new();
    for r in &reports {
        for (target, list) in &r.per_target {
            for (i, n) in list.iter().enumerate() {
                rows.push(NeighbourRow {
                    portion: &r.portion_label,
                    model: r.model.as_str(),
                    target,
                    rank: i + 1,
                    neighbour: n,
                });
            }
        }
    }
    let neighbours = ctx.write_csv(NEIGHBOURS, &rows)?;
    Ok(StageIo { inputs, outputs: vec![exposure, flows_path, neighbours] })
}

fn read_table(ctx: &Ctx, rel: &str) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let path = ctx.path(rel);
    let mut rdr = csv::Reader::from_reader(ctx.open(&path)?);
    let header = rdr.headers().map_err(|e| ctx.fail(format!("{rel}: {e}")))?.iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()))
        .collect::<Result<_, _>>()
        .map_err(|e| ctx.fail(format!("{rel}: {e}")))?;
    Ok((header, rows))
}

/// Leading number of a `12.5% (3)` cell.
fn leading_percent(cell: &str) -> Option<f64> {
    cell.split('%').next()?.trim().parse().ok()
}

fn report(ctx: &Ctx) -> Result<StageIo, CliError> {
    // authors per generation and status
    let (_, stats_rows) = read_table(ctx, STATS)?;
    let mut per_gen: BTreeMap<(usize, &str), f64> = BTreeMap::new();
    for row in &stats_rows {
        if row[0] != "generation" {
            continue;
        }
        let g = Generation::ALL.iter().position(|g| g.as_str() == row[1]).unwrap_or(Generation::ALL.len());
        let count: f64 = row[4].parse().map_err(|e| ctx.fail(format!("{STATS}: {e}")))?;
        *per_gen.entry((g, row[3].as_str())).or_default() += count;
    }
    let generations: Vec<String> = Generation::ALL.iter().map(|g| g.as_str().to_string()).collect();
    let series: Vec<(String, Vec<f64>)> = [Status::Western, Status::Transnational]
        .iter()
        .map(|s| {
            let values = (0..generations.len()).map(|g| per_gen.get(&(g, s.as_str())).copied().unwrap_or(0.0)).collect();
            (s.as_str().to_string(), values)
        })
        .collect();
    let gen_svg = ctx.write_with(GENERATIONS_SVG, |w| {
        w.write_all(svg::grouped_bars("Authors per generation", "authors", &generations, &series).as_bytes())
    })?;

    let (_, works_rows) = read_table(ctx, WORKS_RATIO)?;
    let value = |name: &str| -> f64 {
        works_rows.iter().find(|r| r[0] == name).and_then(|r| r[1].parse().ok()).unwrap_or(0.0)
    };
    let items = vec![
        ("Western".to_string(), value("western_works")),
        ("Transnational".to_string(), value("transnational_works")),
    ];
    let works_svg = ctx.write_with(WORKS_SVG, |w| w.write_all(svg::treemap("Works by author status", &items).as_bytes()))?;

    let (header, exposure_rows) = read_table(ctx, EXPOSURE)?;
    let columns: Vec<String> = header.iter().skip(1).cloned().collect();
    let series: Vec<(String, Vec<f64>)> = exposure_rows
        .iter()
        .map(|row| (row[0].clone(), row[1..].iter().map(|c| leading_percent(c).unwrap_or(0.0)).collect()))
        .collect();
    let exposure_svg = ctx.write_with(EXPOSURE_SVG, |w| {
        w.write_all(svg::grouped_bars("Transnational share of top-k% neighbours", "percent", &columns, &series).as_bytes())
    })?;

    let (_, flow_rows) = read_table(ctx, FLOWS)?;
    let western: Vec<String> = flow_rows.iter().map(|r| r[0].clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let other: BTreeSet<&str> = flow_rows.iter().map(|r| r[1].as_str()).collect();
    let series: Vec<(String, Vec<f64>)> = other
        .iter()
        .map(|t| {
            let values = western
                .iter()
                .map(|w| {
                    flow_rows
                        .iter()
                        .find(|r| &r[0] == w && r[1] == *t)
                        .and_then(|r| r[2].parse().ok())
                        .unwrap_or(0.0)
                })
                .collect();
            (t.to_string(), values)
        })
        .collect();
    let flows_svg = ctx.write_with(FLOWS_SVG, |w| {
        w.write_all(svg::grouped_bars("Continent of the nearest Transnational author", "targets", &western, &series).as_bytes())
    })?;

    Ok(StageIo {
        inputs: vec![ctx.path(STATS), ctx.path(WORKS_RATIO), ctx.path(EXPOSURE), ctx.path(FLOWS)],
        outputs: vec![gen_svg, works_svg, exposure_svg, flows_svg],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percent_cells() {
        assert_eq!(leading_percent("34.8% (34)"), Some(34.8));
        assert_eq!(leading_percent(""), None);
    }
}
