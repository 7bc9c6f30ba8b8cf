//! The `kgef` command line: a staged pipeline over the core library.

pub mod config;
pub mod manifest;
pub mod pipeline;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use kgef_core::embed::ModelKind;
use thiserror::Error;

use config::{PipelineConfig, Portion};
use manifest::Stage;
use pipeline::Selection;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("`{stage}` needs the output of `{missing}`, which has not run; run `kgef {missing}` first")]
    MissingPredecessor { stage: Stage, missing: Stage },
    #[error("`{stage}` cannot run: {path} no longer matches what `{predecessor}` recorded; rerun `kgef {predecessor}`")]
    Stale { stage: Stage, predecessor: Stage, path: String },
    #[error("{stage}: {message}")]
    Stage { stage: Stage, message: String },
}

#[derive(Debug, Parser)]
#[command(name = "kgef", version, about = "Build a literary knowledge graph and measure exposure in its embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse source dumps and drop authors born before the cutoff
    Ingest(CommonArgs),
    /// Link authors across sources and enrich works by ISBN
    Align(CommonArgs),
    /// Assign Western/Transnational status and generation
    Classify(CommonArgs),
    /// Materialize the knowledge graph
    Build(CommonArgs),
    /// Representation tables and graph counts
    Stats(CommonArgs),
    /// Train embedding models per portion
    Train(CommonArgs),
    /// Exposure ratios and continent flows
    Expose(CommonArgs),
    /// Render charts from the tables
    Report(CommonArgs),
    /// Every stage in order
    Run(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Pipeline config file
    #[arg(long)]
    pub config: PathBuf,
    /// One model, or `all`
    #[arg(long, value_parser = parse_model)]
    pub model: Option<Selected<ModelKind>>,
    /// One portion (WD, OL, GR, all)
    #[arg(long, value_parser = parse_portion)]
    pub portion: Option<Portion>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory, overriding the config
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A single choice or every configured one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selected<T> {
    One(T),
    All,
}

fn parse_model(s: &str) -> Result<Selected<ModelKind>, String> {
    if s.eq_ignore_ascii_case("all") {
        Ok(Selected::All)
    } else {
        s.parse().map(Selected::One)
    }
}

fn parse_portion(s: &str) -> Result<Portion, String> {
    s.parse()
}

impl Command {
    fn parts(&self) -> (Option<Stage>, &CommonArgs) {
        match self {
            Command::Ingest(a) => (Some(Stage::Ingest), a),
            Command::Align(a) => (Some(Stage::Align), a),
            Command::Classify(a) => (Some(Stage::Classify), a),
            Command::Build(a) => (Some(Stage::Build), a),
            Command::Stats(a) => (Some(Stage::Stats), a),
            Command::Train(a) => (Some(Stage::Train), a),
            Command::Expose(a) => (Some(Stage::Expose), a),
            Command::Report(a) => (Some(Stage::Report), a),
            Command::Run(a) => (None, a),
        }
    }
}

/// Loads the config with command-line overrides applied.
pub fn load_config(args: &CommonArgs) -> Result<PipelineConfig, CliError> {
    let mut cfg = PipelineConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = &args.out {
        cfg = cfg.with_out(out.clone());
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let (stage, args) = cli.command.parts();
    let mut cfg = load_config(args)?;
    let mut selection = Selection::default();
    if let Some(Selected::One(m)) = args.model {
        selection.model = Some(m);
    }
    if let Some(p) = args.portion {
        // `all` here is the whole-graph portion, which need not be configured
        if !cfg.portions.contains(&p) {
            cfg.portions.push(p);
        }
        selection.portion = Some(p);
    }
    match stage {
        Some(stage) => pipeline::run_stage(&cfg, stage, selection),
        None if selection == Selection::default() => pipeline::run_all(&cfg),
        None => {
            for stage in Stage::ALL {
                pipeline::run_stage(&cfg, stage, selection)?;
            }
            Ok(())
        }
    }
}
