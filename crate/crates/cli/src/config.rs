//! Pipeline configuration: a flat `key = value` file (TOML syntax).
//!
//! Relative paths are resolved against the directory holding the config
//! file. Every key except the four input paths has a default.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use kgef_core::embed::{ModelKind, TrainConfig};
use kgef_core::expose::DEFAULT_K_LEVELS;
use kgef_core::ingest::{Source, BIRTH_YEAR_CUTOFF};
use kgef_core::kgstore::Relation;
use serde::Deserialize;

use crate::CliError;

/// Paper-sized sample of Western targets.
pub const DEFAULT_SAMPLE_SIZE: usize = 250;

/// A slice of the graph to embed: one source's statements (plus their
/// Google Books enrichments) or the whole graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Portion {
    Source(Source),
    All,
}

impl Portion {
    pub fn source(self) -> Option<Source> {
        match self {
            Portion::Source(s) => Some(s),
            Portion::All => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Portion::Source(s) => s.as_str(),
            Portion::All => "all",
        }
    }

    /// Stable small integer used to give each portion its own random stream.
    pub fn stream(self) -> u64 {
        match self {
            Portion::Source(Source::WD) => 0,
            Portion::Source(Source::OL) => 1,
            Portion::Source(Source::GR) => 2,
            Portion::Source(Source::GB) => 3,
            Portion::All => 4,
        }
    }
}

impl fmt::Display for Portion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Portion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Portion::All);
        }
        match s.parse::<Source>() {
            Ok(Source::GB) => Err("GB holds no authors and cannot be a portion".into()),
            Ok(src) => Ok(Portion::Source(src)),
            Err(_) => Err(format!("unknown portion `{s}` (expected WD, OL, GR or all)")),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    sources_dir: PathBuf,
    taxonomy: PathBuf,
    #[serde(default)]
    taxonomy_label: Option<String>,
    minorities: PathBuf,
    continents: PathBuf,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    dim: Option<usize>,
    #[serde(default)]
    epochs: Option<usize>,
    #[serde(default)]
    learning_rate: Option<f64>,
    #[serde(default)]
    margin: Option<f64>,
    #[serde(default)]
    negatives: Option<usize>,
    #[serde(default)]
    batch_size: Option<usize>,
    #[serde(default)]
    regularization: Option<f64>,
    #[serde(default)]
    sample_size: Option<usize>,
    #[serde(default)]
    k_levels: Option<Vec<u32>>,
    #[serde(default)]
    birth_cutoff: Option<i32>,
    #[serde(default)]
    relations: Option<Vec<String>>,
    #[serde(default)]
    portions: Option<Vec<String>>,
    #[serde(default)]
    models: Option<Vec<String>>,
    #[serde(default)]
    flow_model: Option<String>,
    #[serde(default)]
    flow_portion: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Directory of the config file; recorded paths are relative to it.
    pub base_dir: PathBuf,
    pub sources_dir: PathBuf,
    pub taxonomy: PathBuf,
    pub taxonomy_label: String,
    pub minorities: PathBuf,
    pub continents: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub train: TrainConfig,
    pub sample_size: usize,
    pub k_levels: Vec<u32>,
    pub birth_cutoff: i32,
    /// `None` trains on every relation.
    pub relations: Option<Vec<Relation>>,
    pub portions: Vec<Portion>,
    pub models: Vec<ModelKind>,
    pub flow_model: ModelKind,
    pub flow_portion: Portion,
}

fn invalid(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

fn parse_list<T: FromStr<Err = String> + Ord>(key: &str, values: Vec<String>) -> Result<Vec<T>, CliError> {
    let parsed: BTreeSet<T> = values
        .iter()
        .map(|v| v.parse::<T>().map_err(|e| invalid(format!("{key}: {e}"))))
        .collect::<Result<_, _>>()?;
    if parsed.is_empty() {
        return Err(invalid(format!("{key} must not be empty")));
    }
    Ok(parsed.into_iter().collect())
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base_dir)
    }

    /// Parses config text; paths resolve against `base_dir`. Referenced
    /// files are not checked here, see [`PipelineConfig::validate`].
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };

        let defaults = TrainConfig::default();
        let seed = raw.seed.unwrap_or(defaults.seed);
        let train = TrainConfig {
            dim: raw.dim.unwrap_or(defaults.dim),
            epochs: raw.epochs.unwrap_or(defaults.epochs),
            learning_rate: raw.learning_rate.unwrap_or(defaults.learning_rate),
            margin: raw.margin.unwrap_or(defaults.margin),
            negatives: raw.negatives.unwrap_or(defaults.negatives),
            batch_size: raw.batch_size.unwrap_or(defaults.batch_size),
            seed,
            regularization: raw.regularization.unwrap_or(defaults.regularization),
        };
        train.validate().map_err(|e| invalid(e.to_string()))?;

        let k_levels: Vec<u32> = match raw.k_levels {
            Some(ks) => ks.into_iter().collect::<BTreeSet<_>>().into_iter().collect(),
            None => DEFAULT_K_LEVELS.to_vec(),
        };
        if k_levels.is_empty() || k_levels.iter().any(|k| !(1..=100).contains(k)) {
            return Err(invalid("k_levels must be a non-empty list of percentages in 1..=100"));
        }
        let relations = raw.relations.map(|r| parse_list::<Relation>("relations", r)).transpose()?;
        let portions = match raw.portions {
            Some(p) => parse_list::<Portion>("portions", p)?,
            None => vec![Portion::Source(Source::WD), Portion::Source(Source::OL), Portion::Source(Source::GR)],
        };
        let models = match raw.models {
            Some(m) => parse_list::<ModelKind>("models", m)?,
            None => ModelKind::ALL.to_vec(),
        };
        let flow_model = match raw.flow_model {
            Some(m) => m.parse().map_err(|e: String| invalid(format!("flow_model: {e}")))?,
            None => ModelKind::DistMult,
        };
        let flow_portion = match raw.flow_portion {
            Some(p) => p.parse().map_err(|e: String| invalid(format!("flow_portion: {e}")))?,
            None => portions[0],
        };
        if !portions.contains(&flow_portion) {
            return Err(invalid(format!("flow_portion {flow_portion} is not among the configured portions")));
        }
        if !models.contains(&flow_model) {
            return Err(invalid(format!("flow_model {flow_model} is not among the configured models")));
        }
        let taxonomy_label = raw.taxonomy_label.unwrap_or_else(|| {
            raw.taxonomy.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
        });

        Ok(PipelineConfig {
            base_dir: base_dir.to_path_buf(),
            sources_dir: resolve(raw.sources_dir),
            taxonomy: resolve(raw.taxonomy),
            taxonomy_label,
            minorities: resolve(raw.minorities),
            continents: resolve(raw.continents),
            out: resolve(raw.out.unwrap_or_else(|| PathBuf::from("out"))),
            seed,
            train,
            sample_size: raw.sample_size.unwrap_or(DEFAULT_SAMPLE_SIZE),
            k_levels,
            birth_cutoff: raw.birth_cutoff.unwrap_or(BIRTH_YEAR_CUTOFF),
            relations,
            portions,
            models,
            flow_model,
            flow_portion,
        })
    }

    /// `--seed` replaces the seed everywhere it is used.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.train.seed = seed;
        self
    }

    /// `--out` is taken relative to the working directory, like any
    /// command-line path.
    pub fn with_out(mut self, out: PathBuf) -> Self {
        self.out = out;
        self
    }

    /// Every referenced input must exist.
    pub fn validate(&self) -> Result<(), CliError> {
        if !self.sources_dir.is_dir() {
            return Err(invalid(format!("sources_dir {} is not a directory", self.sources_dir.display())));
        }
        for (key, path) in [
            ("taxonomy", &self.taxonomy),
            ("minorities", &self.minorities),
            ("continents", &self.continents),
        ] {
            if !path.is_file() {
                return Err(invalid(format!("{key} file {} does not exist", path.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
sources_dir = "sources"
taxonomy = "taxonomy.csv"
minorities = "minorities.csv"
continents = "continents.csv"
"#;

    #[test]
    fn defaults_follow_the_library() {
        let c = PipelineConfig::parse(MINIMAL, Path::new("/data")).unwrap();
        assert_eq!(c.train, TrainConfig::default());
        assert_eq!(c.k_levels, [1, 5, 10]);
        assert_eq!(c.sample_size, 250);
        assert_eq!(c.birth_cutoff, 1808);
        assert_eq!(c.models, ModelKind::ALL);
        assert_eq!(c.out, Path::new("/data/out"));
        assert_eq!(c.taxonomy, Path::new("/data/taxonomy.csv"));
        assert_eq!(c.taxonomy_label, "taxonomy");
        assert_eq!(c.flow_model, ModelKind::DistMult);
        assert_eq!(c.flow_portion, Portion::Source(Source::WD));
        assert!(c.relations.is_none());
    }

    #[test]
    fn overrides_and_lists() {
        let text = format!(
            "{MINIMAL}seed = 7\ndim = 16\nk_levels = [10, 1, 1]\nportions = [\"GR\", \"all\"]\nrelations = [\"attributedTo\"]\n"
        );
        let c = PipelineConfig::parse(&text, Path::new(".")).unwrap().with_seed(9);
        assert_eq!((c.seed, c.train.seed, c.train.dim), (9, 9, 16));
        assert_eq!(c.k_levels, [1, 10]);
        assert_eq!(c.portions, [Portion::Source(Source::GR), Portion::All]);
        assert_eq!(c.relations, Some(vec![Relation::AttributedTo]));
    }

    #[test]
    fn rejects_bad_values() {
        for extra in [
            "colour = 3\n",
            "k_levels = [0]\n",
            "portions = [\"GB\"]\n",
            "models = [\"ComplEx\"]\n",
            "learning_rate = -1.0\n",
            "flow_portion = \"OL\"\nportions = [\"WD\"]\n",
        ] {
            let text = format!("{MINIMAL}{extra}");
            assert!(PipelineConfig::parse(&text, Path::new(".")).is_err(), "{extra}");
        }
        assert!(PipelineConfig::parse("taxonomy = \"t.csv\"\n", Path::new(".")).is_err());
    }
}
