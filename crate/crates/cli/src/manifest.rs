//! `manifest.json`: which stages have run, and the SHA-256 of every file
//! each one read and wrote.
//!
//! A stage may run only when each predecessor has a record, every file
//! that record lists still hashes the same, and the predecessor's own
//! inputs are unchanged. There are no timestamps, so the manifest is as
//! reproducible as the artifacts it describes.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Align,
    Classify,
    Build,
    Stats,
    Train,
    Expose,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Align,
        Stage::Classify,
        Stage::Build,
        Stage::Stats,
        Stage::Train,
        Stage::Expose,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Align => "align",
            Stage::Classify => "classify",
            Stage::Build => "build",
            Stage::Stats => "stats",
            Stage::Train => "train",
            Stage::Expose => "expose",
            Stage::Report => "report",
        }
    }

    /// Stages whose outputs this one reads.
    pub fn predecessors(self) -> &'static [Stage] {
        match self {
            Stage::Ingest => &[],
            Stage::Align => &[Stage::Ingest],
            Stage::Classify => &[Stage::Align],
            Stage::Build => &[Stage::Align, Stage::Classify],
            Stage::Stats => &[Stage::Align, Stage::Classify, Stage::Build],
            Stage::Train => &[Stage::Build],
            Stage::Expose => &[Stage::Align, Stage::Classify, Stage::Train],
            Stage::Report => &[Stage::Stats, Stage::Expose],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// File hashes keyed by display path: outputs relative to the output
/// directory, external inputs relative to the config directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<String, StageRecord>,
}

pub fn hash_file(path: &Path) -> Result<String, CliError> {
    let io_err = |source| CliError::Io { path: path.to_path_buf(), source };
    let mut file = fs::File::open(path).map_err(io_err)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(io_err)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// `path` relative to `base` when it lies inside it, with `/` separators.
pub fn display_path(path: &Path, base: &Path) -> String {
    let rel = path.strip_prefix(base).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Where the files named in a manifest live.
#[derive(Debug, Clone)]
pub struct Roots {
    pub out: PathBuf,
    pub base: PathBuf,
}

impl Roots {
    fn resolve_output(&self, key: &str) -> PathBuf {
        self.out.join(key)
    }

    fn resolve_input(&self, key: &str) -> PathBuf {
        match key.strip_prefix("out:") {
            Some(rest) => self.out.join(rest),
            None => self.base.join(key),
        }
    }

    /// Manifest key for a file read by a stage. Files under the output
    /// directory are prefixed `out:`.
    pub fn input_key(&self, path: &Path) -> String {
        if path.starts_with(&self.out) {
            format!("out:{}", display_path(path, &self.out))
        } else {
            display_path(path, &self.base)
        }
    }

    pub fn output_key(&self, path: &Path) -> String {
        display_path(path, &self.out)
    }
}

impl Manifest {
    pub fn load(out: &Path) -> Result<Manifest, CliError> {
        let path = out.join(MANIFEST_FILE);
        match fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map_err(|e| CliError::Manifest(format!("{}: {e}", path.display()))),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Manifest::default()),
            Err(source) => Err(CliError::Io { path, source }),
        }
    }

    pub fn save(&self, out: &Path) -> Result<(), CliError> {
        let path = out.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|source| CliError::Io { path, source })
    }

    /// Errors name the first predecessor that is missing or stale.
    pub fn check_ready(&self, stage: Stage, roots: &Roots) -> Result<(), CliError> {
        for &pred in stage.predecessors() {
            let Some(record) = self.stages.get(pred.name()) else {
                return Err(CliError::MissingPredecessor { stage, missing: pred });
            };
            for (key, hash) in &record.outputs {
                let path = roots.resolve_output(key);
                if !path.exists() || hash_file(&path)? != *hash {
                    return Err(CliError::Stale { stage, predecessor: pred, path: key.clone() });
                }
            }
            for (key, hash) in &record.inputs {
                let path = roots.resolve_input(key);
                if !path.exists() || hash_file(&path)? != *hash {
                    return Err(CliError::Stale { stage, predecessor: pred, path: key.clone() });
                }
            }
        }
        Ok(())
    }

    pub fn record(
        &mut self,
        stage: Stage,
        roots: &Roots,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
    ) -> Result<(), CliError> {
        let mut record = StageRecord::default();
        for p in inputs {
            record.inputs.insert(roots.input_key(p), hash_file(p)?);
        }
        for p in outputs {
            record.outputs.insert(roots.output_key(p), hash_file(p)?);
        }
        self.stages.insert(stage.name().to_string(), record);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roots(dir: &Path) -> Roots {
        Roots { out: dir.join("out"), base: dir.to_path_buf() }
    }

    #[test]
    fn predecessors_precede() {
        for stage in Stage::ALL {
            for p in stage.predecessors() {
                assert!(p < &stage, "{p} must come before {stage}");
            }
        }
    }

    #[test]
    fn missing_and_stale_predecessors() {
        let dir = tempfile::tempdir().unwrap();
        let r = roots(dir.path());
        fs::create_dir_all(&r.out).unwrap();
        let input = dir.path().join("in.txt");
        let output = r.out.join("a.txt");
        fs::write(&input, "x").unwrap();
        fs::write(&output, "y").unwrap();

        let mut m = Manifest::default();
        match m.check_ready(Stage::Align, &r) {
            Err(CliError::MissingPredecessor { missing, .. }) => assert_eq!(missing, Stage::Ingest),
            other => panic!("{other:?}"),
        }
        m.record(Stage::Ingest, &r, std::slice::from_ref(&input), std::slice::from_ref(&output)).unwrap();
        assert!(m.check_ready(Stage::Align, &r).is_ok());
        assert_eq!(m.stages["ingest"].inputs.keys().next().unwrap(), "in.txt");
        assert_eq!(m.stages["ingest"].outputs.keys().next().unwrap(), "a.txt");

        fs::write(&input, "changed").unwrap();
        assert!(matches!(m.check_ready(Stage::Align, &r), Err(CliError::Stale { .. })));
        fs::write(&input, "x").unwrap();
        fs::remove_file(&output).unwrap();
        assert!(matches!(m.check_ready(Stage::Align, &r), Err(CliError::Stale { .. })));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let r = roots(dir.path());
        fs::create_dir_all(&r.out).unwrap();
        let f = r.out.join("f");
        fs::write(&f, "abc").unwrap();
        let mut m = Manifest::default();
        m.record(Stage::Ingest, &r, &[], &[f]).unwrap();
        m.save(&r.out).unwrap();
        assert_eq!(Manifest::load(&r.out).unwrap(), m);
        assert_eq!(
            m.stages["ingest"].outputs["f"],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
