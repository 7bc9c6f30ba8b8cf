//! Text params file.
//!
//! ```text
//! kgef-params 1
//! model DistMult
//! dim 64
//! entities 120
//! relations 9
//! seed 42
//! [entity]
//! <one row of d values per entity>
//! [relation]
//! <one row per relation>
//! [matrix]
//! <d rows per relation, TransR and RESCAL only>
//! ```
//!
//! Values use Rust's shortest round-trip formatting, so a write/read cycle
//! is exact.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::model::{ModelKind, ModelParams};

const MAGIC: &str = "kgef-params 1";

#[derive(Debug, Error)]
pub enum ParamsFileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamsFile {
    pub params: ModelParams,
    pub seed: u64,
}

fn write_rows<W: Write>(w: &mut W, values: &[f64], width: usize) -> io::Result<()> {
    for row in values.chunks(width) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn write_params<W: Write>(file: &ParamsFile, mut w: W) -> io::Result<()> {
    let p = &file.params;
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "model {}", p.model)?;
    writeln!(w, "dim {}", p.dim)?;
    writeln!(w, "entities {}", p.num_entities)?;
    writeln!(w, "relations {}", p.num_relations)?;
    writeln!(w, "seed {}", file.seed)?;
    writeln!(w, "[entity]")?;
    write_rows(&mut w, &p.entity_vecs, p.dim)?;
    writeln!(w, "[relation]")?;
    write_rows(&mut w, &p.relation_vecs, p.dim)?;
    if let Some(m) = &p.relation_mats {
        writeln!(w, "[matrix]")?;
        write_rows(&mut w, m, p.dim)?;
    }
    w.flush()
}

struct Lines<R> {
    inner: io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String, ParamsFileError> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok(l?),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, message: impl Into<String>) -> ParamsFileError {
        ParamsFileError::Format { line: self.line, message: message.into() }
    }

    fn header<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ParamsFileError> {
        let line = self.next()?;
        line.strip_prefix(key)
            .and_then(|v| v.strip_prefix(' '))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| self.err(format!("expected `{key} <value>`")))
    }

    fn section(&mut self, name: &str, rows: usize, width: usize) -> Result<Vec<f64>, ParamsFileError> {
        if self.next()? != format!("[{name}]") {
            return Err(self.err(format!("expected [{name}]")));
        }
        let mut values = Vec::with_capacity(rows * width);
        for _ in 0..rows {
            let line = self.next()?;
            let row: Vec<f64> = line
                .split(' ')
                .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<_>>()
                .ok_or_else(|| self.err("invalid or non-finite value"))?;
            if row.len() != width {
                return Err(self.err(format!("expected {width} values, found {}", row.len())));
            }
            values.extend(row);
        }
        Ok(values)
    }
}

pub fn read_params<R: BufRead>(r: R) -> Result<ParamsFile, ParamsFileError> {
    let mut lines = Lines { inner: r.lines(), line: 0 };
    if lines.next()? != MAGIC {
        return Err(lines.err("not a params file"));
    }
    let model: String = lines.header("model")?;
    let model: ModelKind = model.parse().map_err(|e: String| lines.err(e))?;
    let dim: usize = lines.header("dim")?;
    let num_entities: usize = lines.header("entities")?;
    let num_relations: usize = lines.header("relations")?;
    let seed: u64 = lines.header("seed")?;
    let entity_vecs = lines.section("entity", num_entities, dim)?;
    let relation_vecs = lines.section("relation", num_relations, dim)?;
    let relation_mats = if model.has_matrices() {
        Some(lines.section("matrix", num_relations * dim, dim)?)
    } else {
        None
    };
    Ok(ParamsFile {
        params: ModelParams { model, dim, num_entities, num_relations, entity_vecs, relation_vecs, relation_mats },
        seed,
    })
}
