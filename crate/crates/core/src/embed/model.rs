//! Scoring functions, parameters and their analytic gradients.
//!
//! All scores are oriented "higher is more plausible":
//!
//! | model    | score                   |
//! |----------|-------------------------|
//! | TransE   | -‖h + r - t‖₂           |
//! | TransR   | -‖M_r h + r - M_r t‖₂   |
//! | DistMult | Σᵢ hᵢ rᵢ tᵢ             |
//! | RESCAL   | hᵀ M_r t                |

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Below this distance the translation score gradient is the zero
/// subgradient.
pub const ZERO_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    TransE,
    TransR,
    DistMult,
    #[serde(rename = "RESCAL")]
    Rescal,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::TransE, ModelKind::TransR, ModelKind::DistMult, ModelKind::Rescal];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::TransE => "TransE",
            ModelKind::TransR => "TransR",
            ModelKind::DistMult => "DistMult",
            ModelKind::Rescal => "RESCAL",
        }
    }

    /// Translation models train with a margin loss and unit-norm entities.
    pub fn is_translational(self) -> bool {
        matches!(self, ModelKind::TransE | ModelKind::TransR)
    }

    pub fn has_matrices(self) -> bool {
        matches!(self, ModelKind::TransR | ModelKind::Rescal)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown model `{s}` (expected TransE, TransR, DistMult or RESCAL)"))
    }
}

/// (head, relation, tail) as dense indices.
pub type TripleIds = (usize, usize, usize);

pub fn transe_score(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    -h.iter()
        .zip(r)
        .zip(t)
        .map(|((h, r), t)| (h + r - t).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// `m` is a row-major d×d matrix.
pub fn mat_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    let d = v.len();
    (0..d).map(|i| m[i * d..(i + 1) * d].iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// `mᵀ v` for a row-major d×d matrix.
pub fn mat_t_vec(m: &[f64], v: &[f64]) -> Vec<f64> {
    let d = v.len();
    let mut out = vec![0.0; d];
    for (i, vi) in v.iter().enumerate() {
        for (j, o) in out.iter_mut().enumerate() {
            *o += m[i * d + j] * vi;
        }
    }
    out
}

fn transr_residual(m: &[f64], h: &[f64], r: &[f64], t: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let diff: Vec<f64> = h.iter().zip(t).map(|(a, b)| a - b).collect();
    let projected = mat_vec(m, &diff);
    let residual = projected.iter().zip(r).map(|(p, r)| p + r).collect();
    (residual, diff)
}

pub fn transr_score(m: &[f64], h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    let (residual, _) = transr_residual(m, h, r, t);
    -residual.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn distmult_score(h: &[f64], r: &[f64], t: &[f64]) -> f64 {
    h.iter().zip(r).zip(t).map(|((h, r), t)| h * r * t).sum()
}

pub fn rescal_score(m: &[f64], h: &[f64], t: &[f64]) -> f64 {
    h.iter().zip(mat_vec(m, t)).map(|(a, b)| a * b).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub model: ModelKind,
    pub dim: usize,
    pub num_entities: usize,
    pub num_relations: usize,
    /// Row-major |E|×d.
    pub entity_vecs: Vec<f64>,
    /// Row-major |R|×d. Not used by RESCAL's score (kept at zero).
    pub relation_vecs: Vec<f64>,
    /// Row-major |R|×d×d, present iff the model uses per-relation matrices.
    pub relation_mats: Option<Vec<f64>>,
}

fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Embedding tables are treated as a layer with fan-in 0 and fan-out `d`,
/// so the bound does not shrink as the graph grows.
fn embedding_bound(dim: usize) -> f64 {
    xavier_bound(0, dim)
}

fn normalize_row(row: &mut [f64]) {
    let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        row.iter_mut().for_each(|x| *x /= norm);
    }
}

impl ModelParams {
    /// Xavier-uniform initialization. Translation models start with unit
    /// entity vectors; TransR matrices start at the identity.
    pub fn init<R: Rng>(model: ModelKind, dim: usize, num_entities: usize, num_relations: usize, rng: &mut R) -> Self {
        let mut uniform = |n: usize, bound: f64| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-bound..=bound)).collect() };
        let entity_vecs = uniform(num_entities * dim, embedding_bound(dim));
        let relation_vecs = match model {
            ModelKind::Rescal => vec![0.0; num_relations * dim],
            _ => uniform(num_relations * dim, embedding_bound(dim)),
        };
        let relation_mats = match model {
            ModelKind::TransR => {
                let mut m = vec![0.0; num_relations * dim * dim];
                for r in 0..num_relations {
                    for i in 0..dim {
                        m[r * dim * dim + i * dim + i] = 1.0;
                    }
                }
                Some(m)
            }
            ModelKind::Rescal => Some(uniform(num_relations * dim * dim, xavier_bound(dim, dim))),
            _ => None,
        };
        let mut params = ModelParams {
            model,
            dim,
            num_entities,
            num_relations,
            entity_vecs,
            relation_vecs,
            relation_mats,
        };
        if model.is_translational() {
            for e in 0..num_entities {
                params.normalize_entity(e);
            }
        }
        params
    }

    pub fn entity(&self, e: usize) -> &[f64] {
        &self.entity_vecs[e * self.dim..(e + 1) * self.dim]
    }

    pub fn relation(&self, r: usize) -> &[f64] {
        &self.relation_vecs[r * self.dim..(r + 1) * self.dim]
    }

    pub fn matrix(&self, r: usize) -> &[f64] {
        let d2 = self.dim * self.dim;
        let m = self.relation_mats.as_ref().expect("model has relation matrices");
        &m[r * d2..(r + 1) * d2]
    }

    pub fn normalize_entity(&mut self, e: usize) {
        let d = self.dim;
        normalize_row(&mut self.entity_vecs[e * d..(e + 1) * d]);
    }

    pub fn score(&self, (h, r, t): TripleIds) -> f64 {
        let (hv, rv, tv) = (self.entity(h), self.relation(r), self.entity(t));
        match self.model {
            ModelKind::TransE => transe_score(hv, rv, tv),
            ModelKind::TransR => transr_score(self.matrix(r), hv, rv, tv),
            ModelKind::DistMult => distmult_score(hv, rv, tv),
            ModelKind::Rescal => rescal_score(self.matrix(r), hv, tv),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.entity_vecs.iter().all(|x| x.is_finite())
            && self.relation_vecs.iter().all(|x| x.is_finite())
            && self.relation_mats.iter().flatten().all(|x| x.is_finite())
    }

    /// Distance `‖·‖₂` inside a translation score, `None` for bilinear models.
    pub fn translation_distance(&self, triple: TripleIds) -> Option<f64> {
        self.model.is_translational().then(|| -self.score(triple))
    }

    /// Gradient of the score with respect to every parameter it touches.
    pub fn score_grad(&self, (h, r, t): TripleIds) -> Gradient {
        let (hv, rv, tv) = (self.entity(h), self.relation(r), self.entity(t));
        let d = self.dim;
        let mut g = Gradient::default();
        match self.model {
            ModelKind::TransE => {
                let residual: Vec<f64> = hv.iter().zip(rv).zip(tv).map(|((h, r), t)| h + r - t).collect();
                let norm = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm <= ZERO_DISTANCE {
                    return g;
                }
                let unit: Vec<f64> = residual.iter().map(|x| -x / norm).collect();
                g.add(Param::Entity(h), &unit, 1.0);
                g.add(Param::Relation(r), &unit, 1.0);
                g.add(Param::Entity(t), &unit, -1.0);
            }
            ModelKind::TransR => {
                let m = self.matrix(r);
                let (residual, diff) = transr_residual(m, hv, rv, tv);
                let norm = residual.iter().map(|x| x * x).sum::<f64>().sqrt();
                if norm <= ZERO_DISTANCE {
                    return g;
                }
                let unit: Vec<f64> = residual.iter().map(|x| -x / norm).collect();
                let back = mat_t_vec(m, &unit);
                g.add(Param::Entity(h), &back, 1.0);
                g.add(Param::Entity(t), &back, -1.0);
                g.add(Param::Relation(r), &unit, 1.0);
                let outer: Vec<f64> = (0..d * d).map(|k| unit[k / d] * diff[k % d]).collect();
                g.add(Param::Matrix(r), &outer, 1.0);
            }
            ModelKind::DistMult => {
                let prod = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<f64>>();
                g.add(Param::Entity(h), &prod(rv, tv), 1.0);
                g.add(Param::Relation(r), &prod(hv, tv), 1.0);
                g.add(Param::Entity(t), &prod(hv, rv), 1.0);
            }
            ModelKind::Rescal => {
                let m = self.matrix(r);
                g.add(Param::Entity(h), &mat_vec(m, tv), 1.0);
                g.add(Param::Entity(t), &mat_t_vec(m, hv), 1.0);
                let outer: Vec<f64> = (0..d * d).map(|k| hv[k / d] * tv[k % d]).collect();
                g.add(Param::Matrix(r), &outer, 1.0);
            }
        }
        g
    }

    pub fn block(&self, p: Param) -> &[f64] {
        match p {
            Param::Entity(e) => self.entity(e),
            Param::Relation(r) => self.relation(r),
            Param::Matrix(r) => self.matrix(r),
        }
    }

    pub fn block_mut(&mut self, p: Param) -> &mut [f64] {
        let d = self.dim;
        match p {
            Param::Entity(e) => &mut self.entity_vecs[e * d..(e + 1) * d],
            Param::Relation(r) => &mut self.relation_vecs[r * d..(r + 1) * d],
            Param::Matrix(r) => {
                let m = self.relation_mats.as_mut().expect("model has relation matrices");
                &mut m[r * d * d..(r + 1) * d * d]
            }
        }
    }
}

/// A parameter block: one entity row, one relation row or one matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Param {
    Entity(usize),
    Relation(usize),
    Matrix(usize),
}

/// Sparse gradient keyed by parameter block.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradient {
    pub blocks: BTreeMap<Param, Vec<f64>>,
}

impl Gradient {
    /// `self[p] += scale * values`.
    pub fn add(&mut self, p: Param, values: &[f64], scale: f64) {
        let block = self.blocks.entry(p).or_insert_with(|| vec![0.0; values.len()]);
        for (b, v) in block.iter_mut().zip(values) {
            *b += scale * v;
        }
    }

    pub fn merge(&mut self, other: &Gradient, scale: f64) {
        for (p, values) in &other.blocks {
            self.add(*p, values, scale);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.values().flatten().all(|x| x.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity(d: usize) -> Vec<f64> {
        (0..d * d).map(|k| if k / d == k % d { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn hand_computed_scores() {
        assert_eq!(transe_score(&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]), 0.0);
        assert_eq!(distmult_score(&[1.0, 2.0], &[1.0, 1.0], &[1.0, 1.0]), 3.0);
        assert_eq!(rescal_score(&identity(2), &[1.0, 2.0], &[3.0, -1.0]), 1.0);
        assert_eq!(transr_score(&identity(2), &[0.5, 0.0], &[0.0, 1.0], &[1.5, 1.0]), -1.0);
    }

    #[test]
    fn matrix_products() {
        let m = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mat_vec(&m, &[1.0, 1.0]), [3.0, 7.0]);
        assert_eq!(mat_t_vec(&m, &[1.0, 1.0]), [4.0, 6.0]);
    }

    #[test]
    fn init_shapes_and_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for model in ModelKind::ALL {
            let p = ModelParams::init(model, 4, 5, 2, &mut rng);
            assert_eq!(p.entity_vecs.len(), 20);
            assert_eq!(p.relation_vecs.len(), 8);
            assert_eq!(p.relation_mats.is_some(), model.has_matrices());
            assert!(p.is_finite());
            if model.is_translational() {
                for e in 0..5 {
                    let n: f64 = p.entity(e).iter().map(|x| x * x).sum();
                    assert!((n - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn distmult_grad_is_elementwise_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = ModelParams::init(ModelKind::DistMult, 3, 2, 1, &mut rng);
        let g = p.score_grad((0, 0, 1));
        let expected: Vec<f64> = p.relation(0).iter().zip(p.entity(1)).map(|(r, t)| r * t).collect();
        assert_eq!(g.blocks[&Param::Entity(0)], expected);
    }

    #[test]
    fn zero_distance_has_zero_subgradient() {
        let mut p = ModelParams::init(ModelKind::TransE, 2, 2, 1, &mut ChaCha8Rng::seed_from_u64(1));
        p.entity_vecs = vec![1.0, 0.0, 1.0, 1.0];
        p.relation_vecs = vec![0.0, 1.0];
        assert_eq!(p.score((0, 0, 1)), 0.0);
        assert!(p.score_grad((0, 0, 1)).blocks.is_empty());
    }

    #[test]
    fn model_names() {
        assert_eq!("rescal".parse::<ModelKind>().unwrap(), ModelKind::Rescal);
        assert_eq!(ModelKind::Rescal.to_string(), "RESCAL");
        assert!("ComplEx".parse::<ModelKind>().is_err());
    }
}
