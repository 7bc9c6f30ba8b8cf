use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::loss::{example_grad, example_loss, LossConfig};
use super::model::{Gradient, ModelKind, ModelParams, Param, TripleIds};

/// Draws per positive before [`negative_sample`] gives up.
pub const MAX_CORRUPTION_DRAWS: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("training set is empty")]
    EmptyGraph,
    #[error("need at least 2 entities to sample negatives, found {0}")]
    TooFewEntities(usize),
    #[error("non-finite gradient at epoch {epoch}, batch {batch}")]
    NonFiniteGradient { epoch: usize, batch: usize },
    #[error("non-finite parameters after epoch {epoch}, batch {batch}")]
    NonFiniteParams { epoch: usize, batch: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// γ of the margin loss (translation models).
    pub margin: f64,
    /// Negatives drawn per positive.
    pub negatives: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// λ of the L2 penalty (bilinear models).
    pub regularization: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 64,
            epochs: 200,
            learning_rate: 0.01,
            margin: 1.0,
            negatives: 1,
            batch_size: 128,
            seed: 42,
            regularization: 1e-4,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |what: &str| Err(TrainError::Config(format!("{what} must be positive")));
        if self.dim == 0 {
            return bad("dim");
        }
        if self.negatives == 0 {
            return bad("negatives");
        }
        if self.batch_size == 0 {
            return bad("batch_size");
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("margin", self.margin),
            ("regularization", self.regularization),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(name);
            }
        }
        Ok(())
    }

    pub fn loss(&self) -> LossConfig {
        LossConfig {
            margin: self.margin,
            regularization: self.regularization,
        }
    }
}

/// Triples over dense ids, plus the set used to filter corruptions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub num_entities: usize,
    pub num_relations: usize,
    pub triples: Vec<TripleIds>,
    pub known: HashSet<TripleIds>,
}

impl TrainingSet {
    pub fn new(num_entities: usize, num_relations: usize, triples: Vec<TripleIds>) -> Self {
        let known = triples.iter().copied().collect();
        TrainingSet { num_entities, num_relations, triples, known }
    }
}

/// Replaces the head or the tail (fair coin) with a uniformly drawn
/// entity, rejecting any triple in `known`. The relation is never
/// corrupted. `None` if no valid corruption turns up within
/// [`MAX_CORRUPTION_DRAWS`] draws.
pub fn negative_sample<R: Rng>(
    (h, r, t): TripleIds,
    num_entities: usize,
    known: &HashSet<TripleIds>,
    rng: &mut R,
) -> Option<TripleIds> {
    if num_entities < 2 {
        return None;
    }
    for _ in 0..MAX_CORRUPTION_DRAWS {
        let e = rng.gen_range(0..num_entities);
        let candidate = if rng.gen_bool(0.5) { (e, r, t) } else { (h, r, e) };
        if !known.contains(&candidate) {
            return Some(candidate);
        }
    }
    None
}

/// Random stream for the monitoring corruptions, separate from the one
/// driving training so that logging never changes the parameters.
const MONITOR_STREAM: u64 = 1;

/// One fixed list of corruptions per training triple, drawn once. Scoring
/// every epoch against the same list makes the logged loss a deterministic
/// function of the parameters instead of a fresh Monte Carlo estimate.
pub fn monitor_negatives(data: &TrainingSet, config: &TrainConfig) -> Vec<Vec<TripleIds>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(MONITOR_STREAM);
    data.triples
        .iter()
        .map(|&pos| {
            (0..config.negatives)
                .filter_map(|_| negative_sample(pos, data.num_entities, &data.known, &mut rng))
                .collect()
        })
        .collect()
}

/// Mean loss over the positives that have monitoring corruptions.
pub fn monitored_loss(params: &ModelParams, data: &TrainingSet, negatives: &[Vec<TripleIds>], cfg: LossConfig) -> f64 {
    let (sum, n) = data
        .triples
        .iter()
        .zip(negatives)
        .filter(|(_, negs)| !negs.is_empty())
        .fold((0.0, 0usize), |(s, n), (&pos, negs)| (s + example_loss(params, pos, negs, cfg), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    /// Mean loss per positive at the end of each epoch, measured against
    /// a fixed set of corruptions (see [`monitor_negatives`]).
    pub epoch_losses: Vec<f64>,
    /// Positives skipped because no negative could be drawn.
    pub skipped: usize,
}

/// Mini-batch SGD. Each batch sums the per-example gradients and applies
/// one step; translation models then renormalize the entity rows the batch
/// touched. A single seeded stream drives initialization, shuffling and
/// negative sampling.
pub fn train(model: ModelKind, data: &TrainingSet, config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    if data.triples.is_empty() {
        return Err(TrainError::EmptyGraph);
    }
    if data.num_entities < 2 {
        return Err(TrainError::TooFewEntities(data.num_entities));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = ModelParams::init(model, config.dim, data.num_entities, data.num_relations, &mut rng);
    let loss_cfg = config.loss();
    let mut order: Vec<usize> = (0..data.triples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut skipped = 0;
    let monitor = monitor_negatives(data, config);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            let mut grad = Gradient::default();
            for &i in batch {
                let pos = data.triples[i];
                let negs: Vec<TripleIds> = (0..config.negatives)
                    .filter_map(|_| negative_sample(pos, data.num_entities, &data.known, &mut rng))
                    .collect();
                if negs.is_empty() {
                    skipped += 1;
                    continue;
                }
                let (_, g) = example_grad(&params, pos, &negs, loss_cfg);
                grad.merge(&g, 1.0);
            }
            if !grad.is_finite() {
                return Err(TrainError::NonFiniteGradient { epoch, batch: batch_no });
            }
            for (block, g) in &grad.blocks {
                for (p, g) in params.block_mut(*block).iter_mut().zip(g) {
                    *p -= config.learning_rate * g;
                }
            }
            if model.is_translational() {
                for block in grad.blocks.keys() {
                    if let Param::Entity(e) = block {
                        params.normalize_entity(*e);
                    }
                }
            }
            // only the touched blocks can have changed
            if !grad.blocks.keys().all(|b| params.block(*b).iter().all(|x| x.is_finite())) {
                return Err(TrainError::NonFiniteParams { epoch, batch: batch_no });
            }
        }
        let loss = monitored_loss(&params, data, &monitor, loss_cfg);
        log::debug!("{model} epoch {epoch}: loss {loss:.6}");
        epoch_losses.push(loss);
    }
    Ok(TrainOutcome { params, epoch_losses, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> TrainingSet {
        TrainingSet::new(4, 1, vec![(0, 0, 1), (1, 0, 2), (2, 0, 3)])
    }

    fn small_config() -> TrainConfig {
        TrainConfig { dim: 8, epochs: 200, ..TrainConfig::default() }
    }

    #[test]
    fn two_entity_graph_corruptions() {
        let known: HashSet<_> = [(0, 0, 1)].into();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = HashSet::new();
        for _ in 0..200 {
            let c = negative_sample((0, 0, 1), 2, &known, &mut rng).unwrap();
            assert!(!known.contains(&c));
            assert_eq!(c.1, 0);
            seen.insert(c);
        }
        // one possibility per corrupted side
        assert_eq!(seen, [(1, 0, 1), (0, 0, 0)].into());
    }

    #[test]
    fn corruption_exhaustion() {
        let known: HashSet<_> = [(0, 0, 1), (1, 0, 1), (0, 0, 0)].into();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(negative_sample((0, 0, 1), 2, &known, &mut rng), None);
        assert_eq!(negative_sample((0, 0, 0), 1, &HashSet::new(), &mut rng), None);
    }

    #[test]
    fn corruption_stream_is_reproducible() {
        let known: HashSet<_> = chain().known;
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| negative_sample((0, 0, 1), 4, &known, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let cfg = TrainConfig { epochs: 0, ..small_config() };
        for model in ModelKind::ALL {
            let out = train(model, &chain(), &cfg).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            assert_eq!(out.params, ModelParams::init(model, 8, 4, 1, &mut rng));
            assert!(out.epoch_losses.is_empty());
        }
    }

    #[test]
    fn same_seed_bit_identical() {
        for model in ModelKind::ALL {
            let a = train(model, &chain(), &TrainConfig { epochs: 20, ..small_config() }).unwrap();
            let b = train(model, &chain(), &TrainConfig { epochs: 20, ..small_config() }).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn transe_separates_positives_from_corruptions() {
        let data = chain();
        let out = train(ModelKind::TransE, &data, &small_config()).unwrap();
        let pos: f64 = data.triples.iter().map(|t| out.params.score(*t)).sum::<f64>() / 3.0;
        let mut negs = Vec::new();
        for h in 0..4 {
            for t in 0..4 {
                if !data.known.contains(&(h, 0, t)) {
                    negs.push(out.params.score((h, 0, t)));
                }
            }
        }
        let neg = negs.iter().sum::<f64>() / negs.len() as f64;
        assert!(pos > neg, "{pos} <= {neg}");
        for e in 0..4 {
            let n: f64 = out.params.entity(e).iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn logged_loss_is_the_objective_at_epoch_end() {
        let data = chain();
        let cfg = TrainConfig { epochs: 30, ..small_config() };
        for model in ModelKind::ALL {
            let out = train(model, &data, &cfg).unwrap();
            let monitor = monitor_negatives(&data, &cfg);
            let last = monitored_loss(&out.params, &data, &monitor, cfg.loss());
            assert_eq!(out.epoch_losses.last().copied(), Some(last), "{model}");
        }
    }

    #[test]
    fn config_validation() {
        let cfg = TrainConfig { learning_rate: 0.0, ..TrainConfig::default() };
        assert!(matches!(train(ModelKind::TransE, &chain(), &cfg), Err(TrainError::Config(_))));
        let empty = TrainingSet::new(4, 1, vec![]);
        assert_eq!(train(ModelKind::TransE, &empty, &small_config()), Err(TrainError::EmptyGraph));
    }

    #[test]
    fn exploding_learning_rate_is_caught() {
        let cfg = TrainConfig { learning_rate: 1e200, regularization: 1e200, epochs: 50, ..small_config() };
        let err = train(ModelKind::DistMult, &chain(), &cfg).unwrap_err();
        assert!(matches!(err, TrainError::NonFiniteGradient { .. } | TrainError::NonFiniteParams { .. }), "{err}");
    }
}
