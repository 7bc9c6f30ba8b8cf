//! Training losses and a finite-difference gradient check.
//!
//! Translation models use the margin ranking loss
//! `Σ max(0, γ - s(pos) + s(neg))`. Bilinear models use the logistic loss
//! `softplus(-s(pos)) + Σ softplus(s(neg))` plus `λ‖θ‖²` over every block
//! each triple touches.

use super::model::{Gradient, ModelKind, ModelParams, Param, TripleIds};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub margin: f64,
    pub regularization: f64,
}

pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn touched_blocks(model: ModelKind, (h, r, t): TripleIds) -> Vec<Param> {
    let mut blocks = vec![Param::Entity(h), Param::Entity(t)];
    if model != ModelKind::Rescal {
        blocks.push(Param::Relation(r));
    }
    if model.has_matrices() {
        blocks.push(Param::Matrix(r));
    }
    blocks
}

fn squared_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Loss of one positive against its negatives.
pub fn example_loss(params: &ModelParams, pos: TripleIds, negs: &[TripleIds], cfg: LossConfig) -> f64 {
    let s_pos = params.score(pos);
    if params.model.is_translational() {
        return negs
            .iter()
            .map(|n| (cfg.margin - s_pos + params.score(*n)).max(0.0))
            .sum();
    }
    let mut loss = softplus(-s_pos) + negs.iter().map(|n| softplus(params.score(*n))).sum::<f64>();
    for triple in std::iter::once(&pos).chain(negs) {
        for block in touched_blocks(params.model, *triple) {
            loss += cfg.regularization * squared_norm(params.block(block));
        }
    }
    loss
}

/// Loss and its gradient. At a hinge kink the inactive branch is taken.
pub fn example_grad(
    params: &ModelParams,
    pos: TripleIds,
    negs: &[TripleIds],
    cfg: LossConfig,
) -> (f64, Gradient) {
    let mut grad = Gradient::default();
    let s_pos = params.score(pos);
    let pos_grad = params.score_grad(pos);
    if params.model.is_translational() {
        let mut loss = 0.0;
        for n in negs {
            let hinge = cfg.margin - s_pos + params.score(*n);
            if hinge > 0.0 {
                loss += hinge;
                grad.merge(&pos_grad, -1.0);
                grad.merge(&params.score_grad(*n), 1.0);
            }
        }
        return (loss, grad);
    }

    let mut loss = softplus(-s_pos);
    grad.merge(&pos_grad, -sigmoid(-s_pos));
    for n in negs {
        let s = params.score(*n);
        loss += softplus(s);
        grad.merge(&params.score_grad(*n), sigmoid(s));
    }
    for triple in std::iter::once(&pos).chain(negs) {
        for block in touched_blocks(params.model, *triple) {
            let values = params.block(block);
            loss += cfg.regularization * squared_norm(values);
            grad.add(block, values, 2.0 * cfg.regularization);
        }
    }
    (loss, grad)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradCheck {
    Checked { max_relative_error: f64, coordinates: usize },
    /// The loss is not differentiable at this point.
    NonDifferentiable(&'static str),
}

/// Central-difference step used by [`gradient_check`].
pub const FD_STEP: f64 = 1e-5;
/// Points this close to a hinge kink or a zero translation distance are
/// not checked.
pub const KINK_TOLERANCE: f64 = 1e-3;
/// Denominator floor for relative errors of near-zero gradients. Central
/// differences carry rounding noise of roughly `ε·|loss| / FD_STEP`
/// (about 2e-11 for unit-scale losses), which must not be divided by a
/// smaller number.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// Compares the analytic gradient of [`example_loss`] for `(pos, [neg])`
/// with central finite differences over every coordinate of every block
/// the two triples touch. Returns the largest
/// `|analytic - numeric| / max(|analytic|, |numeric|, RELATIVE_FLOOR)`.
pub fn gradient_check(params: &ModelParams, pos: TripleIds, neg: TripleIds, cfg: LossConfig) -> GradCheck {
    if params.model.is_translational() {
        for t in [pos, neg] {
            if params.translation_distance(t).is_some_and(|d| d < KINK_TOLERANCE) {
                return GradCheck::NonDifferentiable("zero translation distance");
            }
        }
        if (cfg.margin - params.score(pos) + params.score(neg)).abs() < KINK_TOLERANCE {
            return GradCheck::NonDifferentiable("margin hinge");
        }
    }

    let (_, analytic) = example_grad(params, pos, &[neg], cfg);
    let mut blocks = touched_blocks(params.model, pos);
    blocks.extend(touched_blocks(params.model, neg));
    blocks.sort();
    blocks.dedup();

    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    let mut coordinates = 0;
    for block in blocks {
        let len = params.block(block).len();
        for i in 0..len {
            let original = params.block(block)[i];
            probe.block_mut(block)[i] = original + FD_STEP;
            let up = example_loss(&probe, pos, &[neg], cfg);
            probe.block_mut(block)[i] = original - FD_STEP;
            let down = example_loss(&probe, pos, &[neg], cfg);
            probe.block_mut(block)[i] = original;

            let numeric = (up - down) / (2.0 * FD_STEP);
            let a = analytic.blocks.get(&block).map_or(0.0, |g| g[i]);
            let denom = a.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
            worst = worst.max((a - numeric).abs() / denom);
            coordinates += 1;
        }
    }
    GradCheck::Checked { max_relative_error: worst, coordinates }
}
