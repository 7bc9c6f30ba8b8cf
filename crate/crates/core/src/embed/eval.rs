//! Filtered link-prediction evaluation (tail prediction).

use std::collections::HashSet;

use rayon::prelude::*;

use super::model::{ModelParams, TripleIds};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPredictionMetrics {
    pub mrr: f64,
    pub hits_at_1: f64,
    pub hits_at_3: f64,
    pub hits_at_10: f64,
    pub count: usize,
}

/// Rank of the true tail among all entities, skipping other tails that
/// form known triples. Ties count half (expected rank under random tie
/// breaking), so the rank may be fractional.
pub fn filtered_tail_rank(params: &ModelParams, (h, r, t): TripleIds, known: &HashSet<TripleIds>) -> f64 {
    let target = params.score((h, r, t));
    let mut better = 0usize;
    let mut tied = 0usize;
    for e in 0..params.num_entities {
        if e == t || known.contains(&(h, r, e)) {
            continue;
        }
        let s = params.score((h, r, e));
        if s > target {
            better += 1;
        } else if s == target {
            tied += 1;
        }
    }
    1.0 + better as f64 + tied as f64 / 2.0
}

pub fn evaluate_link_prediction(
    params: &ModelParams,
    test: &[TripleIds],
    known: &HashSet<TripleIds>,
) -> LinkPredictionMetrics {
    let ranks: Vec<f64> = test.par_iter().map(|t| filtered_tail_rank(params, *t, known)).collect();
    let n = ranks.len().max(1) as f64;
    let hits = |k: f64| ranks.iter().filter(|r| **r <= k).count() as f64 / n;
    LinkPredictionMetrics {
        mrr: ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n,
        hits_at_1: hits(1.0),
        hits_at_3: hits(3.0),
        hits_at_10: hits(10.0),
        count: ranks.len(),
    }
}

/// Number of candidates a test triple is ranked among after filtering
/// (the true tail included).
pub fn filtered_candidate_count(num_entities: usize, (h, r, t): TripleIds, known: &HashSet<TripleIds>) -> usize {
    (0..num_entities).filter(|&e| e == t || !known.contains(&(h, r, e))).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::model::ModelKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// DistMult params on one dimension where entity i has value i, so the
    /// tail with the largest index always scores highest.
    fn ordered(n: usize) -> ModelParams {
        let mut p = ModelParams::init(ModelKind::DistMult, 1, n, 1, &mut ChaCha8Rng::seed_from_u64(0));
        p.entity_vecs = (0..n).map(|i| i as f64 + 1.0).collect();
        p.relation_vecs = vec![1.0];
        p
    }

    #[test]
    fn perfect_scores_give_mrr_one() {
        let p = ordered(5);
        let m = evaluate_link_prediction(&p, &[(0, 0, 4), (1, 0, 4), (2, 0, 4)], &HashSet::new());
        assert_eq!(m.mrr, 1.0);
        assert_eq!(m.hits_at_1, 1.0);
    }

    #[test]
    fn second_place() {
        let p = ordered(5);
        let m = evaluate_link_prediction(&p, &[(0, 0, 3)], &HashSet::new());
        assert_eq!((m.mrr, m.hits_at_1, m.hits_at_3, m.hits_at_10), (0.5, 0.0, 1.0, 1.0));
    }

    #[test]
    fn known_positives_are_filtered() {
        let p = ordered(5);
        let known: HashSet<_> = [(0, 0, 4), (0, 0, 3)].into();
        assert_eq!(filtered_tail_rank(&p, (0, 0, 3), &known), 1.0);
        assert_eq!(filtered_candidate_count(5, (0, 0, 3), &known), 4);
    }

    #[test]
    fn ties_count_half() {
        let mut p = ordered(3);
        p.entity_vecs = vec![1.0, 1.0, 1.0];
        assert_eq!(filtered_tail_rank(&p, (0, 0, 1), &HashSet::new()), 2.0);
    }
}
