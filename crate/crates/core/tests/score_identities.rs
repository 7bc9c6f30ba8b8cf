use kgef_core::embed::model::{distmult_score, rescal_score, transe_score, transr_score};
use kgef_core::embed::{ModelKind, ModelParams};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vector(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, d)
}

fn identity(d: usize) -> Vec<f64> {
    (0..d * d).map(|i| if i / d == i % d { 1.0 } else { 0.0 }).collect()
}

fn diag(v: &[f64]) -> Vec<f64> {
    let d = v.len();
    (0..d * d).map(|i| if i / d == i % d { v[i / d] } else { 0.0 }).collect()
}

proptest! {
    #[test]
    fn transr_with_identity_is_transe((h, r, t) in (1usize..12).prop_flat_map(|d| (vector(d), vector(d), vector(d)))) {
        let d = h.len();
        prop_assert!((transr_score(&identity(d), &h, &r, &t) - transe_score(&h, &r, &t)).abs() < 1e-12);
    }

    #[test]
    fn rescal_with_diagonal_is_distmult((h, r, t) in (1usize..12).prop_flat_map(|d| (vector(d), vector(d), vector(d)))) {
        let a = rescal_score(&diag(&r), &h, &t);
        let b = distmult_score(&h, &r, &t);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }

    #[test]
    fn transe_ignores_a_shared_shift((h, r, t, s) in (1usize..12).prop_flat_map(|d| (vector(d), vector(d), vector(d), vector(d)))) {
        let shift = |v: &[f64]| v.iter().zip(&s).map(|(a, b)| a + b).collect::<Vec<_>>();
        let before = transe_score(&h, &r, &t);
        let after = transe_score(&shift(&h), &r, &shift(&t));
        prop_assert!((before - after).abs() < 1e-9);
    }

    #[test]
    fn transr_ignores_a_shared_shift_in_the_null_space((h, r, t, s) in (2usize..8).prop_flat_map(|d| (vector(d), vector(d), vector(d), vector(d)))) {
        // M projects out the first coordinate, so shifting it changes nothing
        let d = h.len();
        let mut m = identity(d);
        m[0] = 0.0;
        let mut h2 = h.clone();
        let mut t2 = t.clone();
        h2[0] += s[0];
        t2[0] += s[0] * 0.5;
        prop_assert!((transr_score(&m, &h, &r, &t) - transr_score(&m, &h2, &r, &t2)).abs() < 1e-12);
    }

    #[test]
    fn scores_are_symmetric_where_expected((h, r, t) in (1usize..12).prop_flat_map(|d| (vector(d), vector(d), vector(d)))) {
        // DistMult cannot tell head from tail; TransE's distance is symmetric under r -> -r
        prop_assert!((distmult_score(&h, &r, &t) - distmult_score(&t, &r, &h)).abs() < 1e-12);
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        prop_assert!((transe_score(&h, &r, &t) - transe_score(&t, &neg, &h)).abs() < 1e-12);
    }
}

#[test]
fn params_score_matches_the_free_functions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for model in ModelKind::ALL {
        let p = ModelParams::init(model, 5, 6, 2, &mut rng);
        for (h, r, t) in [(0, 0, 1), (2, 1, 5), (4, 1, 4)] {
            let (hv, rv, tv) = (p.entity(h), p.relation(r), p.entity(t));
            let expected = match model {
                ModelKind::TransE => transe_score(hv, rv, tv),
                ModelKind::TransR => transr_score(p.matrix(r), hv, rv, tv),
                ModelKind::DistMult => distmult_score(hv, rv, tv),
                ModelKind::Rescal => rescal_score(p.matrix(r), hv, tv),
            };
            assert_eq!(p.score((h, r, t)), expected, "{model}");
        }
    }
}
