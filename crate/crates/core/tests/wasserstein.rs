mod common;

use common::{min_cost_assignment_hungarian, min_cost_matching_dp, w1_by_replication};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ultimatum_sim::eval::{wasserstein1, EmpiricalDistribution};

fn dist(v: &[f64]) -> EmpiricalDistribution {
    EmpiricalDistribution::new(v.to_vec()).unwrap()
}

fn grid_samples(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0u32..=100).prop_map(|c| f64::from(c) / 100.0), 1..=max_len)
}

#[test]
fn sorted_matching_example() {
    // equal-size oracle: mean |a_(i) - b_(i)| = (0.5 + 0.5) / 2
    assert_eq!(w1_by_replication(&[0.0, 1.0], &[0.5, 0.5]), 0.5);
    assert_eq!(wasserstein1(&dist(&[0.0, 1.0]), &dist(&[0.5, 0.5])), 0.5);
}

#[test]
fn oracles_agree_with_each_other() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let n = rng.gen_range(1..=9);
        let a: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let dp = min_cost_matching_dp(&a, &b);
        let hu = min_cost_assignment_hungarian(&a, &b);
        assert!((dp - hu).abs() < 1e-12, "{dp} vs {hu}");
    }
}

#[test]
fn thirty_sample_pairs_match_assignment_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for _ in 0..40 {
        let a: Vec<f64> = (0..30).map(|_| rng.gen::<f64>()).collect();
        let b: Vec<f64> = (0..30).map(|_| rng.gen::<f64>()).collect();
        let oracle = min_cost_assignment_hungarian(&a, &b);
        let got = wasserstein1(&dist(&a), &dist(&b));
        assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
    }
}

proptest! {
    #[test]
    fn equal_size_matches_brute_force(pair in (1usize..=10).prop_flat_map(|n| (
        prop::collection::vec((0u32..=100).prop_map(|c| f64::from(c) / 100.0), n),
        prop::collection::vec((0u32..=100).prop_map(|c| f64::from(c) / 100.0), n),
    ))) {
        let (a, b) = pair;
        let got = wasserstein1(&dist(&a), &dist(&b));
        prop_assert!((got - min_cost_matching_dp(&a, &b)).abs() < 1e-9);
    }

    #[test]
    fn unequal_size_matches_replication(a in grid_samples(12), b in grid_samples(12)) {
        let got = wasserstein1(&dist(&a), &dist(&b));
        prop_assert!((got - w1_by_replication(&a, &b)).abs() < 1e-9);
    }

    #[test]
    fn metric_axioms(a in grid_samples(15), b in grid_samples(15), c in grid_samples(15)) {
        let (da, db, dc) = (dist(&a), dist(&b), dist(&c));
        let ab = wasserstein1(&da, &db);
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, wasserstein1(&db, &da));
        prop_assert_eq!(wasserstein1(&da, &da), 0.0);
        prop_assert!(wasserstein1(&da, &dc) <= ab + wasserstein1(&db, &dc) + 1e-9);
    }

    #[test]
    fn permutation_invariant(mut a in grid_samples(15), b in grid_samples(15)) {
        let before = wasserstein1(&dist(&a), &dist(&b));
        a.reverse();
        prop_assert_eq!(before, wasserstein1(&dist(&a), &dist(&b)));
    }

    #[test]
    fn translation_against_point_mass(
        cs in prop::collection::vec(20u32..=80, 1..20),
        shift in -20i32..=20,
    ) {
        let a: Vec<f64> = cs.iter().map(|c| f64::from(*c) / 100.0).collect();
        let shifted: Vec<f64> = cs.iter().map(|c| f64::from(*c as i32 + shift) / 100.0).collect();
        let delta = f64::from(shift.abs()) / 100.0;
        prop_assert!((wasserstein1(&dist(&a), &dist(&shifted)) - delta).abs() < 1e-12);
        // point masses at the ends of [0, 1] never sit between samples
        for point in [0.0, 1.0] {
            let p = dist(&[point]);
            let change = wasserstein1(&dist(&shifted), &p) - wasserstein1(&dist(&a), &p);
            prop_assert!((change.abs() - delta).abs() < 1e-12);
        }
    }
}
