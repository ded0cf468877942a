mod common;

use common::*;
use hardtsp_core::instance::{hc_reduction, tour_cost, HcGraph, Tour, TspInstance};
use hardtsp_core::tsp::{
    held_karp_dp, heuristic_tour, improve_tour, one_tree_bound, solve_exact, subgradient_bound, ExactConfig, ExactMode,
    TspError,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;

#[test]
fn four_node_instance_has_all_tours_equal() {
    // Each tour's complement is a perfect matching, and all three matchings cost 7.
    let inst = TspInstance::fractional(4, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    for order in [[0, 1, 2, 3], [0, 1, 3, 2], [0, 2, 1, 3]] {
        assert_eq!(tour_cost(&inst, &Tour::new(order.to_vec()).unwrap()).unwrap(), 14.0);
    }
    let r = held_karp_dp(&inst).unwrap();
    assert_eq!(r.value, 14.0);
    assert_eq!(r.value, brute_force_tour(&inst));
    assert!(r.proven_optimal);
}

#[test]
fn unit_metric_values() {
    for n in [3, 7, 12] {
        let inst = TspInstance::uniform(n, 1.0).unwrap();
        assert_eq!(held_karp_dp(&inst).unwrap().value, n as f64);
        assert_eq!(solve_exact(&inst, &ExactConfig::default()).unwrap().value, n as f64);
        assert_eq!(heuristic_tour(&inst, 3, 1).value, n as f64);
    }
}

#[test]
fn dp_matches_enumeration_at_ten_nodes() {
    let mut rng = rng(3);
    for _ in 0..3 {
        let inst = random_metric_int(10, &mut rng);
        let dp = held_karp_dp(&inst).unwrap();
        assert_eq!(dp.value as i64, brute_force_tour_int(&inst));
        assert_eq!(tour_cost(&inst, &dp.tour).unwrap(), dp.value);
    }
}

#[test]
fn dp_matches_enumeration_small_fractional() {
    let mut rng = rng(5);
    for n in 5..=9 {
        let inst = random_euclidean(n, &mut rng);
        let dp = held_karp_dp(&inst).unwrap();
        assert!((dp.value - brute_force_tour(&inst)).abs() < 1e-12);
    }
}

#[test]
fn dp_refuses_oversized_instances() {
    let inst = TspInstance::uniform(21, 1.0).unwrap();
    let cfg = ExactConfig {
        mode: ExactMode::ForceDp,
        ..ExactConfig::default()
    };
    assert!(matches!(
        solve_exact(&inst, &cfg),
        Err(TspError::DpTooLarge { n: 21, .. })
    ));
}

#[test]
fn branch_and_bound_agrees_with_dp() {
    let mut rng = rng(8);
    for k in 0..50 {
        let inst = if k % 2 == 0 {
            random_metric_int(12, &mut rng)
        } else {
            random_euclidean(12, &mut rng)
        };
        let dp = held_karp_dp(&inst).unwrap();
        let bnb = solve_exact(&inst, &ExactConfig::branch_and_bound(k)).unwrap();
        assert!(bnb.proven_optimal);
        assert!(
            (dp.value - bnb.value).abs() < 1e-9,
            "instance {k}: {} vs {}",
            dp.value,
            bnb.value
        );
        assert!((tour_cost(&inst, &bnb.tour).unwrap() - bnb.value).abs() < 1e-9);
        assert!(bnb.nodes_explored >= 1);
    }
}

#[test]
fn branch_and_bound_node_count_is_deterministic() {
    let mut rng = rng(9);
    let inst = random_euclidean(14, &mut rng);
    let a = solve_exact(&inst, &ExactConfig::branch_and_bound(4)).unwrap();
    let b = solve_exact(&inst, &ExactConfig::branch_and_bound(4)).unwrap();
    assert_eq!(a.nodes_explored, b.nodes_explored);
    assert_eq!(a.tour, b.tour);
}

#[test]
fn branch_and_bound_beyond_dp_threshold() {
    let mut rng = rng(10);
    let inst = random_euclidean(18, &mut rng);
    let dp = held_karp_dp(&inst).unwrap();
    let auto = solve_exact(&inst, &ExactConfig::default()).unwrap();
    assert!(auto.proven_optimal);
    assert!((dp.value - auto.value).abs() < 1e-9);
}

#[test]
fn one_tree_on_unit_metric() {
    let inst = TspInstance::uniform(6, 1.0).unwrap();
    assert_eq!(one_tree_bound(&inst, &[0.0; 6]), 6.0);
}

#[test]
fn one_tree_bounds_never_exceed_optimum() {
    let mut rng = rng(11);
    for k in 0..100 {
        let inst = if k % 2 == 0 {
            random_metric_int(10, &mut rng)
        } else {
            random_euclidean(10, &mut rng)
        };
        let opt = held_karp_dp(&inst).unwrap().value;
        let zero = one_tree_bound(&inst, &[0.0; 10]);
        assert!(zero <= opt + 1e-9);
        let (best, pi) = subgradient_bound(&inst, 50, Some(opt));
        assert!(best >= zero - 1e-12);
        assert!(best <= opt + 1e-9);
        assert!((one_tree_bound(&inst, &pi) - best).abs() < 1e-9);
    }
}

#[test]
fn heuristic_is_near_optimal_on_small_instances() {
    let mut rng = rng(12);
    let mut within = 0;
    for seed in 0..100 {
        let inst = random_euclidean(10, &mut rng);
        let opt = held_karp_dp(&inst).unwrap().value;
        let h = heuristic_tour(&inst, 20, seed);
        assert!(h.value >= opt - 1e-9);
        assert!((tour_cost(&inst, &h.tour).unwrap() - h.value).abs() < 1e-9);
        if h.value <= 1.05 * opt {
            within += 1;
        }
    }
    println!("heuristic within 5% of optimum on {within}/100 instances");
    assert!(within >= 95);
}

#[test]
fn local_search_improves_crossing_tour() {
    // Square with a crossing tour 0-2-1-3.
    let m = vec![
        vec![0.0, 1.0, 1.5, 1.0],
        vec![1.0, 0.0, 1.0, 1.5],
        vec![1.5, 1.0, 0.0, 1.0],
        vec![1.0, 1.5, 1.0, 0.0],
    ];
    let inst = TspInstance::from_matrix_f64(&m).unwrap();
    let start = Tour::new(vec![0, 2, 1, 3]).unwrap();
    let before = tour_cost(&inst, &start).unwrap();
    let (t, after) = improve_tour(&inst, &start);
    assert!(after < before);
    assert_eq!(after, 4.0);
    assert_eq!(tour_cost(&inst, &t).unwrap(), after);
}

#[test]
fn infinite_cutoff_equals_no_cutoff() {
    let mut rng = rng(13);
    let inst = random_euclidean(11, &mut rng);
    let a = solve_exact(&inst, &ExactConfig::default()).unwrap();
    let b = solve_exact(&inst, &ExactConfig::with_cutoff(f64::INFINITY)).unwrap();
    assert!(a.proven_optimal && b.proven_optimal);
    assert_eq!(a.value, b.value);
}

#[test]
fn cutoff_early_exit_returns_cheaper_tour() {
    let mut rng = rng(14);
    for mode in [ExactMode::Auto, ExactMode::ForceBranchAndBound] {
        let inst = random_euclidean(12, &mut rng);
        let opt = held_karp_dp(&inst).unwrap().value;
        let cfg = ExactConfig {
            cutoff: Some(opt * 1.2),
            mode,
            ..ExactConfig::default()
        };
        let r = solve_exact(&inst, &cfg).unwrap();
        assert!(r.value < opt * 1.2);
        assert!((tour_cost(&inst, &r.tour).unwrap() - r.value).abs() < 1e-12);

        let cfg = ExactConfig {
            cutoff: Some(opt),
            mode,
            ..ExactConfig::default()
        };
        let r = solve_exact(&inst, &cfg).unwrap();
        assert!(r.proven_optimal);
        assert!(r.certifies_at_least(opt - 1e-9));
    }
}

#[test]
fn hamiltonian_reduction_decides_cycles() {
    let c5 = hc_reduction(&HcGraph::cycle(5), 0.1).unwrap();
    let r = solve_exact(&c5, &ExactConfig::default()).unwrap();
    assert!((r.value - 0.95).abs() < 1e-12);

    let star = hc_reduction(&HcGraph::star(4), 0.1).unwrap();
    assert!(brute_force_tour(&star) >= 1.0);

    let petersen = hc_reduction(&HcGraph::petersen(), 0.1).unwrap();
    assert!(brute_force_tour(&petersen) >= 1.0);
    for mode in [ExactMode::Auto, ExactMode::ForceBranchAndBound] {
        let cfg = ExactConfig {
            cutoff: Some(1.0),
            mode,
            ..ExactConfig::default()
        };
        let r = solve_exact(&petersen, &cfg).unwrap();
        assert!(r.value >= 1.0 && r.proven_optimal);
        assert!(r.certifies_at_least(1.0));
    }
}

#[test]
fn exact_is_lower_bound_over_random_tours() {
    let mut rng = rng(15);
    let inst = random_euclidean(9, &mut rng);
    let opt = solve_exact(&inst, &ExactConfig::default()).unwrap().value;
    let mut order: Vec<usize> = (0..9).collect();
    for _ in 0..200 {
        order.shuffle(&mut rng);
        assert!(opt <= tour_cost(&inst, &Tour::new(order.clone()).unwrap()).unwrap() + 1e-12);
    }
}

proptest! {
    #[test]
    fn tour_cost_invariant_under_rotation_and_reversal(seed in 0u64..1000, shift in 0usize..9) {
        let mut r = rng(seed);
        let inst = random_euclidean(9, &mut r);
        let mut order: Vec<usize> = (0..9).collect();
        order.shuffle(&mut r);
        let base = tour_cost(&inst, &Tour::new(order.clone()).unwrap()).unwrap();
        let mut rotated = order.clone();
        rotated.rotate_left(shift);
        let mut reversed = order.clone();
        reversed.reverse();
        prop_assert!((tour_cost(&inst, &Tour::new(rotated).unwrap()).unwrap() - base).abs() < 1e-12);
        prop_assert!((tour_cost(&inst, &Tour::new(reversed).unwrap()).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn heuristic_never_beats_exact(seed in 0u64..1000) {
        let mut r = rng(seed);
        let inst = random_metric_int(8, &mut r);
        let opt = held_karp_dp(&inst).unwrap().value;
        let h = heuristic_tour(&inst, 3, seed);
        prop_assert!(h.value >= opt);
        prop_assert!(one_tree_bound(&inst, &[0.0; 8]) <= opt);
    }
}
