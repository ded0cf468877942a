mod common;

use common::*;
use hardtsp_core::instance::{edge_index, num_edges, EdgeVector, TspInstance};
use hardtsp_core::sep::{min_cut, separate_subtour, solve_sep, subtour_row, CUT_TOL};
use hardtsp_lp::{solve, LinearProgram, Row, Sense, Simplex, SolverConfig};

/// SEP with every subtour row written out: `S` ranges over subsets of
/// `1..n` with `3 <= |S| <= n-3`.
fn full_subset_lp(inst: &TspInstance) -> f64 {
    let n = inst.n();
    let mut lp = degree_lp(inst);
    for mask in 1u32..(1 << (n - 1)) {
        let size = mask.count_ones() as usize;
        if size < 3 || size > n - 3 {
            continue;
        }
        let set: Vec<usize> = (1..n).filter(|&v| mask & (1 << (v - 1)) != 0).collect();
        lp.add_row(subtour_row(n, &set)).unwrap();
    }
    let sol = solve(&lp, &SolverConfig::default());
    assert!(sol.is_optimal());
    sol.objective
}

fn degree_lp(inst: &TspInstance) -> LinearProgram {
    let n = inst.n();
    let mut lp = LinearProgram::with_objective(inst.costs_f64());
    for e in 0..num_edges(n) {
        lp.set_bounds(e, 0.0, 1.0).unwrap();
    }
    for v in 0..n {
        let coeffs = (0..n).filter(|&u| u != v).map(|u| (edge_index(n, u, v), 1.0)).collect();
        lp.add_row(Row::new(coeffs, Sense::Eq, 2.0)).unwrap();
    }
    lp
}

/// Minimum of `x(delta(S))` over all nonempty proper `S` avoiding node 0,
/// and every `S` attaining it.
fn brute_force_cuts(x: &EdgeVector) -> (f64, Vec<Vec<usize>>) {
    let n = x.n();
    let mut best = f64::INFINITY;
    let mut sets = Vec::new();
    for mask in 1u32..(1 << (n - 1)) {
        let mut in_s = vec![false; n];
        for v in 1..n {
            in_s[v] = mask & (1 << (v - 1)) != 0;
        }
        let value = x.cut_value(&in_s);
        let set: Vec<usize> = (0..n).filter(|&v| in_s[v]).collect();
        if value < best - 1e-9 {
            best = value;
            sets = vec![set];
        } else if (value - best).abs() <= 1e-9 {
            sets.push(set);
        }
    }
    (best, sets)
}

/// LP optima seen along a manual cutting-plane run (degree LP first).
fn intermediate_points(inst: &TspInstance) -> Vec<EdgeVector> {
    let n = inst.n();
    let mut simplex = Simplex::new(&degree_lp(inst), SolverConfig::default());
    let mut sol = simplex.solve();
    let mut out = Vec::new();
    loop {
        let x = EdgeVector::new(n, sol.x.iter().map(|v| v.clamp(0.0, 1.0)).collect()).unwrap();
        out.push(x.clone());
        match separate_subtour(&x) {
            Some(cut) => sol = simplex.add_rows_and_resolve(&[subtour_row(n, &cut.set)]).unwrap(),
            None => return out,
        }
    }
}

#[test]
fn unit_metric_is_integral() {
    let inst = TspInstance::uniform(6, 1.0).unwrap();
    let s = solve_sep(&inst).unwrap();
    assert!((s.value - 6.0).abs() < 1e-9);
    assert!(!s.fractional);
}

#[test]
fn cutting_planes_match_full_subset_lp() {
    let mut rng = rng(21);
    for k in 0..6 {
        let inst = if k % 2 == 0 {
            random_euclidean(8, &mut rng)
        } else {
            random_metric_int(8, &mut rng)
        };
        let s = solve_sep(&inst).unwrap();
        let full = full_subset_lp(&inst);
        assert!((s.value - full).abs() < 1e-6, "{} vs {full}", s.value);
    }
}

#[test]
fn solution_satisfies_relaxation_certificate() {
    let mut rng = rng(22);
    for _ in 0..10 {
        let inst = random_euclidean(11, &mut rng);
        let s = solve_sep(&inst).unwrap();
        let (deg, cut) = s.certificate();
        assert!(deg < 1e-7);
        assert!(cut >= 2.0 - CUT_TOL);
        assert!(s.x.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!((s.x.dot(&inst.costs_f64()) - s.value).abs() < 1e-9);
        assert_eq!(s.n_cuts_added(), s.rounds);
        // Basic solution: at most one basic column per row of the final LP.
        assert!(s.basic_edges.len() <= inst.n() + s.n_cuts_added());
        for (e, &v) in s.x.values().iter().enumerate() {
            if !s.basic_edges.contains(&e) {
                assert!(!(1e-9..=1.0 - 1e-9).contains(&v));
            }
        }
    }
}

#[test]
fn objectives_never_decrease_across_rounds() {
    let mut rng = rng(23);
    for _ in 0..10 {
        let inst = random_euclidean(8, &mut rng);
        let s = solve_sep(&inst).unwrap();
        for w in s.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
        let degree_only = solve(&degree_lp(&inst), &SolverConfig::default()).objective;
        assert!((s.objective_trace[0] - degree_only).abs() < 1e-9);
    }
}

#[test]
fn min_cut_matches_exhaustive_search_on_intermediate_points() {
    let mut rng = rng(24);
    let mut checked = 0;
    for _ in 0..10 {
        let inst = random_euclidean(9, &mut rng);
        for x in intermediate_points(&inst) {
            let (best, sets) = brute_force_cuts(&x);
            let cut = min_cut(&x);
            assert!((cut.value - best).abs() < 1e-9);
            assert!(sets.contains(&cut.set));
            if sets.len() == 1 {
                assert_eq!(cut.set, sets[0]);
            }
            assert_eq!(separate_subtour(&x).is_some(), best < 2.0 - CUT_TOL);
            checked += 1;
        }
    }
    assert!(checked >= 10);
}

#[test]
fn scaling_costs_keeps_the_optimal_support() {
    let mut rng = rng(25);
    for _ in 0..5 {
        let inst = random_euclidean(10, &mut rng);
        let base = solve_sep(&inst).unwrap();
        // Powers of two scale every float exactly, so the pivot path is unchanged.
        for gamma in [0.25, 8.0] {
            let scaled = solve_sep(&inst.scaled(gamma).unwrap()).unwrap();
            assert_eq!(scaled.support(), base.support());
            assert_eq!(scaled.basic_edges, base.basic_edges);
            assert!((scaled.value - gamma * base.value).abs() < 1e-9 * gamma.max(1.0));
        }
    }
}

#[test]
fn relaxation_never_exceeds_optimal_tour() {
    let mut rng = rng(26);
    for _ in 0..20 {
        let inst = random_euclidean(9, &mut rng);
        let s = solve_sep(&inst).unwrap();
        assert!(s.value <= brute_force_tour(&inst) + 1e-9);
    }
}
