use hardtsp_lp::{solve, LinearProgram, LpStatus, Row, Sense, Simplex, SolverConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Brute-force optimum of a bounded LP: every basic solution is formed by
/// making `n` of the rows/bounds tight and the best feasible one is kept.
/// Returns `None` when no vertex is feasible.
fn vertex_oracle(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in lp.rows() {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            a[j] += v;
        }
        planes.push((a, row.rhs));
    }
    for j in 0..n {
        for b in [lp.lower()[j], lp.upper()[j]] {
            if b.is_finite() {
                let mut a = vec![0.0; n];
                a[j] = 1.0;
                planes.push((a, b));
            }
        }
    }
    let mut best: Option<f64> = None;
    let mut pick = Vec::new();
    choose(planes.len(), n, 0, &mut pick, &mut |idx| {
        let mut m: Vec<Vec<f64>> = idx
            .iter()
            .map(|&k| {
                let mut r = planes[k].0.clone();
                r.push(planes[k].1);
                r
            })
            .collect();
        if let Some(x) = gauss(&mut m) {
            if lp.max_violation(&x) <= 1e-7 {
                let obj = lp.objective_value(&x);
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
    });
    best
}

fn choose(total: usize, k: usize, start: usize, pick: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for i in start..total {
        pick.push(i);
        choose(total, k, i + 1, pick, f);
        pick.pop();
    }
}

fn gauss(m: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = m.len();
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().partial_cmp(&m[b][c].abs()).unwrap())?;
        if m[p][c].abs() < 1e-9 {
            return None;
        }
        m.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

fn random_boxed_lp(rng: &mut ChaCha8Rng, n: usize, m: usize) -> LinearProgram {
    let obj = (0..n).map(|_| rng.gen_range(-5i32..=5) as f64).collect();
    let mut lp = LinearProgram::with_objective(obj);
    for j in 0..n {
        let lo = rng.gen_range(-3i32..=1) as f64;
        let hi = lo + rng.gen_range(1i32..=4) as f64;
        lp.set_bounds(j, lo, hi).unwrap();
    }
    for _ in 0..m {
        let coeffs = (0..n)
            .filter_map(|j| {
                let v = rng.gen_range(-4i32..=4);
                (v != 0).then_some((j, v as f64))
            })
            .collect();
        let sense = match rng.gen_range(0..5) {
            0 => Sense::Eq,
            1 | 2 => Sense::Ge,
            _ => Sense::Le,
        };
        lp.add_row(Row::new(coeffs, sense, rng.gen_range(-6i32..=6) as f64))
            .unwrap();
    }
    lp
}

#[test]
fn textbook_maximization() {
    // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 has optimum 36 at (2, 6).
    let mut lp = LinearProgram::with_objective(vec![-3.0, -5.0]);
    lp.add_row(Row::new(vec![(0, 1.0)], Sense::Le, 4.0)).unwrap();
    lp.add_row(Row::new(vec![(1, 2.0)], Sense::Le, 12.0)).unwrap();
    lp.add_row(Row::new(vec![(0, 3.0), (1, 2.0)], Sense::Le, 18.0)).unwrap();
    let sol = solve(&lp, &SolverConfig::default());
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective + 36.0).abs() < 1e-9);
    assert!((sol.x[0] - 2.0).abs() < 1e-9 && (sol.x[1] - 6.0).abs() < 1e-9);
    // Reduced costs c - A^T y are nonnegative at the optimum of a minimization.
    let duals = &sol.duals;
    assert!(duals[0].abs() < 1e-9);
    assert!((duals[1] + 1.5).abs() < 1e-9);
    assert!((duals[2] + 1.0).abs() < 1e-9);
}

#[test]
fn equality_and_ge_rows() {
    // min x + y + z s.t. x + y = 3, y + z >= 4, x - z <= 0.
    let mut lp = LinearProgram::with_objective(vec![1.0, 1.0, 1.0]);
    lp.add_row(Row::new(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 3.0)).unwrap();
    lp.add_row(Row::new(vec![(1, 1.0), (2, 1.0)], Sense::Ge, 4.0)).unwrap();
    lp.add_row(Row::new(vec![(0, 1.0), (2, -1.0)], Sense::Le, 0.0)).unwrap();
    let sol = solve(&lp, &SolverConfig::default());
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective - 4.0).abs() < 1e-9);
    assert!(lp.max_violation(&sol.x) < 1e-9);
}

#[test]
fn detects_infeasibility() {
    let mut lp = LinearProgram::with_objective(vec![1.0, 1.0]);
    lp.set_bounds(0, 0.0, 1.0).unwrap();
    lp.set_bounds(1, 0.0, 1.0).unwrap();
    lp.add_row(Row::new(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 3.0)).unwrap();
    assert_eq!(solve(&lp, &SolverConfig::default()).status, LpStatus::Infeasible);

    let mut lp = LinearProgram::with_objective(vec![1.0]);
    lp.add_row(Row::new(vec![(0, 1.0)], Sense::Ge, 2.0)).unwrap();
    lp.add_row(Row::new(vec![(0, 1.0)], Sense::Le, 1.0)).unwrap();
    assert_eq!(solve(&lp, &SolverConfig::default()).status, LpStatus::Infeasible);
}

#[test]
fn detects_unboundedness() {
    let mut lp = LinearProgram::with_objective(vec![-1.0, 0.0]);
    lp.add_row(Row::new(vec![(0, 1.0), (1, -1.0)], Sense::Le, 1.0)).unwrap();
    assert_eq!(solve(&lp, &SolverConfig::default()).status, LpStatus::Unbounded);
}

#[test]
fn free_variables() {
    // min |x - 2| written as min t with t >= x - 2, t >= 2 - x and x free.
    let mut lp = LinearProgram::with_objective(vec![0.0, 1.0]);
    lp.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY).unwrap();
    lp.add_row(Row::new(vec![(1, 1.0), (0, -1.0)], Sense::Ge, -2.0))
        .unwrap();
    lp.add_row(Row::new(vec![(1, 1.0), (0, 1.0)], Sense::Ge, 2.0)).unwrap();
    let sol = solve(&lp, &SolverConfig::default());
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!(sol.objective.abs() < 1e-9);
    assert!((sol.x[0] - 2.0).abs() < 1e-9);
}

#[test]
fn beale_cycling_example() {
    // Cycles under the textbook largest-coefficient rule without anti-cycling.
    let mut lp = LinearProgram::with_objective(vec![-0.75, 150.0, -0.02, 6.0]);
    lp.add_row(Row::new(
        vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)],
        Sense::Le,
        0.0,
    ))
    .unwrap();
    lp.add_row(Row::new(
        vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)],
        Sense::Le,
        0.0,
    ))
    .unwrap();
    lp.add_row(Row::new(vec![(2, 1.0)], Sense::Le, 1.0)).unwrap();
    let sol = solve(&lp, &SolverConfig::default());
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective + 0.05).abs() < 1e-9);

    let tight = SolverConfig {
        bland_after_stall: 1,
        ..SolverConfig::default()
    };
    let sol = solve(&lp, &tight);
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective + 0.05).abs() < 1e-9);
}

#[test]
fn random_boxed_programs_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut feasible = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(1..=7);
        let lp = random_boxed_lp(&mut rng, n, m);
        let sol = solve(&lp, &SolverConfig::default());
        match vertex_oracle(&lp) {
            Some(best) => {
                feasible += 1;
                assert_eq!(sol.status, LpStatus::Optimal, "{}", lp.to_lp_format());
                assert!((sol.objective - best).abs() < 1e-7, "{} vs {best}", sol.objective);
                assert!(lp.max_violation(&sol.x) < 1e-7);
            }
            None => assert_eq!(sol.status, LpStatus::Infeasible, "{}", lp.to_lp_format()),
        }
    }
    assert!(feasible >= 10);
}

#[test]
fn added_rows_resolve_like_cold_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..30 {
        let n = rng.gen_range(2..=5);
        let full = random_boxed_lp(&mut rng, n, 6);
        let mut first = LinearProgram::with_objective(full.objective().to_vec());
        for j in 0..n {
            first.set_bounds(j, full.lower()[j], full.upper()[j]).unwrap();
        }
        for row in &full.rows()[..2] {
            first.add_row(row.clone()).unwrap();
        }
        let mut warm = Simplex::new(&first, SolverConfig::default());
        warm.solve();
        let mut sol = None;
        for row in &full.rows()[2..] {
            sol = Some(warm.add_rows_and_resolve(std::slice::from_ref(row)).unwrap());
        }
        let sol = sol.unwrap();
        let cold = solve(&full, &SolverConfig::default());
        assert_eq!(sol.status, cold.status);
        if cold.is_optimal() {
            assert!((sol.objective - cold.objective).abs() < 1e-7);
        }
    }
}

#[test]
fn bound_changes_resolve_like_cold_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..30 {
        let n = rng.gen_range(2..=5);
        let mut lp = random_boxed_lp(&mut rng, n, 4);
        let mut warm = Simplex::new(&lp, SolverConfig::default());
        warm.solve();
        for _ in 0..3 {
            let j = rng.gen_range(0..n);
            let (lo, hi) = (lp.lower()[j], lp.upper()[j]);
            let mid = ((lo + hi) / 2.0).floor();
            let (nlo, nhi) = if rng.gen_bool(0.5) {
                (lo, mid.max(lo))
            } else {
                (mid.min(hi), hi)
            };
            lp.set_bounds(j, nlo, nhi).unwrap();
            warm.set_var_bounds(j, nlo, nhi).unwrap();
            let w = warm.solve();
            let c = solve(&lp, &SolverConfig::default());
            assert_eq!(w.status, c.status);
            if c.is_optimal() {
                assert!((w.objective - c.objective).abs() < 1e-7);
            }
        }
    }
}

proptest! {
    #[test]
    fn optimal_solutions_are_feasible_and_dual_certified(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=6);
        let lp = random_boxed_lp(&mut rng, n, m);
        let sol = solve(&lp, &SolverConfig::default());
        if sol.is_optimal() {
            prop_assert!(lp.max_violation(&sol.x) < 1e-7);
            // Weak duality with the bound multipliers implied by the reduced costs.
            let mut d = lp.objective().to_vec();
            for (row, y) in lp.rows().iter().zip(&sol.duals) {
                for &(j, v) in &row.coeffs {
                    d[j] -= y * v;
                }
            }
            let mut dual_obj: f64 = lp.rows().iter().zip(&sol.duals).map(|(r, y)| r.rhs * y).sum();
            for j in 0..n {
                dual_obj += if d[j] >= 0.0 { d[j] * lp.lower()[j] } else { d[j] * lp.upper()[j] };
            }
            prop_assert!((dual_obj - sol.objective).abs() < 1e-6);
        }
    }
}
