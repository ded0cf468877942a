use std::time::{Duration, Instant};

use hardtsp_lp::{LinearProgram, LpStatus, Simplex, SolverConfig};

use super::{
    check_point, costs_instance, remaining, separate_tour_tracked, separate_triangles, tour_row, CutOrigin, CutPool,
    HardenError, HardeningResult, HardeningStats, HardeningStatus, RoundKind, RoundRecord, TourSeparation,
    TourSeparationConfig, Triangle,
};
use crate::instance::{num_edges, EdgeVector};

#[derive(Clone, Debug)]
pub struct HoptConfig {
    pub delta: f64,
    /// Triangle rows added per round.
    pub k: usize,
    pub triangle_tol: f64,
    /// Tours cheaper than `delta * (1 - tour_tol)` are violated.
    pub tour_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub time_limit: Option<Duration>,
    pub lp: SolverConfig,
}

impl Default for HoptConfig {
    fn default() -> Self {
        HoptConfig {
            delta: 1.0,
            k: 50,
            triangle_tol: 1e-9,
            tour_tol: 1e-7,
            restarts: 10,
            seed: 0,
            time_limit: None,
            lp: SolverConfig::default(),
        }
    }
}

/// Cutting-plane solve of H-OPT for the point `xbar`.
pub fn solve_hopt(xbar: &EdgeVector, cfg: &HoptConfig) -> Result<HardeningResult, HardenError> {
    check_point(xbar)?;
    let start = Instant::now();
    let deadline = cfg.time_limit.map(|t| start + t);
    let n = xbar.n();
    let m = num_edges(n);
    let delta = cfg.delta;
    let mut lp = LinearProgram::with_objective(xbar.values().to_vec());
    for e in 0..m {
        lp.set_bounds(e, 0.0, delta).expect("valid box");
    }
    let mut simplex = Simplex::new(&lp, cfg.lp.clone());
    let mut pool = CutPool::new();
    let mut stats = HardeningStats::default();
    let mut log = Vec::new();
    let tour_cfg = TourSeparationConfig {
        delta,
        tol: cfg.tour_tol * delta,
        restarts: cfg.restarts,
        seed: cfg.seed,
        time_limit: None,
    };
    let mut sol = simplex.solve();
    let mut round: u64 = 0;
    let status = loop {
        stats.lp_solves += 1;
        if sol.status != LpStatus::Optimal {
            return Err(HardenError::Lp(sol.status));
        }
        let c = EdgeVector::new(n, sol.x.iter().map(|v| v.clamp(0.0, delta)).collect()).unwrap();
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break HardeningStatus::TimeLimit;
        }
        round += 1;
        let sep_start = Instant::now();
        let tris: Vec<_> = separate_triangles(&c, usize::MAX, cfg.triangle_tol * delta.max(1.0))
            .into_iter()
            .filter(|v| !pool.contains_triangle(&Triangle::from(*v)))
            .take(cfg.k)
            .collect();
        if !tris.is_empty() {
            let rows: Vec<_> = tris
                .iter()
                .map(|v| {
                    let t = Triangle::from(*v);
                    pool.add_triangle(t, CutOrigin::Exact);
                    t.row(n)
                })
                .collect();
            stats.triangle_rounds += 1;
            stats.triangle_rows += rows.len();
            stats.separation_seconds += sep_start.elapsed().as_secs_f64();
            log.push(RoundRecord {
                stage: "hopt".into(),
                kind: RoundKind::Triangle,
                rows_added: rows.len(),
                violation: tris[0].amount,
                lp_objective: sol.objective,
                node_count: 0,
            });
            sol = simplex.add_rows_and_resolve(&rows).expect("valid rows");
            continue;
        }
        let inst = costs_instance(n, c.values());
        let round_cfg = TourSeparationConfig {
            seed: cfg.seed.wrapping_add(round),
            time_limit: remaining(deadline),
            ..tour_cfg.clone()
        };
        let (found, exact_secs) = separate_tour_tracked(&inst, &round_cfg, Some(&pool))?;
        stats.separation_seconds += sep_start.elapsed().as_secs_f64();
        stats.exact_seconds += exact_secs;
        match found {
            TourSeparation::Violated(tours, origin) => {
                let kind = match origin {
                    CutOrigin::Exact => {
                        stats.exact_tour_calls += 1;
                        RoundKind::TourExact
                    }
                    _ => {
                        stats.heuristic_tour_rounds += 1;
                        RoundKind::TourHeuristic
                    }
                };
                let worst = tours.iter().map(|(_, v)| delta - v).fold(0.0, f64::max);
                let rows: Vec<_> = tours
                    .iter()
                    .filter(|(t, _)| pool.add_tour(t, origin))
                    .map(|(t, _)| tour_row(t, delta))
                    .collect();
                stats.tour_rows += rows.len();
                log.push(RoundRecord {
                    stage: "hopt".into(),
                    kind,
                    rows_added: rows.len(),
                    violation: worst,
                    lp_objective: sol.objective,
                    node_count: 0,
                });
                sol = simplex.add_rows_and_resolve(&rows).expect("valid rows");
            }
            TourSeparation::NoneCertified => {
                stats.exact_tour_calls += 1;
                break HardeningStatus::Optimal;
            }
            TourSeparation::TimedOut => {
                stats.exact_tour_calls += 1;
                break HardeningStatus::TimeLimit;
            }
        }
    };
    let costs = EdgeVector::new(n, sol.x.iter().map(|v| v.clamp(0.0, delta)).collect()).unwrap();
    let objective = costs.dot(xbar.values());
    let (lower_bound, upper_bound) = match status {
        HardeningStatus::Optimal => (objective, objective),
        _ => (sol.objective, f64::INFINITY),
    };
    let box_tight_edges = (0..m).filter(|&e| costs.values()[e] >= delta * (1.0 - 1e-9)).collect();
    stats.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(HardeningResult {
        costs,
        integer_costs: None,
        delta,
        objective,
        lower_bound,
        upper_bound,
        status,
        cuts: pool,
        stats,
        log,
        box_tight_edges,
    })
}
