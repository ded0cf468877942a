use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use hardtsp_lp::{LinearProgram, LpStatus, Row, Simplex, SolverConfig};

use super::{
    check_point, integer_instance, remaining, separate_tour_tracked, separate_triangles, tour_row, CutOrigin, CutPool,
    HardenError, HardeningResult, HardeningStats, HardeningStatus, RoundKind, RoundRecord, TourSeparation,
    TourSeparationConfig, Triangle,
};
use crate::instance::{check_metric, num_edges, EdgeVector, Tour};

const OBJ_EPS: f64 = 1e-9;
const MAX_DENOMINATOR: u64 = 1000;

#[derive(Clone, Debug)]
pub struct IhoptConfig {
    pub delta: i64,
    /// Triangle rows added per round.
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    pub integrality_tol: f64,
    pub triangle_tol: f64,
    pub lp: SolverConfig,
    /// Rows loaded before the first solve.
    pub warm_pool: Option<CutPool>,
    /// Costs normalised to cheapest tour 1 (an H-OPT optimum); rounded up
    /// after scaling by `delta` they give a starting incumbent.
    pub start_costs: Option<EdgeVector>,
}

impl Default for IhoptConfig {
    fn default() -> Self {
        IhoptConfig {
            delta: 1000,
            k: 50,
            restarts: 10,
            seed: 0,
            time_limit: None,
            node_limit: None,
            integrality_tol: 1e-6,
            triangle_tol: 1e-6,
            lp: SolverConfig::default(),
            warm_pool: None,
            start_costs: None,
        }
    }
}

struct OpenNode {
    bound: f64,
    id: u64,
    bounds: Vec<(f64, f64)>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenNode {}

impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OpenNode {
    // Max-heap: the lowest bound comes out first. Ties go to the newest node,
    // so a plateau of equal bounds is searched depth first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(self.id.cmp(&other.id))
    }
}

struct Incumbent {
    costs: Vec<i64>,
    objective: f64,
}

enum Check {
    Feasible,
    Infeasible,
    TimedOut,
}

struct Search<'a> {
    n: usize,
    xbar: &'a [f64],
    delta: i64,
    cfg: &'a IhoptConfig,
    deadline: Option<Instant>,
    simplex: Simplex,
    pool: CutPool,
    stats: HardeningStats,
    log: Vec<RoundRecord>,
    incumbent: Incumbent,
    denominator: Option<u64>,
    calls: u64,
}

/// Branch-and-cut solve of IH-OPT for the point `xbar`.
pub fn solve_ihopt(xbar: &EdgeVector, cfg: &IhoptConfig) -> Result<HardeningResult, HardenError> {
    check_point(xbar)?;
    let start = Instant::now();
    let n = xbar.n();
    let m = num_edges(n);
    let delta = cfg.delta.max(1);
    if (delta as usize) < n {
        log::warn!("delta {delta} is below n = {n}; the all-ones cost vector is then optimal");
    }
    let mut lp = LinearProgram::with_objective(xbar.values().to_vec());
    for e in 0..m {
        lp.set_bounds(e, 0.0, delta as f64).expect("valid box");
    }
    let mut pool = CutPool::new();
    if let Some(warm) = &cfg.warm_pool {
        for (t, o) in warm.triangles() {
            if pool.add_triangle(*t, *o) {
                lp.add_row(t.row(n)).expect("valid row");
            }
        }
        for (t, o) in warm.tours() {
            if pool.add_tour(t, *o) {
                lp.add_row(tour_row(t, delta as f64)).expect("valid row");
            }
        }
    }
    let uniform = (delta + n as i64 - 1) / n as i64;
    let uniform_costs = vec![uniform; m];
    let mut search = Search {
        n,
        xbar: xbar.values(),
        delta,
        cfg,
        deadline: cfg.time_limit.map(|t| start + t),
        simplex: Simplex::new(&lp, cfg.lp.clone()),
        pool,
        stats: HardeningStats::default(),
        log: Vec::new(),
        incumbent: Incumbent {
            objective: dot_int(xbar.values(), &uniform_costs),
            costs: uniform_costs,
        },
        denominator: objective_denominator(xbar.values()),
        calls: 0,
    };
    if let Some(c) = &cfg.start_costs {
        let scaled: Vec<f64> = c.values().iter().map(|v| v * delta as f64).collect();
        search.try_rounding(&scaled)?;
    }
    let mut open = BinaryHeap::new();
    open.push(OpenNode {
        bound: f64::NEG_INFINITY,
        id: 0,
        bounds: vec![(0.0, delta as f64); m],
    });
    let mut applied = vec![(0.0, delta as f64); m];
    let mut next_id = 1;
    let mut stopped = false;
    while let Some(node) = open.pop() {
        if node.bound >= search.incumbent.objective - OBJ_EPS {
            continue;
        }
        let out_of_time = search.deadline.is_some_and(|d| Instant::now() >= d);
        let out_of_nodes = cfg.node_limit.is_some_and(|l| search.stats.nodes >= l);
        if out_of_time || out_of_nodes {
            open.push(node);
            stopped = true;
            break;
        }
        search.stats.nodes += 1;
        for (e, (&want, have)) in node.bounds.iter().zip(applied.iter_mut()).enumerate() {
            if want != *have {
                search.simplex.set_var_bounds(e, want.0, want.1).expect("valid bounds");
                *have = want;
            }
        }
        match search.process_node()? {
            NodeOutcome::Closed => {}
            NodeOutcome::Branch { bound, var, value } => {
                let (lo, hi) = node.bounds[var];
                let down = value.floor();
                let mut left = node.bounds.clone();
                left[var] = (lo, down);
                let mut right = node.bounds;
                right[var] = (down + 1.0, hi);
                for bounds in [left, right] {
                    open.push(OpenNode {
                        bound,
                        id: next_id,
                        bounds,
                    });
                    next_id += 1;
                }
            }
            NodeOutcome::Interrupted { bound } => {
                open.push(OpenNode {
                    bound,
                    id: node.id,
                    bounds: node.bounds,
                });
                stopped = true;
                break;
            }
        }
    }
    let upper = search.incumbent.objective;
    let (status, lower) = if stopped {
        let lb = open.iter().map(|o| o.bound).fold(upper, f64::min);
        (HardeningStatus::TimeLimit, search.round_bound(lb).min(upper))
    } else {
        (HardeningStatus::Optimal, upper)
    };
    let costs_int = search.incumbent.costs.clone();
    let costs = EdgeVector::new(n, costs_int.iter().map(|&v| v as f64).collect()).unwrap();
    let box_tight_edges = (0..m).filter(|&e| costs_int[e] == delta).collect();
    search.stats.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(HardeningResult {
        costs,
        integer_costs: Some(costs_int),
        delta: delta as f64,
        objective: upper,
        lower_bound: lower,
        upper_bound: upper,
        status,
        cuts: search.pool,
        stats: search.stats,
        log: search.log,
        box_tight_edges,
    })
}

enum NodeOutcome {
    Closed,
    Branch { bound: f64, var: usize, value: f64 },
    Interrupted { bound: f64 },
}

impl Search<'_> {
    fn process_node(&mut self) -> Result<NodeOutcome, HardenError> {
        let n = self.n;
        loop {
            let sol = self.simplex.solve();
            self.stats.lp_solves += 1;
            match sol.status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => return Ok(NodeOutcome::Closed),
                s => return Err(HardenError::Lp(s)),
            }
            let bound = self.round_bound(sol.objective);
            if bound >= self.incumbent.objective - OBJ_EPS {
                return Ok(NodeOutcome::Closed);
            }
            let c = EdgeVector::new(n, sol.x.clone()).unwrap();
            let sep_start = Instant::now();
            let tris: Vec<_> = separate_triangles(&c, usize::MAX, self.cfg.triangle_tol)
                .into_iter()
                .filter(|v| !self.pool.contains_triangle(&Triangle::from(*v)))
                .take(self.cfg.k)
                .collect();
            self.stats.separation_seconds += sep_start.elapsed().as_secs_f64();
            if !tris.is_empty() {
                let worst = tris[0].amount;
                let rows: Vec<Row> = tris
                    .iter()
                    .map(|v| {
                        let t = Triangle::from(*v);
                        self.pool.add_triangle(t, CutOrigin::Exact);
                        t.row(n)
                    })
                    .collect();
                self.record_triangles(rows.len(), worst, sol.objective);
                self.simplex.add_rows(&rows).expect("valid rows");
                continue;
            }
            let tol = self.cfg.integrality_tol;
            let frac = |v: f64| (v - v.round()).abs();
            let branch_var = (0..c.values().len())
                .filter(|&e| frac(sol.x[e]) > tol)
                .min_by(|&a, &b| {
                    let da = (sol.x[a] - sol.x[a].floor() - 0.5).abs();
                    let db = (sol.x[b] - sol.x[b].floor() - 0.5).abs();
                    da.total_cmp(&db).then(a.cmp(&b))
                });
            match branch_var {
                Some(var) => {
                    self.try_rounding(&sol.x)?;
                    if bound >= self.incumbent.objective - OBJ_EPS {
                        return Ok(NodeOutcome::Closed);
                    }
                    return Ok(NodeOutcome::Branch {
                        bound,
                        var,
                        value: sol.x[var],
                    });
                }
                None => {
                    let ci: Vec<i64> = sol.x.iter().map(|v| v.round() as i64).collect();
                    match self.check_integer(&ci, sol.objective)? {
                        Check::Feasible => {
                            self.offer(ci);
                            return Ok(NodeOutcome::Closed);
                        }
                        Check::Infeasible => continue,
                        Check::TimedOut => return Ok(NodeOutcome::Interrupted { bound }),
                    }
                }
            }
        }
    }

    /// Lazy separation at an integer point. New rows are added to the LP.
    fn check_integer(&mut self, ci: &[i64], lp_objective: f64) -> Result<Check, HardenError> {
        let n = self.n;
        let inst = integer_instance(n, ci);
        let violations = check_metric(&inst, 0.0);
        if !violations.is_empty() {
            let worst = violations[0].amount;
            let rows: Vec<Row> = violations
                .iter()
                .map(|v| Triangle::from(*v))
                .filter(|t| self.pool.add_triangle(*t, CutOrigin::Exact))
                .take(self.cfg.k)
                .map(|t| t.row(n))
                .collect();
            if rows.is_empty() {
                return Ok(Check::Infeasible);
            }
            self.record_triangles(rows.len(), worst, lp_objective);
            self.simplex.add_rows(&rows).expect("valid rows");
            return Ok(Check::Infeasible);
        }
        self.calls += 1;
        let cfg = TourSeparationConfig {
            delta: self.delta as f64,
            tol: 0.0,
            restarts: self.cfg.restarts,
            seed: self.cfg.seed.wrapping_add(self.calls),
            time_limit: remaining(self.deadline),
        };
        let sep_start = Instant::now();
        let (found, exact_secs) = separate_tour_tracked(&inst, &cfg, Some(&self.pool))?;
        self.stats.separation_seconds += sep_start.elapsed().as_secs_f64();
        self.stats.exact_seconds += exact_secs;
        match found {
            TourSeparation::Violated(tours, origin) => {
                self.add_tours(&tours, origin, lp_objective);
                Ok(Check::Infeasible)
            }
            TourSeparation::NoneCertified => {
                self.stats.exact_tour_calls += 1;
                Ok(Check::Feasible)
            }
            TourSeparation::TimedOut => {
                self.stats.exact_tour_calls += 1;
                Ok(Check::TimedOut)
            }
        }
    }

    /// Rounds `c` up and keeps it as incumbent if it is cheaper and feasible.
    fn try_rounding(&mut self, c: &[f64]) -> Result<(), HardenError> {
        let ci: Vec<i64> = c
            .iter()
            .map(|&v| ((v - self.cfg.integrality_tol).ceil().max(0.0) as i64).min(self.delta))
            .collect();
        if dot_int(self.xbar, &ci) >= self.incumbent.objective - OBJ_EPS {
            return Ok(());
        }
        if !check_metric(&integer_instance(self.n, &ci), 0.0).is_empty() {
            return Ok(());
        }
        let objective = dot_int(self.xbar, &ci);
        if let Check::Feasible = self.check_integer(&ci, objective)? {
            self.offer(ci);
        }
        Ok(())
    }

    fn offer(&mut self, ci: Vec<i64>) {
        let objective = dot_int(self.xbar, &ci);
        if objective < self.incumbent.objective - OBJ_EPS {
            self.log.push(RoundRecord {
                stage: "ihopt".into(),
                kind: RoundKind::Incumbent,
                rows_added: 0,
                violation: 0.0,
                lp_objective: objective,
                node_count: self.stats.nodes,
            });
            self.incumbent = Incumbent { costs: ci, objective };
        }
    }

    fn add_tours(&mut self, tours: &[(Tour, f64)], origin: CutOrigin, lp_objective: f64) {
        let delta = self.delta as f64;
        let kind = match origin {
            CutOrigin::Exact => {
                self.stats.exact_tour_calls += 1;
                RoundKind::TourExact
            }
            _ => {
                self.stats.heuristic_tour_rounds += 1;
                RoundKind::TourHeuristic
            }
        };
        let worst = tours.iter().map(|(_, v)| delta - v).fold(0.0, f64::max);
        let rows: Vec<Row> = tours
            .iter()
            .filter(|(t, _)| self.pool.add_tour(t, origin))
            .map(|(t, _)| tour_row(t, delta))
            .collect();
        self.stats.tour_rows += rows.len();
        self.log.push(RoundRecord {
            stage: "ihopt".into(),
            kind,
            rows_added: rows.len(),
            violation: worst,
            lp_objective,
            node_count: self.stats.nodes,
        });
        self.simplex.add_rows(&rows).expect("valid rows");
    }

    fn record_triangles(&mut self, count: usize, worst: f64, lp_objective: f64) {
        self.stats.triangle_rounds += 1;
        self.stats.triangle_rows += count;
        self.log.push(RoundRecord {
            stage: "ihopt".into(),
            kind: RoundKind::Triangle,
            rows_added: count,
            violation: worst,
            lp_objective,
            node_count: self.stats.nodes,
        });
    }

    /// Objective values of integer points are multiples of `1 / D`.
    fn round_bound(&self, lb: f64) -> f64 {
        match self.denominator {
            Some(d) => {
                let d = d as f64;
                (lb * d - 1e-6).ceil() / d
            }
            None => lb,
        }
    }
}

fn dot_int(x: &[f64], c: &[i64]) -> f64 {
    x.iter().zip(c).map(|(a, &b)| a * b as f64).sum()
}

/// Smallest `D <= 1000` with every `D * x_e` within 1e-7 of an integer.
pub(crate) fn objective_denominator(x: &[f64]) -> Option<u64> {
    (1..=MAX_DENOMINATOR).find(|&d| {
        let d = d as f64;
        x.iter().all(|&v| (v * d - (v * d).round()).abs() <= 1e-7)
    })
}
