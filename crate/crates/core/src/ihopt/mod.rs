//! Hardening a fractional vertex `xbar` of the subtour polytope.
//!
//! H-OPT minimises `xbar . c` over metric costs whose every tour costs at
//! least `delta`; IH-OPT adds integrality of `c`. Neither model lists its rows
//! up front: triangle rows are found by scanning all triples, tour rows by
//! running a TSP heuristic and, when it finds nothing, an exact solver with
//! cutoff `delta`.

mod bnc;
mod hopt;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use hardtsp_lp::{LpStatus, Row, Sense};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{
    edge_index, triangle_violations, EdgeVector, InstanceError, Tour, TriangleViolation, TspInstance,
};
use crate::tsp::{local_optima, solve_exact, ExactConfig, TspError};

pub use bnc::{solve_ihopt, IhoptConfig};
pub use hopt::{solve_hopt, HoptConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HardenError {
    #[error("LP solve ended with status {0:?}")]
    Lp(LpStatus),
    #[error(transparent)]
    Tsp(#[from] TspError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("point has {got} entries, expected {expected}")]
    WrongLength { expected: usize, got: usize },
}

/// The row `c_ij <= c_ik + c_jk` with `i < j` and apex `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triangle {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl Triangle {
    pub fn new(i: usize, j: usize, k: usize) -> Self {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        Triangle { i, j, k }
    }

    /// `c_ik + c_jk - c_ij`; negative when violated.
    pub fn slack(&self, n: usize, c: &[f64]) -> f64 {
        c[edge_index(n, self.i, self.k)] + c[edge_index(n, self.j, self.k)] - c[edge_index(n, self.i, self.j)]
    }

    pub fn row(&self, n: usize) -> Row {
        Row::new(
            vec![
                (edge_index(n, self.i, self.j), 1.0),
                (edge_index(n, self.i, self.k), -1.0),
                (edge_index(n, self.j, self.k), -1.0),
            ],
            Sense::Le,
            0.0,
        )
    }
}

impl From<TriangleViolation> for Triangle {
    fn from(v: TriangleViolation) -> Self {
        Triangle::new(v.i, v.j, v.k)
    }
}

pub fn tour_row(tour: &Tour, delta: f64) -> Row {
    Row::new(
        tour.edge_indices().into_iter().map(|e| (e, 1.0)).collect(),
        Sense::Ge,
        delta,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutOrigin {
    /// Found by the tour heuristic.
    Heuristic,
    /// Found by the exact solver or by a full triangle scan.
    Exact,
    /// Carried over from an H-OPT run.
    Warm,
}

/// Triangle and tour rows without duplicates; tours are kept in canonical form.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CutPool {
    triangles: Vec<(Triangle, CutOrigin)>,
    tours: Vec<(Tour, CutOrigin)>,
    #[serde(skip)]
    triangle_set: HashSet<Triangle>,
    #[serde(skip)]
    tour_set: HashSet<Tour>,
}

impl CutPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false if the row was already present.
    pub fn add_triangle(&mut self, t: Triangle, origin: CutOrigin) -> bool {
        if !self.triangle_set.insert(t) {
            return false;
        }
        self.triangles.push((t, origin));
        true
    }

    /// Returns false if the tour (in any rotation or direction) was already present.
    pub fn add_tour(&mut self, tour: &Tour, origin: CutOrigin) -> bool {
        let canon = tour.canonical();
        if !self.tour_set.insert(canon.clone()) {
            return false;
        }
        self.tours.push((canon, origin));
        true
    }

    pub fn contains_triangle(&self, t: &Triangle) -> bool {
        self.triangle_set.contains(t)
    }

    pub fn contains_tour(&self, tour: &Tour) -> bool {
        self.tour_set.contains(&tour.canonical())
    }

    pub fn triangles(&self) -> &[(Triangle, CutOrigin)] {
        &self.triangles
    }

    pub fn tours(&self) -> &[(Tour, CutOrigin)] {
        &self.tours
    }

    pub fn len(&self) -> usize {
        self.triangles.len() + self.tours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The same rows with every origin replaced by `origin`.
    pub fn retagged(&self, origin: CutOrigin) -> CutPool {
        let mut out = CutPool::new();
        for (t, _) in &self.triangles {
            out.add_triangle(*t, origin);
        }
        for (t, _) in &self.tours {
            out.add_tour(t, origin);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardeningStatus {
    Optimal,
    TimeLimit,
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundKind {
    Triangle,
    TourHeuristic,
    TourExact,
    Incumbent,
}

/// One separation round of a hardening run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub stage: String,
    pub kind: RoundKind,
    pub rows_added: usize,
    /// Largest violation among the rows found (objective value for incumbents).
    pub violation: f64,
    pub lp_objective: f64,
    pub node_count: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HardeningStats {
    pub triangle_rounds: usize,
    pub heuristic_tour_rounds: usize,
    pub exact_tour_calls: usize,
    pub triangle_rows: usize,
    pub tour_rows: usize,
    pub separation_seconds: f64,
    pub exact_seconds: f64,
    pub lp_solves: usize,
    pub nodes: u64,
    pub runtime_seconds: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HardeningResult {
    /// Costs scaled so that the cheapest tour costs at least `delta`.
    pub costs: EdgeVector,
    /// Exact integer costs for IH-OPT results.
    pub integer_costs: Option<Vec<i64>>,
    pub delta: f64,
    pub objective: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub status: HardeningStatus,
    pub cuts: CutPool,
    pub stats: HardeningStats,
    pub log: Vec<RoundRecord>,
    /// Edges whose cost sits at the box bound `delta`.
    pub box_tight_edges: Vec<usize>,
}

impl HardeningResult {
    /// The hardened instance: integer for IH-OPT, fractional for H-OPT.
    pub fn instance(&self) -> Result<TspInstance, InstanceError> {
        match &self.integer_costs {
            Some(c) => TspInstance::integer(self.costs.n(), c.clone()),
            None => TspInstance::fractional(self.costs.n(), self.costs.values().iter().map(|v| v.max(0.0)).collect()),
        }
    }
}

/// The `k` most violated triangle rows (violation above `tol`), worst first,
/// ties by `(i, j, k)`.
pub fn separate_triangles(c: &EdgeVector, k: usize, tol: f64) -> Vec<TriangleViolation> {
    let mut v = triangle_violations(c.n(), c.values(), tol);
    v.truncate(k);
    v
}

/// Outcome of looking for a tour cheaper than `delta`.
#[derive(Clone, Debug)]
pub enum TourSeparation {
    /// Violating tours with their costs, and who found them.
    Violated(Vec<(Tour, f64)>, CutOrigin),
    /// The exact solver proved every tour costs at least the threshold.
    NoneCertified,
    /// The exact solver ran out of time; nothing can be concluded.
    TimedOut,
}

#[derive(Clone, Debug)]
pub struct TourSeparationConfig {
    pub delta: f64,
    /// Tours count as violated when cheaper than `delta - tol`.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub time_limit: Option<Duration>,
}

impl TourSeparationConfig {
    pub fn new(delta: f64) -> Self {
        TourSeparationConfig {
            delta,
            tol: 0.0,
            restarts: 10,
            seed: 0,
            time_limit: None,
        }
    }
}

/// Heuristic first (every distinct violating local optimum is returned),
/// then the exact solver with cutoff `delta - tol`.
pub fn separate_tour(inst: &TspInstance, cfg: &TourSeparationConfig) -> Result<TourSeparation, HardenError> {
    let (found, _) = separate_tour_tracked(inst, cfg, None)?;
    Ok(found)
}

/// As [`separate_tour`], skipping tours already in `pool`; also reports the
/// time spent in the exact solver.
pub(crate) fn separate_tour_tracked(
    inst: &TspInstance,
    cfg: &TourSeparationConfig,
    pool: Option<&CutPool>,
) -> Result<(TourSeparation, f64), HardenError> {
    let threshold = cfg.delta - cfg.tol;
    let fresh = |t: &Tour| pool.is_none_or(|p| !p.contains_tour(t));
    let heuristic: Vec<(Tour, f64)> = local_optima(inst, cfg.restarts, cfg.seed)
        .into_iter()
        .filter(|(t, v)| *v < threshold && fresh(t))
        .collect();
    if !heuristic.is_empty() {
        return Ok((TourSeparation::Violated(heuristic, CutOrigin::Heuristic), 0.0));
    }
    let start = Instant::now();
    let exact = solve_exact(
        inst,
        &ExactConfig {
            cutoff: Some(threshold),
            time_limit: cfg.time_limit,
            seed: cfg.seed,
            heuristic_restarts: cfg.restarts,
            ..ExactConfig::default()
        },
    )?;
    let secs = start.elapsed().as_secs_f64();
    if exact.value < threshold {
        let t = exact.tour.canonical();
        if fresh(&t) {
            return Ok((TourSeparation::Violated(vec![(t, exact.value)], CutOrigin::Exact), secs));
        }
        // A pooled row within LP tolerance of its bound: nothing new to add.
        log::debug!("exact separation returned a pooled tour at {}", exact.value);
        return Ok((TourSeparation::NoneCertified, secs));
    }
    if exact.timed_out && !exact.certifies_at_least(threshold) {
        return Ok((TourSeparation::TimedOut, secs));
    }
    Ok((TourSeparation::NoneCertified, secs))
}

/// All tour rows of an H-OPT run plus every triangle row with slack at most
/// `tau` at its optimum, tagged warm. Slack is measured in the run's own scale.
pub fn warm_pool(hopt: &HardeningResult, tau: f64) -> CutPool {
    let n = hopt.costs.n();
    let c = hopt.costs.values();
    let mut pool = CutPool::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let t = Triangle::new(i, j, k);
                if t.slack(n, c) <= tau {
                    pool.add_triangle(t, CutOrigin::Warm);
                }
            }
        }
    }
    for (t, _) in hopt.cuts.tours() {
        pool.add_tour(t, CutOrigin::Warm);
    }
    pool
}

pub(crate) fn check_point(xbar: &EdgeVector) -> Result<(), HardenError> {
    let expected = crate::instance::num_edges(xbar.n());
    if xbar.values().len() != expected {
        return Err(HardenError::WrongLength {
            expected,
            got: xbar.values().len(),
        });
    }
    Ok(())
}

pub(crate) fn remaining(deadline: Option<Instant>) -> Option<Duration> {
    deadline.map(|d| d.saturating_duration_since(Instant::now()))
}

pub(crate) fn costs_instance(n: usize, c: &[f64]) -> TspInstance {
    TspInstance::fractional(n, c.iter().map(|v| v.max(0.0)).collect()).expect("finite costs")
}

pub(crate) fn integer_instance(n: usize, c: &[i64]) -> TspInstance {
    TspInstance::integer(n, c.to_vec()).expect("nonnegative costs")
}
