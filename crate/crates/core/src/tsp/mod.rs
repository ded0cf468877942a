//! Exact and heuristic TSP solvers.
//!
//! [`solve_exact`] runs a multi-start local search for an initial tour, then
//! either Held–Karp dynamic programming (small `n`) or a best-first
//! branch-and-bound driven by Lagrangian 1-tree bounds. A cutoff turns it into
//! a decision procedure: stop at the first tour cheaper than the cutoff, or
//! prove none exists.

mod bnb;
mod dp;
mod heuristic;
mod weight;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Costs, Tour, TspInstance};

pub use bnb::{one_tree, one_tree_bound, subgradient_bound, OneTree};
pub use dp::DP_HARD_CAP;
pub use heuristic::{heuristic_tour, improve_tour, local_optima};
pub use weight::{CostMatrix, Weight};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TspError {
    #[error("dynamic programming refused for n = {n} (cap {cap})")]
    DpTooLarge { n: usize, cap: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactMethod {
    Heuristic,
    DynamicProgramming,
    BranchAndBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactMode {
    /// DP up to `dp_threshold` nodes, branch-and-bound above.
    Auto,
    ForceDp,
    ForceBranchAndBound,
}

#[derive(Clone, Debug)]
pub struct ExactConfig {
    /// Stop at the first tour strictly cheaper than this value.
    pub cutoff: Option<f64>,
    pub mode: ExactMode,
    pub dp_threshold: usize,
    pub time_limit: Option<Duration>,
    /// Seed for the warm-start heuristic.
    pub seed: u64,
    pub heuristic_restarts: usize,
    pub root_ascent_iterations: usize,
    pub child_ascent_iterations: usize,
}

impl Default for ExactConfig {
    fn default() -> Self {
        ExactConfig {
            cutoff: None,
            mode: ExactMode::Auto,
            dp_threshold: 16,
            time_limit: None,
            seed: 0,
            heuristic_restarts: 10,
            root_ascent_iterations: 30,
            child_ascent_iterations: 5,
        }
    }
}

impl ExactConfig {
    pub fn with_cutoff(cutoff: f64) -> Self {
        ExactConfig {
            cutoff: Some(cutoff),
            ..Self::default()
        }
    }

    pub fn branch_and_bound(seed: u64) -> Self {
        ExactConfig {
            mode: ExactMode::ForceBranchAndBound,
            seed,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TspResult {
    pub tour: Tour,
    pub value: f64,
    /// No tour is cheaper than `tour` (search exhausted).
    pub proven_optimal: bool,
    /// Valid lower bound on the optimum; equals `value` when proven optimal.
    pub lower_bound: f64,
    pub nodes_explored: u64,
    /// Wall time in seconds.
    pub runtime: f64,
    pub timed_out: bool,
    pub method: ExactMethod,
}

impl TspResult {
    /// Whether the result proves that every tour costs at least `cutoff`.
    pub fn certifies_at_least(&self, cutoff: f64) -> bool {
        self.lower_bound >= cutoff || (self.proven_optimal && self.value >= cutoff)
    }
}

/// Exact TSP. See the module documentation for the cutoff contract.
pub fn solve_exact(inst: &TspInstance, config: &ExactConfig) -> Result<TspResult, TspError> {
    match inst.costs() {
        Costs::Integer(_) => solve_exact_with(&CostMatrix::<i64>::from_instance(inst), config),
        Costs::Fractional(_) => solve_exact_with(&CostMatrix::<f64>::from_instance(inst), config),
    }
}

/// Held–Karp dynamic programming, exact for `n <= DP_HARD_CAP`.
pub fn held_karp_dp(inst: &TspInstance) -> Result<TspResult, TspError> {
    let config = ExactConfig {
        mode: ExactMode::ForceDp,
        heuristic_restarts: 0,
        ..ExactConfig::default()
    };
    solve_exact(inst, &config)
}

fn solve_exact_with<W: Weight>(m: &CostMatrix<W>, config: &ExactConfig) -> Result<TspResult, TspError> {
    let start = Instant::now();
    let n = m.n();
    let use_dp = match config.mode {
        ExactMode::ForceDp => true,
        ExactMode::ForceBranchAndBound => false,
        ExactMode::Auto => n <= config.dp_threshold,
    };
    if use_dp && n > DP_HARD_CAP {
        return Err(TspError::DpTooLarge { n, cap: DP_HARD_CAP });
    }
    let cutoff = config.cutoff.filter(|c| c.is_finite());

    let warm = if config.heuristic_restarts > 0 || !use_dp {
        Some(heuristic::best_tour(m, config.heuristic_restarts.max(1), config.seed))
    } else {
        None
    };
    if let (Some(c), Some((order, value))) = (cutoff, &warm) {
        if value.to_f64() < c {
            return Ok(TspResult {
                tour: Tour::new(order.clone()).unwrap(),
                value: value.to_f64(),
                proven_optimal: false,
                lower_bound: f64::NEG_INFINITY,
                nodes_explored: 0,
                runtime: start.elapsed().as_secs_f64(),
                timed_out: false,
                method: ExactMethod::Heuristic,
            });
        }
    }

    if use_dp {
        let (order, value) = dp::held_karp(m);
        let value = value.to_f64();
        return Ok(TspResult {
            tour: Tour::new(order).unwrap(),
            value,
            proven_optimal: true,
            lower_bound: value,
            nodes_explored: 0,
            runtime: start.elapsed().as_secs_f64(),
            timed_out: false,
            method: ExactMethod::DynamicProgramming,
        });
    }

    let (order, value) = warm.unwrap();
    let deadline = config.time_limit.map(|d| start + d);
    let out = bnb::branch_and_bound(m, order, value, cutoff, deadline, config);
    Ok(TspResult {
        tour: Tour::new(out.order).unwrap(),
        value: out.value.to_f64(),
        proven_optimal: out.proven_optimal,
        lower_bound: out.lower_bound,
        nodes_explored: out.nodes,
        runtime: start.elapsed().as_secs_f64(),
        timed_out: out.timed_out,
        method: ExactMethod::BranchAndBound,
    })
}
