//! Subtour elimination relaxation solved by cutting planes.
//!
//! The LP starts with degree equalities and `0 <= x <= 1`. Each round adds the
//! global minimum cut of the support graph as a subtour row when its value is
//! below 2. Cuts with `|S| = 1` have value exactly 2 under the degree rows and
//! `|S| = 2` gives `4 - 2 x_e >= 2`, so the minimum cut needs no size filter.

use hardtsp_lp::{LinearProgram, LpStatus, Row, Sense, Simplex, SolverConfig, VarStatus};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{edge_index, num_edges, EdgeVector, TspInstance};

/// Subtour rows are added while the minimum cut is below `2 - CUT_TOL`.
pub const CUT_TOL: f64 = 1e-7;
/// Edges with `x_e` above this value form the support graph.
pub const SUPPORT_TOL: f64 = 1e-9;
/// Default distance from {0, 1} above which an entry counts as fractional.
pub const FRACTIONAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SepError {
    #[error("LP solve ended with status {0:?}")]
    Lp(LpStatus),
    #[error("no optimum after {0} separation rounds")]
    RoundLimit(usize),
}

#[derive(Clone, Debug)]
pub struct SepConfig {
    pub lp: SolverConfig,
    pub max_rounds: usize,
}

impl Default for SepConfig {
    fn default() -> Self {
        SepConfig {
            lp: SolverConfig::default(),
            max_rounds: 10_000,
        }
    }
}

/// A node set `S` (never containing node 0) and the weight crossing it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubtourCut {
    pub set: Vec<usize>,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SepSolution {
    pub x: EdgeVector,
    /// Optimal relaxation value `c . x`.
    pub value: f64,
    /// Node sets of the subtour rows added, in order.
    pub cuts: Vec<Vec<usize>>,
    pub rounds: usize,
    pub fractional: bool,
    /// LP objective after each solve.
    pub objective_trace: Vec<f64>,
    /// Edges whose column is basic in the final LP.
    pub basic_edges: Vec<usize>,
}

impl SepSolution {
    pub fn n_cuts_added(&self) -> usize {
        self.cuts.len()
    }

    /// Edges with `x_e > SUPPORT_TOL`.
    pub fn support(&self) -> Vec<usize> {
        support(&self.x)
    }

    /// Largest degree-row violation and the global minimum cut value.
    pub fn certificate(&self) -> (f64, f64) {
        let n = self.x.n();
        let degree = (0..n).map(|v| (self.x.degree(v) - 2.0).abs()).fold(0.0, f64::max);
        (degree, min_cut(&self.x).value)
    }
}

pub fn support(x: &EdgeVector) -> Vec<usize> {
    x.values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > SUPPORT_TOL)
        .map(|(e, _)| e)
        .collect()
}

pub fn is_fractional(x: &[f64], tol: f64) -> bool {
    x.iter().any(|&v| v.abs() > tol && (v - 1.0).abs() > tol)
}

pub fn solve_sep(inst: &TspInstance) -> Result<SepSolution, SepError> {
    solve_sep_with(inst, &SepConfig::default())
}

pub fn solve_sep_with(inst: &TspInstance, config: &SepConfig) -> Result<SepSolution, SepError> {
    let n = inst.n();
    let m = num_edges(n);
    let costs = inst.costs_f64();
    let mut lp = LinearProgram::with_objective(costs.clone());
    for e in 0..m {
        lp.set_bounds(e, 0.0, 1.0).expect("valid bounds");
    }
    for v in 0..n {
        let coeffs = (0..n).filter(|&u| u != v).map(|u| (edge_index(n, u, v), 1.0)).collect();
        lp.add_row(Row::new(coeffs, Sense::Eq, 2.0)).expect("valid row");
    }
    let mut simplex = Simplex::new(&lp, config.lp.clone());
    let mut sol = simplex.solve();
    let mut cuts = Vec::new();
    let mut trace = Vec::new();
    let mut rounds = 0;
    loop {
        if sol.status != LpStatus::Optimal {
            return Err(SepError::Lp(sol.status));
        }
        trace.push(sol.objective);
        let x = EdgeVector::new(n, sol.x.iter().map(|v| v.clamp(0.0, 1.0)).collect()).unwrap();
        match separate_subtour(&x) {
            None => {
                let value = x.dot(&costs);
                let basic_edges = sol
                    .basis
                    .columns
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| **s == VarStatus::Basic)
                    .map(|(e, _)| e)
                    .collect();
                let fractional = is_fractional(x.values(), FRACTIONAL_TOL);
                return Ok(SepSolution {
                    x,
                    value,
                    cuts,
                    rounds,
                    fractional,
                    objective_trace: trace,
                    basic_edges,
                });
            }
            Some(cut) => {
                rounds += 1;
                if rounds > config.max_rounds {
                    return Err(SepError::RoundLimit(config.max_rounds));
                }
                let row = subtour_row(n, &cut.set);
                cuts.push(cut.set);
                sol = simplex.add_rows_and_resolve(&[row]).expect("valid row");
            }
        }
    }
}

/// The row `sum_{e in delta(S)} x_e >= 2`.
pub fn subtour_row(n: usize, set: &[usize]) -> Row {
    let mut in_s = vec![false; n];
    for &v in set {
        in_s[v] = true;
    }
    let mut coeffs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if in_s[i] != in_s[j] {
                coeffs.push((edge_index(n, i, j), 1.0));
            }
        }
    }
    Row::new(coeffs, Sense::Ge, 2.0)
}

/// The global minimum cut when it is below `2 - CUT_TOL`.
pub fn separate_subtour(x: &EdgeVector) -> Option<SubtourCut> {
    let cut = min_cut(x);
    (cut.value < 2.0 - CUT_TOL).then_some(cut)
}

/// Global minimum cut of the support graph weighted by `x`.
///
/// `S` is reported as the side without node 0. A disconnected support graph
/// yields the component of the lowest node outside node 0's component. Among
/// equal-valued candidates, the set containing the lowest-numbered node wins,
/// then the smaller set, then the lexicographically smaller one.
pub fn min_cut(x: &EdgeVector) -> SubtourCut {
    let n = x.n();
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = x.get(i, j);
            if v > SUPPORT_TOL {
                w[i][j] = v;
                w[j][i] = v;
            }
        }
    }
    if let Some(component) = detached_component(&w) {
        return SubtourCut {
            set: component,
            value: 0.0,
        };
    }
    stoer_wagner(w, x)
}

fn detached_component(w: &[Vec<f64>]) -> Option<Vec<usize>> {
    let n = w.len();
    let reach = |start: usize| {
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                if !seen[v] && w[u][v] > 0.0 {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    };
    let from0 = reach(0);
    let first = (0..n).find(|&v| !from0[v])?;
    let comp = reach(first);
    Some((0..n).filter(|&v| comp[v]).collect())
}

fn stoer_wagner(mut w: Vec<Vec<f64>>, x: &EdgeVector) -> SubtourCut {
    let n = w.len();
    let mut groups: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut best: Option<SubtourCut> = None;
    while active.len() > 1 {
        let mut in_a = vec![false; n];
        let mut conn = vec![0.0; n];
        let mut prev = active[0];
        let mut last = active[0];
        in_a[last] = true;
        for &v in &active {
            conn[v] = w[last][v];
        }
        for _ in 1..active.len() {
            let mut pick = usize::MAX;
            for &v in &active {
                if !in_a[v] && (pick == usize::MAX || conn[v] > conn[pick]) {
                    pick = v;
                }
            }
            prev = last;
            last = pick;
            in_a[pick] = true;
            for &v in &active {
                if !in_a[v] {
                    conn[v] += w[pick][v];
                }
            }
        }
        // `last` never contains node 0: vertex 0 starts every phase.
        let mut set = groups[last].clone();
        set.sort_unstable();
        let value = cut_value(x, &set);
        let cand = SubtourCut { set, value };
        if best.as_ref().is_none_or(|b| better_cut(&cand, b)) {
            best = Some(cand);
        }
        let moved = std::mem::take(&mut groups[last]);
        groups[prev].extend(moved);
        for &v in &active {
            let add = w[last][v];
            w[prev][v] += add;
            w[v][prev] = w[prev][v];
        }
        w[prev][prev] = 0.0;
        active.retain(|&v| v != last);
    }
    best.expect("n >= 2")
}

fn better_cut(a: &SubtourCut, b: &SubtourCut) -> bool {
    const TIE: f64 = 1e-12;
    if a.value < b.value - TIE {
        return true;
    }
    if a.value > b.value + TIE {
        return false;
    }
    (a.set[0], a.set.len(), &a.set) < (b.set[0], b.set.len(), &b.set)
}

fn cut_value(x: &EdgeVector, set: &[usize]) -> f64 {
    let mut in_s = vec![false; x.n()];
    for &v in set {
        in_s[v] = true;
    }
    x.cut_value(&in_s)
}
