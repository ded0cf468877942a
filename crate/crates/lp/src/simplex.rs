//! Bounded-variable revised simplex.
//!
//! Every row `i` gets a logical variable `s_i` with `A_i x - s_i = 0`, so row
//! senses become bounds on `s_i`. The basis inverse is kept as an explicit
//! dense matrix, refactored from the structural kernel and updated in product
//! form between refactorizations.
//!
//! The dual simplex is the main path: it runs whenever the nonbasic variables
//! can be placed on bounds that make the reduced costs sign-feasible, which is
//! always the case for boxed variables. Otherwise a two-phase primal simplex is
//! used. Appending rows keeps the current basis dual feasible, so cutting-plane
//! loops re-solve with a handful of dual pivots.

use crate::problem::{check_bounds, check_row, LinearProgram, Row, Sense};
use crate::LpError;

const NONE: usize = usize::MAX;
const SINGULAR_TOL: f64 = 1e-10;
const DEGENERATE_STEP: f64 = 1e-12;

/// Solver tolerances and limits.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Primal feasibility tolerance on rows and bounds.
    pub tol_feas: f64,
    /// Reduced-cost optimality tolerance.
    pub tol_opt: f64,
    /// Smallest pivot element accepted by the ratio tests.
    pub pivot_tol: f64,
    /// Pivot limit for a single `solve` call.
    pub max_iterations: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after_stall: usize,
    /// Product-form updates between refactorizations.
    pub refactor_interval: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_feas: 1e-7,
            tol_opt: 1e-7,
            pivot_tol: 1e-9,
            max_iterations: 200_000,
            bland_after_stall: 1000,
            refactor_interval: 100,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic without finite bounds, held at its current value.
    Free,
}

/// Which structural columns and row logicals are basic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Basis {
    pub columns: Vec<VarStatus>,
    pub rows: Vec<VarStatus>,
}

impl Basis {
    pub fn num_basic(&self) -> usize {
        self.columns
            .iter()
            .chain(&self.rows)
            .filter(|s| **s == VarStatus::Basic)
            .count()
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// `A_i x` for every row.
    pub row_activity: Vec<f64>,
    /// Row duals `y` with reduced costs `c - A^T y`.
    pub duals: Vec<f64>,
    pub basis: Basis,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves `lp` from the slack basis.
pub fn solve(lp: &LinearProgram, config: &SolverConfig) -> LpSolution {
    Simplex::new(lp, config.clone()).solve()
}

enum Step {
    Continue,
    Done(LpStatus),
    Refactor,
}

/// Solver state that survives between solves, for warm starts after adding
/// rows or changing variable bounds.
#[derive(Clone, Debug)]
pub struct Simplex {
    config: SolverConfig,
    n: usize,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    cols: Vec<Vec<(usize, f64)>>,
    senses: Vec<Sense>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    position: Vec<usize>,
    status: Vec<VarStatus>,
    value: Vec<f64>,
    reduced: Vec<f64>,
    binv: Vec<Vec<f64>>,
    updates: usize,
    degenerate_streak: usize,
    bland: bool,
    iterations: usize,
}

impl Simplex {
    pub fn new(lp: &LinearProgram, config: SolverConfig) -> Self {
        let n = lp.num_vars();
        let mut s = Simplex {
            config,
            n,
            cost: lp.objective().to_vec(),
            lower: lp.lower().to_vec(),
            upper: lp.upper().to_vec(),
            rows: Vec::new(),
            cols: vec![Vec::new(); n],
            senses: Vec::new(),
            rhs: Vec::new(),
            basis: Vec::new(),
            position: vec![NONE; n],
            status: Vec::with_capacity(n),
            value: Vec::with_capacity(n),
            reduced: vec![0.0; n],
            binv: Vec::new(),
            updates: 0,
            degenerate_streak: 0,
            bland: false,
            iterations: 0,
        };
        for j in 0..n {
            let (st, v) = initial_placement(s.lower[j], s.upper[j], s.cost[j]);
            s.status.push(st);
            s.value.push(v);
        }
        for row in lp.rows() {
            s.push_row(row);
        }
        s
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn bounds(&self, var: usize) -> (f64, f64) {
        (self.lower[var], self.upper[var])
    }

    /// Changes the bounds of a structural variable. The basis is kept; the
    /// next solve repairs whatever feasibility the change broke.
    pub fn set_var_bounds(&mut self, var: usize, lower: f64, upper: f64) -> Result<(), LpError> {
        if var >= self.n {
            return Err(LpError::VariableOutOfRange { var, num_vars: self.n });
        }
        check_bounds(var, lower, upper)?;
        self.lower[var] = lower;
        self.upper[var] = upper;
        if self.status[var] != VarStatus::Basic {
            self.place_nonbasic(var);
        }
        Ok(())
    }

    /// Appends rows whose logicals enter the basis; the dual solution is unchanged.
    pub fn add_rows(&mut self, rows: &[Row]) -> Result<(), LpError> {
        for (k, row) in rows.iter().enumerate() {
            check_row(row, self.n, self.rows.len() + k)?;
        }
        for row in rows {
            self.push_row(row);
        }
        Ok(())
    }

    pub fn add_rows_and_resolve(&mut self, rows: &[Row]) -> Result<LpSolution, LpError> {
        self.add_rows(rows)?;
        Ok(self.solve())
    }

    fn push_row(&mut self, row: &Row) {
        let i = self.rows.len();
        let m_old = i;
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(row.coeffs.len());
        for &(j, v) in &row.coeffs {
            if v == 0.0 {
                continue;
            }
            match coeffs.iter_mut().find(|(k, _)| *k == j) {
                Some(e) => e.1 += v,
                None => coeffs.push((j, v)),
            }
        }
        for &(j, v) in &coeffs {
            self.cols[j].push((i, v));
        }
        let (lo, hi) = match row.sense {
            Sense::Le => (f64::NEG_INFINITY, row.rhs),
            Sense::Ge => (row.rhs, f64::INFINITY),
            Sense::Eq => (row.rhs, row.rhs),
        };
        // Bordered inverse: new row of B^-1 is a_B^T B^-1 followed by -1.
        let mut new_row = vec![0.0; m_old + 1];
        for &(j, v) in &coeffs {
            let p = self.position[j];
            if p != NONE {
                for (t, b) in self.binv[p].iter().enumerate() {
                    new_row[t] += v * b;
                }
            }
        }
        new_row[m_old] = -1.0;
        for r in self.binv.iter_mut() {
            r.push(0.0);
        }
        self.binv.push(new_row);

        let activity: f64 = coeffs.iter().map(|&(j, v)| v * self.value[j]).sum();
        self.rows.push(coeffs);
        self.senses.push(row.sense);
        self.rhs.push(row.rhs);
        self.cost.push(0.0);
        self.lower.push(lo);
        self.upper.push(hi);
        self.status.push(VarStatus::Basic);
        self.value.push(activity);
        self.reduced.push(0.0);
        self.position.push(m_old);
        self.basis.push(self.n + i);
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    fn place_nonbasic(&mut self, j: usize) {
        let (lo, hi) = (self.lower[j], self.upper[j]);
        let (st, v) = match self.status[j] {
            VarStatus::AtLower if lo.is_finite() => (VarStatus::AtLower, lo),
            VarStatus::AtUpper if hi.is_finite() => (VarStatus::AtUpper, hi),
            _ if lo.is_finite() && (!hi.is_finite() || self.value[j] - lo <= hi - self.value[j]) => {
                (VarStatus::AtLower, lo)
            }
            _ if hi.is_finite() => (VarStatus::AtUpper, hi),
            _ => (VarStatus::Free, self.value[j]),
        };
        self.status[j] = st;
        self.value[j] = v;
    }

    /// Solves from the current basis.
    pub fn solve(&mut self) -> LpSolution {
        self.iterations = 0;
        self.degenerate_streak = 0;
        self.bland = false;
        let mut attempts = 0;
        let status = loop {
            attempts += 1;
            if attempts > 8 {
                break LpStatus::NumericalFailure;
            }
            if !self.refactor() {
                break LpStatus::NumericalFailure;
            }
            self.compute_primal();
            self.compute_reduced();
            let status = if self.make_dual_feasible() {
                self.run_dual()
            } else {
                self.run_primal()
            };
            if status != LpStatus::Optimal {
                break status;
            }
            // Verify from a fresh factorization before reporting optimality.
            if !self.refactor() {
                break LpStatus::NumericalFailure;
            }
            self.compute_primal();
            self.compute_reduced();
            if self.max_primal_infeasibility() <= self.config.tol_feas && self.dual_feasible() {
                break LpStatus::Optimal;
            }
        };
        self.solution(status)
    }

    fn solution(&self, status: LpStatus) -> LpSolution {
        let x = self.value[..self.n].to_vec();
        let row_activity: Vec<f64> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| v * x[j]).sum())
            .collect();
        let objective = self.cost[..self.n].iter().zip(&x).map(|(c, v)| c * v).sum();
        let costs = self.cost.clone();
        let duals = self.duals(&costs);
        LpSolution {
            status,
            x,
            objective,
            row_activity,
            duals,
            basis: Basis {
                columns: self.status[..self.n].to_vec(),
                rows: self.status[self.n..].to_vec(),
            },
            iterations: self.iterations,
        }
    }

    // ---- linear algebra ------------------------------------------------

    /// `B^-1 a_j`, indexed by basis position.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m();
        let mut alpha = vec![0.0; m];
        if j < self.n {
            let col = &self.cols[j];
            for (r, row) in self.binv.iter().enumerate() {
                alpha[r] = col.iter().map(|&(i, v)| row[i] * v).sum();
            }
        } else {
            let i = j - self.n;
            for (r, row) in self.binv.iter().enumerate() {
                alpha[r] = -row[i];
            }
        }
        alpha
    }

    /// `rho^T a_j` for every variable.
    fn row_alpha(&self, rho: &[f64]) -> Vec<f64> {
        let mut alpha = vec![0.0; self.n + self.m()];
        for (i, &ri) in rho.iter().enumerate() {
            if ri == 0.0 {
                continue;
            }
            for &(j, v) in &self.rows[i] {
                alpha[j] += ri * v;
            }
            alpha[self.n + i] = -ri;
        }
        alpha
    }

    fn duals(&self, costs: &[f64]) -> Vec<f64> {
        let m = self.m();
        let mut y = vec![0.0; m];
        for (r, &j) in self.basis.iter().enumerate() {
            let c = costs[j];
            if c != 0.0 {
                for (yi, b) in y.iter_mut().zip(&self.binv[r]) {
                    *yi += c * b;
                }
            }
        }
        y
    }

    fn reduced_costs(&self, costs: &[f64]) -> Vec<f64> {
        let y = self.duals(costs);
        let mut d = costs.to_vec();
        for (i, row) in self.rows.iter().enumerate() {
            let yi = y[i];
            if yi != 0.0 {
                for &(j, v) in row {
                    d[j] -= yi * v;
                }
            }
            d[self.n + i] += yi;
        }
        for &j in &self.basis {
            d[j] = 0.0;
        }
        d
    }

    fn compute_reduced(&mut self) {
        let costs = self.cost.clone();
        self.reduced = self.reduced_costs(&costs);
    }

    fn compute_primal(&mut self) {
        let m = self.m();
        let mut w = vec![0.0; m];
        for j in 0..self.n + m {
            if self.status[j] == VarStatus::Basic {
                continue;
            }
            let v = self.value[j];
            if v == 0.0 {
                continue;
            }
            if j < self.n {
                for &(i, a) in &self.cols[j] {
                    w[i] += a * v;
                }
            } else {
                w[j - self.n] -= v;
            }
        }
        for (r, &j) in self.basis.iter().enumerate() {
            let s: f64 = self.binv[r].iter().zip(&w).map(|(b, wi)| b * wi).sum();
            self.value[j] = -s;
        }
    }

    /// Rebuilds `B^-1` from scratch. The basis is `[A_S | -I_P]` where `S` are
    /// the structural basics and `P` the rows whose logical is basic, so only
    /// the kernel `A[Q, S]` (Q = rows without a basic logical) needs inverting.
    /// Dependent structural columns are swapped for logicals.
    fn refactor(&mut self) -> bool {
        for _ in 0..3 {
            match self.try_refactor() {
                Ok(()) => {
                    self.updates = 0;
                    return true;
                }
                Err(dependent) => self.repair_basis(&dependent),
            }
        }
        false
    }

    fn try_refactor(&mut self) -> Result<(), Vec<(usize, usize)>> {
        let m = self.m();
        let n = self.n;
        let mut logical_basic = vec![false; m];
        let mut struct_pos = Vec::new();
        for (r, &j) in self.basis.iter().enumerate() {
            if j < n {
                struct_pos.push(r);
            } else {
                logical_basic[j - n] = true;
            }
        }
        let q_rows: Vec<usize> = (0..m).filter(|&i| !logical_basic[i]).collect();
        let k = q_rows.len();
        debug_assert_eq!(k, struct_pos.len());
        let mut q_index = vec![NONE; m];
        for (a, &i) in q_rows.iter().enumerate() {
            q_index[i] = a;
        }
        let mut kmat = vec![vec![0.0; k]; k];
        for (b, &r) in struct_pos.iter().enumerate() {
            for &(i, v) in &self.cols[self.basis[r]] {
                if q_index[i] != NONE {
                    kmat[q_index[i]][b] = v;
                }
            }
        }
        let kinv = match invert(kmat) {
            Ok(inv) => inv,
            Err((dep_cols, free_rows)) => {
                let pairs = dep_cols
                    .into_iter()
                    .zip(free_rows)
                    .map(|(b, a)| (struct_pos[b], q_rows[a]))
                    .collect();
                return Err(pairs);
            }
        };
        let mut binv = vec![vec![0.0; m]; m];
        let mut struct_index = vec![NONE; n];
        for (b, &r) in struct_pos.iter().enumerate() {
            struct_index[self.basis[r]] = b;
            for (a, &i) in q_rows.iter().enumerate() {
                binv[r][i] = kinv[b][a];
            }
        }
        for (r, &j) in self.basis.iter().enumerate() {
            if j < n {
                continue;
            }
            let p = j - n;
            let target = &mut binv[r];
            target[p] = -1.0;
            for &(jj, v) in &self.rows[p] {
                let b = struct_index[jj];
                if b == NONE {
                    continue;
                }
                for (a, &i) in q_rows.iter().enumerate() {
                    target[i] += v * kinv[b][a];
                }
            }
        }
        self.binv = binv;
        Ok(())
    }

    fn repair_basis(&mut self, pairs: &[(usize, usize)]) {
        for &(pos, row) in pairs {
            let leaving = self.basis[pos];
            let entering = self.n + row;
            self.basis[pos] = entering;
            self.position[entering] = pos;
            self.status[entering] = VarStatus::Basic;
            self.position[leaving] = NONE;
            self.status[leaving] = VarStatus::AtLower;
            self.place_nonbasic(leaving);
        }
    }

    fn pivot_inverse(&mut self, r: usize, alpha: &[f64]) {
        let piv = alpha[r];
        let pivot_row: Vec<f64> = self.binv[r].iter().map(|v| v / piv).collect();
        for (i, row) in self.binv.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = alpha[i];
            if f != 0.0 {
                for (a, b) in row.iter_mut().zip(&pivot_row) {
                    *a -= f * b;
                }
            }
        }
        self.binv[r] = pivot_row;
        self.updates += 1;
    }

    fn swap_basis(&mut self, r: usize, entering: usize, leaving: usize, leaving_status: VarStatus) {
        self.basis[r] = entering;
        self.position[entering] = r;
        self.status[entering] = VarStatus::Basic;
        self.position[leaving] = NONE;
        self.status[leaving] = leaving_status;
    }

    // ---- feasibility checks ---------------------------------------------

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.value[j];
        if v < self.lower[j] {
            self.lower[j] - v
        } else if v > self.upper[j] {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn max_primal_infeasibility(&self) -> f64 {
        self.basis.iter().map(|&j| self.infeasibility(j)).fold(0.0, f64::max)
    }

    fn dual_feasible(&self) -> bool {
        let tol = self.config.tol_opt;
        (0..self.n + self.m()).all(|j| {
            let d = self.reduced[j];
            match self.status[j] {
                VarStatus::Basic => true,
                _ if self.is_fixed(j) => true,
                VarStatus::AtLower => d >= -tol,
                VarStatus::AtUpper => d <= tol,
                VarStatus::Free => d.abs() <= tol,
            }
        })
    }

    /// Moves nonbasic variables to the bound matching their reduced-cost
    /// sign. Returns false when some variable lacks the needed bound.
    fn make_dual_feasible(&mut self) -> bool {
        let tol = self.config.tol_opt;
        let mut moved = false;
        let mut ok = true;
        for j in 0..self.n + self.m() {
            if self.status[j] == VarStatus::Basic || self.is_fixed(j) {
                continue;
            }
            let d = self.reduced[j];
            let want = if d > tol {
                Some(VarStatus::AtLower)
            } else if d < -tol {
                Some(VarStatus::AtUpper)
            } else {
                None
            };
            match want {
                Some(VarStatus::AtLower) if self.status[j] != VarStatus::AtLower => {
                    if self.lower[j].is_finite() {
                        self.status[j] = VarStatus::AtLower;
                        self.value[j] = self.lower[j];
                        moved = true;
                    } else {
                        ok = false;
                    }
                }
                Some(VarStatus::AtUpper) if self.status[j] != VarStatus::AtUpper => {
                    if self.upper[j].is_finite() {
                        self.status[j] = VarStatus::AtUpper;
                        self.value[j] = self.upper[j];
                        moved = true;
                    } else {
                        ok = false;
                    }
                }
                _ => {}
            }
        }
        if moved {
            self.compute_primal();
        }
        ok
    }

    fn note_step(&mut self, step: f64) {
        if step.abs() <= DEGENERATE_STEP {
            self.degenerate_streak += 1;
            if self.degenerate_streak >= self.config.bland_after_stall {
                self.bland = true;
            }
        } else {
            self.degenerate_streak = 0;
            self.bland = false;
        }
    }

    // ---- dual simplex ----------------------------------------------------

    fn run_dual(&mut self) -> LpStatus {
        let mut retried_infeasible = false;
        loop {
            if self.iterations >= self.config.max_iterations {
                return LpStatus::IterationLimit;
            }
            if self.updates >= self.config.refactor_interval {
                if !self.refactor() {
                    return LpStatus::NumericalFailure;
                }
                self.compute_primal();
                self.compute_reduced();
                if !self.dual_feasible() {
                    // Drift broke dual feasibility; let the caller restart.
                    return LpStatus::Optimal;
                }
            }
            match self.dual_iterate() {
                Step::Continue => {}
                Step::Done(LpStatus::Infeasible) if !retried_infeasible => {
                    retried_infeasible = true;
                    if !self.refactor() {
                        return LpStatus::NumericalFailure;
                    }
                    self.compute_primal();
                    self.compute_reduced();
                    if !self.make_dual_feasible() {
                        return LpStatus::Optimal;
                    }
                }
                Step::Done(s) => return s,
                Step::Refactor => {
                    if !self.refactor() {
                        return LpStatus::NumericalFailure;
                    }
                    self.compute_primal();
                    self.compute_reduced();
                    if !self.dual_feasible() {
                        return LpStatus::Optimal;
                    }
                }
            }
        }
    }

    fn dual_iterate(&mut self) -> Step {
        let tol = self.config.tol_feas;
        // Leaving row: largest infeasibility scaled by the row norm of B^-1.
        let mut leave: Option<(usize, f64)> = None;
        for (r, &j) in self.basis.iter().enumerate() {
            let inf = self.infeasibility(j);
            if inf <= tol {
                continue;
            }
            let score = if self.bland {
                -(j as f64)
            } else {
                let norm: f64 = self.binv[r].iter().map(|v| v * v).sum();
                inf * inf / norm.max(1e-12)
            };
            if leave.is_none_or(|(_, s)| score > s) {
                leave = Some((r, score));
            }
        }
        let Some((r, _)) = leave else {
            return Step::Done(LpStatus::Optimal);
        };
        let jl = self.basis[r];
        let to_upper = self.value[jl] > self.upper[jl];
        let sign = if to_upper { 1.0 } else { -1.0 };
        let rho = self.binv[r].clone();
        let alpha_row = self.row_alpha(&rho);

        let piv = self.config.pivot_tol;
        let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
        for j in 0..self.n + self.m() {
            let st = self.status[j];
            if st == VarStatus::Basic || self.is_fixed(j) {
                continue;
            }
            let a = sign * alpha_row[j];
            let d = self.reduced[j];
            let eligible = match st {
                VarStatus::AtLower => a > piv,
                VarStatus::AtUpper => a < -piv,
                VarStatus::Free => a.abs() > piv,
                VarStatus::Basic => false,
            };
            if !eligible {
                continue;
            }
            let slack = match st {
                VarStatus::AtLower => d.max(0.0),
                VarStatus::AtUpper => (-d).max(0.0),
                _ => d.abs(),
            };
            candidates.push((j, slack, a.abs()));
        }
        if candidates.is_empty() {
            return Step::Done(LpStatus::Infeasible);
        }
        let q = if self.bland {
            let min = candidates.iter().map(|&(_, s, a)| s / a).fold(f64::INFINITY, f64::min);
            candidates
                .iter()
                .filter(|&&(_, s, a)| s / a <= min)
                .map(|c| c.0)
                .min()
                .unwrap()
        } else {
            let tol_opt = self.config.tol_opt;
            let bound = candidates
                .iter()
                .map(|&(_, s, a)| (s + tol_opt) / a)
                .fold(f64::INFINITY, f64::min);
            let mut best = candidates[0];
            let mut found = false;
            for &c in &candidates {
                if c.1 / c.2 <= bound && (!found || c.2 > best.2) {
                    best = c;
                    found = true;
                }
            }
            best.0
        };

        let alpha_col = self.ftran(q);
        let arq = alpha_col[r];
        if (arq - alpha_row[q]).abs() > 1e-6 * (1.0 + arq.abs()) || arq.abs() < piv {
            if self.updates > 0 {
                return Step::Refactor;
            }
            if arq.abs() < piv {
                return Step::Done(LpStatus::NumericalFailure);
            }
        }
        self.iterations += 1;

        let bound = if to_upper { self.upper[jl] } else { self.lower[jl] };
        let t = (self.value[jl] - bound) / arq;
        for (i, &jb) in self.basis.iter().enumerate() {
            self.value[jb] -= t * alpha_col[i];
        }
        self.value[q] += t;
        self.value[jl] = bound;

        let theta = self.reduced[q] / alpha_row[q];
        for j in 0..self.n + self.m() {
            if self.status[j] != VarStatus::Basic {
                self.reduced[j] -= theta * alpha_row[j];
            }
        }
        self.reduced[q] = 0.0;
        self.reduced[jl] = -theta;
        self.note_step(theta);

        let leaving_status = if to_upper && !self.is_fixed(jl) {
            VarStatus::AtUpper
        } else {
            VarStatus::AtLower
        };
        self.swap_basis(r, q, jl, leaving_status);
        self.pivot_inverse(r, &alpha_col);
        Step::Continue
    }

    // ---- primal simplex --------------------------------------------------

    fn run_primal(&mut self) -> LpStatus {
        loop {
            if self.iterations >= self.config.max_iterations {
                return LpStatus::IterationLimit;
            }
            if self.updates >= self.config.refactor_interval {
                if !self.refactor() {
                    return LpStatus::NumericalFailure;
                }
                self.compute_primal();
            }
            let phase1 = self.max_primal_infeasibility() > self.config.tol_feas;
            match self.primal_iterate(phase1) {
                Step::Continue => {}
                Step::Done(LpStatus::Optimal) if phase1 => return LpStatus::Infeasible,
                Step::Done(s) => {
                    self.compute_reduced();
                    return s;
                }
                Step::Refactor => {
                    if !self.refactor() {
                        return LpStatus::NumericalFailure;
                    }
                    self.compute_primal();
                }
            }
        }
    }

    fn primal_iterate(&mut self, phase1: bool) -> Step {
        let tol = self.config.tol_feas;
        let costs: Vec<f64> = if phase1 {
            let mut c = vec![0.0; self.n + self.m()];
            for &j in &self.basis {
                if self.value[j] < self.lower[j] - tol {
                    c[j] = -1.0;
                } else if self.value[j] > self.upper[j] + tol {
                    c[j] = 1.0;
                }
            }
            c
        } else {
            self.cost.clone()
        };
        let d = self.reduced_costs(&costs);
        let tol_opt = self.config.tol_opt;
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..self.n + self.m() {
            let st = self.status[j];
            if st == VarStatus::Basic || self.is_fixed(j) {
                continue;
            }
            let dj = d[j];
            let improving = match st {
                VarStatus::AtLower => dj < -tol_opt,
                VarStatus::AtUpper => dj > tol_opt,
                VarStatus::Free => dj.abs() > tol_opt,
                VarStatus::Basic => false,
            };
            if !improving {
                continue;
            }
            if self.bland {
                entering = Some((j, dj));
                break;
            }
            if entering.is_none_or(|(_, best)| dj.abs() > best.abs()) {
                entering = Some((j, dj));
            }
        }
        let Some((q, dq)) = entering else {
            return Step::Done(LpStatus::Optimal);
        };
        let dir = if dq < 0.0 { 1.0 } else { -1.0 };
        let alpha = self.ftran(q);
        let piv = self.config.pivot_tol;

        // Each candidate: (position, step length, |rate|, bound hit is upper).
        let mut blocks: Vec<(usize, f64, f64, bool)> = Vec::new();
        for (i, &jb) in self.basis.iter().enumerate() {
            let g = -dir * alpha[i];
            if g.abs() <= piv {
                continue;
            }
            let (v, lo, hi) = (self.value[jb], self.lower[jb], self.upper[jb]);
            let below = v < lo - tol;
            let above = v > hi + tol;
            if g < 0.0 {
                if above {
                    blocks.push((i, (v - hi) / -g, -g, true));
                } else if !below && lo.is_finite() {
                    blocks.push((i, ((v - lo) / -g).max(0.0), -g, false));
                }
            } else if below {
                blocks.push((i, (lo - v) / g, g, false));
            } else if !above && hi.is_finite() {
                blocks.push((i, ((hi - v) / g).max(0.0), g, true));
            }
        }
        let flip = self.upper[q] - self.lower[q];
        let leave = if blocks.is_empty() {
            None
        } else if self.bland {
            let min = blocks.iter().map(|b| b.1).fold(f64::INFINITY, f64::min);
            blocks
                .iter()
                .filter(|b| b.1 <= min)
                .min_by_key(|b| self.basis[b.0])
                .copied()
        } else {
            let slack = if phase1 { 0.0 } else { tol };
            let bound = blocks.iter().map(|b| b.1 + slack / b.2).fold(f64::INFINITY, f64::min);
            blocks
                .iter()
                .filter(|b| b.1 <= bound)
                .max_by(|a, b| a.2.partial_cmp(&b.2).unwrap().then(b.0.cmp(&a.0)))
                .copied()
        };

        match leave {
            Some(b) if b.1 < flip => {
                let (r, t, _, hit_upper) = b;
                self.iterations += 1;
                let jl = self.basis[r];
                for (i, &jb) in self.basis.iter().enumerate() {
                    self.value[jb] -= dir * t * alpha[i];
                }
                self.value[q] += dir * t;
                let (st, bound) = if hit_upper {
                    (VarStatus::AtUpper, self.upper[jl])
                } else {
                    (VarStatus::AtLower, self.lower[jl])
                };
                self.value[jl] = bound;
                let st = if self.is_fixed(jl) { VarStatus::AtLower } else { st };
                self.note_step(t);
                self.swap_basis(r, q, jl, st);
                self.pivot_inverse(r, &alpha);
                Step::Continue
            }
            _ if flip.is_finite() => {
                self.iterations += 1;
                for (i, &jb) in self.basis.iter().enumerate() {
                    self.value[jb] -= dir * flip * alpha[i];
                }
                if dir > 0.0 {
                    self.status[q] = VarStatus::AtUpper;
                    self.value[q] = self.upper[q];
                } else {
                    self.status[q] = VarStatus::AtLower;
                    self.value[q] = self.lower[q];
                }
                self.note_step(flip);
                Step::Continue
            }
            _ if phase1 => Step::Done(LpStatus::NumericalFailure),
            _ => Step::Done(LpStatus::Unbounded),
        }
    }
}

fn initial_placement(lower: f64, upper: f64, cost: f64) -> (VarStatus, f64) {
    match (lower.is_finite(), upper.is_finite()) {
        (true, true) if cost < 0.0 => (VarStatus::AtUpper, upper),
        (true, _) => (VarStatus::AtLower, lower),
        (false, true) => (VarStatus::AtUpper, upper),
        (false, false) => (VarStatus::Free, 0.0),
    }
}

/// Gauss-Jordan inverse with partial pivoting. On failure returns the
/// dependent column indices and the same number of unpivoted rows.
#[allow(clippy::type_complexity)]
fn invert(mut a: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>, (Vec<usize>, Vec<usize>)> {
    let k = a.len();
    let mut inv: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut r = vec![0.0; k];
            r[i] = 1.0;
            r
        })
        .collect();
    // row_of_col[c] = original row index pivoted for column c.
    let mut used = vec![false; k];
    let mut pivot_row_of = vec![NONE; k];
    let mut dependent = Vec::new();
    for c in 0..k {
        let mut best = NONE;
        let mut best_val = SINGULAR_TOL;
        for r in 0..k {
            if !used[r] && a[r][c].abs() > best_val {
                best_val = a[r][c].abs();
                best = r;
            }
        }
        if best == NONE {
            dependent.push(c);
            continue;
        }
        used[best] = true;
        pivot_row_of[c] = best;
        let p = a[best][c];
        for v in a[best].iter_mut() {
            *v /= p;
        }
        for v in inv[best].iter_mut() {
            *v /= p;
        }
        let prow = a[best].clone();
        let pinv = inv[best].clone();
        for r in 0..k {
            if r == best {
                continue;
            }
            let f = a[r][c];
            if f != 0.0 {
                for (x, y) in a[r].iter_mut().zip(&prow) {
                    *x -= f * y;
                }
                for (x, y) in inv[r].iter_mut().zip(&pinv) {
                    *x -= f * y;
                }
            }
        }
    }
    if !dependent.is_empty() {
        let free: Vec<usize> = (0..k).filter(|&r| !used[r]).collect();
        return Err((dependent, free));
    }
    // Row `pivot_row_of[c]` now holds row c of the inverse.
    Ok((0..k).map(|c| std::mem::take(&mut inv[pivot_row_of[c]])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_permuted_matrix() {
        let a = vec![vec![0.0, 2.0], vec![1.0, 0.0]];
        let inv = invert(a).unwrap();
        assert_eq!(inv, vec![vec![0.0, 1.0], vec![0.5, 0.0]]);
    }

    #[test]
    fn singular_kernel_reports_dependency() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        let (cols, rows) = invert(a).unwrap_err();
        assert_eq!(cols, vec![1]);
        assert_eq!(rows.len(), 1);
    }
}
