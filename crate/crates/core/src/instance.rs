//! Instances on the complete graph, tours, and metric predicates.
//!
//! Every per-edge vector uses the same layout: edge `{i, j}` with `i < j` sits
//! at `i*n - i*(i+1)/2 + (j - i - 1)`, i.e. pairs in lexicographic order.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default absolute tolerance for metric checks on fractional costs.
pub const METRIC_TOL: f64 = 1e-9;

/// Largest magnitude for which every integer is exactly representable as `f64`.
const EXACT_INT_LIMIT: f64 = 9_007_199_254_740_992.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("instance needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("expected {expected} edge values for n = {n}, got {got}")]
    WrongLength { n: usize, expected: usize, got: usize },
    #[error("edge {index} has invalid cost {value}")]
    InvalidCost { index: usize, value: f64 },
    #[error("dimension mismatch: instance has {instance} nodes, tour has {tour}")]
    DimensionMismatch { instance: usize, tour: usize },
    #[error("tour order is not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("{count} triangle inequalities violated, worst by {worst}")]
    NotMetric { count: usize, worst: f64 },
    #[error("scale factor must be positive and finite, got {0}")]
    BadFactor(f64),
    #[error("scaled cost {0} exceeds the exactly representable integer range")]
    Overflow(f64),
    #[error("eps must lie in (0, 2/(n+1)) = (0, {bound}), got {eps}")]
    EpsOutOfRange { eps: f64, bound: f64 },
    #[error("graph edge ({0}, {1}) is a loop or out of range")]
    BadGraphEdge(usize, usize),
}

pub fn num_edges(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Position of edge `{i, j}` in the lexicographic layout. Order of `i`, `j` is irrelevant.
#[inline]
pub fn edge_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j && i < n && j < n);
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// All pairs `(i, j)`, `i < j`, in layout order.
pub fn edge_list(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(num_edges(n));
    for i in 0..n {
        for j in i + 1..n {
            out.push((i, j));
        }
    }
    out
}

/// A real vector indexed by the edges of `K_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeVector {
    n: usize,
    values: Vec<f64>,
}

impl EdgeVector {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self, InstanceError> {
        if values.len() != num_edges(n) {
            return Err(InstanceError::WrongLength {
                n,
                expected: num_edges(n),
                got: values.len(),
            });
        }
        Ok(EdgeVector { n, values })
    }

    pub fn zeros(n: usize) -> Self {
        EdgeVector {
            n,
            values: vec![0.0; num_edges(n)],
        }
    }

    pub fn filled(n: usize, value: f64) -> Self {
        EdgeVector {
            n,
            values: vec![value; num_edges(n)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[edge_index(self.n, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let e = edge_index(self.n, i, j);
        self.values[e] = v;
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.values.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    /// Sum over the edges with exactly one endpoint in `S` (`in_s[v]` marks membership).
    pub fn cut_value(&self, in_s: &[bool]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                if in_s[i] != in_s[j] {
                    total += self.get(i, j);
                }
            }
        }
        total
    }

    /// Sum over the edges incident to `v`.
    pub fn degree(&self, v: usize) -> f64 {
        (0..self.n).filter(|&u| u != v).map(|u| self.get(u, v)).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Fractional,
    Integer,
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostKind::Fractional => "fractional",
            CostKind::Integer => "integer",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Costs {
    Fractional(Vec<f64>),
    Integer(Vec<i64>),
}

impl Costs {
    pub fn len(&self) -> usize {
        match self {
            Costs::Fractional(v) => v.len(),
            Costs::Integer(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, e: usize) -> f64 {
        match self {
            Costs::Fractional(v) => v[e],
            Costs::Integer(v) => v[e] as f64,
        }
    }
}

/// Symmetric nonnegative costs on `K_n`, one entry per unordered pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TspInstance {
    n: usize,
    costs: Costs,
    name: String,
    metric_validated: bool,
}

impl TspInstance {
    pub fn fractional(n: usize, costs: Vec<f64>) -> Result<Self, InstanceError> {
        check_shape(n, costs.len())?;
        for (index, &value) in costs.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(InstanceError::InvalidCost { index, value });
            }
        }
        Ok(TspInstance {
            n,
            costs: Costs::Fractional(costs),
            name: String::new(),
            metric_validated: false,
        })
    }

    pub fn integer(n: usize, costs: Vec<i64>) -> Result<Self, InstanceError> {
        check_shape(n, costs.len())?;
        for (index, &value) in costs.iter().enumerate() {
            if value < 0 || value as f64 > EXACT_INT_LIMIT {
                return Err(InstanceError::InvalidCost {
                    index,
                    value: value as f64,
                });
            }
        }
        Ok(TspInstance {
            n,
            costs: Costs::Integer(costs),
            name: String::new(),
            metric_validated: false,
        })
    }

    pub fn from_edge_vector(c: &EdgeVector) -> Result<Self, InstanceError> {
        Self::fractional(c.n(), c.values().to_vec())
    }

    /// Builds an instance from a full symmetric matrix (upper triangle is read).
    pub fn from_matrix_f64(m: &[Vec<f64>]) -> Result<Self, InstanceError> {
        let n = m.len();
        let costs = edge_list(n).into_iter().map(|(i, j)| m[i][j]).collect();
        Self::fractional(n, costs)
    }

    pub fn from_matrix_i64(m: &[Vec<i64>]) -> Result<Self, InstanceError> {
        let n = m.len();
        let costs = edge_list(n).into_iter().map(|(i, j)| m[i][j]).collect();
        Self::integer(n, costs)
    }

    /// All edges at the same cost.
    pub fn uniform(n: usize, cost: f64) -> Result<Self, InstanceError> {
        Self::fractional(n, vec![cost; num_edges(n)])
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn costs(&self) -> &Costs {
        &self.costs
    }

    pub fn cost_kind(&self) -> CostKind {
        match self.costs {
            Costs::Fractional(_) => CostKind::Fractional,
            Costs::Integer(_) => CostKind::Integer,
        }
    }

    #[inline]
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.costs.get(edge_index(self.n, i, j))
    }

    pub fn integer_costs(&self) -> Option<&[i64]> {
        match &self.costs {
            Costs::Integer(v) => Some(v),
            Costs::Fractional(_) => None,
        }
    }

    pub fn costs_f64(&self) -> Vec<f64> {
        match &self.costs {
            Costs::Fractional(v) => v.clone(),
            Costs::Integer(v) => v.iter().map(|&c| c as f64).collect(),
        }
    }

    pub fn edge_vector(&self) -> EdgeVector {
        EdgeVector {
            n: self.n,
            values: self.costs_f64(),
        }
    }

    /// Dense `n x n` matrix with zero diagonal.
    pub fn matrix_f64(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for (e, (i, j)) in edge_list(self.n).into_iter().enumerate() {
            m[i][j] = self.costs.get(e);
            m[j][i] = m[i][j];
        }
        m
    }

    pub fn matrix_i64(&self) -> Option<Vec<Vec<i64>>> {
        let c = self.integer_costs()?;
        let mut m = vec![vec![0; self.n]; self.n];
        for (e, (i, j)) in edge_list(self.n).into_iter().enumerate() {
            m[i][j] = c[e];
            m[j][i] = c[e];
        }
        Some(m)
    }

    /// Fractional copy with every cost multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, InstanceError> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(InstanceError::BadFactor(factor));
        }
        let costs = self.costs_f64().into_iter().map(|c| c * factor).collect();
        Ok(TspInstance {
            n: self.n,
            costs: Costs::Fractional(costs),
            name: self.name.clone(),
            metric_validated: false,
        })
    }

    pub fn zero_cost_edges(&self) -> usize {
        (0..self.costs.len()).filter(|&e| self.costs.get(e) == 0.0).count()
    }

    /// Checks the triangle inequalities and flags the instance as metric.
    pub fn validate_metric(mut self, tol: f64) -> Result<Self, InstanceError> {
        let v = check_metric(&self, tol);
        if let Some(worst) = v.first() {
            return Err(InstanceError::NotMetric {
                count: v.len(),
                worst: worst.amount,
            });
        }
        self.metric_validated = true;
        Ok(self)
    }

    pub fn is_metric_validated(&self) -> bool {
        self.metric_validated
    }
}

fn check_shape(n: usize, len: usize) -> Result<(), InstanceError> {
    if n < 3 {
        return Err(InstanceError::TooFewNodes(n));
    }
    if len != num_edges(n) {
        return Err(InstanceError::WrongLength {
            n,
            expected: num_edges(n),
            got: len,
        });
    }
    Ok(())
}

/// A Hamiltonian cycle given as a node order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tour {
    order: Vec<usize>,
}

impl Tour {
    pub fn new(order: Vec<usize>) -> Result<Self, InstanceError> {
        let n = order.len();
        if n < 3 {
            return Err(InstanceError::TooFewNodes(n));
        }
        let mut seen = vec![false; n];
        for &v in &order {
            if v >= n || seen[v] {
                return Err(InstanceError::NotAPermutation(n));
            }
            seen[v] = true;
        }
        Ok(Tour { order })
    }

    /// The tour `0, 1, ..., n-1`.
    pub fn identity(n: usize) -> Self {
        Tour {
            order: (0..n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Consecutive pairs, including the closing edge.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.order.len();
        (0..n).map(move |k| (self.order[k], self.order[(k + 1) % n]))
    }

    pub fn edge_indices(&self) -> Vec<usize> {
        let n = self.n();
        self.edges().map(|(a, b)| edge_index(n, a, b)).collect()
    }

    pub fn incidence(&self) -> EdgeVector {
        let mut z = EdgeVector::zeros(self.n());
        for e in self.edge_indices() {
            z.values[e] = 1.0;
        }
        z
    }

    /// Rotated to start at node 0 and oriented so the second node is the
    /// smaller of node 0's two neighbours.
    pub fn canonical(&self) -> Tour {
        let n = self.n();
        let start = self.order.iter().position(|&v| v == 0).unwrap();
        let mut order: Vec<usize> = (0..n).map(|k| self.order[(start + k) % n]).collect();
        if order[1] > order[n - 1] {
            order[1..].reverse();
        }
        Tour { order }
    }
}

pub fn tour_cost(inst: &TspInstance, t: &Tour) -> Result<f64, InstanceError> {
    if t.n() != inst.n() {
        return Err(InstanceError::DimensionMismatch {
            instance: inst.n(),
            tour: t.n(),
        });
    }
    Ok(t.edges().map(|(a, b)| inst.cost(a, b)).sum())
}

/// Exact tour cost for an integer instance.
pub fn tour_cost_int(inst: &TspInstance, t: &Tour) -> Option<i64> {
    let c = inst.integer_costs()?;
    if t.n() != inst.n() {
        return None;
    }
    Some(t.edges().map(|(a, b)| c[edge_index(inst.n(), a, b)]).sum())
}

/// A violated triangle inequality `c_ij <= c_ik + c_jk` (`i < j`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleViolation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub amount: f64,
}

/// Violated triangle inequalities of a raw edge vector, worst first; ties are
/// ordered by `(i, j, k)`.
pub fn triangle_violations(n: usize, c: &[f64], tol: f64) -> Vec<TriangleViolation> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let cij = c[edge_index(n, i, j)];
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let amount = cij - (c[edge_index(n, i, k)] + c[edge_index(n, j, k)]);
                if amount > tol {
                    out.push(TriangleViolation { i, j, k, amount });
                }
            }
        }
    }
    sort_violations(&mut out);
    out
}

fn sort_violations(v: &mut [TriangleViolation]) {
    v.sort_by(|a, b| {
        b.amount
            .partial_cmp(&a.amount)
            .unwrap()
            .then((a.i, a.j, a.k).cmp(&(b.i, b.j, b.k)))
    });
}

/// All triangle inequalities violated by more than `tol`, worst first.
/// Integer instances are checked in exact integer arithmetic.
pub fn check_metric(inst: &TspInstance, tol: f64) -> Vec<TriangleViolation> {
    let n = inst.n();
    match inst.costs() {
        Costs::Fractional(c) => triangle_violations(n, c, tol),
        Costs::Integer(c) => {
            let mut out = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    let cij = c[edge_index(n, i, j)];
                    for k in 0..n {
                        if k == i || k == j {
                            continue;
                        }
                        let excess = cij - c[edge_index(n, i, k)] - c[edge_index(n, j, k)];
                        if excess as f64 > tol && excess > 0 {
                            out.push(TriangleViolation {
                                i,
                                j,
                                k,
                                amount: excess as f64,
                            });
                        }
                    }
                }
            }
            sort_violations(&mut out);
            out
        }
    }
}

/// Shortest-path closure. Passes are repeated until nothing changes, so the
/// result is a fixed point even under floating-point rounding.
pub fn metric_closure(inst: &TspInstance) -> TspInstance {
    let n = inst.n();
    let costs = match inst.costs() {
        Costs::Fractional(_) => {
            let mut d = inst.matrix_f64();
            loop {
                let mut changed = false;
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            let via = d[i][k] + d[k][j];
                            if via < d[i][j] {
                                d[i][j] = via;
                                changed = true;
                            }
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            Costs::Fractional(edge_list(n).into_iter().map(|(i, j)| d[i][j].min(d[j][i])).collect())
        }
        Costs::Integer(_) => {
            let mut d = inst.matrix_i64().unwrap();
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let via = d[i][k] + d[k][j];
                        if via < d[i][j] {
                            d[i][j] = via;
                        }
                    }
                }
            }
            Costs::Integer(edge_list(n).into_iter().map(|(i, j)| d[i][j]).collect())
        }
    };
    TspInstance {
        n,
        costs,
        name: inst.name.clone(),
        metric_validated: false,
    }
}

/// An integer instance obtained by scaling and rounding, with the triangle
/// inequalities the rounding broke.
#[derive(Clone, Debug)]
pub struct RoundedInstance {
    pub instance: TspInstance,
    pub violations: Vec<TriangleViolation>,
}

impl RoundedInstance {
    pub fn is_metric(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Integer costs `round(factor * c_e)` (half away from zero).
pub fn scale_and_round(costs: &EdgeVector, factor: f64) -> Result<RoundedInstance, InstanceError> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(InstanceError::BadFactor(factor));
    }
    let mut out = Vec::with_capacity(costs.values().len());
    for (index, &c) in costs.values().iter().enumerate() {
        if !c.is_finite() || c < 0.0 {
            return Err(InstanceError::InvalidCost { index, value: c });
        }
        let v = (c * factor).round();
        if v > EXACT_INT_LIMIT {
            return Err(InstanceError::Overflow(v));
        }
        out.push(v as i64);
    }
    let instance = TspInstance::integer(costs.n(), out)?;
    let violations = check_metric(&instance, 0.0);
    Ok(RoundedInstance { instance, violations })
}

/// An undirected simple graph on nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HcGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl HcGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, InstanceError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b || a >= n || b >= n {
                return Err(InstanceError::BadGraphEdge(a, b));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(HcGraph { n, edges: set })
    }

    pub fn cycle(n: usize) -> Self {
        HcGraph::new(n, (0..n).map(|v| (v, (v + 1) % n))).unwrap()
    }

    /// Node 0 joined to `leaves` other nodes.
    pub fn star(leaves: usize) -> Self {
        HcGraph::new(leaves + 1, (1..=leaves).map(|v| (0, v))).unwrap()
    }

    /// Outer 5-cycle 0..5, inner pentagram 5..10, spokes `v -- v+5`.
    pub fn petersen() -> Self {
        let outer = (0..5).map(|v| (v, (v + 1) % 5));
        let inner = (0..5).map(|v| (5 + v, 5 + (v + 2) % 5));
        let spokes = (0..5).map(|v| (v, v + 5));
        HcGraph::new(10, outer.chain(inner).chain(spokes)).unwrap()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn edges(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.edges.iter()
    }
}

/// TSP instance whose minimum tour is below 1 exactly when `g` is Hamiltonian:
/// graph edges cost `(1 - eps/2)/n`, non-edges twice that.
pub fn hc_reduction(g: &HcGraph, eps: f64) -> Result<TspInstance, InstanceError> {
    let n = g.n();
    let bound = 2.0 / (n as f64 + 1.0);
    if !(eps > 0.0 && eps < bound) {
        return Err(InstanceError::EpsOutOfRange { eps, bound });
    }
    let short = (1.0 - eps / 2.0) / n as f64;
    // Doubling is exact, so every triangle holds with tolerance 0.
    let long = short + short;
    let costs = edge_list(n)
        .into_iter()
        .map(|(i, j)| if g.has_edge(i, j) { short } else { long })
        .collect();
    TspInstance::fractional(n, costs)
}
