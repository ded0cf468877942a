//! Lagrangian 1-tree bounds and best-first branch-and-bound.
//!
//! A 1-tree is a spanning tree on nodes `1..n` plus the two cheapest edges at
//! node 0. With node penalties `pi` added to every incident edge, its cost
//! minus `2 * sum(pi)` bounds every tour from below.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::heuristic::best_tour;
use super::weight::{CostMatrix, Weight};
use super::ExactConfig;
use crate::instance::{edge_index, TspInstance};

const FREE: i8 = 0;
const FORCED: i8 = 1;
const EXCLUDED: i8 = -1;

/// A minimum 1-tree under penalised costs.
#[derive(Clone, Debug)]
pub struct OneTree {
    /// Penalised tree cost minus twice the penalty sum.
    pub value: f64,
    pub edges: Vec<(usize, usize)>,
    pub degrees: Vec<usize>,
}

impl OneTree {
    pub fn is_tour(&self) -> bool {
        self.degrees.iter().all(|&d| d == 2)
    }

    /// Node order when the 1-tree is a Hamiltonian cycle.
    fn tour_order(&self) -> Vec<usize> {
        let n = self.degrees.len();
        let mut adj = vec![Vec::with_capacity(2); n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut order = vec![0];
        let mut prev = 0;
        let mut cur = adj[0][0];
        while cur != 0 {
            order.push(cur);
            let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
            prev = cur;
            cur = next;
        }
        order
    }
}

/// Minimum 1-tree of `inst` under `penalties` (one per node).
pub fn one_tree(inst: &TspInstance, penalties: &[f64]) -> OneTree {
    let m = CostMatrix::<f64>::from_instance(inst);
    let state = vec![FREE; crate::instance::num_edges(inst.n())];
    compute_one_tree(&m, &state, penalties).expect("unrestricted 1-tree exists")
}

/// Held–Karp bound for fixed penalties: always at most the optimal tour value.
pub fn one_tree_bound(inst: &TspInstance, penalties: &[f64]) -> f64 {
    one_tree(inst, penalties).value
}

/// Best bound over `iterations` subgradient steps from zero penalties, with
/// the step scaled by the gap to `upper_bound` (a heuristic tour if absent).
pub fn subgradient_bound(inst: &TspInstance, iterations: usize, upper_bound: Option<f64>) -> (f64, Vec<f64>) {
    let m = CostMatrix::<f64>::from_instance(inst);
    let ub = upper_bound.unwrap_or_else(|| best_tour(&m, 5, 0).1);
    let state = vec![FREE; crate::instance::num_edges(inst.n())];
    let mut pi = vec![0.0; inst.n()];
    let out = ascent(&m, &state, &mut pi, iterations, ub, |lb, ub| lb >= ub).expect("unrestricted");
    (out.value, pi)
}

fn compute_one_tree<W: Weight>(m: &CostMatrix<W>, state: &[i8], pi: &[f64]) -> Option<OneTree> {
    let n = m.n();
    let pc = |i: usize, j: usize| m.get(i, j).to_f64() + pi[i] + pi[j];
    let mut edges = Vec::with_capacity(n);
    let mut degrees = vec![0usize; n];
    let mut total = 0.0;

    // Prim on nodes 1..n; forced edges rank before free ones.
    let mut in_tree = vec![false; n];
    let mut key = vec![(2u8, f64::INFINITY); n];
    let mut parent = vec![usize::MAX; n];
    in_tree[0] = true;
    if n > 1 {
        key[1] = (0, 0.0);
    }
    for _ in 1..n {
        let mut best = usize::MAX;
        for v in 1..n {
            if !in_tree[v] && key[v].0 < 2 && (best == usize::MAX || lex_less(key[v], key[best])) {
                best = v;
            }
        }
        if best == usize::MAX {
            return None;
        }
        in_tree[best] = true;
        if parent[best] != usize::MAX {
            let p = parent[best];
            edges.push((p.min(best), p.max(best)));
            degrees[p] += 1;
            degrees[best] += 1;
            total += pc(p, best);
        }
        for v in 1..n {
            if in_tree[v] {
                continue;
            }
            let s = state[edge_index(n, best, v)];
            if s == EXCLUDED {
                continue;
            }
            let k = (if s == FORCED { 0 } else { 1 }, pc(best, v));
            if lex_less(k, key[v]) {
                key[v] = k;
                parent[v] = best;
            }
        }
    }
    // Forced edges among 1..n must all be in the tree.
    let forced_inner = (1..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| state[edge_index(n, i, j)] == FORCED)
        .count();
    let forced_in_tree = edges
        .iter()
        .filter(|&&(i, j)| state[edge_index(n, i, j)] == FORCED)
        .count();
    if forced_in_tree < forced_inner {
        return None;
    }

    let mut forced0 = Vec::new();
    let mut free0 = Vec::new();
    for v in 1..n {
        match state[edge_index(n, 0, v)] {
            FORCED => forced0.push(v),
            FREE => free0.push(v),
            _ => {}
        }
    }
    if forced0.len() > 2 || forced0.len() + free0.len() < 2 {
        return None;
    }
    free0.sort_by(|&a, &b| pc(0, a).partial_cmp(&pc(0, b)).unwrap().then(a.cmp(&b)));
    let picks: Vec<usize> = forced0.iter().chain(free0.iter()).take(2).copied().collect();
    for v in picks {
        edges.push((0, v));
        degrees[0] += 1;
        degrees[v] += 1;
        total += pc(0, v);
    }
    let value = total - 2.0 * pi.iter().sum::<f64>();
    Some(OneTree { value, edges, degrees })
}

fn lex_less(a: (u8, f64), b: (u8, f64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Subgradient ascent on the penalties; `pi` ends at the best penalties found.
/// The step multiplier halves whenever an iteration fails to improve.
fn ascent<W: Weight>(
    m: &CostMatrix<W>,
    state: &[i8],
    pi: &mut Vec<f64>,
    iterations: usize,
    ub: f64,
    closes: impl Fn(f64, f64) -> bool,
) -> Option<OneTree> {
    let n = m.n();
    let mut best: Option<(OneTree, Vec<f64>)> = None;
    let mut lambda = 2.0;
    for _ in 0..iterations.max(1) {
        let tree = compute_one_tree(m, state, pi)?;
        let improved = best.as_ref().is_none_or(|(b, _)| tree.value > b.value);
        let is_tour = tree.is_tour();
        let value = tree.value;
        let degrees = tree.degrees.clone();
        if improved {
            best = Some((tree, pi.clone()));
        } else {
            lambda /= 2.0;
        }
        if is_tour || closes(value, ub) {
            break;
        }
        let norm2: f64 = degrees.iter().map(|&d| (d as f64 - 2.0).powi(2)).sum();
        let gap = (ub - value).max(1e-9 * ub.abs().max(1.0));
        let t = lambda * gap / norm2;
        for v in 0..n {
            pi[v] += t * (degrees[v] as f64 - 2.0);
        }
    }
    let (tree, best_pi) = best.unwrap();
    *pi = best_pi;
    Some(tree)
}

/// Fixes edges implied by degree and subtour constraints. Returns false when
/// the restrictions admit no tour.
fn propagate(n: usize, state: &mut [i8]) -> bool {
    loop {
        let mut changed = false;
        for v in 0..n {
            let mut forced = 0;
            let mut free = 0;
            for u in 0..n {
                if u == v {
                    continue;
                }
                match state[edge_index(n, u, v)] {
                    FORCED => forced += 1,
                    FREE => free += 1,
                    _ => {}
                }
            }
            if forced > 2 || forced + free < 2 {
                return false;
            }
            if free > 0 && (forced == 2 || forced + free == 2) {
                let target = if forced == 2 { EXCLUDED } else { FORCED };
                for u in 0..n {
                    if u != v && state[edge_index(n, u, v)] == FREE {
                        state[edge_index(n, u, v)] = target;
                    }
                }
                changed = true;
            }
        }
        // Forced edges form paths; close none of them early.
        let mut dsu: Vec<usize> = (0..n).collect();
        let mut size = vec![1usize; n];
        let mut forced_deg = vec![0usize; n];
        let mut forced_edges = 0;
        for i in 0..n {
            for j in i + 1..n {
                if state[edge_index(n, i, j)] != FORCED {
                    continue;
                }
                forced_edges += 1;
                forced_deg[i] += 1;
                forced_deg[j] += 1;
                let (a, b) = (find(&mut dsu, i), find(&mut dsu, j));
                if a == b {
                    if size[a] < n || forced_edges < n {
                        return false;
                    }
                } else {
                    dsu[a] = b;
                    size[b] += size[a];
                }
            }
        }
        let mut ends: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in 0..n {
            if forced_deg[v] == 1 {
                let r = find(&mut dsu, v);
                ends[r].push(v);
            }
        }
        for r in 0..n {
            if ends[r].len() == 2 && size[r] < n {
                let e = edge_index(n, ends[r][0], ends[r][1]);
                if state[e] == FORCED {
                    return false;
                }
                if state[e] == FREE {
                    state[e] = EXCLUDED;
                    changed = true;
                }
            }
        }
        if !changed {
            return true;
        }
    }
}

fn find(dsu: &mut [usize], mut v: usize) -> usize {
    while dsu[v] != v {
        dsu[v] = dsu[dsu[v]];
        v = dsu[v];
    }
    v
}

struct Node {
    bound: f64,
    id: u64,
    state: Vec<i8>,
    pi: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // Max-heap: smallest bound first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.id.cmp(&self.id))
    }
}

pub(crate) struct BnbOutcome<W> {
    pub order: Vec<usize>,
    pub value: W,
    pub proven_optimal: bool,
    pub lower_bound: f64,
    pub nodes: u64,
    pub timed_out: bool,
}

pub(crate) fn branch_and_bound<W: Weight>(
    m: &CostMatrix<W>,
    start_order: Vec<usize>,
    start_value: W,
    cutoff: Option<f64>,
    deadline: Option<Instant>,
    config: &ExactConfig,
) -> BnbOutcome<W> {
    let n = m.n();
    let mut best_order = start_order;
    let mut best = start_value;
    let mut nodes = 0u64;
    let mut next_id = 0u64;
    let mut heap = BinaryHeap::new();
    let mut root_state = vec![FREE; crate::instance::num_edges(n)];
    if propagate(n, &mut root_state) {
        heap.push(Node {
            bound: f64::NEG_INFINITY,
            id: next_id,
            state: root_state,
            pi: vec![0.0; n],
        });
        next_id += 1;
    }
    let mut timed_out = false;
    let mut early = false;
    let mut open_bound = f64::INFINITY;
    while let Some(mut node) = heap.pop() {
        if W::bound_closes(node.bound, best) {
            continue;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            timed_out = true;
            open_bound = node.bound;
            break;
        }
        nodes += 1;
        let iters = if nodes == 1 {
            config.root_ascent_iterations
        } else {
            config.child_ascent_iterations
        };
        let inc = best;
        let Some(tree) = ascent(m, &node.state, &mut node.pi, iters, inc.to_f64(), |lb, _| {
            W::bound_closes(lb, inc)
        }) else {
            continue;
        };
        if tree.is_tour() {
            let order = tree.tour_order();
            let value = m.tour_cost(&order);
            if W::improves(value - best) {
                best = value;
                best_order = order;
                if cutoff.is_some_and(|c| best.to_f64() < c) {
                    early = true;
                    open_bound = tree.value.min(node.bound);
                    break;
                }
            }
            continue;
        }
        if W::bound_closes(tree.value, best) {
            continue;
        }
        let bound = tree.value.max(node.bound);
        let Some(e) = branching_edge(m, &tree, &node.state) else {
            continue;
        };
        for target in [EXCLUDED, FORCED] {
            let mut state = node.state.clone();
            state[e] = target;
            if propagate(n, &mut state) {
                heap.push(Node {
                    bound,
                    id: next_id,
                    state,
                    pi: node.pi.clone(),
                });
                next_id += 1;
            }
        }
    }
    let proven = !timed_out && !early;
    let lower_bound = if proven {
        best.to_f64()
    } else {
        heap.iter()
            .map(|nd| nd.bound)
            .fold(open_bound, f64::min)
            .min(best.to_f64())
    };
    BnbOutcome {
        order: best_order,
        value: best,
        proven_optimal: proven,
        lower_bound,
        nodes,
        timed_out,
    }
}

/// A free tree edge at the highest-degree node (lowest index on ties),
/// choosing the costliest such edge (lowest edge index on ties).
fn branching_edge<W: Weight>(m: &CostMatrix<W>, tree: &OneTree, state: &[i8]) -> Option<usize> {
    let n = m.n();
    let mut v = usize::MAX;
    for u in 0..n {
        if tree.degrees[u] > 2 && (v == usize::MAX || tree.degrees[u] > tree.degrees[v]) {
            v = u;
        }
    }
    if v == usize::MAX {
        return None;
    }
    let mut pick: Option<(usize, f64)> = None;
    for &(a, b) in &tree.edges {
        if a != v && b != v {
            continue;
        }
        let e = edge_index(n, a, b);
        if state[e] != FREE {
            continue;
        }
        let c = m.get(a, b).to_f64();
        if pick.is_none_or(|(pe, pc)| c > pc || (c == pc && e < pe)) {
            pick = Some((e, c));
        }
    }
    pick.map(|p| p.0)
}
