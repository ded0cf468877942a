use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::weight::{CostMatrix, Weight};
use super::{ExactMethod, TspResult};
use crate::instance::{Costs, Tour, TspInstance};

/// Best tour over `restarts` runs of nearest neighbour followed by 2-opt and
/// Or-opt to a local optimum. Restart `r` draws from stream `r` of `seed`.
pub fn heuristic_tour(inst: &TspInstance, restarts: usize, seed: u64) -> TspResult {
    let start = std::time::Instant::now();
    let (order, value) = match inst.costs() {
        Costs::Integer(_) => {
            let (o, v) = best_tour(&CostMatrix::<i64>::from_instance(inst), restarts.max(1), seed);
            (o, v as f64)
        }
        Costs::Fractional(_) => best_tour(&CostMatrix::<f64>::from_instance(inst), restarts.max(1), seed),
    };
    TspResult {
        tour: Tour::new(order).unwrap(),
        value,
        proven_optimal: false,
        lower_bound: f64::NEG_INFINITY,
        nodes_explored: 0,
        runtime: start.elapsed().as_secs_f64(),
        timed_out: false,
        method: ExactMethod::Heuristic,
    }
}

/// Distinct local optima (canonical form) found over `restarts` runs, cheapest first.
pub fn local_optima(inst: &TspInstance, restarts: usize, seed: u64) -> Vec<(Tour, f64)> {
    let runs: Vec<(Vec<usize>, f64)> = match inst.costs() {
        Costs::Integer(_) => {
            let m = CostMatrix::<i64>::from_instance(inst);
            (0..restarts.max(1))
                .map(|r| {
                    let o = run(&m, r, seed);
                    let v = m.tour_cost(&o) as f64;
                    (o, v)
                })
                .collect()
        }
        Costs::Fractional(_) => {
            let m = CostMatrix::<f64>::from_instance(inst);
            (0..restarts.max(1))
                .map(|r| {
                    let o = run(&m, r, seed);
                    let v = m.tour_cost(&o);
                    (o, v)
                })
                .collect()
        }
    };
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (order, value) in runs {
        let t = Tour::new(order).unwrap().canonical();
        if seen.insert(t.clone()) {
            out.push((t, value));
        }
    }
    out.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap()
            .then_with(|| a.0.order().cmp(b.0.order()))
    });
    out
}

/// Local search (2-opt, Or-opt) from a given tour.
pub fn improve_tour(inst: &TspInstance, tour: &Tour) -> (Tour, f64) {
    let mut order = tour.order().to_vec();
    let value = match inst.costs() {
        Costs::Integer(_) => {
            let m = CostMatrix::<i64>::from_instance(inst);
            local_search(&m, &mut order);
            m.tour_cost(&order) as f64
        }
        Costs::Fractional(_) => {
            let m = CostMatrix::<f64>::from_instance(inst);
            local_search(&m, &mut order);
            m.tour_cost(&order)
        }
    };
    (Tour::new(order).unwrap(), value)
}

pub(crate) fn best_tour<W: Weight>(m: &CostMatrix<W>, restarts: usize, seed: u64) -> (Vec<usize>, W) {
    let mut best: Option<(Vec<usize>, W)> = None;
    for r in 0..restarts {
        let order = run(m, r, seed);
        let v = m.tour_cost(&order);
        if best.as_ref().is_none_or(|(_, b)| W::improves(v - *b)) {
            best = Some((order, v));
        }
    }
    best.unwrap()
}

fn run<W: Weight>(m: &CostMatrix<W>, restart: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let mut order = nearest_neighbour(m, restart, &mut rng);
    local_search(m, &mut order);
    order
}

/// Restart 0 is the plain nearest-neighbour tour from node 0; later restarts
/// start at a random node and sometimes take the second-nearest node.
fn nearest_neighbour<W: Weight>(m: &CostMatrix<W>, restart: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = m.n();
    let randomize = restart > 0;
    let start = if randomize { rng.gen_range(0..n) } else { 0 };
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    visited[start] = true;
    order.push(start);
    let mut cur = start;
    while order.len() < n {
        let mut first: Option<usize> = None;
        let mut second: Option<usize> = None;
        for v in 0..n {
            if visited[v] {
                continue;
            }
            match first {
                Some(f) if !(m.get(cur, v) < m.get(cur, f)) => {
                    if second.is_none_or(|s| m.get(cur, v) < m.get(cur, s)) {
                        second = Some(v);
                    }
                }
                _ => {
                    second = first;
                    first = Some(v);
                }
            }
        }
        let next = match second {
            Some(s) if randomize && rng.gen_bool(0.3) => s,
            _ => first.unwrap(),
        };
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    order
}

pub(crate) fn local_search<W: Weight>(m: &CostMatrix<W>, order: &mut Vec<usize>) {
    loop {
        let a = two_opt(m, order);
        let b = or_opt(m, order);
        if !a && !b {
            break;
        }
    }
}

/// First-improvement 2-opt until no improving move remains.
fn two_opt<W: Weight>(m: &CostMatrix<W>, order: &mut [usize]) -> bool {
    let n = order.len();
    if n < 4 {
        return false;
    }
    let mut any = false;
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n - 2 {
            let (a, b) = (order[i], order[i + 1]);
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = (order[j], order[(j + 1) % n]);
                let delta = m.get(a, c) + m.get(b, d) - m.get(a, b) - m.get(c, d);
                if W::improves(delta) {
                    order[i + 1..=j].reverse();
                    improved = true;
                    any = true;
                    break;
                }
            }
            if improved {
                break;
            }
        }
    }
    any
}

/// Moves segments of 1 to 3 consecutive nodes elsewhere, possibly reversed.
fn or_opt<W: Weight>(m: &CostMatrix<W>, order: &mut Vec<usize>) -> bool {
    let n = order.len();
    let mut any = false;
    'outer: loop {
        for len in 1..=3usize {
            if n < len + 3 {
                break;
            }
            for i in 0..n {
                let seg: Vec<usize> = (0..len).map(|k| order[(i + k) % n]).collect();
                let prev = order[(i + n - 1) % n];
                let next = order[(i + len) % n];
                let (s0, s1) = (seg[0], seg[len - 1]);
                let removal = m.get(prev, s0) + m.get(s1, next) - m.get(prev, next);
                // Remaining path starts at `next` and ends at `prev`.
                let rest: Vec<usize> = (0..n - len).map(|k| order[(i + len + k) % n]).collect();
                for p in 0..rest.len() - 1 {
                    let (u, v) = (rest[p], rest[p + 1]);
                    let forward = m.get(u, s0) + m.get(s1, v) - m.get(u, v);
                    let backward = m.get(u, s1) + m.get(s0, v) - m.get(u, v);
                    let (gain, reversed) = if backward < forward {
                        (backward - removal, true)
                    } else {
                        (forward - removal, false)
                    };
                    if W::improves(gain) {
                        let mut new_order = Vec::with_capacity(n);
                        new_order.extend_from_slice(&rest[..=p]);
                        if reversed {
                            new_order.extend(seg.iter().rev());
                        } else {
                            new_order.extend_from_slice(&seg);
                        }
                        new_order.extend_from_slice(&rest[p + 1..]);
                        *order = new_order;
                        any = true;
                        continue 'outer;
                    }
                }
            }
        }
        return any;
    }
}
