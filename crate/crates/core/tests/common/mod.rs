#![allow(dead_code)]

use hardtsp_core::instance::{metric_closure, num_edges, TspInstance};
use hardtsp_core::sampler::{HitAndRun, SamplerConfig};
use hardtsp_core::sep::{solve_sep, SepSolution};
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shortest-path closure of uniform random integer costs in `1..=100`.
pub fn random_metric_int(n: usize, rng: &mut ChaCha8Rng) -> TspInstance {
    let costs = (0..num_edges(n)).map(|_| rng.gen_range(1..=100)).collect();
    metric_closure(&TspInstance::integer(n, costs).unwrap())
}

/// Euclidean distances between uniform random points in the unit square.
pub fn random_euclidean(n: usize, rng: &mut ChaCha8Rng) -> TspInstance {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
        }
    }
    TspInstance::from_matrix_f64(&m).unwrap()
}

/// Minimum over all `(n-1)!/2` tours, by enumeration of orders fixing node 0.
pub fn brute_force_tour(inst: &TspInstance) -> f64 {
    let n = inst.n();
    let mut best = f64::INFINITY;
    for perm in (1..n).permutations(n - 1) {
        if perm[0] > perm[n - 2] {
            continue;
        }
        let mut total = inst.cost(0, perm[0]) + inst.cost(perm[n - 2], 0);
        for w in perm.windows(2) {
            total += inst.cost(w[0], w[1]);
        }
        best = best.min(total);
    }
    best
}

/// Same as [`brute_force_tour`] in exact integer arithmetic.
pub fn brute_force_tour_int(inst: &TspInstance) -> i64 {
    let n = inst.n();
    let m = inst.matrix_i64().unwrap();
    let mut best = i64::MAX;
    for perm in (1..n).permutations(n - 1) {
        if perm[0] > perm[n - 2] {
            continue;
        }
        let mut total = m[0][perm[0]] + m[perm[n - 2]][0];
        for w in perm.windows(2) {
            total += m[w[0]][w[1]];
        }
        best = best.min(total);
    }
    best
}

/// Hit-and-run draws until SEP has a fractional optimum; returns the first
/// `count` such (cost vector, vertex) pairs.
pub fn fractional_vertices(n: usize, count: usize, seed: u64) -> Vec<(TspInstance, SepSolution)> {
    let mut chain = HitAndRun::new(n, seed, SamplerConfig::default()).unwrap();
    let mut out = Vec::new();
    while out.len() < count {
        let inst = chain.next_sample().unwrap().to_instance().unwrap();
        let sep = solve_sep(&inst).unwrap();
        if sep.fractional {
            out.push((inst, sep));
        }
    }
    out
}
