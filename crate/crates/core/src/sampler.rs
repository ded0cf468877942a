//! Hit-and-run sampling from the metric polytope.
//!
//! The polytope has, for every triple `i < j < k`, the three triangle rows
//! `c_ij <= c_ik + c_jk` (and rotations), the perimeter row
//! `c_ij + c_ik + c_jk <= 2`, and `c >= 0`. The all-0.5 vector is interior.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{edge_index, num_edges, EdgeVector, InstanceError, TspInstance};

/// Rows may be violated by at most this much for a point to be accepted.
pub const PMET_TOL: f64 = 1e-9;
const MIN_CHORD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("point violates the metric polytope by {0}")]
    Infeasible(f64),
    #[error("no usable direction after {0} attempts")]
    DegenerateChord(usize),
    #[error("need n >= 3, got {0}")]
    TooFewNodes(usize),
    #[error("direction has length {got}, expected {expected}")]
    WrongLength { expected: usize, got: usize },
}

/// A point of the metric polytope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    values: EdgeVector,
}

impl MetricPoint {
    /// Accepts `values` if every row holds within [`PMET_TOL`].
    pub fn new(values: EdgeVector) -> Result<Self, SamplerError> {
        let v = pmet_max_violation(values.n(), values.values());
        if v > PMET_TOL {
            return Err(SamplerError::Infeasible(v));
        }
        Ok(MetricPoint { values })
    }

    pub fn n(&self) -> usize {
        self.values.n()
    }

    pub fn values(&self) -> &EdgeVector {
        &self.values
    }

    /// Fractional instance with these costs (negative rounding noise clamped to 0).
    pub fn to_instance(&self) -> Result<TspInstance, InstanceError> {
        let costs = self.values.values().iter().map(|&c| c.max(0.0)).collect();
        TspInstance::fractional(self.n(), costs)
    }
}

/// Largest violation over all triangle, perimeter and nonnegativity rows
/// (0 for a feasible point).
pub fn pmet_max_violation(n: usize, c: &[f64]) -> f64 {
    let mut worst = c.iter().map(|&v| -v).fold(0.0, f64::max);
    for_each_triple(n, |a, b, d| {
        let (x, y, z) = (c[a], c[b], c[d]);
        worst = worst.max(x - y - z).max(y - x - z).max(z - x - y).max(x + y + z - 2.0);
    });
    worst
}

/// Rows of the polytope that hold with equality within `tol`.
pub fn tight_rows(n: usize, c: &[f64], tol: f64) -> usize {
    let mut count = c.iter().filter(|&&v| v.abs() <= tol).count();
    for_each_triple(n, |a, b, d| {
        let (x, y, z) = (c[a], c[b], c[d]);
        for s in [y + z - x, x + z - y, x + y - z, 2.0 - x - y - z] {
            if s.abs() <= tol {
                count += 1;
            }
        }
    });
    count
}

/// Calls `f(e_ij, e_ik, e_jk)` for every triple `i < j < k`.
fn for_each_triple(n: usize, mut f: impl FnMut(usize, usize, usize)) {
    for i in 0..n {
        for j in i + 1..n {
            let ij = edge_index(n, i, j);
            for k in j + 1..n {
                f(ij, edge_index(n, i, k), edge_index(n, j, k));
            }
        }
    }
}

/// The all-0.5 vector.
pub fn initial_interior_point(n: usize) -> Result<MetricPoint, SamplerError> {
    if n < 3 {
        return Err(SamplerError::TooFewNodes(n));
    }
    Ok(MetricPoint {
        values: EdgeVector::filled(n, 0.5),
    })
}

/// The interval of `lambda` with `point + lambda * direction` in the polytope.
pub fn chord(point: &MetricPoint, direction: &[f64]) -> Result<(f64, f64), SamplerError> {
    let n = point.n();
    if direction.len() != num_edges(n) {
        return Err(SamplerError::WrongLength {
            expected: num_edges(n),
            got: direction.len(),
        });
    }
    Ok(chord_raw(n, point.values.values(), direction))
}

fn chord_raw(n: usize, x: &[f64], d: &[f64]) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut limit = |slack: f64, rate: f64| {
        let slack = slack.max(0.0);
        if rate > 0.0 {
            hi = hi.min(slack / rate);
        } else if rate < 0.0 {
            lo = lo.max(slack / rate);
        }
    };
    for (&xe, &de) in x.iter().zip(d) {
        limit(xe, -de);
    }
    for_each_triple(n, |a, b, c| {
        let (x1, x2, x3) = (x[a], x[b], x[c]);
        let (d1, d2, d3) = (d[a], d[b], d[c]);
        limit(x2 + x3 - x1, d1 - d2 - d3);
        limit(x1 + x3 - x2, d2 - d1 - d3);
        limit(x1 + x2 - x3, d3 - d1 - d2);
        limit(2.0 - x1 - x2 - x3, d1 + d2 + d3);
    });
    (lo.min(0.0), hi.max(0.0))
}

/// One hit-and-run move: isotropic direction, uniform position on the chord.
pub fn hit_and_run_step(point: &MetricPoint, rng: &mut impl Rng) -> Result<MetricPoint, SamplerError> {
    let mut values = point.values.clone();
    step_in_place(&mut values, rng, 100)?;
    Ok(MetricPoint { values })
}

fn step_in_place(values: &mut EdgeVector, rng: &mut impl Rng, retries: usize) -> Result<(), SamplerError> {
    let n = values.n();
    let m = num_edges(n);
    let mut d = vec![0.0; m];
    for _ in 0..retries {
        for de in d.iter_mut() {
            *de = rng.sample(StandardNormal);
        }
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        for de in d.iter_mut() {
            *de /= norm;
        }
        let (lo, hi) = chord_raw(n, values.values(), &d);
        if hi - lo <= MIN_CHORD {
            continue;
        }
        let lambda = rng.gen_range(lo..=hi);
        for (xe, de) in values.values_mut().iter_mut().zip(&d) {
            *xe += lambda * de;
        }
        return Ok(());
    }
    Err(SamplerError::DegenerateChord(retries))
}

#[derive(Clone, Debug)]
pub struct SamplerConfig {
    pub burn_in: usize,
    pub thin: usize,
    pub direction_retries: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            burn_in: 1000,
            thin: 10,
            direction_retries: 100,
        }
    }
}

/// A reproducible hit-and-run chain started at the all-0.5 point.
#[derive(Clone, Debug)]
pub struct HitAndRun {
    point: EdgeVector,
    rng: ChaCha8Rng,
    config: SamplerConfig,
    burned: bool,
}

impl HitAndRun {
    pub fn new(n: usize, seed: u64, config: SamplerConfig) -> Result<Self, SamplerError> {
        let start = initial_interior_point(n)?;
        Ok(HitAndRun {
            point: start.values,
            rng: ChaCha8Rng::seed_from_u64(seed),
            config,
            burned: false,
        })
    }

    pub fn current(&self) -> MetricPoint {
        MetricPoint {
            values: self.point.clone(),
        }
    }

    /// Discards the burn-in on first use, then returns every `thin`-th point.
    pub fn next_sample(&mut self) -> Result<MetricPoint, SamplerError> {
        if !self.burned {
            for _ in 0..self.config.burn_in {
                step_in_place(&mut self.point, &mut self.rng, self.config.direction_retries)?;
            }
            self.burned = true;
        }
        for _ in 0..self.config.thin.max(1) {
            step_in_place(&mut self.point, &mut self.rng, self.config.direction_retries)?;
        }
        Ok(self.current())
    }
}

pub fn sample_metric(
    n: usize,
    count: usize,
    burn_in: usize,
    thin: usize,
    seed: u64,
) -> Result<Vec<MetricPoint>, SamplerError> {
    let config = SamplerConfig {
        burn_in,
        thin,
        ..SamplerConfig::default()
    };
    let mut chain = HitAndRun::new(n, seed, config)?;
    (0..count).map(|_| chain.next_sample()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_start() {
        let p = initial_interior_point(5).unwrap();
        assert_eq!(p.values().values(), &[0.5; 10]);
        assert_eq!(pmet_max_violation(5, p.values().values()), 0.0);
        assert_eq!(tight_rows(5, p.values().values(), 1e-12), 0);
        assert!(initial_interior_point(2).is_err());
    }

    #[test]
    fn single_edge_direction() {
        let p = initial_interior_point(5).unwrap();
        let mut d = vec![0.0; 10];
        d[edge_index(5, 1, 3)] = 1.0;
        let (lo, hi) = chord(&p, &d).unwrap();
        assert_eq!((lo, hi), (-0.5, 0.5));
    }

    #[test]
    fn all_ones_direction_hits_perimeter() {
        let n = 6;
        let m = num_edges(n);
        let p = initial_interior_point(n).unwrap();
        let d = vec![1.0 / (m as f64).sqrt(); m];
        let (lo, hi) = chord(&p, &d).unwrap();
        let end: Vec<f64> = p.values().values().iter().zip(&d).map(|(x, v)| x + hi * v).collect();
        assert!((end[0] * 3.0 - 2.0).abs() < 1e-12);
        let start: Vec<f64> = p.values().values().iter().zip(&d).map(|(x, v)| x + lo * v).collect();
        assert!(start[0].abs() < 1e-12);
    }
}
