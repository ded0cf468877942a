use std::fmt::Debug;
use std::ops::{Add, Sub};

use crate::instance::TspInstance;

/// Edge weight arithmetic shared by the solvers: exact for `i64`, toleranced for `f64`.
pub trait Weight: Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Debug + Send + Sync + 'static {
    const ZERO: Self;
    /// Sentinel larger than any tour; safe to add a few edge costs to.
    const UNREACHABLE: Self;

    fn to_f64(self) -> f64;

    /// Whether a move with this cost change strictly shortens a tour.
    fn improves(delta: Self) -> bool;

    /// Whether a lower bound `lb` rules out any tour cheaper than `incumbent`.
    fn bound_closes(lb: f64, incumbent: Self) -> bool;
}

impl Weight for i64 {
    const ZERO: Self = 0;
    const UNREACHABLE: Self = i64::MAX / 4;

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn improves(delta: Self) -> bool {
        delta < 0
    }

    fn bound_closes(lb: f64, incumbent: Self) -> bool {
        (lb - 1e-6 * lb.abs().max(1.0)).ceil() >= incumbent as f64
    }
}

impl Weight for f64 {
    const ZERO: Self = 0.0;
    const UNREACHABLE: Self = f64::INFINITY;

    fn to_f64(self) -> f64 {
        self
    }

    fn improves(delta: Self) -> bool {
        delta < -1e-12
    }

    fn bound_closes(lb: f64, incumbent: Self) -> bool {
        lb >= incumbent - 1e-9 * incumbent.abs().max(1.0)
    }
}

/// Dense symmetric cost matrix.
#[derive(Clone, Debug)]
pub struct CostMatrix<W> {
    n: usize,
    d: Vec<W>,
}

impl<W: Weight> CostMatrix<W> {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> W {
        self.d[i * self.n + j]
    }

    pub fn tour_cost(&self, order: &[usize]) -> W {
        let n = order.len();
        (0..n).fold(W::ZERO, |acc, k| acc + self.get(order[k], order[(k + 1) % n]))
    }
}

impl CostMatrix<f64> {
    pub fn from_instance(inst: &TspInstance) -> Self {
        let n = inst.n();
        CostMatrix {
            n,
            d: inst.matrix_f64().into_iter().flatten().collect(),
        }
    }
}

impl CostMatrix<i64> {
    /// Panics on a fractional instance.
    pub fn from_instance(inst: &TspInstance) -> Self {
        let n = inst.n();
        let m = inst.matrix_i64().expect("integer instance");
        CostMatrix {
            n,
            d: m.into_iter().flatten().collect(),
        }
    }
}
