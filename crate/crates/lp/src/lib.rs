//! Dense revised simplex for small and medium linear programs.
//!
//! Built for cutting-plane loops: rows can be appended to a solved program
//! and the optimum recovered with a few dual simplex pivots.
//!
//! ```
//! use hardtsp_lp::{solve, LinearProgram, Row, Sense, SolverConfig};
//!
//! // min -x0 - x1  s.t.  x0 + 2 x1 <= 4,  3 x0 + x1 <= 6
//! let mut lp = LinearProgram::with_objective(vec![-1.0, -1.0]);
//! lp.add_row(Row::new(vec![(0, 1.0), (1, 2.0)], Sense::Le, 4.0)).unwrap();
//! lp.add_row(Row::new(vec![(0, 3.0), (1, 1.0)], Sense::Le, 6.0)).unwrap();
//! let sol = solve(&lp, &SolverConfig::default());
//! assert!(sol.is_optimal());
//! assert!((sol.objective + 2.8).abs() < 1e-9);
//! ```

mod problem;
mod simplex;

pub use problem::{LinearProgram, Row, Sense};
pub use simplex::{solve, Basis, LpSolution, LpStatus, Simplex, SolverConfig, VarStatus};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("variable {var} out of range (program has {num_vars} variables)")]
    VariableOutOfRange { var: usize, num_vars: usize },
    #[error("{what} must be finite")]
    NotFinite { what: &'static str },
    #[error("variable {var} has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { var: usize, lower: f64, upper: f64 },
    #[error("row {row} references variable {index} but the program has {num_vars} variables")]
    RowIndexOutOfRange { row: usize, index: usize, num_vars: usize },
}
