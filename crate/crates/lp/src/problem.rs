use std::fmt::Write as _;

use crate::LpError;

/// Relation between a row's activity and its right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

/// A sparse linear row `sum coeffs[k].1 * x[coeffs[k].0] (sense) rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        Row { coeffs, sense, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, v)| v * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// A minimization LP over bounded variables.
///
/// Variables default to the bounds `[0, +inf)` and a zero objective.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; num_vars],
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn with_objective(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            ..LinearProgram::new(n)
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) -> Result<(), LpError> {
        self.check_var(var)?;
        if !coeff.is_finite() {
            return Err(LpError::NotFinite {
                what: "objective coefficient",
            });
        }
        self.objective[var] = coeff;
        Ok(())
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> Result<(), LpError> {
        self.check_var(var)?;
        check_bounds(var, lower, upper)?;
        self.lower[var] = lower;
        self.upper[var] = upper;
        Ok(())
    }

    pub fn add_row(&mut self, row: Row) -> Result<usize, LpError> {
        check_row(&row, self.num_vars(), self.rows.len())?;
        self.rows.push(row);
        Ok(self.rows.len() - 1)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x));
        let bounds = (0..self.num_vars()).map(|j| (self.lower[j] - x[j]).max(x[j] - self.upper[j]).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    fn check_var(&self, var: usize) -> Result<(), LpError> {
        if var >= self.num_vars() {
            return Err(LpError::VariableOutOfRange {
                var,
                num_vars: self.num_vars(),
            });
        }
        Ok(())
    }

    /// Renders the program in the CPLEX LP text format.
    ///
    /// Grammar of the emitted subset:
    ///
    /// ```text
    /// file     := "Minimize" NL " obj:" expr NL "Subject To" NL row* "Bounds" NL bound* "End" NL
    /// row      := " r<i>:" expr sense number NL
    /// expr     := (" " sign " " number " x<j>")+ | " 0 x0"
    /// sense    := "<=" | "=" | ">="
    /// bound    := " " lo " <= x<j> <= " hi NL | " x<j> free" NL
    /// ```
    ///
    /// Infinite bounds are written as `-inf` / `+inf`.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        out.push_str("Minimize\n obj:");
        let obj: Vec<(usize, f64)> = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, &c)| (j, c))
            .collect();
        write_expr(&mut out, &obj);
        out.push_str("\nSubject To\n");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, " r{i}:");
            write_expr(&mut out, &row.coeffs);
            let _ = writeln!(out, " {} {}", row.sense.symbol(), row.rhs);
        }
        out.push_str("Bounds\n");
        for j in 0..self.num_vars() {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
                let _ = writeln!(out, " x{j} free");
            } else {
                let _ = writeln!(out, " {} <= x{j} <= {}", fmt_bound(lo), fmt_bound(hi));
            }
        }
        out.push_str("End\n");
        out
    }
}

fn write_expr(out: &mut String, coeffs: &[(usize, f64)]) {
    if coeffs.is_empty() {
        out.push_str(" 0 x0");
        return;
    }
    for &(j, v) in coeffs {
        let sign = if v < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} x{j}", v.abs());
    }
}

fn fmt_bound(b: f64) -> String {
    if b == f64::INFINITY {
        "+inf".to_string()
    } else if b == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        b.to_string()
    }
}

pub(crate) fn check_bounds(var: usize, lower: f64, upper: f64) -> Result<(), LpError> {
    if lower.is_nan() || upper.is_nan() || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
        return Err(LpError::NotFinite { what: "variable bound" });
    }
    if lower > upper {
        return Err(LpError::InvertedBounds { var, lower, upper });
    }
    Ok(())
}

pub(crate) fn check_row(row: &Row, num_vars: usize, row_index: usize) -> Result<(), LpError> {
    if !row.rhs.is_finite() {
        return Err(LpError::NotFinite {
            what: "row right-hand side",
        });
    }
    for &(j, v) in &row.coeffs {
        if j >= num_vars {
            return Err(LpError::RowIndexOutOfRange {
                row: row_index,
                index: j,
                num_vars,
            });
        }
        if !v.is_finite() {
            return Err(LpError::NotFinite {
                what: "row coefficient",
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_row() {
        let mut lp = LinearProgram::new(2);
        let err = lp.add_row(Row::new(vec![(2, 1.0)], Sense::Le, 1.0)).unwrap_err();
        assert!(matches!(err, LpError::RowIndexOutOfRange { index: 2, .. }));
    }

    #[test]
    fn rejects_inverted_bounds() {
        let mut lp = LinearProgram::new(1);
        assert!(lp.set_bounds(0, 2.0, 1.0).is_err());
    }

    #[test]
    fn lp_format_dump() {
        let mut lp = LinearProgram::with_objective(vec![1.0, -2.0]);
        lp.set_bounds(0, 0.0, 10.0).unwrap();
        lp.set_bounds(1, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        lp.add_row(Row::new(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 3.0)).unwrap();
        let text = lp.to_lp_format();
        assert_eq!(
            text,
            "Minimize\n obj: + 1 x0 - 2 x1\nSubject To\n r0: + 1 x0 + 1 x1 >= 3\n\
             Bounds\n 0 <= x0 <= 10\n x1 free\nEnd\n"
        );
    }
}
