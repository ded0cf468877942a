//! Graphviz rendering of an SEP point over its instance.

use std::fmt::Write as _;

use crate::instance::{EdgeVector, TspInstance};

/// Entries within this distance of 0 or 1 count as integral.
pub const DOT_TOL: f64 = 1e-9;

/// Edges with `0 < x_e < 1` are dashed, `x_e = 1` solid, `x_e = 0` omitted.
/// Labels are edge costs; nodes and edges appear in index order.
pub fn export_dot(inst: &TspInstance, x: &EdgeVector) -> String {
    let n = inst.n();
    let name = if inst.name().is_empty() { "sep" } else { inst.name() };
    let mut out = String::new();
    writeln!(out, "graph \"{}\" {{", name.replace('"', "'")).unwrap();
    writeln!(out, "  node [shape=circle];").unwrap();
    for v in 0..n {
        writeln!(out, "  {v};").unwrap();
    }
    for i in 0..n {
        for j in i + 1..n {
            let v = x.get(i, j);
            if v <= DOT_TOL {
                continue;
            }
            let style = if v >= 1.0 - DOT_TOL { "solid" } else { "dashed" };
            let label = match inst.integer_costs() {
                Some(_) => format!("{}", inst.cost(i, j) as i64),
                None => format!("{}", inst.cost(i, j)),
            };
            writeln!(out, "  {i} -- {j} [label=\"{label}\", style={style}];").unwrap();
        }
    }
    out.push_str("}\n");
    out
}
