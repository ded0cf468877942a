//! TSPLIB reading (`TYPE: TSP`; EXPLICIT, EUC_2D, ATT and GEO weights) and
//! writing (EXPLICIT FULL_MATRIX, integer costs only).

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::instance::{edge_index, num_edges, InstanceError, TspInstance};

#[derive(Debug, Error)]
pub enum TsplibError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unsupported TSPLIB {what}: {value}")]
    Unsupported { what: &'static str, value: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing {0}")]
    Missing(&'static str),
    #[error("only integer instances can be written")]
    NotInteger,
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum WeightType {
    Explicit,
    Euc2d,
    Att,
    Geo,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum WeightFormat {
    FullMatrix,
    UpperRow,
    LowerRow,
    UpperDiagRow,
    LowerDiagRow,
}

pub fn tsplib_read(path: impl AsRef<Path>) -> Result<TspInstance, TsplibError> {
    tsplib_parse(&std::fs::read_to_string(path)?)
}

pub fn tsplib_write(inst: &TspInstance, path: impl AsRef<Path>) -> Result<(), TsplibError> {
    std::fs::write(path, tsplib_format(inst)?)?;
    Ok(())
}

pub fn tsplib_parse(text: &str) -> Result<TspInstance, TsplibError> {
    let mut name = String::new();
    let mut dimension: Option<usize> = None;
    let mut weight_type: Option<WeightType> = None;
    let mut format: Option<WeightFormat> = None;
    let mut weights: Vec<i64> = Vec::new();
    let mut coords: Vec<(f64, f64)> = Vec::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((idx, raw)) = lines.next() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = match line.split_once(':') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => (line, ""),
        };
        match key {
            "EOF" => break,
            "NAME" => name = value.to_string(),
            "COMMENT" | "DISPLAY_DATA_TYPE" => {}
            "TYPE" => {
                if value != "TSP" {
                    return Err(unsupported("TYPE", value));
                }
            }
            "DIMENSION" => dimension = Some(parse_num(value, idx)?),
            "EDGE_WEIGHT_TYPE" => {
                weight_type = Some(match value {
                    "EXPLICIT" => WeightType::Explicit,
                    "EUC_2D" => WeightType::Euc2d,
                    "ATT" => WeightType::Att,
                    "GEO" => WeightType::Geo,
                    other => return Err(unsupported("EDGE_WEIGHT_TYPE", other)),
                })
            }
            "EDGE_WEIGHT_FORMAT" => {
                format = Some(match value {
                    "FULL_MATRIX" => WeightFormat::FullMatrix,
                    "UPPER_ROW" => WeightFormat::UpperRow,
                    "LOWER_ROW" => WeightFormat::LowerRow,
                    "UPPER_DIAG_ROW" => WeightFormat::UpperDiagRow,
                    "LOWER_DIAG_ROW" => WeightFormat::LowerDiagRow,
                    other => return Err(unsupported("EDGE_WEIGHT_FORMAT", other)),
                })
            }
            "EDGE_WEIGHT_SECTION" => {
                while let Some((i, l)) = lines.peek() {
                    if starts_keyword(l) {
                        break;
                    }
                    for tok in l.split_whitespace() {
                        weights.push(parse_weight(tok, *i)?);
                    }
                    lines.next();
                }
            }
            "NODE_COORD_SECTION" => {
                while let Some((i, l)) = lines.peek() {
                    if starts_keyword(l) {
                        break;
                    }
                    let toks: Vec<&str> = l.split_whitespace().collect();
                    if !toks.is_empty() {
                        if toks.len() != 3 {
                            return Err(parse_err(*i, "expected `index x y`"));
                        }
                        coords.push((parse_num(toks[1], *i)?, parse_num(toks[2], *i)?));
                    }
                    lines.next();
                }
            }
            "DISPLAY_DATA_SECTION" => {
                while let Some((_, l)) = lines.peek() {
                    if starts_keyword(l) {
                        break;
                    }
                    lines.next();
                }
            }
            other => return Err(unsupported("keyword", other)),
        }
    }
    let n = dimension.ok_or(TsplibError::Missing("DIMENSION"))?;
    let costs = match weight_type.ok_or(TsplibError::Missing("EDGE_WEIGHT_TYPE"))? {
        WeightType::Explicit => explicit_costs(n, format.ok_or(TsplibError::Missing("EDGE_WEIGHT_FORMAT"))?, &weights)?,
        kind => {
            if coords.len() != n {
                return Err(TsplibError::Parse {
                    line: 0,
                    message: format!("expected {n} coordinates, found {}", coords.len()),
                });
            }
            coordinate_costs(kind, &coords)
        }
    };
    Ok(TspInstance::integer(n, costs)?.with_name(name))
}

pub fn tsplib_format(inst: &TspInstance) -> Result<String, TsplibError> {
    let m = inst.matrix_i64().ok_or(TsplibError::NotInteger)?;
    let n = inst.n();
    let mut out = String::new();
    let name = if inst.name().is_empty() { "unnamed" } else { inst.name() };
    writeln!(out, "NAME: {name}").unwrap();
    writeln!(out, "TYPE: TSP").unwrap();
    writeln!(out, "DIMENSION: {n}").unwrap();
    writeln!(out, "EDGE_WEIGHT_TYPE: EXPLICIT").unwrap();
    writeln!(out, "EDGE_WEIGHT_FORMAT: FULL_MATRIX").unwrap();
    writeln!(out, "EDGE_WEIGHT_SECTION").unwrap();
    for row in &m {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", cells.join(" ")).unwrap();
    }
    writeln!(out, "EOF").unwrap();
    Ok(out)
}

fn starts_keyword(line: &str) -> bool {
    line.trim_start().starts_with(|c: char| c.is_ascii_alphabetic())
}

fn unsupported(what: &'static str, value: &str) -> TsplibError {
    TsplibError::Unsupported {
        what,
        value: value.to_string(),
    }
}

fn parse_err(idx: usize, message: &str) -> TsplibError {
    TsplibError::Parse {
        line: idx + 1,
        message: message.to_string(),
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, idx: usize) -> Result<T, TsplibError> {
    s.parse().map_err(|_| parse_err(idx, &format!("cannot parse `{s}`")))
}

fn parse_weight(tok: &str, idx: usize) -> Result<i64, TsplibError> {
    if let Ok(v) = tok.parse::<i64>() {
        return Ok(v);
    }
    let v: f64 = parse_num(tok, idx)?;
    if v.fract() != 0.0 {
        return Err(parse_err(idx, &format!("non-integer weight `{tok}`")));
    }
    Ok(v as i64)
}

fn explicit_costs(n: usize, format: WeightFormat, w: &[i64]) -> Result<Vec<i64>, TsplibError> {
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    match format {
        WeightFormat::FullMatrix => {
            for i in 0..n {
                for j in 0..n {
                    pairs.push((i, j));
                }
            }
        }
        WeightFormat::UpperRow | WeightFormat::UpperDiagRow => {
            let diag = usize::from(format == WeightFormat::UpperDiagRow);
            for i in 0..n {
                for j in i + 1 - diag..n {
                    pairs.push((i, j));
                }
            }
        }
        WeightFormat::LowerRow | WeightFormat::LowerDiagRow => {
            let diag = usize::from(format == WeightFormat::LowerDiagRow);
            for i in 0..n {
                for j in 0..i + diag {
                    pairs.push((i, j));
                }
            }
        }
    }
    if w.len() != pairs.len() {
        return Err(TsplibError::Parse {
            line: 0,
            message: format!("expected {} weights, found {}", pairs.len(), w.len()),
        });
    }
    let mut costs = vec![0; num_edges(n)];
    let mut seen = vec![false; num_edges(n)];
    for (&(i, j), &v) in pairs.iter().zip(w) {
        if i == j {
            continue;
        }
        let e = edge_index(n, i, j);
        if seen[e] && costs[e] != v {
            return Err(unsupported("asymmetric weights at pair", &format!("{i} {j}")));
        }
        costs[e] = v;
        seen[e] = true;
    }
    Ok(costs)
}

fn coordinate_costs(kind: WeightType, p: &[(f64, f64)]) -> Vec<i64> {
    let n = p.len();
    let mut costs = Vec::with_capacity(num_edges(n));
    for i in 0..n {
        for j in i + 1..n {
            costs.push(match kind {
                WeightType::Euc2d => nint(((p[i].0 - p[j].0).powi(2) + (p[i].1 - p[j].1).powi(2)).sqrt()),
                WeightType::Att => att(p[i], p[j]),
                WeightType::Geo => geo(p[i], p[j]),
                WeightType::Explicit => unreachable!(),
            });
        }
    }
    costs
}

fn nint(x: f64) -> i64 {
    (x + 0.5) as i64
}

fn att(a: (f64, f64), b: (f64, f64)) -> i64 {
    let r = (((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)) / 10.0).sqrt();
    let t = nint(r);
    if (t as f64) < r {
        t + 1
    } else {
        t
    }
}

fn geo_radians(x: f64) -> f64 {
    // TSPLIB defines GEO distances with this truncated value.
    #[allow(clippy::approx_constant)]
    const PI: f64 = 3.141592;
    let deg = x.trunc();
    let min = x - deg;
    PI * (deg + 5.0 * min / 3.0) / 180.0
}

fn geo(a: (f64, f64), b: (f64, f64)) -> i64 {
    const RRR: f64 = 6378.388;
    let (lat_a, lon_a) = (geo_radians(a.0), geo_radians(a.1));
    let (lat_b, lon_b) = (geo_radians(b.0), geo_radians(b.1));
    let q1 = (lon_a - lon_b).cos();
    let q2 = (lat_a - lat_b).cos();
    let q3 = (lat_a + lat_b).cos();
    (RRR * (0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3)).acos() + 1.0) as i64
}
