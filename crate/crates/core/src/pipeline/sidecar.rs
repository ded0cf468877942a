//! Metadata record written next to every generated TSPLIB file.
//!
//! One `key: value` pair per line, keys in a fixed order, floats in shortest
//! round-trip form. `#` starts a comment line. Nothing time-dependent is
//! stored, so identical runs give identical records.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SidecarError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {0}: expected `key: value`")]
    Malformed(usize),
    #[error("missing key `{0}`")]
    Missing(&'static str),
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: &'static str, value: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceMetadata {
    pub name: String,
    pub n: usize,
    pub seed: u64,
    pub delta: i64,
    pub vertex_hash: String,
    pub source_gap: f64,
    pub hopt_gap: f64,
    pub gap: f64,
    pub tour: f64,
    pub subt: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub status: String,
    pub box_tight_edges: usize,
    pub zero_cost_edges: usize,
    pub sep_support_preserved: bool,
    pub ihopt_regression: bool,
}

impl InstanceMetadata {
    pub fn to_record(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| writeln!(out, "{k}: {v}").unwrap();
        put("name", self.name.clone());
        put("n", self.n.to_string());
        put("seed", self.seed.to_string());
        put("delta", self.delta.to_string());
        put("vertex_hash", self.vertex_hash.clone());
        put("source_gap", self.source_gap.to_string());
        put("hopt_gap", self.hopt_gap.to_string());
        put("gap", self.gap.to_string());
        put("tour", self.tour.to_string());
        put("subt", self.subt.to_string());
        put("lower_bound", self.lower_bound.to_string());
        put("upper_bound", self.upper_bound.to_string());
        put("status", self.status.clone());
        put("box_tight_edges", self.box_tight_edges.to_string());
        put("zero_cost_edges", self.zero_cost_edges.to_string());
        put("sep_support_preserved", self.sep_support_preserved.to_string());
        put("ihopt_regression", self.ihopt_regression.to_string());
        out
    }

    pub fn parse(text: &str) -> Result<Self, SidecarError> {
        let mut map = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(':').ok_or(SidecarError::Malformed(idx + 1))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let text_of = |key: &'static str| map.get(key).cloned().ok_or(SidecarError::Missing(key));
        fn num<T: std::str::FromStr>(key: &'static str, v: String) -> Result<T, SidecarError> {
            v.parse().map_err(|_| SidecarError::BadValue { key, value: v })
        }
        macro_rules! field {
            ($key:literal) => {
                num($key, text_of($key)?)?
            };
        }
        Ok(InstanceMetadata {
            name: text_of("name")?,
            n: field!("n"),
            seed: field!("seed"),
            delta: field!("delta"),
            vertex_hash: text_of("vertex_hash")?,
            source_gap: field!("source_gap"),
            hopt_gap: field!("hopt_gap"),
            gap: field!("gap"),
            tour: field!("tour"),
            subt: field!("subt"),
            lower_bound: field!("lower_bound"),
            upper_bound: field!("upper_bound"),
            status: text_of("status")?,
            box_tight_edges: field!("box_tight_edges"),
            zero_cost_edges: field!("zero_cost_edges"),
            sep_support_preserved: field!("sep_support_preserved"),
            ihopt_regression: field!("ihopt_regression"),
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), SidecarError> {
        std::fs::write(path, self.to_record())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, SidecarError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
