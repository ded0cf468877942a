//! Vertex sampling, instance evaluation and the end-to-end hardening pipeline.

mod dot;
mod regression;
mod sidecar;
mod tsplib;

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ihopt::{
    solve_hopt, solve_ihopt, warm_pool, HardenError, HardeningResult, HardeningStatus, HoptConfig, IhoptConfig,
    RoundRecord,
};
use crate::instance::{EdgeVector, InstanceError, TspInstance};
use crate::sampler::{HitAndRun, MetricPoint, SamplerConfig, SamplerError};
use crate::sep::{solve_sep, SepError, SepSolution};
use crate::tsp::{solve_exact, ExactConfig, ExactMode, TspError};

pub use dot::{export_dot, DOT_TOL};
pub use regression::{fit_runtime_regression, RegressionError, RegressionFit};
pub use sidecar::{InstanceMetadata, SidecarError};
pub use tsplib::{tsplib_format, tsplib_parse, tsplib_read, tsplib_write, TsplibError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("need n >= {min}, got {n}")]
    TooFewNodes { n: usize, min: usize },
    #[error("found {found} of {wanted} fractional vertices in {draws} draws")]
    DrawLimit { found: usize, wanted: usize, draws: usize },
    #[error("SEP optimum is integral; nothing to harden")]
    SepIntegral,
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Sep(#[from] SepError),
    #[error(transparent)]
    Tsp(#[from] TspError),
    #[error(transparent)]
    Harden(#[from] HardenError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Tsplib(#[from] TsplibError),
    #[error(transparent)]
    Sidecar(#[from] SidecarError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// An independent seed for task `index` derived from `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

/// Hex digest of `x` rounded to 9 decimals; equal for points that the
/// sampler treats as the same vertex.
pub fn vertex_hash(x: &EdgeVector) -> String {
    let mut h = Sha256::new();
    for v in rounded_key(x) {
        h.update(v.to_le_bytes());
    }
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn rounded_key(x: &EdgeVector) -> Vec<i64> {
    x.values().iter().map(|v| (v * 1e9).round() as i64).collect()
}

#[derive(Clone, Debug)]
pub struct SamplingConfig {
    pub burn_in: usize,
    pub thin: usize,
    pub max_draws: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            burn_in: 1000,
            thin: 10,
            max_draws: 100_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SampledVertex {
    /// Cost vector whose SEP optimum is `sep.x`.
    pub source: MetricPoint,
    pub sep: SepSolution,
    pub hash: String,
}

pub fn algorithm1_sample_vertices(n: usize, r: usize, seed: u64) -> Result<Vec<SampledVertex>, PipelineError> {
    algorithm1_with(n, r, seed, &SamplingConfig::default())
}

/// Draws metric points by hit-and-run and keeps each whose SEP optimum is
/// fractional and not seen before.
pub fn algorithm1_with(
    n: usize,
    r: usize,
    seed: u64,
    cfg: &SamplingConfig,
) -> Result<Vec<SampledVertex>, PipelineError> {
    if n < 6 {
        return Err(PipelineError::TooFewNodes { n, min: 6 });
    }
    let mut chain = HitAndRun::new(
        n,
        seed,
        SamplerConfig {
            burn_in: cfg.burn_in,
            thin: cfg.thin,
            ..SamplerConfig::default()
        },
    )?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut draws = 0;
    while out.len() < r {
        if draws >= cfg.max_draws {
            return Err(PipelineError::DrawLimit {
                found: out.len(),
                wanted: r,
                draws,
            });
        }
        draws += 1;
        let point = chain.next_sample()?;
        let sep = solve_sep(&point.to_instance()?)?;
        if sep.fractional && seen.insert(rounded_key(&sep.x)) {
            let hash = vertex_hash(&sep.x);
            out.push(SampledVertex {
                source: point,
                sep,
                hash,
            });
        }
    }
    log::info!("sampled {r} fractional vertices at n = {n} in {draws} draws");
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HardnessProxy {
    pub reps: usize,
    /// Branch-and-bound nodes per repetition.
    pub nodes: Vec<u64>,
    pub runtimes: Vec<f64>,
    pub median_nodes: f64,
    pub mean_nodes: f64,
    pub std_nodes: f64,
    pub median_runtime: f64,
    pub mean_runtime: f64,
    pub std_runtime: f64,
    pub timed_out: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub name: String,
    pub n: usize,
    pub tour: f64,
    pub subt: f64,
    pub gap: f64,
    pub tour_proven: bool,
    pub sep_fractional: bool,
    pub zero_cost_edges: usize,
    pub hardness: HardnessProxy,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct EvaluateConfig {
    pub reps: usize,
    pub seed: u64,
    /// Per repetition of the hardness proxy.
    pub time_limit: Option<Duration>,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig {
            reps: 5,
            seed: 0,
            time_limit: None,
        }
    }
}

pub fn evaluate(inst: &TspInstance, reps: usize, seed: u64) -> Result<EvaluationReport, PipelineError> {
    evaluate_with(
        inst,
        &EvaluateConfig {
            reps,
            seed,
            ..EvaluateConfig::default()
        },
    )
}

/// TOUR, SUBT and their ratio, plus the hardness proxy: branch-and-bound
/// node counts and wall times over `reps` runs with derived seeds.
pub fn evaluate_with(inst: &TspInstance, cfg: &EvaluateConfig) -> Result<EvaluationReport, PipelineError> {
    let exact = solve_exact(
        inst,
        &ExactConfig {
            seed: cfg.seed,
            ..ExactConfig::default()
        },
    )?;
    let sep = solve_sep(inst)?;
    let mut nodes = Vec::with_capacity(cfg.reps);
    let mut runtimes = Vec::with_capacity(cfg.reps);
    let mut timed_out = 0;
    for rep in 0..cfg.reps {
        let res = solve_exact(
            inst,
            &ExactConfig {
                mode: ExactMode::ForceBranchAndBound,
                seed: derive_seed(cfg.seed, rep as u64),
                time_limit: cfg.time_limit,
                ..ExactConfig::default()
            },
        )?;
        timed_out += usize::from(res.timed_out);
        nodes.push(res.nodes_explored);
        runtimes.push(res.runtime);
    }
    let node_f: Vec<f64> = nodes.iter().map(|&v| v as f64).collect();
    let hardness = HardnessProxy {
        reps: cfg.reps,
        median_nodes: median(&node_f),
        mean_nodes: mean(&node_f),
        std_nodes: stddev(&node_f),
        median_runtime: median(&runtimes),
        mean_runtime: mean(&runtimes),
        std_runtime: stddev(&runtimes),
        nodes,
        runtimes,
        timed_out,
    };
    Ok(EvaluationReport {
        name: inst.name().to_string(),
        n: inst.n(),
        tour: exact.value,
        subt: sep.value,
        gap: exact.value / sep.value,
        tour_proven: exact.proven_optimal,
        sep_fractional: sep.fractional,
        zero_cost_edges: inst.zero_cost_edges(),
        hardness,
        seed: cfg.seed,
    })
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

fn stddev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    if k % 2 == 1 {
        s[k / 2]
    } else {
        0.5 * (s[k / 2 - 1] + s[k / 2])
    }
}

#[derive(Clone, Debug)]
pub struct HardenConfig {
    pub delta: i64,
    /// Shared by both stages; IH-OPT gets what H-OPT leaves.
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    pub reps: usize,
    pub seed: u64,
    /// Warm-pool slack threshold.
    pub tau: f64,
    pub k: usize,
}

impl Default for HardenConfig {
    fn default() -> Self {
        HardenConfig {
            delta: 1000,
            time_limit: None,
            node_limit: None,
            reps: 5,
            seed: 0,
            tau: 0.05,
            k: 50,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HardenOutcome {
    pub hard: TspInstance,
    pub before: EvaluationReport,
    pub after: EvaluationReport,
    pub xbar: SepSolution,
    pub hopt: HardeningResult,
    pub ihopt: HardeningResult,
    /// Gap of the fractional H-OPT costs.
    pub hopt_gap: f64,
    /// SEP on the hard instance returns a point with the support of `xbar`.
    pub support_preserved: bool,
}

impl HardenOutcome {
    /// The integer stage lost gap relative to the fractional stage.
    pub fn ihopt_regression(&self) -> bool {
        self.after.gap < self.hopt_gap - 1e-9
    }

    pub fn metadata(&self, seed: u64) -> InstanceMetadata {
        InstanceMetadata {
            name: self.hard.name().to_string(),
            n: self.hard.n(),
            seed,
            delta: self.ihopt.delta as i64,
            vertex_hash: vertex_hash(&self.xbar.x),
            source_gap: self.before.gap,
            hopt_gap: self.hopt_gap,
            gap: self.after.gap,
            tour: self.after.tour,
            subt: self.after.subt,
            lower_bound: self.ihopt.lower_bound,
            upper_bound: self.ihopt.upper_bound,
            status: status_name(self.ihopt.status).to_string(),
            box_tight_edges: self.ihopt.box_tight_edges.len(),
            zero_cost_edges: self.after.zero_cost_edges,
            sep_support_preserved: self.support_preserved,
            ihopt_regression: self.ihopt_regression(),
        }
    }

    /// H-OPT then IH-OPT separation rounds.
    pub fn run_log(&self) -> impl Iterator<Item = &RoundRecord> {
        self.hopt.log.iter().chain(&self.ihopt.log)
    }
}

pub fn status_name(s: HardeningStatus) -> &'static str {
    match s {
        HardeningStatus::Optimal => "optimal",
        HardeningStatus::TimeLimit => "time_limit",
        HardeningStatus::Infeasible => "infeasible",
    }
}

/// Solves SEP on `inst` and hardens its optimum.
pub fn harden(inst: &TspInstance, cfg: &HardenConfig) -> Result<HardenOutcome, PipelineError> {
    let sep = solve_sep(inst)?;
    if !sep.fractional {
        return Err(PipelineError::SepIntegral);
    }
    harden_vertex(inst, sep, cfg)
}

/// Hardens the SEP optimum `xbar` of `source`.
pub fn harden_vertex(
    source: &TspInstance,
    xbar: SepSolution,
    cfg: &HardenConfig,
) -> Result<HardenOutcome, PipelineError> {
    let start = Instant::now();
    let eval = |inst: &TspInstance| {
        evaluate_with(
            inst,
            &EvaluateConfig {
                reps: cfg.reps,
                seed: cfg.seed,
                time_limit: None,
            },
        )
    };
    let before = eval(source)?;
    let hopt = solve_hopt(
        &xbar.x,
        &HoptConfig {
            k: cfg.k,
            seed: cfg.seed,
            time_limit: cfg.time_limit,
            ..HoptConfig::default()
        },
    )?;
    if hopt.status != HardeningStatus::Optimal {
        log::warn!("H-OPT stopped at its time limit; continuing with its rows");
    }
    let hopt_inst = hopt.instance()?;
    let hopt_gap = solve_exact(&hopt_inst, &ExactConfig::default())?.value / solve_sep(&hopt_inst)?.value;
    let ihopt = solve_ihopt(
        &xbar.x,
        &IhoptConfig {
            delta: cfg.delta,
            k: cfg.k,
            seed: cfg.seed,
            time_limit: cfg.time_limit.map(|t| t.saturating_sub(start.elapsed())),
            node_limit: cfg.node_limit,
            warm_pool: Some(warm_pool(&hopt, cfg.tau)),
            start_costs: Some(hopt.costs.clone()),
            ..IhoptConfig::default()
        },
    )?;
    if !ihopt.box_tight_edges.is_empty() {
        log::info!(
            "{} edges sit at the box bound {}; a larger box may admit a better optimum",
            ihopt.box_tight_edges.len(),
            cfg.delta
        );
    }
    let base = if source.name().is_empty() {
        "instance"
    } else {
        source.name()
    };
    let hard = ihopt.instance()?.with_name(format!("{base}_hard"));
    let after = eval(&hard)?;
    let support_preserved = solve_sep(&hard)?.support() == xbar.support();
    if after.gap < hopt_gap - 1e-9 {
        log::warn!("integer stage lowered the gap from {hopt_gap:.6} to {:.6}", after.gap);
    }
    Ok(HardenOutcome {
        hard,
        before,
        after,
        xbar,
        hopt,
        ihopt,
        hopt_gap,
        support_preserved,
    })
}

#[derive(Clone, Debug)]
pub struct GenerateConfig {
    pub harden: HardenConfig,
    pub sampling: SamplingConfig,
    pub workers: usize,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            harden: HardenConfig::default(),
            sampling: SamplingConfig::default(),
            workers: std::thread::available_parallelism().map_or(1, |p| p.get()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    /// Position of the vertex in sampling order.
    pub index: usize,
    pub vertex_hash: String,
    pub source: TspInstance,
    pub seed: u64,
    pub outcome: HardenOutcome,
}

#[derive(Clone, Debug)]
pub struct GenerateReport {
    pub n: usize,
    pub delta: i64,
    pub seed: u64,
    /// Largest gap first, then most branch-and-bound nodes, then index.
    pub ranked: Vec<GeneratedInstance>,
    pub failures: Vec<(usize, String)>,
}

impl GenerateReport {
    pub fn best(&self) -> Option<&GeneratedInstance> {
        self.ranked.first()
    }
}

/// Samples `r` vertices and hardens each on a pool of worker threads.
/// Failures are logged and skipped.
pub fn pipeline_generate(
    n: usize,
    r: usize,
    delta: i64,
    seed: u64,
    cfg: &GenerateConfig,
) -> Result<GenerateReport, PipelineError> {
    let vertices = algorithm1_with(n, r, seed, &cfg.sampling)?;
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<GeneratedInstance, String>>>> = Mutex::new(vec![None; vertices.len()]);
    let workers = cfg.workers.clamp(1, vertices.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let index = next.fetch_add(1, Ordering::SeqCst);
                let Some(v) = vertices.get(index) else { break };
                let result = harden_one(n, index, v, delta, seed, cfg);
                slots.lock().unwrap()[index] = Some(result);
            });
        }
    });
    let mut ranked = Vec::new();
    let mut failures = Vec::new();
    for (index, slot) in slots.into_inner().unwrap().into_iter().enumerate() {
        match slot.expect("every vertex processed") {
            Ok(g) => ranked.push(g),
            Err(e) => {
                log::warn!("vertex {index} skipped: {e}");
                failures.push((index, e));
            }
        }
    }
    ranked.sort_by(|a, b| {
        b.outcome
            .after
            .gap
            .total_cmp(&a.outcome.after.gap)
            .then(
                b.outcome
                    .after
                    .hardness
                    .median_nodes
                    .total_cmp(&a.outcome.after.hardness.median_nodes),
            )
            .then(a.index.cmp(&b.index))
    });
    Ok(GenerateReport {
        n,
        delta,
        seed,
        ranked,
        failures,
    })
}

fn harden_one(
    n: usize,
    index: usize,
    v: &SampledVertex,
    delta: i64,
    seed: u64,
    cfg: &GenerateConfig,
) -> Result<GeneratedInstance, String> {
    let source = v
        .source
        .to_instance()
        .map_err(|e| e.to_string())?
        .with_name(format!("n{n}_s{seed}_v{index}"));
    let vseed = derive_seed(seed, index as u64);
    let hcfg = HardenConfig {
        delta,
        seed: vseed,
        ..cfg.harden.clone()
    };
    let outcome = harden_vertex(&source, v.sep.clone(), &hcfg).map_err(|e| e.to_string())?;
    Ok(GeneratedInstance {
        index,
        vertex_hash: v.hash.clone(),
        source,
        seed: vseed,
        outcome,
    })
}

/// One line of the summary table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SummaryRow {
    pub rank: usize,
    pub name: String,
    pub vertex_hash: String,
    pub n: usize,
    pub delta: i64,
    pub source_gap: f64,
    pub hopt_gap: f64,
    pub gap: f64,
    pub tour: f64,
    pub subt: f64,
    pub status: String,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub source_nodes: f64,
    pub hard_nodes: f64,
    pub source_runtime: f64,
    pub hard_runtime: f64,
    pub hard_runtime_std: f64,
    pub ihopt_nodes: u64,
    pub ihopt_seconds: f64,
    pub box_tight_edges: usize,
    pub sep_support_preserved: bool,
    pub ihopt_regression: bool,
}

pub fn summary_rows(report: &GenerateReport) -> Vec<SummaryRow> {
    report
        .ranked
        .iter()
        .enumerate()
        .map(|(rank, g)| {
            let o = &g.outcome;
            SummaryRow {
                rank: rank + 1,
                name: o.hard.name().to_string(),
                vertex_hash: g.vertex_hash.clone(),
                n: report.n,
                delta: report.delta,
                source_gap: o.before.gap,
                hopt_gap: o.hopt_gap,
                gap: o.after.gap,
                tour: o.after.tour,
                subt: o.after.subt,
                status: status_name(o.ihopt.status).to_string(),
                lower_bound: o.ihopt.lower_bound,
                upper_bound: o.ihopt.upper_bound,
                source_nodes: o.before.hardness.median_nodes,
                hard_nodes: o.after.hardness.median_nodes,
                source_runtime: o.before.hardness.median_runtime,
                hard_runtime: o.after.hardness.median_runtime,
                hard_runtime_std: o.after.hardness.std_runtime,
                ihopt_nodes: o.ihopt.stats.nodes,
                ihopt_seconds: o.ihopt.stats.runtime_seconds,
                box_tight_edges: o.ihopt.box_tight_edges.len(),
                sep_support_preserved: o.support_preserved,
                ihopt_regression: o.ihopt_regression(),
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(out: W, rows: &[SummaryRow]) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per line.
pub fn write_run_log<'a, W: Write>(
    mut out: W,
    records: impl IntoIterator<Item = &'a RoundRecord>,
) -> Result<(), PipelineError> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes `<name>.tsp`, `<name>.meta` and `<name>.log.jsonl` into `dir`.
pub fn write_instance_files(dir: &Path, outcome: &HardenOutcome, seed: u64) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir)?;
    let name = outcome.hard.name();
    tsplib_write(&outcome.hard, dir.join(format!("{name}.tsp")))?;
    outcome.metadata(seed).write(dir.join(format!("{name}.meta")))?;
    let log = std::fs::File::create(dir.join(format!("{name}.log.jsonl")))?;
    write_run_log(std::io::BufWriter::new(log), outcome.run_log())?;
    Ok(())
}

/// Instance files for every ranked instance plus `summary.csv`.
pub fn write_generate_outputs(dir: &Path, report: &GenerateReport) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir)?;
    for g in &report.ranked {
        write_instance_files(dir, &g.outcome, g.seed)?;
    }
    let f = std::fs::File::create(dir.join("summary.csv"))?;
    write_summary_csv(f, &summary_rows(report))
}
