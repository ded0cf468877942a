use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hardtsp_core::pipeline::{
    algorithm1_with, evaluate_with, export_dot, fit_runtime_regression, harden, pipeline_generate, summary_rows,
    tsplib_read, tsplib_write, write_generate_outputs, write_instance_files, write_summary_csv, EvaluateConfig,
    GenerateConfig, HardenConfig, SamplingConfig,
};
use hardtsp_core::sep::solve_sep;
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "hardtsp",
    version,
    about = "Metric TSP instances with a large subtour-relaxation gap"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Right-hand side of the tour rows in the integer model.
    #[arg(long, default_value_t = 1000)]
    delta: i64,
    /// Seconds per hardening run.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Repetitions of the branch-and-bound hardness proxy.
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

impl Common {
    fn limit(&self) -> Option<Duration> {
        self.time_limit.map(Duration::from_secs_f64)
    }

    fn harden_config(&self) -> HardenConfig {
        HardenConfig {
            delta: self.delta,
            time_limit: self.limit(),
            reps: self.reps,
            seed: self.seed,
            ..HardenConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample distinct fractional SEP vertices; writes vertices.jsonl.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        #[arg(long, default_value_t = 10)]
        thin: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Harden a TSPLIB instance whose SEP optimum is fractional.
    Harden {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sample, harden and rank r vertices; writes instances and summary.csv.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        r: usize,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Print TOUR, SUBT, gap and the hardness proxy as JSON.
    Evaluate {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Rewrite a TSPLIB file as EXPLICIT FULL_MATRIX.
    Convert { input: PathBuf, output: PathBuf },
    /// Render the SEP optimum of an instance as a DOT graph.
    ExportDot {
        file: PathBuf,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit log10(runtime) against n from a CSV with `n` and `runtime` columns
    /// (or a summary.csv, using `hard_runtime`).
    Regress { csv: PathBuf },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Sample {
            n,
            count,
            burn_in,
            thin,
            common,
        } => {
            let cfg = SamplingConfig {
                burn_in,
                thin,
                ..SamplingConfig::default()
            };
            let vertices = algorithm1_with(n, count, common.seed, &cfg)?;
            std::fs::create_dir_all(&common.out_dir)?;
            let path = common.out_dir.join("vertices.jsonl");
            let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
            for (index, v) in vertices.iter().enumerate() {
                let rec = json!({
                    "index": index,
                    "hash": v.hash,
                    "source": v.source.values().values(),
                    "x": v.sep.x.values(),
                    "subt": v.sep.value,
                });
                writeln!(f, "{rec}")?;
            }
            println!("wrote {} vertices to {}", vertices.len(), path.display());
        }
        Command::Harden { file, common } => {
            let inst = tsplib_read(&file).with_context(|| format!("reading {}", file.display()))?;
            let out = harden(&inst, &common.harden_config())?;
            write_instance_files(&common.out_dir, &out, common.seed)?;
            let summary = json!({
                "name": out.hard.name(),
                "source_gap": out.before.gap,
                "hopt_gap": out.hopt_gap,
                "gap": out.after.gap,
                "status": hardtsp_core::pipeline::status_name(out.ihopt.status),
                "lower_bound": out.ihopt.lower_bound,
                "upper_bound": out.ihopt.upper_bound,
                "source_nodes": out.before.hardness.median_nodes,
                "hard_nodes": out.after.hardness.median_nodes,
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Generate { n, r, workers, common } => {
            let mut cfg = GenerateConfig {
                harden: common.harden_config(),
                ..GenerateConfig::default()
            };
            if let Some(w) = workers {
                cfg.workers = w;
            }
            let report = pipeline_generate(n, r, common.delta, common.seed, &cfg)?;
            write_generate_outputs(&common.out_dir, &report)?;
            write_summary_csv(std::io::stdout().lock(), &summary_rows(&report))?;
            for (index, err) in &report.failures {
                eprintln!("vertex {index} failed: {err}");
            }
        }
        Command::Evaluate { file, common } => {
            let inst = tsplib_read(&file).with_context(|| format!("reading {}", file.display()))?;
            let report = evaluate_with(
                &inst,
                &EvaluateConfig {
                    reps: common.reps,
                    seed: common.seed,
                    time_limit: common.limit(),
                },
            )?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Convert { input, output } => {
            let inst = tsplib_read(&input).with_context(|| format!("reading {}", input.display()))?;
            tsplib_write(&inst, &output)?;
        }
        Command::ExportDot { file, out } => {
            let inst = tsplib_read(&file).with_context(|| format!("reading {}", file.display()))?;
            let sep = solve_sep(&inst)?;
            let dot = export_dot(&inst, &sep.x);
            match out {
                Some(p) => std::fs::write(p, dot)?,
                None => print!("{dot}"),
            }
        }
        Command::Regress { csv } => {
            let records = read_runtimes(&csv)?;
            let fit = fit_runtime_regression(&records)?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
        }
    }
    Ok(())
}

fn read_runtimes(path: &Path) -> Result<Vec<(usize, f64)>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let n_col = col("n").context("no `n` column")?;
    let Some(t_col) = col("runtime").or_else(|| col("hard_runtime")) else {
        bail!("no `runtime` or `hard_runtime` column");
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push((rec[n_col].trim().parse()?, rec[t_col].trim().parse()?));
    }
    Ok(out)
}
