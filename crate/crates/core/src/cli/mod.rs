//! Command-line front end: `attack`, `sweep` and `evaluate`.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 runtime or
//! sampler error, 3 some sweep cells failed.

pub mod config;
pub mod output;
pub mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{CrossEvalEntry, EvalReport};
use crate::rng::RngSeed;
pub use config::{DatasetSource, RunConfig, SweepAxis, SweepSpec, TargetRecipe, SCHEMA_VERSION};
use output::{aggregate_csv, read_weights, write_atomic, write_json, write_weights, AggregateRow};
use run::{check_weights, eval_config, evaluate_all, run_job, Job};
pub use run::{RunResult, RunSeeds, SweepPoint};

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;
pub const EXIT_PARTIAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "bayes-poison",
    version,
    about = "Poisoning attacks on Bayesian inference by deleting and replicating rows"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every configured attack for every replication.
    Attack(CommonArgs),
    /// Run the attacks over the values of the config's sweep axis.
    Sweep(CommonArgs),
    /// Evaluate a fixed weight vector.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// single-column CSV of weights
        #[arg(long)]
        weights: PathBuf,
        /// replication whose dataset and evaluation seed to use
        #[arg(long, default_value_t = 0)]
        replication: usize,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// output directory; overrides `output_dir` in the config
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// overrides `seed` in the config
    #[arg(long)]
    pub seed: Option<u64>,
}

enum Failure {
    Config(Error),
    Runtime(Error),
    Partial { failed: usize, total: usize },
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
            Failure::Partial { .. } => EXIT_PARTIAL,
        }
    }
}

fn config_err(e: Error) -> Failure {
    Failure::Config(e)
}

fn runtime_err(e: Error) -> Failure {
    Failure::Runtime(e)
}

struct Loaded {
    cfg: RunConfig,
    out: PathBuf,
    seed: u64,
    workers: Option<usize>,
}

fn load(args: &CommonArgs) -> std::result::Result<Loaded, Failure> {
    let cfg = RunConfig::load(&args.config).map_err(config_err)?;
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| {
            Failure::Config(Error::Config(
                "no output directory: pass --out or set output_dir".into(),
            ))
        })?;
    if args.workers == Some(0) {
        return Err(Failure::Config(Error::Config(
            "--workers must be at least 1".into(),
        )));
    }
    Ok(Loaded {
        seed: args.seed.unwrap_or(cfg.seed),
        workers: args.workers.or(cfg.workers),
        cfg,
        out,
    })
}

/// Directory label per attack entry; repeated methods get their index.
fn method_labels(cfg: &RunConfig) -> Vec<String> {
    cfg.attacks
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let dup = cfg.attacks.iter().filter(|b| b.method == a.method).count() > 1;
            if dup {
                format!("{}-{i}", a.method)
            } else {
                a.method.to_string()
            }
        })
        .collect()
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w);
    }
    b.build().map_err(|e| Error::Internal(e.to_string()))
}

#[derive(Debug, Serialize, Deserialize)]
struct JobFailure {
    sweep: Option<SweepPoint>,
    method: String,
    replication: usize,
    error: String,
}

struct Outcome {
    job: Job,
    result: Result<RunResult>,
}

/// Runs all jobs and writes each result; returns outcomes in job order.
fn execute(
    loaded: &Loaded,
    cells: &[(Option<SweepPoint>, RunConfig, PathBuf)],
) -> Result<Vec<Outcome>> {
    let labels = method_labels(&loaded.cfg);
    let mut jobs = Vec::new();
    for (c, (sweep, _, _)) in cells.iter().enumerate() {
        for m in 0..loaded.cfg.attacks.len() {
            for r in 0..loaded.cfg.replications {
                jobs.push(Job {
                    cell: c,
                    sweep: *sweep,
                    method_index: m,
                    replication: r,
                });
            }
        }
    }
    let pool = pool(loaded.workers)?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        jobs.into_par_iter()
            .map(|job| {
                let (_, cfg, dir) = &cells[job.cell];
                let result = run_job(cfg, &job, loaded.seed).and_then(|res| {
                    let stem = dir
                        .join(&labels[job.method_index])
                        .join(format!("rep{}", job.replication));
                    write_json(&stem.with_extension("json"), &res)?;
                    write_weights(&stem.with_extension("w_star.csv"), &res.w_star)?;
                    Ok(res)
                });
                Outcome { job, result }
            })
            .collect()
    });
    for o in &outcomes {
        let label = &labels[o.job.method_index];
        let at = o
            .job
            .sweep
            .map(|s| format!(" {}={}", s.axis.as_str(), s.value))
            .unwrap_or_default();
        match &o.result {
            Ok(r) => println!(
                "{label}{at} rep{}: kl {} manipulations {} ({:.2} s)",
                o.job.replication,
                r.eval
                    .kl_to_target
                    .value
                    .map_or("n/a".into(), |v| format!("{v:.6}")),
                r.w_star.iter().map(|v| (v - 1.0).abs()).sum::<f64>(),
                r.wall_clock_seconds
            ),
            Err(e) => eprintln!("{label}{at} rep{} failed: {e}", o.job.replication),
        }
    }
    Ok(outcomes)
}

fn write_aggregate(
    loaded: &Loaded,
    axis: Option<SweepAxis>,
    cells: usize,
    outcomes: &[Outcome],
) -> Result<()> {
    let labels = method_labels(&loaded.cfg);
    let mut rows = Vec::new();
    for c in 0..cells {
        for (m, label) in labels.iter().enumerate() {
            let mine: Vec<&Outcome> = outcomes
                .iter()
                .filter(|o| o.job.cell == c && o.job.method_index == m)
                .collect();
            rows.push(AggregateRow {
                axis_value: mine.first().and_then(|o| o.job.sweep.map(|s| s.value)),
                method: label.clone(),
                failed: mine.iter().filter(|o| o.result.is_err()).count(),
                metrics: mine
                    .iter()
                    .filter_map(|o| o.result.as_ref().ok().map(RunResult::metrics))
                    .collect(),
            });
        }
    }
    let axis = axis.map_or("cell", SweepAxis::as_str);
    write_atomic(
        &loaded.out.join("aggregate.csv"),
        &aggregate_csv(axis, &rows)?,
    )?;
    let failures: Vec<JobFailure> = outcomes
        .iter()
        .filter_map(|o| {
            o.result.as_ref().err().map(|e| JobFailure {
                sweep: o.job.sweep,
                method: labels[o.job.method_index].clone(),
                replication: o.job.replication,
                error: e.to_string(),
            })
        })
        .collect();
    if !failures.is_empty() {
        write_json(&loaded.out.join("failures.json"), &failures)?;
    }
    Ok(())
}

fn cmd_attack(args: &CommonArgs) -> std::result::Result<(), Failure> {
    let loaded = load(args)?;
    let cells = vec![(None, loaded.cfg.clone(), loaded.out.clone())];
    let outcomes = execute(&loaded, &cells).map_err(runtime_err)?;
    write_aggregate(&loaded, None, 1, &outcomes).map_err(runtime_err)?;
    match outcomes.into_iter().find_map(|o| o.result.err()) {
        Some(e) => Err(Failure::Runtime(e)),
        None => Ok(()),
    }
}

fn cmd_sweep(args: &CommonArgs) -> std::result::Result<(), Failure> {
    let loaded = load(args)?;
    let spec = loaded.cfg.sweep.clone().ok_or_else(|| {
        Failure::Config(Error::Config(
            "the sweep command needs a `sweep` section".into(),
        ))
    })?;
    let cells = spec
        .values
        .iter()
        .map(|&v| {
            let cfg = loaded.cfg.at_sweep_value(spec.axis, v)?;
            let dir = loaded
                .out
                .join("cells")
                .join(format!("{}={v}", spec.axis.as_str()));
            Ok((
                Some(SweepPoint {
                    axis: spec.axis,
                    value: v,
                }),
                cfg,
                dir,
            ))
        })
        .collect::<Result<Vec<_>>>()
        .map_err(config_err)?;
    let outcomes = execute(&loaded, &cells).map_err(runtime_err)?;
    write_aggregate(&loaded, Some(spec.axis), cells.len(), &outcomes).map_err(runtime_err)?;
    let failed = outcomes.iter().filter(|o| o.result.is_err()).count();
    if failed > 0 {
        return Err(Failure::Partial {
            failed,
            total: outcomes.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateOutput {
    pub schema_version: u32,
    pub weights_file: PathBuf,
    pub replication: usize,
    pub run_seed: u64,
    pub eval_seed: RngSeed,
    pub data_seed: Option<RngSeed>,
    pub primary: EvalReport,
    pub alternates: Vec<CrossEvalEntry>,
}

fn cmd_evaluate(
    args: &CommonArgs,
    weights: &Path,
    replication: usize,
) -> std::result::Result<(), Failure> {
    let loaded = load(args)?;
    let cfg = &loaded.cfg;
    if replication >= cfg.replications && !cfg.fixed_data() {
        return Err(Failure::Config(Error::Config(format!(
            "replication {replication} out of range for {} replications",
            cfg.replications
        ))));
    }
    let problem = cfg.problem(replication).map_err(config_err)?;
    let raw = read_weights(weights).map_err(config_err)?;
    let budget = cfg.attacks[0].budget;
    let w = check_weights(&raw, problem.n(), budget).map_err(config_err)?;
    let eval_cfg = eval_config(cfg, loaded.seed, replication);
    let (primary, alternates) = evaluate_all(cfg, &problem, &w, &eval_cfg).map_err(runtime_err)?;
    let out = EvaluateOutput {
        schema_version: SCHEMA_VERSION,
        weights_file: weights.to_path_buf(),
        replication,
        run_seed: loaded.seed,
        eval_seed: eval_cfg.seed,
        data_seed: cfg.data_seed(replication),
        primary,
        alternates,
    };
    let path = loaded.out.join("evaluate.json");
    write_json(&path, &out).map_err(runtime_err)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: &Cli) -> u8 {
    let outcome = match &cli.command {
        Command::Attack(a) => cmd_attack(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Evaluate {
            common,
            weights,
            replication,
        } => cmd_evaluate(common, weights, *replication),
    };
    match outcome {
        Ok(()) => 0,
        Err(f) => {
            match &f {
                Failure::Config(e) => eprintln!("error: {e}"),
                Failure::Runtime(e) => eprintln!("error: {e}"),
                Failure::Partial { failed, total } => {
                    eprintln!("error: {failed} of {total} sweep runs failed")
                }
            }
            f.code()
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            code
        }
    }
}

pub fn main() -> ExitCode {
    ExitCode::from(run_from_args(std::env::args_os()))
}
