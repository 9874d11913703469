//! `gadmm solve | certify | bench`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid flags or unmet
//! preconditions, 3 non-finite iterate, 4 failed certificate.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use super::{series_to_csv, table_to_csv, write_trace_csv, Summary};
use crate::audit::{certify_run, AuditReport, CertSelection, RATE_TAIL};
use crate::calib::grid::{run_experiment_grid, GridSpec};
use crate::calib::{calib_problem, generate_instance, reference_solution};
use crate::error::{Error, Result};
use crate::metrics::{estimate_rate_from_sq_distances, MetricTag};
use crate::problem::{toy_qp_instance, IterateState, ProblemInstance, ProximalWeights};
use crate::solvers::{run, RunResult, SolverConfig, StopRule, Variant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NON_FINITE: i32 = 3;
pub const EXIT_CERT_FAILED: i32 = 4;

/// Dykstra budget for the calibration reference.
const DYKSTRA_MAX_ITER: usize = 200_000;
const DYKSTRA_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "gadmm", version, about = "Generalized and proximal ADMM solvers with contraction certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one solver and write its trace and summary.
    Solve(SolveArgs),
    /// Run one solver and check the contraction certificates at every iteration.
    Certify(CertifyArgs),
    /// Run a calibration experiment grid and write the table and figure data.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    ToyQp,
    Calib,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StopArg {
    Step,
    Kkt,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum, default_value = "toy-qp")]
    pub problem: ProblemKind,
    /// admm | gadmm | padmm | pgadmm | dpadmm | dpgadmm
    #[arg(long, default_value = "dpgadmm", value_parser = parse_variant)]
    pub algorithm: Variant,
    /// Relaxation factor in (0, 2); defaults to 1.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Matrix size of the calibration problem.
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    /// Proximal weight G1 = g1·I.
    #[arg(long, default_value_t = 0.0)]
    pub g1: f64,
    /// Proximal weight G2 = g2·I.
    #[arg(long, default_value_t = 0.0)]
    pub g2: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = crate::solvers::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Seed of the calibration data generator.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "step")]
    pub stop: StopArg,
    /// Starting point as JSON `{"x": [...], "y": [...], "lambda": [...]}` (default: zeros).
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Compute the calibration reference so the trace carries distances and `tau_hat`.
    #[arg(long)]
    pub with_reference: bool,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub solve: SolveArgs,
    /// l31 | l32 | l41 | l42 | identities | all
    #[arg(long, default_value = "all")]
    pub cert: String,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// TOML grid file.
    #[arg(long)]
    pub grid: PathBuf,
    /// Output directory for table1.csv, figure1_alpha.csv and figure2_beta.csv.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Maps a library error to an exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonFinite { .. } => EXIT_NON_FINITE,
        Error::Io(_) | Error::Json(_) => EXIT_IO,
        Error::InvalidConfig(_)
        | Error::VariantConfigConflict { .. }
        | Error::RequiresPositiveDefinite(_)
        | Error::DimensionMismatch(_)
        | Error::MissingReference
        | Error::RankDeficientB
        | Error::Grid(_)
        | Error::Trace(_) => EXIT_USAGE,
        _ => EXIT_IO,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InitFile {
    x: Vec<f64>,
    y: Vec<f64>,
    lambda: Vec<f64>,
}

struct Setup {
    instance: ProblemInstance<f64>,
    cfg: SolverConfig<f64>,
    u0: IterateState<f64>,
    n: usize,
}

fn setup(a: &SolveArgs, want_reference: bool) -> Result<Setup> {
    let weights = ProximalWeights::scaled(a.g1, a.g2);
    if !(a.g1 >= 0.0 && a.g2 >= 0.0) {
        return Err(Error::InvalidConfig("g1 and g2 must be nonnegative".into()));
    }
    let stop = match a.stop {
        StopArg::Step => StopRule::RelativeStep,
        StopArg::Kkt => StopRule::KktResidual,
    };
    let cfg = SolverConfig::new(a.algorithm, a.alpha, a.beta, weights)?
        .with_tol(a.tol)
        .with_max_iter(a.max_iter)
        .with_stop_rule(stop)
        .with_seed(a.seed);
    cfg.validate()?;
    let (instance, n) = match a.problem {
        ProblemKind::ToyQp => (toy_qp_instance::<f64>(), 1),
        ProblemKind::Calib => {
            let inst = generate_instance::<f64>(a.n, a.seed)?;
            let problem = calib_problem(&inst);
            let problem = if want_reference {
                let reference = reference_solution(&inst, DYKSTRA_MAX_ITER, DYKSTRA_TOL)?;
                problem.with_reference(reference.u_star)?
            } else {
                problem
            };
            (problem, a.n)
        }
    };
    let u0 = match &a.init {
        None => instance.zero_iterate(),
        Some(path) => {
            let init: InitFile = serde_json::from_str(&fs::read_to_string(path)?)?;
            let u = IterateState::from_slices(&init.x, &init.y, &init.lambda);
            u.check_dims(&instance.coupling)?;
            u
        }
    };
    Ok(Setup { instance, cfg, u0, n })
}

fn tau_hat(result: &RunResult<f64>) -> Option<f64> {
    let d: Vec<f64> = result.trace.iter().map(|r| r.dist_sq_metric).collect();
    if d.iter().any(|&v| v < 0.0) {
        return None;
    }
    estimate_rate_from_sq_distances(&d, MetricTag::HAlpha, RATE_TAIL).ok().map(|r| r.tau_hat)
}

fn summarize(s: &Setup, result: &RunResult<f64>, tau_hat: Option<f64>) -> Summary {
    let last = result.trace.last().expect("trace has the initial record");
    Summary {
        algorithm: s.cfg.variant.key().to_string(),
        alpha: s.cfg.alpha,
        beta: s.cfg.beta,
        n: s.n,
        iterations: result.iterations,
        converged: result.converged,
        objective: last.objective,
        kkt_residual: last.kkt_residual,
        wall_time_ns: result.wall_time.as_nanos() as u64,
        tau_hat,
        seed: s.cfg.seed,
    }
}

fn write_outputs(a: &SolveArgs, summary: &Summary, result: &RunResult<f64>) -> Result<()> {
    if let Some(path) = &a.trace {
        write_trace_csv(path, &result.trace)?;
    }
    if let Some(path) = &a.summary {
        summary.write(path)?;
    }
    Ok(())
}

pub fn cmd_solve(a: &SolveArgs) -> Result<i32> {
    let want_reference = a.with_reference;
    let s = setup(a, want_reference)?;
    let result = run(&s.instance, &s.u0, &s.cfg)?;
    let summary = summarize(&s, &result, tau_hat(&result));
    write_outputs(a, &summary, &result)?;
    println!(
        "{} alpha={} beta={}: {} iterations, converged={}, objective={:?}, kkt={:e}",
        s.cfg.variant, s.cfg.alpha, s.cfg.beta, summary.iterations, summary.converged, summary.objective, summary.kkt_residual
    );
    Ok(EXIT_OK)
}

fn print_audit(report: &AuditReport<f64>) {
    for t in &report.tallies {
        println!("{t}");
    }
    if let Some(passed) = report.initial_descent_skipped {
        println!(
            "descent_gamma_alpha at k=0 skipped: y0 is not y-stationary (would have {})",
            if passed { "passed" } else { "failed" }
        );
    }
    if let Some(sigma) = report.sigma {
        println!("sigma = {sigma:?}");
    }
    if let Some(delta) = report.delta {
        println!("delta = {delta:?}");
    }
    if let Some(r) = report.min_residual_ratio_h0 {
        println!("min ||du||^2_H0 / kkt^2 = {r:e}");
    }
    match &report.rate {
        Some(rate) => println!("tau_hat = {:?} ({} metric, {} tail ratios)", rate.tau_hat, rate.metric.name(), rate.ratios.len()),
        None => println!("tau_hat not estimable"),
    }
    println!("{}", if report.all_passed() { "ALL PASSED" } else { "CERTIFICATE FAILURE" });
}

pub fn cmd_certify(a: &CertifyArgs) -> Result<i32> {
    let selection: CertSelection = a.cert.parse()?;
    let s = setup(&a.solve, true)?;
    let report = certify_run(&s.instance, &s.u0, &s.cfg, selection)?;
    let summary = summarize(&s, &report.run, report.rate.as_ref().map(|r| r.tau_hat));
    write_outputs(&a.solve, &summary, &report.run)?;
    println!(
        "{} alpha={} beta={}: {} iterations, converged={}",
        s.cfg.variant, s.cfg.alpha, s.cfg.beta, report.run.iterations, report.run.converged
    );
    print_audit(&report);
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_CERT_FAILED })
}

pub fn cmd_bench(a: &BenchArgs) -> Result<i32> {
    let spec = GridSpec::load(&a.grid).map_err(|e| match e {
        Error::Io(io) => Error::Grid(format!("{}: {io}", a.grid.display())),
        other => other,
    })?;
    let report = run_experiment_grid(&spec)?;
    fs::create_dir_all(&a.out)?;
    let rows = report.table_rows();
    let table = table_to_csv(&rows);
    write(&a.out.join("table1.csv"), &table)?;
    write(&a.out.join("figure1_alpha.csv"), &series_to_csv(&report.alpha_series()))?;
    write(&a.out.join("figure2_beta.csv"), &series_to_csv(&report.beta_series()))?;
    print!("{table}");
    for r in rows.iter().filter(|r| r.converged < r.runs) {
        eprintln!("warning: {:?}: {}/{} runs converged", r.cell, r.converged, r.runs);
    }
    Ok(EXIT_OK)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    Ok(fs::write(path, contents)?)
}
