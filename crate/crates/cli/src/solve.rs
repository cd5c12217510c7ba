use std::path::{Path, PathBuf};

use canonical_snl::instance::io::load_instance;
use canonical_snl::instance::{GroundTruth, Preset, ProblemInstance};
use canonical_snl::solver::{solve, verify, DeltaMode, SolveReport, SolverConfig, Status};
use clap::{Args, ValueEnum};

use crate::{read_file, write_output, CliError, CliResult};

#[derive(Clone, Copy, ValueEnum)]
enum DeltaModeArg {
    Uniform,
    SeededRandom,
}

#[derive(Args)]
pub struct SolveArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Start from the settings of a built-in protocol.
    #[arg(long)]
    preset: Option<Preset>,
    /// Magnitude of the linear perturbation.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum)]
    delta_mode: Option<DeltaModeArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long)]
    rho_decay: Option<f64>,
    #[arg(long)]
    mu_ratio: Option<f64>,
    #[arg(long)]
    outer_max: Option<usize>,
    /// Stop after the linear stage.
    #[arg(long)]
    no_quadratic: bool,
}

#[derive(Args)]
pub struct VerifyArgs {
    instance: PathBuf,
    report: PathBuf,
}

fn solver_config(args: &SolveArgs) -> SolverConfig {
    let mut cfg = args
        .preset
        .map_or_else(SolverConfig::default, SolverConfig::for_preset);
    if let Some(v) = args.delta {
        cfg.delta_magnitude = v;
    }
    if let Some(m) = args.delta_mode {
        cfg.delta_mode = match m {
            DeltaModeArg::Uniform => DeltaMode::Uniform,
            DeltaModeArg::SeededRandom => DeltaMode::SeededRandom,
        };
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.grad_tol {
        cfg.grad_tol = v;
    }
    if let Some(v) = args.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = args.rho0 {
        cfg.rho0 = v;
    }
    if let Some(v) = args.rho_decay {
        cfg.rho_decay = v;
    }
    if let Some(v) = args.mu_ratio {
        cfg.mu_ratio = v;
    }
    if let Some(v) = args.outer_max {
        cfg.outer_max = v;
    }
    cfg.quadratic_stage = !args.no_quadratic;
    cfg
}

pub fn load(path: &Path) -> CliResult<(ProblemInstance, Option<GroundTruth>)> {
    Ok(load_instance(&read_file(path)?)?)
}

pub fn load_report(path: &Path) -> CliResult<SolveReport> {
    let text = String::from_utf8(read_file(path)?)
        .map_err(|_| CliError::Input(format!("{}: not UTF-8", path.display())))?;
    SolveReport::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Exit code for a finished solve: success only with a passing verification.
pub fn exit_code(inst: &ProblemInstance, report: &SolveReport) -> u8 {
    match report.status {
        Status::Trivial => 0,
        Status::MaxIters => 4,
        Status::NoInteriorCriticalPoint => 3,
        Status::CriticalPointInCone | Status::PerturbedSolution => {
            if verify(inst, report).passed() {
                0
            } else {
                3
            }
        }
    }
}

pub fn run(args: &SolveArgs) -> CliResult<u8> {
    let (inst, truth) = load(&args.input)?;
    let cfg = solver_config(args);
    let mut report = solve(&inst, &cfg)?;
    if let Some(t) = &truth {
        report = report.with_truth(t)?;
    }
    let code = exit_code(&inst, &report);
    eprintln!(
        "status {} stage {} gap {:.3e} rmsd {} iterations {} time {:.3} s",
        report.status.as_str(),
        report.stage.as_str(),
        report.gap,
        report.rmsd.map_or("-".to_string(), |r| format!("{r:.3e}")),
        report.iterations,
        report.wall_time_s
    );
    let mut json = report.to_json();
    json.push('\n');
    write_output(args.output.as_deref(), json.as_bytes())?;
    Ok(code)
}

pub fn run_verify(args: &VerifyArgs) -> CliResult<u8> {
    let (inst, _) = load(&args.instance)?;
    let report = load_report(&args.report)?;
    let v = verify(&inst, &report);
    let mut json = serde_json::to_string_pretty(&v)
        .map_err(|e| CliError::Input(format!("serializing verification: {e}")))?;
    json.push('\n');
    write_output(None, json.as_bytes())?;
    Ok(if v.passed() { 0 } else { 3 })
}
