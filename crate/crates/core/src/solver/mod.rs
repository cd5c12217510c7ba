//! Dual maximization and the perturbation ladder.
//!
//! [`solve`] tries, in order:
//!
//! 1. the plain dual (`δ = 0`) over the open cone `G ≻ 0`;
//! 2. the linearly perturbed dual (`δ ≠ 0`);
//! 3. the proximal (quadratic) perturbation: repeated saddle solves of
//!    `Π(y) − δᵀy + ½ρ_k‖y − y_k‖²` over the relaxed cone `G + μ_k I ⪰ 0`,
//!    with `y_k` the previous recovered positions. A step whose dual stops
//!    on the cone boundary is discarded and retried with a larger `ρ_k`.
//!
//! The first two stages succeed only when the dual critical point lies in
//! the interior of the cone. The third can also reach critical points whose
//! `G` is indefinite, as long as the regularized problem stays convex in `y`.

mod ascent;
mod verify;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dual::{assemble_g, DualPoint, DualProblem, Proximal};
use crate::error::{Result, SnlError};
use crate::instance::{GroundTruth, Preset, ProblemInstance, StreamRng};
use crate::linalg::{min_eigenvalue_from_cholesky, shifted_cholesky};
use crate::numeric::{dist2, norm2};
use crate::primal::{eval_perturbed_objective, rmsd, PerturbationVector, PositionVector};

pub use ascent::{AscentOutcome, AscentRun, TraceEntry};
pub use verify::{verify, verify_with_tol, Verification};

use ascent::{newton_ascent, AscentParams};

const DELTA_STREAM: u64 = 2;
const INNER_GRAD_TOL: f64 = 1e-13;
/// Consecutive retries allowed for proximal steps that end on the cone
/// boundary.
const MAX_REJECTIONS: usize = 40;
const RHO_MAX: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaMode {
    /// Every component equals `delta_magnitude`.
    Uniform,
    /// Components drawn uniformly in `[0, delta_magnitude]` from `seed`.
    SeededRandom,
    /// Explicit vector; `delta_magnitude` is ignored.
    User(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub delta_magnitude: f64,
    pub delta_mode: DeltaMode,
    /// Relative stopping tolerance on the dual gradient ∞-norm, scaled by
    /// `1 + |Π^d|`.
    pub grad_tol: f64,
    /// Iteration budget of each dual ascent.
    pub max_iters: usize,
    pub rho0: f64,
    pub rho_decay: f64,
    /// Lower bound for ρ in the quadratic stage.
    pub rho_min: f64,
    pub mu_ratio: f64,
    pub pd_margin_floor: f64,
    pub outer_max: usize,
    /// Outer loop stops when `‖y_{k+1} − y_k‖ ≤ step_tol·(1 + ‖y_{k+1}‖)`.
    pub step_tol: f64,
    /// Tolerance of the three-way equality checked before reporting success.
    pub verify_tol: f64,
    /// Run the quadratic stage when the first two fail.
    pub quadratic_stage: bool,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            delta_magnitude: 0.005,
            delta_mode: DeltaMode::Uniform,
            grad_tol: 1e-8,
            max_iters: 500,
            rho0: 1.0,
            rho_decay: 0.5,
            rho_min: 1e-8,
            mu_ratio: 0.5,
            pd_margin_floor: 1e-9,
            outer_max: 30,
            step_tol: 1e-10,
            verify_tol: 1e-6,
            quadratic_stage: true,
            seed: 0,
        }
    }
}

impl SolverConfig {
    /// Settings used for the built-in protocols. The random protocols run
    /// without a linear perturbation, and the flexible noisy networks get a
    /// longer outer budget.
    pub fn for_preset(preset: Preset) -> Self {
        match preset {
            Preset::TwoSensor => Self::default(),
            Preset::S18 => Self {
                delta_magnitude: 0.0,
                ..Self::default()
            },
            Preset::S20 | Preset::S50 | Preset::S200 => Self {
                delta_magnitude: 0.0,
                outer_max: 300,
                ..Self::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SnlError::InvalidSolverConfig(m));
        if !(self.delta_magnitude >= 0.0 && self.delta_magnitude.is_finite()) {
            return bad(format!(
                "delta_magnitude must be >= 0, got {}",
                self.delta_magnitude
            ));
        }
        if let DeltaMode::User(v) = &self.delta_mode {
            if v.iter().any(|x| !x.is_finite()) {
                return bad("user delta has non-finite entries".into());
            }
        }
        if !(self.mu_ratio > 0.0 && self.mu_ratio < 1.0) {
            return bad(format!(
                "mu_ratio must lie in (0, 1), got {}",
                self.mu_ratio
            ));
        }
        if !(self.rho_decay > 0.0 && self.rho_decay < 1.0) {
            return bad(format!(
                "rho_decay must lie in (0, 1), got {}",
                self.rho_decay
            ));
        }
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return bad(format!("rho0 must be positive, got {}", self.rho0));
        }
        if !(self.rho_min > 0.0 && self.rho_min <= self.rho0) {
            return bad(format!(
                "rho_min must lie in (0, rho0], got {}",
                self.rho_min
            ));
        }
        if !(self.pd_margin_floor > 0.0 && self.pd_margin_floor < self.mu_ratio * self.rho_min) {
            return bad("pd_margin_floor must be positive and below mu_ratio * rho_min".into());
        }
        for (name, v) in [
            ("grad_tol", self.grad_tol),
            ("step_tol", self.step_tol),
            ("verify_tol", self.verify_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.max_iters == 0 || self.outer_max == 0 {
            return bad("iteration budgets must be positive".into());
        }
        Ok(())
    }

    /// The perturbation used by the linear and quadratic stages.
    pub fn delta(&self, inst: &ProblemInstance) -> Result<PerturbationVector> {
        let n = inst.n_vars();
        match &self.delta_mode {
            DeltaMode::Uniform => Ok(PerturbationVector::uniform(n, self.delta_magnitude)),
            DeltaMode::SeededRandom => {
                let mut rng = StreamRng::new(self.seed, DELTA_STREAM);
                PerturbationVector::new(
                    (0..n)
                        .map(|_| rng.uniform_in(0.0, self.delta_magnitude))
                        .collect(),
                )
            }
            DeltaMode::User(v) => {
                if v.len() != n {
                    return Err(SnlError::SizeMismatch {
                        what: "user perturbation vector",
                        expected: n,
                        actual: v.len(),
                    });
                }
                PerturbationVector::new(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    CriticalPointInCone,
    PerturbedSolution,
    NoInteriorCriticalPoint,
    MaxIters,
    /// No measurements: nothing to solve.
    Trivial,
}

impl Status {
    pub fn is_success(self) -> bool {
        matches!(
            self,
            Status::CriticalPointInCone | Status::PerturbedSolution | Status::Trivial
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::CriticalPointInCone => "critical-point-in-cone",
            Status::PerturbedSolution => "perturbed-solution",
            Status::NoInteriorCriticalPoint => "no-interior-critical-point",
            Status::MaxIters => "max-iters",
            Status::Trivial => "trivial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    None,
    Linear,
    Quadratic,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::None => "none",
            Stage::Linear => "linear",
            Stage::Quadratic => "quadratic",
        }
    }
}

/// Proximal data of the final quadratic-stage solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxRecord {
    pub rho: f64,
    pub mu: f64,
    pub center: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<Vec<Vec<f64>>>,
    /// `Π(ȳ) − δᵀȳ` with the δ of the reporting stage.
    pub primal: f64,
    /// Dual function value of the reporting stage (regularized in the
    /// quadratic stage).
    pub dual: f64,
    pub gap: f64,
    pub rmsd: Option<f64>,
    pub iterations: usize,
    pub stage: Stage,
    pub wall_time_s: f64,
    pub dual_variables: DualPoint,
    pub delta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prox: Option<ProxRecord>,
    pub grad_norm: f64,
    /// Smallest eigenvalue of `G + μI` at the reported dual.
    pub margin: f64,
    pub trace: Vec<TraceEntry>,
}

impl SolveReport {
    pub fn position_vector(&self, dim: usize) -> Option<PositionVector> {
        self.positions
            .as_ref()
            .and_then(|p| PositionVector::from_points(dim, p).ok())
    }

    /// Fills in the RMSD against `truth`.
    pub fn with_truth(mut self, truth: &GroundTruth) -> Result<Self> {
        if let Some(y) = self.position_vector(truth.positions().dim()) {
            self.rmsd = Some(rmsd(truth, &y)?);
        }
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| SnlError::Schema(e.to_string()))
    }
}

/// Iterate of the quadratic stage.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub dual: DualPoint,
    pub y_anchor: PositionVector,
    pub iter: usize,
    pub trace: Vec<TraceEntry>,
}

fn ascent_params(cfg: &SolverConfig, mu: f64) -> AscentParams {
    AscentParams {
        mu,
        floor: cfg.pd_margin_floor,
        grad_tol: cfg.grad_tol,
        max_iters: cfg.max_iters,
    }
}

/// Admissible start for the plain dual: all duals 1, anchor duals scaled up
/// by 10 at most six times.
fn initial_dual(inst: &ProblemInstance, floor: f64) -> Result<DualPoint> {
    if let Some(sensor) = inst.unanchored_sensor() {
        return Err(SnlError::NoInteriorStart { sensor: sensor + 1 });
    }
    let mut dual = DualPoint::constant(inst, 1.0, 1.0);
    for _ in 0..=6 {
        if shifted_cholesky(&assemble_g(inst, &dual, 0.0), -floor).is_some() {
            return Ok(dual);
        }
        dual.anchor.iter_mut().for_each(|v| *v *= 10.0);
    }
    Err(SnlError::NoInteriorStart { sensor: 1 })
}

/// Maximizes `Π^d_δ` over the open cone by Newton ascent.
pub fn maximize_dual(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    delta: Option<&PerturbationVector>,
) -> Result<AscentRun> {
    cfg.validate()?;
    let problem = DualProblem::new(inst, delta, None)?;
    if inst.n_edges() == 0 {
        let zero = DualPoint::zeros(inst);
        return Ok(AscentRun {
            dual: zero,
            positions: PositionVector::zeros(inst.n_sensors(), inst.dim()),
            value: 0.0,
            grad_norm: 0.0,
            margin: 0.0,
            iterations: 0,
            outcome: AscentOutcome::Trivial,
            trace: Vec::new(),
        });
    }
    let start = initial_dual(inst, cfg.pd_margin_floor)?;
    newton_ascent(&problem, start, &ascent_params(cfg, 0.0))
}

/// Result of one proximal saddle solve.
pub struct QuadraticStep {
    pub positions: PositionVector,
    pub dual: DualPoint,
    pub value: f64,
    /// True when the ascent stopped without an interior critical point.
    pub active: bool,
    pub iterations: usize,
    pub margin: f64,
    pub grad_norm: f64,
    pub trace: Vec<TraceEntry>,
}

/// Solves `min_y max_λ Ξ(y, λ) − δᵀy + ½ρ‖y − y_k‖²` over `G + μI ⪰ 0`.
pub fn solve_quadratic_step(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    y_k: &PositionVector,
    rho: f64,
    mu: f64,
    delta: Option<&PerturbationVector>,
) -> Result<QuadraticStep> {
    cfg.validate()?;
    quadratic_step_from(inst, cfg, y_k, rho, mu, delta, None)
}

fn quadratic_step_from(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    y_k: &PositionVector,
    rho: f64,
    mu: f64,
    delta: Option<&PerturbationVector>,
    warm: Option<&DualPoint>,
) -> Result<QuadraticStep> {
    if !(rho > mu && mu > cfg.pd_margin_floor) {
        return Err(SnlError::InvalidSolverConfig(format!(
            "quadratic step needs rho > mu > pd_margin_floor (rho = {rho}, mu = {mu})"
        )));
    }
    let problem = DualProblem::new(
        inst,
        delta,
        Some(Proximal {
            rho,
            center: y_k.clone(),
        }),
    )?;
    let mut params = ascent_params(cfg, mu);
    // The outer loop differences successive solutions, so each saddle solve
    // is driven to roundoff.
    params.grad_tol = params.grad_tol.min(INNER_GRAD_TOL);
    let interior_enough =
        |d: &DualPoint| shifted_cholesky(&assemble_g(inst, d, 0.0), 0.5 * mu).is_some();
    let start = match warm {
        Some(w) if interior_enough(w) => w.clone(),
        _ => DualPoint::zeros(inst),
    };
    let run = newton_ascent(&problem, start, &params)?;
    let active = run.outcome != AscentOutcome::CriticalPoint;
    Ok(QuadraticStep {
        positions: run.positions,
        dual: run.dual,
        value: run.value,
        active,
        iterations: run.iterations,
        margin: run.margin,
        grad_norm: run.grad_norm,
        trace: run.trace,
    })
}

fn margin_at(inst: &ProblemInstance, dual: &DualPoint, mu: f64) -> f64 {
    let g = assemble_g(inst, dual, 0.0);
    match shifted_cholesky(&g, mu) {
        Some(c) => min_eigenvalue_from_cholesky(&c),
        None => crate::linalg::min_eigenvalue(&g) + mu,
    }
}

fn report_from_ascent(
    inst: &ProblemInstance,
    run: AscentRun,
    delta: &PerturbationVector,
    stage: Stage,
    status: Status,
    iterations: usize,
    trace: Vec<TraceEntry>,
) -> Result<SolveReport> {
    let primal = eval_perturbed_objective(inst, &run.positions, delta)?;
    Ok(SolveReport {
        status,
        positions: Some(run.positions.to_points()),
        primal,
        dual: run.value,
        gap: primal - run.value,
        rmsd: None,
        iterations,
        stage,
        wall_time_s: 0.0,
        dual_variables: run.dual,
        delta: delta.as_slice().to_vec(),
        prox: None,
        grad_norm: run.grad_norm,
        margin: run.margin,
        trace,
    })
}

/// Runs the perturbation ladder and returns a verified report when any
/// stage succeeds.
pub fn solve(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let started = Instant::now();
    let mut report = solve_inner(inst, cfg)?;
    report.wall_time_s = started.elapsed().as_secs_f64();
    Ok(report)
}

fn solve_inner(inst: &ProblemInstance, cfg: &SolverConfig) -> Result<SolveReport> {
    let zero = PerturbationVector::zeros(inst.n_vars());
    if inst.n_edges() == 0 {
        return Ok(SolveReport {
            status: Status::Trivial,
            positions: None,
            primal: 0.0,
            dual: 0.0,
            gap: 0.0,
            rmsd: None,
            iterations: 0,
            stage: Stage::None,
            wall_time_s: 0.0,
            dual_variables: DualPoint::zeros(inst),
            delta: zero.as_slice().to_vec(),
            prox: None,
            grad_norm: 0.0,
            margin: 0.0,
            trace: Vec::new(),
        });
    }
    let delta = cfg.delta(inst)?;
    let mut iterations = 0;
    let mut trace = Vec::new();
    let mut best: Option<SolveReport> = None;

    let mut stages = vec![(Stage::None, zero.clone())];
    if !delta.is_zero() {
        stages.push((Stage::Linear, delta.clone()));
    }
    for (stage, d) in stages {
        let run = match maximize_dual(inst, cfg, Some(&d)) {
            Ok(run) => run,
            Err(SnlError::NoInteriorStart { .. }) => break,
            Err(e) => return Err(e),
        };
        iterations += run.iterations;
        trace.extend(run.trace.iter().copied());
        let outcome = run.outcome;
        let mut report = report_from_ascent(
            inst,
            run,
            &d,
            stage,
            Status::NoInteriorCriticalPoint,
            iterations,
            trace.clone(),
        )?;
        if outcome == AscentOutcome::MaxIters {
            report.status = Status::MaxIters;
        }
        if outcome == AscentOutcome::CriticalPoint {
            report.status = Status::CriticalPointInCone;
            if verify_with_tol(inst, &report, cfg.verify_tol).passed() {
                return Ok(report);
            }
            report.status = Status::NoInteriorCriticalPoint;
        }
        if best.as_ref().is_none_or(|b| report.gap.abs() < b.gap.abs()) {
            best = Some(report);
        }
    }

    if cfg.quadratic_stage {
        let start = quadratic_start(inst, &delta, best.as_ref())?;
        let mut report = quadratic_stage(inst, cfg, &delta, start)?;
        report.iterations += iterations;
        let mut full = trace;
        full.extend(report.trace.iter().copied());
        report.trace = full;
        if report.status == Status::PerturbedSolution
            || best
                .as_ref()
                .is_none_or(|b| report.gap.abs() <= b.gap.abs())
        {
            return Ok(report);
        }
    }
    best.ok_or(SnlError::NoInteriorStart { sensor: 1 })
}

/// Centroid of the anchors, repeated for every sensor.
fn anchor_centroid_start(inst: &ProblemInstance) -> PositionVector {
    let d = inst.dim();
    let mut c = vec![0.0; d];
    for a in inst.anchors() {
        for (ci, ai) in c.iter_mut().zip(a) {
            *ci += ai / inst.n_anchors().max(1) as f64;
        }
    }
    let data = (0..inst.n_sensors())
        .flat_map(|_| c.iter().copied())
        .collect();
    PositionVector::new(d, data).expect("finite anchors")
}

/// The anchor centroid or the positions recovered by the dual ascent,
/// whichever has the lower perturbed objective. A blocked ascent can leave
/// `G` nearly singular, and `G⁻¹F` then lands far outside the network.
fn quadratic_start(
    inst: &ProblemInstance,
    delta: &PerturbationVector,
    ascent: Option<&SolveReport>,
) -> Result<PositionVector> {
    let centroid = anchor_centroid_start(inst);
    let Some(y) = ascent.and_then(|r| r.position_vector(inst.dim())) else {
        return Ok(centroid);
    };
    let pc = eval_perturbed_objective(inst, &centroid, delta)?;
    let py = eval_perturbed_objective(inst, &y, delta)?;
    Ok(if py < pc { y } else { centroid })
}

fn quadratic_stage(
    inst: &ProblemInstance,
    cfg: &SolverConfig,
    delta: &PerturbationVector,
    start: PositionVector,
) -> Result<SolveReport> {
    let mut state = SolverState {
        dual: DualPoint::zeros(inst),
        y_anchor: start,
        iter: 0,
        trace: Vec::new(),
    };
    let mut rho = cfg.rho0;
    let mut rejections = 0;
    let mut inner_iterations = 0;
    let mut converged = false;
    let mut last = None;
    while state.iter < cfg.outer_max {
        let mu = cfg.mu_ratio * rho;
        let step = quadratic_step_from(
            inst,
            cfg,
            &state.y_anchor,
            rho,
            mu,
            Some(delta),
            Some(&state.dual),
        )?;
        inner_iterations += step.iterations;
        state.trace.extend(step.trace.iter().copied());
        if step.active {
            // A boundary saddle point carries no certificate for the
            // proximal subproblem, so the step is retried with a larger ρ.
            last = Some((step, state.y_anchor.clone(), rho, mu));
            rejections += 1;
            if rejections > MAX_REJECTIONS || rho >= RHO_MAX {
                break;
            }
            rho /= cfg.rho_decay;
            continue;
        }
        rejections = 0;
        let moved = dist2(step.positions.as_slice(), state.y_anchor.as_slice()).sqrt();
        let scale = 1.0 + norm2(step.positions.as_slice());
        let center = std::mem::replace(&mut state.y_anchor, step.positions.clone());
        state.dual = step.dual.clone();
        state.iter += 1;
        last = Some((step, center, rho, mu));
        if moved <= cfg.step_tol * scale {
            converged = true;
            break;
        }
        rho = (rho * cfg.rho_decay).max(cfg.rho_min);
    }
    let (step, center, rho, mu) = last.expect("outer_max >= 1");
    let boundary = step.active;
    let primal = eval_perturbed_objective(inst, &step.positions, delta)?;
    let mut report = SolveReport {
        status: Status::MaxIters,
        positions: Some(step.positions.to_points()),
        primal,
        dual: step.value,
        gap: primal - step.value,
        rmsd: None,
        iterations: inner_iterations,
        stage: Stage::Quadratic,
        wall_time_s: 0.0,
        margin: margin_at(inst, &step.dual, mu),
        dual_variables: step.dual,
        delta: delta.as_slice().to_vec(),
        prox: Some(ProxRecord {
            rho,
            mu,
            center: center.to_points(),
        }),
        grad_norm: step.grad_norm,
        trace: state.trace,
    };
    if boundary {
        report.status = Status::NoInteriorCriticalPoint;
    } else if converged {
        report.status = if verify_with_tol(inst, &report, cfg.verify_tol).passed() {
            Status::PerturbedSolution
        } else {
            Status::NoInteriorCriticalPoint
        };
    }
    Ok(report)
}
