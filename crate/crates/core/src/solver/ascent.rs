//! Newton ascent on the (possibly regularized) dual, kept inside the cone
//! `G + μI ⪰ floor·I` by backtracking.
//!
//! The dual Hessian is `−(BᵀM⁻¹B + W⁻¹)` with `M = G + ρI`, `W = diag(w)`
//! and `B` the Jacobian of `Mȳ − b` with respect to the duals. Its inverse
//! applied to the gradient is obtained in position space through the
//! Woodbury identity, so each step costs one `N×N` factorization.

use nalgebra::{Cholesky, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::dual::{assemble_g, DualEvaluation, DualPoint, DualProblem};
use crate::error::Result;
use crate::linalg::{min_eigenvalue_from_cholesky, shifted_cholesky, SymFactor};
use crate::numeric::{cdot, inf_norm};
use crate::primal::PositionVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AscentOutcome {
    /// Gradient below tolerance at a cone-interior point.
    CriticalPoint,
    /// The cone boundary stops further progress.
    Blocked,
    MaxIters,
    /// No edges: nothing to maximize.
    Trivial,
}

pub struct AscentRun {
    pub dual: DualPoint,
    pub positions: PositionVector,
    pub value: f64,
    pub grad_norm: f64,
    pub margin: f64,
    pub iterations: usize,
    pub outcome: AscentOutcome,
    pub trace: Vec<TraceEntry>,
}

pub(crate) struct AscentParams {
    pub mu: f64,
    pub floor: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
}

/// Consecutive boundary-truncated steps before the ascent is declared blocked.
const BLOCK_PATIENCE: usize = 30;
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;
/// Gradient slack accepted once the line search can no longer resolve
/// progress in floating point.
const ROUNDOFF: f64 = 1e3;

fn edge_weights(problem: &DualProblem) -> Vec<f64> {
    let inst = problem.instance();
    inst.sensor_edges()
        .iter()
        .map(|e| e.weight)
        .chain(inst.anchor_edges().iter().map(|e| e.weight))
        .collect()
}

/// Returns the Cholesky factor of `G + (μ − floor)I` when the iterate is
/// admissible.
fn admissible(
    problem: &DualProblem,
    dual: &DualPoint,
    mu: f64,
    floor: f64,
) -> Option<Cholesky<f64, Dyn>> {
    let g = assemble_g(problem.instance(), dual, 0.0);
    shifted_cholesky(&g, mu - floor)
}

fn evaluate(problem: &DualProblem, dual: &DualPoint) -> Option<DualEvaluation> {
    let m = problem.hessian(dual);
    let factor = SymFactor::new(&m)?;
    let ev = problem.evaluate_factored(dual, &factor, true);
    (ev.value.is_finite() && ev.gradient.iter().all(|v| v.is_finite())).then_some(ev)
}

/// `v_e` per edge: `2(ȳ_i − ȳ_j)` or `2(ȳ_i − a_k)`.
fn edge_vectors(problem: &DualProblem, y: &PositionVector) -> Vec<f64> {
    let inst = problem.instance();
    let d = inst.dim();
    let mut v = Vec::with_capacity(inst.n_edges() * d);
    for e in inst.sensor_edges() {
        let (a, b) = (y.point(e.i), y.point(e.j));
        v.extend((0..d).map(|c| 2.0 * (a[c] - b[c])));
    }
    for e in inst.anchor_edges() {
        let (a, b) = (y.point(e.sensor), inst.anchor(e.anchor));
        v.extend((0..d).map(|c| 2.0 * (a[c] - b[c])));
    }
    v
}

/// Endpoint blocks of each edge: `(i, Some(j))` for sensor pairs.
fn edge_blocks(problem: &DualProblem) -> Vec<(usize, Option<usize>)> {
    let inst = problem.instance();
    inst.sensor_edges()
        .iter()
        .map(|e| (e.i, Some(e.j)))
        .chain(inst.anchor_edges().iter().map(|e| (e.sensor, None)))
        .collect()
}

/// `B x` for a dual-space vector `x`.
fn apply_b(
    blocks: &[(usize, Option<usize>)],
    v: &[f64],
    d: usize,
    n: usize,
    x: &[f64],
) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    for (t, &(i, j)) in blocks.iter().enumerate() {
        for c in 0..d {
            let val = v[t * d + c] * x[t];
            out[i * d + c] += val;
            if let Some(j) = j {
                out[j * d + c] -= val;
            }
        }
    }
    out
}

/// `Bᵀ z` for a position-space vector `z`.
fn apply_bt(blocks: &[(usize, Option<usize>)], v: &[f64], d: usize, z: &DVector<f64>) -> Vec<f64> {
    blocks
        .iter()
        .enumerate()
        .map(|(t, &(i, j))| {
            (0..d)
                .map(|c| {
                    let zj = j.map_or(0.0, |j| z[j * d + c]);
                    v[t * d + c] * (z[i * d + c] - zj)
                })
                .sum()
        })
        .collect()
}

/// Newton ascent direction `(BᵀM⁻¹B + W⁻¹)⁻¹ g`.
fn newton_direction(
    problem: &DualProblem,
    dual: &DualPoint,
    ev: &DualEvaluation,
    w: &[f64],
) -> Option<Vec<f64>> {
    let inst = problem.instance();
    let d = inst.dim();
    let n = inst.n_vars();
    let blocks = edge_blocks(problem);
    let v = edge_vectors(problem, &ev.positions);
    let mut k = problem.hessian(dual);
    for (t, &(i, j)) in blocks.iter().enumerate() {
        let vt = &v[t * d..(t + 1) * d];
        for a in 0..d {
            for b in 0..d {
                let val = w[t] * vt[a] * vt[b];
                k[(i * d + a, i * d + b)] += val;
                if let Some(j) = j {
                    k[(j * d + a, j * d + b)] += val;
                    k[(i * d + a, j * d + b)] -= val;
                    k[(j * d + a, i * d + b)] -= val;
                }
            }
        }
    }
    let chol = Cholesky::new(k)?;
    let wg: Vec<f64> = ev.gradient.iter().zip(w).map(|(g, w)| g * w).collect();
    let z = chol.solve(&apply_b(&blocks, &v, d, n, &wg));
    let btz = apply_bt(&blocks, &v, d, &z);
    let dir: Vec<f64> = wg
        .iter()
        .zip(&btz)
        .zip(w)
        .map(|((a, b), w)| a - w * b)
        .collect();
    dir.iter().all(|x| x.is_finite()).then_some(dir)
}

fn step(dual: &DualPoint, dir: &[f64], t: f64, problem: &DualProblem) -> DualPoint {
    let flat: Vec<f64> = dual
        .to_flat()
        .iter()
        .zip(dir)
        .map(|(x, d)| x + t * d)
        .collect();
    DualPoint::from_flat(problem.instance(), &flat)
}

fn margin_of(chol: &Cholesky<f64, Dyn>, floor: f64) -> f64 {
    min_eigenvalue_from_cholesky(chol) + floor
}

/// Backtracking Newton ascent from an admissible `start`.
pub(crate) fn newton_ascent(
    problem: &DualProblem,
    start: DualPoint,
    params: &AscentParams,
) -> Result<AscentRun> {
    let w = edge_weights(problem);
    let mut dual = start;
    let chol = admissible(problem, &dual, params.mu, params.floor).ok_or(
        crate::error::SnlError::InvalidSolverConfig("ascent start is outside the cone".into()),
    )?;
    let mut margin = margin_of(&chol, params.floor);
    let mut ev = evaluate(problem, &dual).ok_or(crate::error::SnlError::NonFinite)?;
    let mut trace = Vec::new();
    let mut truncated_run = 0;
    let mut outcome = AscentOutcome::MaxIters;
    let mut iterations = 0;
    loop {
        let gn = inf_norm(&ev.gradient);
        trace.push(TraceEntry {
            iter: iterations,
            value: ev.value,
            grad_norm: gn,
            margin,
        });
        let tol = params.grad_tol * (1.0 + ev.value.abs());
        if gn <= tol {
            // Converging along cone-truncated steps means the supremum sits on
            // the boundary, not at an interior critical point.
            outcome = if truncated_run > 0 {
                AscentOutcome::Blocked
            } else {
                AscentOutcome::CriticalPoint
            };
            break;
        }
        if iterations >= params.max_iters {
            break;
        }
        let Some(dir) = newton_direction(problem, &dual, &ev, &w) else {
            outcome = AscentOutcome::Blocked;
            break;
        };
        let slope = cdot(&ev.gradient, &dir);
        if slope.is_nan() || slope <= 0.0 {
            outcome = if gn <= ROUNDOFF * tol && truncated_run == 0 {
                AscentOutcome::CriticalPoint
            } else {
                AscentOutcome::Blocked
            };
            break;
        }

        let mut t = 1.0;
        let mut truncated = false;
        let mut accepted = None;
        while t >= MIN_STEP {
            let trial = step(&dual, &dir, t, problem);
            match admissible(problem, &trial, params.mu, params.floor) {
                None => truncated = true,
                Some(chol) => {
                    if let Some(tev) = evaluate(problem, &trial) {
                        let slack = 1e-14 * (1.0 + ev.value.abs());
                        if tev.value >= ev.value + ARMIJO * t * slope - slack {
                            accepted = Some((trial, tev, chol));
                            break;
                        }
                    }
                }
            }
            t *= 0.5;
        }
        let Some((trial, tev, chol)) = accepted else {
            outcome = if gn <= ROUNDOFF * tol && !truncated {
                AscentOutcome::CriticalPoint
            } else {
                AscentOutcome::Blocked
            };
            break;
        };
        dual = trial;
        ev = tev;
        margin = margin_of(&chol, params.floor);
        iterations += 1;
        truncated_run = if truncated { truncated_run + 1 } else { 0 };
        if truncated_run >= BLOCK_PATIENCE {
            let gn = inf_norm(&ev.gradient);
            trace.push(TraceEntry {
                iter: iterations,
                value: ev.value,
                grad_norm: gn,
                margin,
            });
            outcome = AscentOutcome::Blocked;
            break;
        }
    }
    Ok(AscentRun {
        grad_norm: inf_norm(&ev.gradient),
        value: ev.value,
        positions: ev.positions,
        dual,
        margin,
        iterations,
        outcome,
        trace,
    })
}
