//! Closed-form reference for the one-body double-well
//!
//! ```text
//! P(x) = ½α(½‖x‖² − λ)² − xᵀf,   x ∈ ℝⁿ, α > 0.
//! ```
//!
//! With `ς = α(½‖x‖² − λ)` the dual is `P^d(ς) = −‖f‖²/(2ς) − ς²/(2α) − λς`
//! and its critical points solve `ς³ + αλς² − ½α‖f‖² = 0`. Each root maps
//! back to `x = f/ς`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnlError};

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarProblem {
    pub alpha: f64,
    pub lambda: f64,
    pub f: Vec<f64>,
}

impl ScalarProblem {
    pub fn new(alpha: f64, lambda: f64, f: Vec<f64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(SnlError::InvalidConfig(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !lambda.is_finite() || f.iter().any(|v| !v.is_finite()) {
            return Err(SnlError::NonFinite);
        }
        if f.is_empty() {
            return Err(SnlError::InvalidConfig(
                "f must have at least one component".into(),
            ));
        }
        Ok(Self { alpha, lambda, f })
    }

    pub fn dim(&self) -> usize {
        self.f.len()
    }

    fn f_norm2(&self) -> f64 {
        self.f.iter().map(|v| v * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalClass {
    GlobalMin,
    LocalMin,
    LocalMax,
    /// A saddle or local minimum; undecided without further information.
    Indeterminate,
    /// `ς = 0`: the primal point is not determined by `x = f/ς`.
    Boundary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCritical {
    pub varsigma: f64,
    pub x: Option<Vec<f64>>,
    pub class: CriticalClass,
}

/// Dual critical points, largest `ς` first.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCriticalSet {
    pub points: Vec<ScalarCritical>,
}

impl ScalarCriticalSet {
    pub fn global_min(&self) -> Option<&ScalarCritical> {
        self.points
            .iter()
            .find(|p| p.class == CriticalClass::GlobalMin)
    }
}

/// Real roots of `s³ + b s² + c0 = 0`, ascending.
fn cubic_roots(b: f64, c0: f64) -> Vec<f64> {
    let p = -b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 + c0;
    let shift = -b / 3.0;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    let mut roots = if disc < 0.0 {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() + shift)
            .collect::<Vec<_>>()
    } else {
        let s = disc.sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift]
    };
    for r in &mut roots {
        for _ in 0..4 {
            let val = (*r + b) * *r * *r + c0;
            let der = 3.0 * *r * *r + 2.0 * b * *r;
            if der == 0.0 {
                break;
            }
            let step = val / der;
            if !step.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Solves the dual cubic and classifies every root.
pub fn solve_cubic_dual(p: &ScalarProblem) -> ScalarCriticalSet {
    let al = p.alpha * p.lambda;
    let f2 = p.f_norm2();
    let n = p.dim();
    let mut points = Vec::new();
    if f2 == 0.0 {
        points.push(ScalarCritical {
            varsigma: 0.0,
            x: None,
            class: CriticalClass::Boundary,
        });
        if al != 0.0 {
            points.push(ScalarCritical {
                varsigma: -al,
                x: Some(vec![0.0; n]),
                class: if al > 0.0 {
                    CriticalClass::LocalMax
                } else {
                    CriticalClass::GlobalMin
                },
            });
        }
    } else {
        let roots = cubic_roots(al, -0.5 * p.alpha * f2);
        let k = roots.len();
        for (idx, &s) in roots.iter().enumerate().rev() {
            let class = if s > 0.0 {
                CriticalClass::GlobalMin
            } else if idx == 0 {
                CriticalClass::LocalMax
            } else if n == 1 {
                CriticalClass::LocalMin
            } else {
                CriticalClass::Indeterminate
            };
            let _ = k;
            points.push(ScalarCritical {
                varsigma: s,
                x: Some(p.f.iter().map(|v| v / s).collect()),
                class,
            });
        }
    }
    ScalarCriticalSet { points }
}

pub fn eval_scalar_primal(p: &ScalarProblem, x: &[f64]) -> Result<f64> {
    if x.len() != p.dim() {
        return Err(SnlError::SizeMismatch {
            what: "scalar point",
            expected: p.dim(),
            actual: x.len(),
        });
    }
    let half = 0.5 * x.iter().map(|v| v * v).sum::<f64>();
    let lin: f64 = x.iter().zip(&p.f).map(|(a, b)| a * b).sum();
    Ok(0.5 * p.alpha * (half - p.lambda).powi(2) - lin)
}

/// `P^d(ς)`. At `ς = 0` this is finite only when `f = 0`.
pub fn eval_scalar_dual(p: &ScalarProblem, varsigma: f64) -> Result<f64> {
    let f2 = p.f_norm2();
    let lead = if varsigma == 0.0 {
        if f2 == 0.0 {
            0.0
        } else {
            return Err(SnlError::Pole);
        }
    } else {
        -f2 / (2.0 * varsigma)
    };
    Ok(lead - varsigma * varsigma / (2.0 * p.alpha) - p.lambda * varsigma)
}
