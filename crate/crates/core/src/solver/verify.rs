use serde::{Deserialize, Serialize};

use super::SolveReport;
use crate::dual::{assemble_g, cone_membership, DualProblem, Proximal};
use crate::instance::ProblemInstance;
use crate::numeric::norm2;
use crate::primal::{PerturbationVector, PositionVector};

/// Outcome of re-checking a report against its instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    /// `Π_δ(ȳ)`, including the proximal term when present.
    pub primal: f64,
    pub complementary: f64,
    pub dual: f64,
    /// `‖(G + ρI)ȳ − b‖`.
    pub residual: f64,
    pub residual_bound: f64,
    pub margin: f64,
    pub equality_ok: bool,
    pub residual_ok: bool,
    pub cone_ok: bool,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.equality_ok && self.residual_ok && self.cone_ok
    }

    fn failed() -> Self {
        Self {
            primal: f64::NAN,
            complementary: f64::NAN,
            dual: f64::NAN,
            residual: f64::NAN,
            residual_bound: 0.0,
            margin: f64::NAN,
            equality_ok: false,
            residual_ok: false,
            cone_ok: false,
        }
    }
}

/// [`verify_with_tol`] at tolerance 1e−6.
pub fn verify(inst: &ProblemInstance, report: &SolveReport) -> Verification {
    verify_with_tol(inst, report, 1e-6)
}

/// Recomputes `Π_δ(ȳ)`, `Ξ(ȳ, λ)` and `Π^d(λ)` at the reported pair and
/// checks `Π_δ = Ξ = Π^d` within `tol·(1 + |Π_δ|)`, the linear residual
/// within `1e−8·(1 + ‖b‖)`, and cone membership at the stage's μ.
pub fn verify_with_tol(inst: &ProblemInstance, report: &SolveReport, tol: f64) -> Verification {
    let Some(y) = report.position_vector(inst.dim()) else {
        return Verification::failed();
    };
    let Ok(delta) = PerturbationVector::new(report.delta.clone()) else {
        return Verification::failed();
    };
    let (prox, mu) = match &report.prox {
        None => (None, 0.0),
        Some(p) => match PositionVector::from_points(inst.dim(), &p.center) {
            Ok(center) => (Some(Proximal { rho: p.rho, center }), p.mu),
            Err(_) => return Verification::failed(),
        },
    };
    let Ok(problem) = DualProblem::new(inst, Some(&delta), prox) else {
        return Verification::failed();
    };
    let dual = &report.dual_variables;
    let (Ok(primal), Ok(complementary), Ok(ev)) = (
        problem.primal_value(&y),
        problem.total_complementary(&y, dual),
        problem.evaluate(dual),
    ) else {
        return Verification::failed();
    };
    let m = problem.hessian(dual);
    let b = problem.rhs(dual);
    let yv = nalgebra::DVector::from_column_slice(y.as_slice());
    let r = &m * &yv - &b;
    let residual = norm2(r.as_slice());
    let residual_bound = 1e-8 * (1.0 + norm2(b.as_slice()));
    let cone = cone_membership(&assemble_g(inst, dual, 0.0), mu);
    let scale = tol * (1.0 + primal.abs());
    Verification {
        primal,
        complementary,
        dual: ev.value,
        residual,
        residual_bound,
        margin: cone.as_ref().map_or(f64::NAN, |c| c.margin),
        equality_ok: (primal - complementary).abs() <= scale
            && (complementary - ev.value).abs() <= scale,
        residual_ok: residual <= residual_bound,
        cone_ok: cone.is_ok_and(|c| c.member),
    }
}
