//! The canonical dual of the localization objective.
//!
//! Each squared sensor distance `ξ_ij = ‖x_i − x_j‖²` gets a dual variable
//! `σ_ij` and each anchor measure `ε_ik = ‖x_i‖² − 2a_kᵀx_i` gets `ς_ik`. For
//! fixed duals the total complementary function is quadratic in the
//! positions,
//!
//! ```text
//! Ξ(y, σ, ς) = ½ yᵀG(σ,ς)y − F(ς)ᵀy − ½Σ σ²/w − ½Σ ς²/q − Σ d²σ + Σ (‖a_k‖² − e²) ς
//! ```
//!
//! with `G` the anchored, dual-weighted graph Laplacian (times `I_d`) and
//! `F_i = Σ_k 2ς_ik a_k`. Eliminating `y` through `Gȳ = F` gives the dual
//! function `Π^d = −½FᵀG⁻¹F − …`, concave wherever `G ≻ 0`.
//!
//! [`DualProblem`] carries the optional linear perturbation `δ` and the
//! proximal term `½ρ‖y − c‖²` used by the perturbation stages; the free
//! functions are the unregularized special case.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SnlError};
use crate::instance::ProblemInstance;
use crate::linalg::{min_eigenvalue, min_eigenvalue_from_cholesky, shifted_cholesky, SymFactor};
use crate::numeric::{cdot, dist2, CompensatedSum};
use crate::primal::{check_len, eval_objective, PerturbationVector, PositionVector};

/// Dual variables: one per measured sensor pair, one per measured anchor pair,
/// in the instance's edge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub sensor: Vec<f64>,
    pub anchor: Vec<f64>,
}

impl DualPoint {
    pub fn new(inst: &ProblemInstance, sensor: Vec<f64>, anchor: Vec<f64>) -> Result<Self> {
        let p = Self { sensor, anchor };
        p.check(inst)?;
        Ok(p)
    }

    pub fn zeros(inst: &ProblemInstance) -> Self {
        Self {
            sensor: vec![0.0; inst.sensor_edges().len()],
            anchor: vec![0.0; inst.anchor_edges().len()],
        }
    }

    pub fn constant(inst: &ProblemInstance, sensor: f64, anchor: f64) -> Self {
        Self {
            sensor: vec![sensor; inst.sensor_edges().len()],
            anchor: vec![anchor; inst.anchor_edges().len()],
        }
    }

    pub fn check(&self, inst: &ProblemInstance) -> Result<()> {
        if self.sensor.len() != inst.sensor_edges().len() {
            return Err(SnlError::SizeMismatch {
                what: "sensor-edge duals",
                expected: inst.sensor_edges().len(),
                actual: self.sensor.len(),
            });
        }
        if self.anchor.len() != inst.anchor_edges().len() {
            return Err(SnlError::SizeMismatch {
                what: "anchor-edge duals",
                expected: inst.anchor_edges().len(),
                actual: self.anchor.len(),
            });
        }
        if self
            .sensor
            .iter()
            .chain(&self.anchor)
            .any(|v| !v.is_finite())
        {
            return Err(SnlError::NonFinite);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sensor.len() + self.anchor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sensor duals followed by anchor duals.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.sensor.clone();
        v.extend_from_slice(&self.anchor);
        v
    }

    pub fn from_flat(inst: &ProblemInstance, v: &[f64]) -> Self {
        let m = inst.sensor_edges().len();
        Self {
            sensor: v[..m].to_vec(),
            anchor: v[m..].to_vec(),
        }
    }

    /// Duals paired with `y` by the duality relations,
    /// `σ_ij = w_ij(ξ_ij − d_ij²)` and `ς_ik = q_ik(‖x_i − a_k‖² − e_ik²)`.
    pub fn canonical_image(inst: &ProblemInstance, y: &PositionVector) -> Result<Self> {
        check_len(inst, y)?;
        Ok(Self {
            sensor: inst
                .sensor_edges()
                .iter()
                .map(|e| e.weight * (dist2(y.point(e.i), y.point(e.j)) - e.dist * e.dist))
                .collect(),
            anchor: inst
                .anchor_edges()
                .iter()
                .map(|e| {
                    e.weight * (dist2(y.point(e.sensor), inst.anchor(e.anchor)) - e.dist * e.dist)
                })
                .collect(),
        })
    }

    /// `θ·self + (1 − θ)·other`.
    pub fn blend(&self, other: &Self, theta: f64) -> Self {
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter()
                .zip(b)
                .map(|(x, y)| theta * x + (1.0 - theta) * y)
                .collect()
        };
        Self {
            sensor: mix(&self.sensor, &other.sensor),
            anchor: mix(&self.anchor, &other.anchor),
        }
    }
}

/// Per-edge constants of the dual function.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTables {
    /// d_ij² per sensor edge.
    pub d2: Vec<f64>,
    /// e_ik² per anchor edge.
    pub e2: Vec<f64>,
    /// ‖a_k‖² per anchor edge.
    pub a_norm2: Vec<f64>,
    pub w_inv: Vec<f64>,
    pub q_inv: Vec<f64>,
}

impl CoefficientTables {
    pub fn new(inst: &ProblemInstance) -> Self {
        let se = inst.sensor_edges();
        let ae = inst.anchor_edges();
        Self {
            d2: se.iter().map(|e| e.dist * e.dist).collect(),
            e2: ae.iter().map(|e| e.dist * e.dist).collect(),
            a_norm2: ae
                .iter()
                .map(|e| inst.anchor(e.anchor).iter().map(|v| v * v).sum())
                .collect(),
            w_inv: se.iter().map(|e| 1.0 / e.weight).collect(),
            q_inv: ae.iter().map(|e| 1.0 / e.weight).collect(),
        }
    }

    /// The dual-only part `−½Σw⁻¹σ² − ½Σq⁻¹ς² − Σd²σ + Σ(‖a‖² − e²)ς`.
    pub fn conjugate_terms(&self, dual: &DualPoint) -> f64 {
        let mut acc = CompensatedSum::new();
        for (t, &s) in dual.sensor.iter().enumerate() {
            acc.add(-0.5 * self.w_inv[t] * s * s);
            acc.add(-self.d2[t] * s);
        }
        for (t, &s) in dual.anchor.iter().enumerate() {
            acc.add(-0.5 * self.q_inv[t] * s * s);
            acc.add((self.a_norm2[t] - self.e2[t]) * s);
        }
        acc.value()
    }
}

/// `G(σ, ς)` and `F(ς)` (plus `δ` when perturbed).
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledDual {
    pub dim: usize,
    pub g: DMatrix<f64>,
    pub f: DVector<f64>,
}

/// Builds `G + shift·I` block by block.
pub(crate) fn assemble_g(inst: &ProblemInstance, dual: &DualPoint, shift: f64) -> DMatrix<f64> {
    let d = inst.dim();
    let nv = inst.n_vars();
    let mut g = DMatrix::zeros(nv, nv);
    for (e, &s) in inst.sensor_edges().iter().zip(&dual.sensor) {
        let v = 2.0 * s;
        for a in 0..d {
            let (p, q) = (e.i * d + a, e.j * d + a);
            g[(p, p)] += v;
            g[(q, q)] += v;
            g[(p, q)] -= v;
            g[(q, p)] -= v;
        }
    }
    for (e, &s) in inst.anchor_edges().iter().zip(&dual.anchor) {
        for a in 0..d {
            let p = e.sensor * d + a;
            g[(p, p)] += 2.0 * s;
        }
    }
    if shift != 0.0 {
        for p in 0..nv {
            g[(p, p)] += shift;
        }
    }
    g
}

pub(crate) fn assemble_f(inst: &ProblemInstance, dual: &DualPoint) -> DVector<f64> {
    let d = inst.dim();
    let mut f = DVector::zeros(inst.n_vars());
    for (e, &s) in inst.anchor_edges().iter().zip(&dual.anchor) {
        let ak = inst.anchor(e.anchor);
        for a in 0..d {
            f[e.sensor * d + a] += 2.0 * ak[a] * s;
        }
    }
    f
}

fn check_delta(inst: &ProblemInstance, delta: Option<&PerturbationVector>) -> Result<()> {
    if let Some(delta) = delta {
        if delta.len() != inst.n_vars() {
            return Err(SnlError::SizeMismatch {
                what: "perturbation vector",
                expected: inst.n_vars(),
                actual: delta.len(),
            });
        }
    }
    Ok(())
}

pub fn assemble(
    inst: &ProblemInstance,
    dual: &DualPoint,
    delta: Option<&PerturbationVector>,
) -> Result<AssembledDual> {
    dual.check(inst)?;
    check_delta(inst, delta)?;
    let mut f = assemble_f(inst, dual);
    if let Some(delta) = delta {
        for (fi, di) in f.iter_mut().zip(delta.as_slice()) {
            *fi += di;
        }
    }
    Ok(AssembledDual {
        dim: inst.dim(),
        g: assemble_g(inst, dual, 0.0),
        f,
    })
}

/// Canonical measures `(ξ, ε)` of `y`, in edge order.
pub fn measures(inst: &ProblemInstance, y: &PositionVector) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len(inst, y)?;
    let xi = inst
        .sensor_edges()
        .iter()
        .map(|e| dist2(y.point(e.i), y.point(e.j)))
        .collect();
    let eps = inst
        .anchor_edges()
        .iter()
        .map(|e| {
            let x = y.point(e.sensor);
            let a = inst.anchor(e.anchor);
            x.iter()
                .zip(a)
                .map(|(xv, av)| xv * xv - 2.0 * av * xv)
                .sum()
        })
        .collect();
    Ok((xi, eps))
}

/// Positive-definiteness tolerance used for strict cone membership.
pub fn pd_tolerance(g: &DMatrix<f64>) -> f64 {
    let max_diag = (0..g.nrows()).fold(0.0_f64, |m, i| m.max(g[(i, i)].abs()));
    1e-10 * (1.0 + max_diag)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeStatus {
    pub member: bool,
    /// Smallest-eigenvalue estimate of `G + μI`.
    pub margin: f64,
    pub shift_used: f64,
}

/// Tests `G + μI ⪰ τ_pd·I` by attempting a Cholesky factorization of
/// `G + (μ − τ_pd)I`.
pub fn cone_membership(g: &DMatrix<f64>, mu: f64) -> Result<ConeStatus> {
    if g.iter().any(|v| !v.is_finite()) || !mu.is_finite() {
        return Err(SnlError::NonFinite);
    }
    let tau = pd_tolerance(g);
    let (member, margin) = match shifted_cholesky(g, mu - tau) {
        Some(chol) => (true, min_eigenvalue_from_cholesky(&chol) + tau),
        None => {
            let mut shifted = g.clone();
            for i in 0..shifted.nrows() {
                shifted[(i, i)] += mu;
            }
            (false, min_eigenvalue(&shifted))
        }
    };
    Ok(ConeStatus {
        member,
        margin,
        shift_used: mu,
    })
}

/// `G ȳ = F` by symmetric factorization.
pub fn recover_primal(assembled: &AssembledDual) -> Result<PositionVector> {
    let factor = SymFactor::new(&assembled.g).ok_or_else(|| SnlError::Singular {
        margin: min_eigenvalue(&assembled.g),
    })?;
    let y = factor.solve(&assembled.f);
    PositionVector::new(assembled.dim, y.iter().copied().collect())
}

/// Proximal term `½ρ‖y − center‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proximal {
    pub rho: f64,
    pub center: PositionVector,
}

/// Result of evaluating the (possibly regularized) dual at one point.
pub struct DualEvaluation {
    pub value: f64,
    /// `ȳ = (G + ρI)⁻¹(F + δ + ρc)`.
    pub positions: PositionVector,
    /// Envelope gradient, flat in edge order.
    pub gradient: Vec<f64>,
    /// False when `G + ρI` is within `τ_pd` of singular.
    pub trusted: bool,
}

/// The dual function of `Π(y) − δᵀy + ½ρ‖y − c‖²`.
pub struct DualProblem<'a> {
    inst: &'a ProblemInstance,
    tables: CoefficientTables,
    delta: Vec<f64>,
    prox: Option<Proximal>,
}

impl<'a> DualProblem<'a> {
    pub fn new(
        inst: &'a ProblemInstance,
        delta: Option<&PerturbationVector>,
        prox: Option<Proximal>,
    ) -> Result<Self> {
        check_delta(inst, delta)?;
        if let Some(p) = &prox {
            check_len(inst, &p.center)?;
            if !(p.rho > 0.0 && p.rho.is_finite()) {
                return Err(SnlError::InvalidSolverConfig(format!(
                    "proximal weight must be positive, got {}",
                    p.rho
                )));
            }
        }
        Ok(Self {
            inst,
            tables: CoefficientTables::new(inst),
            delta: delta.map_or_else(|| vec![0.0; inst.n_vars()], |d| d.as_slice().to_vec()),
            prox,
        })
    }

    pub fn instance(&self) -> &ProblemInstance {
        self.inst
    }

    pub fn tables(&self) -> &CoefficientTables {
        &self.tables
    }

    pub fn prox(&self) -> Option<&Proximal> {
        self.prox.as_ref()
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn rho(&self) -> f64 {
        self.prox.as_ref().map_or(0.0, |p| p.rho)
    }

    /// `G + ρI`.
    pub fn hessian(&self, dual: &DualPoint) -> DMatrix<f64> {
        assemble_g(self.inst, dual, self.rho())
    }

    /// `F + δ + ρc`.
    pub fn rhs(&self, dual: &DualPoint) -> DVector<f64> {
        let mut b = assemble_f(self.inst, dual);
        for (bi, di) in b.iter_mut().zip(&self.delta) {
            *bi += di;
        }
        if let Some(p) = &self.prox {
            for (bi, ci) in b.iter_mut().zip(p.center.as_slice()) {
                *bi += p.rho * ci;
            }
        }
        b
    }

    fn prox_constant(&self) -> f64 {
        self.prox.as_ref().map_or(0.0, |p| {
            0.5 * p.rho * cdot(p.center.as_slice(), p.center.as_slice())
        })
    }

    /// Evaluates value, recovered positions and gradient. Fails when
    /// `G + ρI` is singular.
    pub fn evaluate(&self, dual: &DualPoint) -> Result<DualEvaluation> {
        dual.check(self.inst)?;
        let m = self.hessian(dual);
        let factor = SymFactor::new(&m).ok_or_else(|| SnlError::Singular {
            margin: min_eigenvalue(&m),
        })?;
        let trusted = match &factor {
            SymFactor::Cholesky(_) => shifted_cholesky(&m, -pd_tolerance(&m)).is_some(),
            SymFactor::Lu(_) => true,
        };
        Ok(self.evaluate_factored(dual, &factor, trusted))
    }

    pub(crate) fn evaluate_factored(
        &self,
        dual: &DualPoint,
        factor: &SymFactor,
        trusted: bool,
    ) -> DualEvaluation {
        let b = self.rhs(dual);
        let y = factor.solve(&b);
        let value = {
            let mut acc = CompensatedSum::new();
            acc.add(-0.5 * cdot(b.as_slice(), y.as_slice()));
            acc.add(self.prox_constant());
            acc.add(self.tables.conjugate_terms(dual));
            acc.value()
        };
        let positions = PositionVector::new(self.inst.dim(), y.iter().copied().collect())
            .unwrap_or_else(|_| {
                PositionVector::new(self.inst.dim(), vec![f64::NAN; y.len()])
                    .unwrap_or_else(|_| unreachable!("length is a multiple of dim"))
            });
        let gradient = self.gradient_at(dual, &positions);
        DualEvaluation {
            value,
            positions,
            gradient,
            trusted,
        }
    }

    /// `ξ(ȳ) − d² − σ/w` and `‖ȳ_i − a_k‖² − e² − ς/q`, flat.
    pub(crate) fn gradient_at(&self, dual: &DualPoint, y: &PositionVector) -> Vec<f64> {
        let inst = self.inst;
        let mut g = Vec::with_capacity(dual.len());
        for (t, e) in inst.sensor_edges().iter().enumerate() {
            g.push(
                dist2(y.point(e.i), y.point(e.j))
                    - self.tables.d2[t]
                    - dual.sensor[t] * self.tables.w_inv[t],
            );
        }
        for (t, e) in inst.anchor_edges().iter().enumerate() {
            g.push(
                dist2(y.point(e.sensor), inst.anchor(e.anchor))
                    - self.tables.e2[t]
                    - dual.anchor[t] * self.tables.q_inv[t],
            );
        }
        g
    }

    /// `Ξ(y, σ, ς) − δᵀy + ½ρ‖y − c‖²`, with the quadratic part formed from
    /// the canonical measures rather than from `G`.
    pub fn total_complementary(&self, y: &PositionVector, dual: &DualPoint) -> Result<f64> {
        check_len(self.inst, y)?;
        dual.check(self.inst)?;
        let (xi, eps) = measures(self.inst, y)?;
        let mut acc = CompensatedSum::new();
        for (s, x) in dual.sensor.iter().zip(&xi) {
            acc.add(s * x);
        }
        for (s, x) in dual.anchor.iter().zip(&eps) {
            acc.add(s * x);
        }
        acc.add(self.tables.conjugate_terms(dual));
        acc.add(-cdot(&self.delta, y.as_slice()));
        if let Some(p) = &self.prox {
            acc.add(0.5 * p.rho * dist2(y.as_slice(), p.center.as_slice()));
        }
        Ok(acc.value())
    }

    /// `Π(y) − δᵀy + ½ρ‖y − c‖²`.
    pub fn primal_value(&self, y: &PositionVector) -> Result<f64> {
        let mut acc = CompensatedSum::new();
        acc.add(eval_objective(self.inst, y)?);
        acc.add(-cdot(&self.delta, y.as_slice()));
        if let Some(p) = &self.prox {
            acc.add(0.5 * p.rho * dist2(y.as_slice(), p.center.as_slice()));
        }
        Ok(acc.value())
    }
}

/// Value of the dual function together with a trust flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualValue {
    pub value: f64,
    /// False when `G` factorizes but sits within `τ_pd` of singular.
    pub trusted: bool,
}

/// `Π^d(σ, ς)` on the nonsingular set of `G` (not restricted to the cone).
///
/// The tables must belong to `inst`; they are accepted so callers can reuse
/// them across evaluations.
pub fn eval_dual(
    inst: &ProblemInstance,
    tables: &CoefficientTables,
    dual: &DualPoint,
    delta: Option<&PerturbationVector>,
) -> Result<DualValue> {
    let problem = DualProblem::with_tables(inst, tables, delta)?;
    let ev = problem.evaluate(dual)?;
    Ok(DualValue {
        value: ev.value,
        trusted: ev.trusted,
    })
}

/// Envelope gradient of `Π^d` at `dual`.
pub fn eval_dual_gradient(
    inst: &ProblemInstance,
    tables: &CoefficientTables,
    dual: &DualPoint,
    delta: Option<&PerturbationVector>,
) -> Result<DualPoint> {
    let problem = DualProblem::with_tables(inst, tables, delta)?;
    let ev = problem.evaluate(dual)?;
    Ok(DualPoint::from_flat(inst, &ev.gradient))
}

/// `Ξ(y, σ, ς) − δᵀy`.
pub fn eval_total_complementary(
    inst: &ProblemInstance,
    tables: &CoefficientTables,
    y: &PositionVector,
    dual: &DualPoint,
    delta: Option<&PerturbationVector>,
) -> Result<f64> {
    DualProblem::with_tables(inst, tables, delta)?.total_complementary(y, dual)
}

/// `Π_δ(y) − Π^d_δ(dual)`; nonnegative for duals in the cone.
pub fn duality_gap(
    inst: &ProblemInstance,
    y: &PositionVector,
    dual: &DualPoint,
    delta: Option<&PerturbationVector>,
) -> Result<f64> {
    let problem = DualProblem::new(inst, delta, None)?;
    let primal = problem.primal_value(y)?;
    let dual_value = problem.evaluate(dual)?.value;
    Ok(primal - dual_value)
}

impl<'a> DualProblem<'a> {
    fn with_tables(
        inst: &'a ProblemInstance,
        tables: &CoefficientTables,
        delta: Option<&PerturbationVector>,
    ) -> Result<Self> {
        check_delta(inst, delta)?;
        if tables.d2.len() != inst.sensor_edges().len()
            || tables.e2.len() != inst.anchor_edges().len()
        {
            return Err(SnlError::SizeMismatch {
                what: "coefficient tables",
                expected: inst.n_edges(),
                actual: tables.d2.len() + tables.e2.len(),
            });
        }
        Ok(Self {
            inst,
            tables: tables.clone(),
            delta: delta.map_or_else(|| vec![0.0; inst.n_vars()], |d| d.as_slice().to_vec()),
            prox: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{make_two_sensor_fixture, AnchorEdge};

    fn published_dual(inst: &ProblemInstance) -> DualPoint {
        DualPoint::new(inst, vec![-0.0000], vec![0.0005, 0.0020, -0.0020, -0.0005]).unwrap()
    }

    #[test]
    fn two_sensor_g_matches_block_layout() {
        let (inst, _) = make_two_sensor_fixture();
        let dual = DualPoint::new(&inst, vec![0.3], vec![0.1, 0.2, 0.4, 0.5]).unwrap();
        let a = assemble(&inst, &dual, None).unwrap();
        let d1 = 2.0 * (0.3 + 0.1 + 0.2);
        let d2 = 2.0 * (0.3 + 0.4 + 0.5);
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(4, 4, &[
            d1, 0.0, -0.6, 0.0,
            0.0, d1, 0.0, -0.6,
            -0.6, 0.0, d2, 0.0,
            0.0, -0.6, 0.0, d2,
        ]);
        assert!((a.g.clone() - expected).abs().max() < 1e-15);
        assert_eq!(a.g, a.g.transpose());
        let s3 = 3f64.sqrt();
        let f = [
            2.0 * (-2.0 * 0.1 + -2.0 * 0.2),
            2.0 * (s3 * 0.1 - s3 * 0.2),
            2.0 * (2.0 * 0.4 + 2.0 * 0.5),
            2.0 * (s3 * 0.4 - s3 * 0.5),
        ];
        for (x, y) in a.f.iter().zip(f) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_duals_assemble_to_delta() {
        let (inst, _) = make_two_sensor_fixture();
        let delta = PerturbationVector::uniform(4, 0.005);
        let a = assemble(&inst, &DualPoint::zeros(&inst), Some(&delta)).unwrap();
        assert_eq!(a.g, DMatrix::zeros(4, 4));
        assert_eq!(a.f.as_slice(), delta.as_slice());
        let a = assemble(&inst, &DualPoint::zeros(&inst), None).unwrap();
        assert_eq!(a.f, DVector::zeros(4));
    }

    #[test]
    fn cone_membership_cases() {
        let g = DMatrix::identity(2, 2) * 2.0;
        let s = cone_membership(&g, 0.0).unwrap();
        assert!(s.member);
        assert!((s.margin - 2.0).abs() < 1e-9);

        let s = cone_membership(&DMatrix::zeros(2, 2), 0.0).unwrap();
        assert!(!s.member);

        // Diagonal blocks 6, off-diagonal −2: eigenvalues 4 and 8.
        let (inst, _) = make_two_sensor_fixture();
        let a = assemble(&inst, &DualPoint::constant(&inst, 1.0, 1.0), None).unwrap();
        let s = cone_membership(&a.g, 0.0).unwrap();
        assert!(s.member);
        assert!((s.margin - 4.0).abs() < 1e-8);

        let mut bad = DMatrix::identity(2, 2);
        bad[(0, 1)] = f64::NAN;
        assert!(matches!(
            cone_membership(&bad, 0.0),
            Err(SnlError::NonFinite)
        ));
    }

    #[test]
    fn rounded_published_dual_is_outside_the_cone() {
        let (inst, _) = make_two_sensor_fixture();
        let a = assemble(&inst, &published_dual(&inst), None).unwrap();
        let s = cone_membership(&a.g, 0.0).unwrap();
        assert!(!s.member);
        assert!((s.margin + 0.005).abs() < 1e-9);
    }

    #[test]
    fn published_dual_values() {
        // The printed duals carry four decimals; ȳ and Π^d are sensitive to
        // the rounding, so only coarse agreement is expected here. The solver
        // tests check the unrounded critical point.
        let (inst, _) = make_two_sensor_fixture();
        let delta = PerturbationVector::uniform(4, 0.005);
        let a = assemble(&inst, &published_dual(&inst), Some(&delta)).unwrap();
        let y = recover_primal(&a).unwrap();
        assert!((y.as_slice()[0] + 1.0).abs() < 1e-3);
        assert!((y.as_slice()[2] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn recover_primal_simple() {
        let a = AssembledDual {
            dim: 2,
            g: DMatrix::identity(2, 2) * 2.0,
            f: DVector::from_vec(vec![2.0, 0.0]),
        };
        let y = recover_primal(&a).unwrap();
        assert!((y.as_slice()[0] - 1.0).abs() < 1e-15 && y.as_slice()[1] == 0.0);
        let singular = AssembledDual {
            dim: 2,
            g: DMatrix::zeros(2, 2),
            f: DVector::zeros(2),
        };
        assert!(matches!(
            recover_primal(&singular),
            Err(SnlError::Singular { .. })
        ));
    }

    #[test]
    fn f_zero_kills_the_quadratic_term() {
        let inst = ProblemInstance::new(
            2,
            1,
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![],
            vec![
                AnchorEdge {
                    sensor: 0,
                    anchor: 0,
                    dist: 1.0,
                    weight: 1.0,
                },
                AnchorEdge {
                    sensor: 0,
                    anchor: 1,
                    dist: 2.0,
                    weight: 2.0,
                },
            ],
        )
        .unwrap();
        let tables = CoefficientTables::new(&inst);
        let eps = 1e-3;
        let dual = DualPoint::constant(&inst, 0.0, eps);
        let v = eval_dual(&inst, &tables, &dual, None).unwrap();
        let expected = -0.5 * eps * eps - 0.25 * eps * eps - eps - 4.0 * eps;
        assert!((v.value - expected).abs() < 1e-17);
        assert!(v.trusted);
    }

    #[test]
    fn total_complementary_at_origin_is_dual_only() {
        let (inst, _) = make_two_sensor_fixture();
        let tables = CoefficientTables::new(&inst);
        let dual = DualPoint::new(&inst, vec![0.3], vec![0.1, -0.2, 0.4, 0.5]).unwrap();
        let y = PositionVector::zeros(2, 2);
        let xi = eval_total_complementary(&inst, &tables, &y, &dual, None).unwrap();
        assert!((xi - tables.conjugate_terms(&dual)).abs() < 1e-15);
    }

    #[test]
    fn canonical_image_closes_the_legendre_gap() {
        let (inst, _) = make_two_sensor_fixture();
        let tables = CoefficientTables::new(&inst);
        let y = PositionVector::new(2, vec![-0.7, 0.3, 1.2, -0.4]).unwrap();
        let dual = DualPoint::canonical_image(&inst, &y).unwrap();
        let xi = eval_total_complementary(&inst, &tables, &y, &dual, None).unwrap();
        let p = eval_objective(&inst, &y).unwrap();
        assert!((xi - p).abs() <= 1e-12 * p.abs());
    }

    #[test]
    fn large_weight_reduces_gradient_to_residual() {
        let (inst, truth) = make_two_sensor_fixture();
        let heavy: Vec<_> = inst
            .sensor_edges()
            .iter()
            .map(|e| crate::instance::SensorEdge { weight: 1e12, ..*e })
            .collect();
        let inst = ProblemInstance::new(
            2,
            2,
            inst.anchors().to_vec(),
            heavy,
            inst.anchor_edges().to_vec(),
        )
        .unwrap();
        let tables = CoefficientTables::new(&inst);
        let dual = DualPoint::new(&inst, vec![0.5], vec![1.0, 1.5, 1.0, 2.0]).unwrap();
        let g = eval_dual_gradient(&inst, &tables, &dual, None).unwrap();
        let y = recover_primal(&assemble(&inst, &dual, None).unwrap()).unwrap();
        let xi = dist2(y.point(0), y.point(1));
        assert!((g.sensor[0] - (xi - 4.0)).abs() < 1e-11);
        let _ = truth;
    }

    #[test]
    fn mismatched_sizes_are_rejected() {
        let (inst, _) = make_two_sensor_fixture();
        let tables = CoefficientTables::new(&inst);
        let short = DualPoint {
            sensor: vec![],
            anchor: vec![1.0; 4],
        };
        assert!(assemble(&inst, &short, None).is_err());
        assert!(eval_dual(&inst, &tables, &short, None).is_err());
        let dual = DualPoint::constant(&inst, 1.0, 1.0);
        let delta = PerturbationVector::zeros(3);
        assert!(assemble(&inst, &dual, Some(&delta)).is_err());
        let y = PositionVector::zeros(1, 2);
        assert!(eval_total_complementary(&inst, &tables, &y, &dual, None).is_err());
    }
}
