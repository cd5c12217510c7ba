//! Primal least-squares objective, its gradient, and accuracy metrics.
//!
//! The objective is the weighted sum of squared residuals of *squared*
//! distances over the measured sensor-sensor and sensor-anchor pairs:
//!
//! ```text
//! Π(y) = Σ_{(i,j)} ½ w_ij (‖x_i − x_j‖² − d_ij²)² + Σ_{(i,k)} ½ q_ik (‖x_i − a_k‖² − e_ik²)²
//! ```
//!
//! Positions are stacked sensor by sensor, `y = [x_1, x_2, …, x_n]`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnlError};
use crate::instance::{GroundTruth, ProblemInstance};
use crate::numeric::{cdot, csum, dist2, CompensatedSum};

/// Stacked sensor coordinates, `n · dim` entries laid out point by point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionVector {
    dim: usize,
    data: Vec<f64>,
}

impl PositionVector {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(SnlError::InvalidInstance(
                "dimension must be at least 1".into(),
            ));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(SnlError::SizeMismatch {
                what: "position vector length (not a multiple of dim)",
                expected: (data.len() / dim + 1) * dim,
                actual: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(SnlError::NonFinite);
        }
        Ok(Self { dim, data })
    }

    pub fn zeros(n_points: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; n_points * dim],
        }
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(SnlError::SizeMismatch {
                    what: "point dimension",
                    expected: dim,
                    actual: p.len(),
                });
            }
            data.extend_from_slice(p);
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_points(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(|c| c.to_vec()).collect()
    }
}

/// Linear perturbation `δ` added to the primal as `Π(y) − δᵀy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationVector(Vec<f64>);

impl PerturbationVector {
    pub fn new(delta: Vec<f64>) -> Result<Self> {
        if delta.iter().any(|x| !x.is_finite()) {
            return Err(SnlError::NonFinite);
        }
        Ok(Self(delta))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn uniform(len: usize, magnitude: f64) -> Self {
        Self(vec![magnitude; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }
}

pub(crate) fn check_len(inst: &ProblemInstance, y: &PositionVector) -> Result<()> {
    let expected = inst.n_sensors() * inst.dim();
    if y.len() != expected || y.dim() != inst.dim() {
        return Err(SnlError::SizeMismatch {
            what: "position vector",
            expected,
            actual: y.len(),
        });
    }
    Ok(())
}

fn check_delta(y: &PositionVector, delta: &PerturbationVector) -> Result<()> {
    if delta.len() != y.len() {
        return Err(SnlError::SizeMismatch {
            what: "perturbation vector",
            expected: y.len(),
            actual: delta.len(),
        });
    }
    Ok(())
}

/// Π(y).
pub fn eval_objective(inst: &ProblemInstance, y: &PositionVector) -> Result<f64> {
    check_len(inst, y)?;
    let mut acc = CompensatedSum::new();
    for e in inst.sensor_edges() {
        let r = dist2(y.point(e.i), y.point(e.j)) - e.dist * e.dist;
        acc.add(0.5 * e.weight * r * r);
    }
    for e in inst.anchor_edges() {
        let r = dist2(y.point(e.sensor), inst.anchor(e.anchor)) - e.dist * e.dist;
        acc.add(0.5 * e.weight * r * r);
    }
    Ok(acc.value())
}

/// ∇Π(y), summed over incident edges only.
pub fn eval_gradient(inst: &ProblemInstance, y: &PositionVector) -> Result<Vec<f64>> {
    check_len(inst, y)?;
    let d = inst.dim();
    let mut acc = vec![CompensatedSum::new(); y.len()];
    for e in inst.sensor_edges() {
        let (xi, xj) = (y.point(e.i), y.point(e.j));
        let r = dist2(xi, xj) - e.dist * e.dist;
        for a in 0..d {
            let g = 2.0 * e.weight * r * (xi[a] - xj[a]);
            acc[e.i * d + a].add(g);
            acc[e.j * d + a].add(-g);
        }
    }
    for e in inst.anchor_edges() {
        let (xi, ak) = (y.point(e.sensor), inst.anchor(e.anchor));
        let r = dist2(xi, ak) - e.dist * e.dist;
        for a in 0..d {
            acc[e.sensor * d + a].add(2.0 * e.weight * r * (xi[a] - ak[a]));
        }
    }
    Ok(acc.iter().map(CompensatedSum::value).collect())
}

/// Π_δ(y) = Π(y) − δᵀy.
pub fn eval_perturbed_objective(
    inst: &ProblemInstance,
    y: &PositionVector,
    delta: &PerturbationVector,
) -> Result<f64> {
    check_delta(y, delta)?;
    let p = eval_objective(inst, y)?;
    Ok(p - cdot(delta.as_slice(), y.as_slice()))
}

/// Root mean square distance between true and computed sensor positions.
pub fn rmsd(truth: &GroundTruth, computed: &PositionVector) -> Result<f64> {
    let t = truth.positions();
    if t.len() != computed.len() || t.dim() != computed.dim() {
        return Err(SnlError::SizeMismatch {
            what: "ground truth vs computed positions",
            expected: t.len(),
            actual: computed.len(),
        });
    }
    let n = t.n_points();
    if n == 0 {
        return Ok(0.0);
    }
    let total = csum((0..n).map(|i| dist2(t.point(i), computed.point(i))));
    Ok((total / n as f64).sqrt())
}

/// Which measured pair an [`EdgeResidual`] refers to (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeRef {
    Sensor { i: usize, j: usize },
    Anchor { sensor: usize, anchor: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeResidual {
    pub edge: EdgeRef,
    pub measured: f64,
    pub achieved: f64,
    /// achieved − measured
    pub residual: f64,
}

/// Achieved distance and residual for every measured pair, sensor edges first.
pub fn residual_report(inst: &ProblemInstance, y: &PositionVector) -> Result<Vec<EdgeResidual>> {
    check_len(inst, y)?;
    let mut out = Vec::with_capacity(inst.n_edges());
    for e in inst.sensor_edges() {
        let achieved = dist2(y.point(e.i), y.point(e.j)).sqrt();
        out.push(EdgeResidual {
            edge: EdgeRef::Sensor { i: e.i, j: e.j },
            measured: e.dist,
            achieved,
            residual: achieved - e.dist,
        });
    }
    for e in inst.anchor_edges() {
        let achieved = dist2(y.point(e.sensor), inst.anchor(e.anchor)).sqrt();
        out.push(EdgeResidual {
            edge: EdgeRef::Anchor {
                sensor: e.sensor,
                anchor: e.anchor,
            },
            measured: e.dist,
            achieved,
            residual: achieved - e.dist,
        });
    }
    Ok(out)
}
