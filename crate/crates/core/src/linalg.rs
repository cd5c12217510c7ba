//! Dense symmetric helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen, LU};

/// Cholesky of `m + shift·I`, or `None` if that matrix is not positive definite.
pub fn shifted_cholesky(m: &DMatrix<f64>, shift: f64) -> Option<Cholesky<f64, Dyn>> {
    let mut a = m.clone();
    if shift != 0.0 {
        for i in 0..a.nrows() {
            a[(i, i)] += shift;
        }
    }
    Cholesky::new(a)
}

/// Smallest eigenvalue by a full symmetric eigendecomposition.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Estimate of the smallest eigenvalue of a positive definite `A = LLᵀ` by
/// inverse iteration on the factor.
pub fn min_eigenvalue_from_cholesky(chol: &Cholesky<f64, Dyn>) -> f64 {
    let n = chol.l_dirty().nrows();
    if n == 0 {
        return f64::INFINITY;
    }
    // Fixed, non-symmetric start so structured matrices do not hide an eigenvector.
    let mut x = DVector::from_fn(n, |i, _| 1.0 + (i as f64 * 0.754_877_666).fract());
    x /= x.norm();
    let mut rayleigh = 0.0;
    for _ in 0..60 {
        let z = chol.solve(&x);
        let r = x.dot(&z);
        let zn = z.norm();
        if zn == 0.0 || !zn.is_finite() {
            break;
        }
        x = z / zn;
        if (r - rayleigh).abs() <= 1e-10 * r.abs() {
            rayleigh = r;
            break;
        }
        rayleigh = r;
    }
    if rayleigh > 0.0 {
        1.0 / rayleigh
    } else {
        0.0
    }
}

/// A factorization able to solve with a nonsingular symmetric matrix.
pub enum SymFactor {
    Cholesky(Cholesky<f64, Dyn>),
    Lu(LU<f64, Dyn, Dyn>),
}

impl SymFactor {
    /// Cholesky when `m` is positive definite, otherwise LU with partial
    /// pivoting. `None` if `m` is numerically singular.
    pub fn new(m: &DMatrix<f64>) -> Option<Self> {
        if let Some(c) = Cholesky::new(m.clone()) {
            return Some(SymFactor::Cholesky(c));
        }
        let lu = m.clone().lu();
        let u = lu.u();
        let scale = m
            .iter()
            .fold(0.0_f64, |a, v| a.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let tiny = (0..u.nrows()).any(|i| u[(i, i)].abs() <= 1e-14 * scale);
        if tiny {
            None
        } else {
            Some(SymFactor::Lu(lu))
        }
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            SymFactor::Cholesky(c) => c.solve(b),
            SymFactor::Lu(lu) => lu.solve(b).expect("nonsingular by construction"),
        }
    }

    pub fn is_positive_definite(&self) -> bool {
        matches!(self, SymFactor::Cholesky(_))
    }
}
