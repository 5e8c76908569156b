//! Small hermitian linear-algebra helpers shared by the dynamics modules.

use crate::error::CoreError;
use crate::C64;
use nalgebra::{DMatrix, DVector};

/// `max |M - M*|` entrywise.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let diff = m - m.adjoint();
    diff.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

pub fn check_hermitian(m: &DMatrix<C64>, context: &'static str, tol: f64) -> Result<(), CoreError> {
    let defect = hermiticity_defect(m);
    if defect > tol {
        return Err(CoreError::NotHermitian { context, defect });
    }
    Ok(())
}

/// Eigendecomposition of a hermitian matrix, reused for many propagation
/// times: `exp(i theta M) = V diag(exp(i theta lambda)) V*`.
pub struct HermitianExp {
    pub evals: DVector<f64>,
    pub evecs: DMatrix<C64>,
}

impl HermitianExp {
    pub fn new(m: &DMatrix<C64>) -> Self {
        let eig = m.clone().symmetric_eigen();
        HermitianExp {
            evals: eig.eigenvalues,
            evecs: eig.eigenvectors,
        }
    }

    /// `exp(i theta M)`.
    pub fn exp(&self, theta: f64) -> DMatrix<C64> {
        let phases = DMatrix::from_diagonal(&self.evals.map(|l| (C64::i() * theta * l).exp()));
        &self.evecs * phases * self.evecs.adjoint()
    }

    /// `exp(i theta M) v` without forming the matrix.
    pub fn exp_apply(&self, theta: f64, v: &DVector<C64>) -> DVector<C64> {
        let mut coeffs = self.evecs.adjoint() * v;
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c *= (C64::i() * theta * self.evals[i]).exp();
        }
        &self.evecs * coeffs
    }
}
