//! Dense linear-algebra kernels: Lyapunov solves, PSD factors, truncated
//! SVD and abscissa diagnostics. Everything here is a pure function of its
//! inputs.

mod abscissa;
pub mod audit;
mod lyapunov;
mod psd;
mod schur;
mod sparse;
mod svd;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use abscissa::{numerical_abscissa, spectral_abscissa};
pub use lyapunov::{solve_lyapunov, solve_lyapunov_transposed, LyapunovSolver};
pub use psd::{psd_factor, PsdFactor, DEFAULT_PSD_REL_TOL};
pub use sparse::Csr;
pub use svd::{svd_truncate, TruncatedSvd, RANK_TOL};

/// Column-major dense matrix used throughout the crate.
pub type DenseMatrix = DMatrix<f64>;
pub type DenseVector = DVector<f64>;

/// `‖a - b‖_F / max(‖b‖_F, tiny)`.
pub fn rel_frobenius_error(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let denom = b.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}

/// `‖a - aᵀ‖_F`.
pub fn asymmetry(a: &DenseMatrix) -> f64 {
    (a - a.transpose()).norm()
}

pub fn symmetrize(a: &DenseMatrix) -> DenseMatrix {
    (a + a.transpose()) * 0.5
}

pub(crate) fn ensure_square(op: &'static str, a: &DenseMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape {
            op,
            detail: format!("expected square matrix, got {}x{}", a.nrows(), a.ncols()),
        });
    }
    Ok(a.nrows())
}

pub(crate) fn ensure_finite(what: &'static str, a: &DenseMatrix) -> Result<()> {
    if a.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Solve `m x = rhs` by LU, rejecting singular systems.
pub(crate) fn lu_solve(op: &'static str, m: &DenseMatrix, rhs: &DenseMatrix) -> Result<DenseMatrix> {
    let lu = m.clone().lu();
    lu.solve(rhs).ok_or(Error::Singular(op))
}
