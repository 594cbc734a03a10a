use nalgebra::SymmetricEigen;

use super::schur::RealSchur;
use super::{ensure_square, DenseMatrix};
use crate::error::Result;

/// Largest real part of the eigenvalues of `a`.
pub fn spectral_abscissa(a: &DenseMatrix) -> Result<f64> {
    let n = ensure_square("spectral_abscissa", a)?;
    if n == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let schur = RealSchur::new(a)?;
    Ok(schur
        .eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Rightmost point of the field of values on the real axis, i.e. the largest
/// eigenvalue of the symmetric part `(a + aᵀ)/2`.
pub fn numerical_abscissa(a: &DenseMatrix) -> Result<f64> {
    let n = ensure_square("numerical_abscissa", a)?;
    if n == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    Ok(eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}
