use nalgebra::SymmetricEigen;

use super::{asymmetry, ensure_finite, ensure_square, DenseMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_PSD_REL_TOL: f64 = 1e-12;

/// Low-rank square-root factor `s ≈ factor · factorᵀ` of a symmetric PSD
/// matrix.
#[derive(Debug, Clone)]
pub struct PsdFactor {
    pub factor: DenseMatrix,
    pub rank: usize,
    pub clamp_threshold: f64,
}

/// Factor a symmetric, possibly singular, PSD matrix through its
/// eigendecomposition. Eigenvalues below `rel_tol · λ_max` are dropped;
/// columns are ordered by decreasing eigenvalue.
pub fn psd_factor(s: &DenseMatrix, rel_tol: f64) -> Result<PsdFactor> {
    let n = ensure_square("psd_factor", s)?;
    ensure_finite("psd_factor input", s)?;
    let scale = s.norm();
    let asym = asymmetry(s);
    if asym > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric { op: "psd_factor", asymmetry: asym });
    }
    if scale == 0.0 {
        return Ok(PsdFactor { factor: DenseMatrix::zeros(n, 0), rank: 0, clamp_threshold: 0.0 });
    }
    let eig = SymmetricEigen::new((s + s.transpose()) * 0.5);
    let max_eig = eig.eigenvalues.max();
    let min_eig = eig.eigenvalues.min();
    if max_eig <= 0.0 {
        return Err(Error::NotPsd { min_eig, max_eig });
    }
    let threshold = rel_tol * max_eig;
    if min_eig < -100.0 * threshold {
        return Err(Error::NotPsd { min_eig, max_eig });
    }
    let mut kept: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > threshold).collect();
    kept.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut factor = DenseMatrix::zeros(n, kept.len());
    for (col, &i) in kept.iter().enumerate() {
        let scale = eig.eigenvalues[i].sqrt();
        factor.set_column(col, &(eig.eigenvectors.column(i) * scale));
    }
    Ok(PsdFactor { rank: kept.len(), factor, clamp_threshold: threshold })
}
