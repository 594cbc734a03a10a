use nalgebra::SVD;

use super::{ensure_finite, DenseMatrix, DenseVector};
use crate::error::{Error, Result};

/// Relative floor below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-14;

/// Rank-`r` truncation `m ≈ u · diag(s) · vᵀ`, plus the full spectrum.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub u: DenseMatrix,
    pub s: DenseVector,
    pub v: DenseMatrix,
    pub all_singular_values: DenseVector,
}

impl TruncatedSvd {
    /// `σ_{r+1}`, or zero when the truncation is full rank.
    pub fn tail_singular_value(&self) -> f64 {
        let r = self.s.len();
        if r < self.all_singular_values.len() {
            self.all_singular_values[r]
        } else {
            0.0
        }
    }
}

pub fn svd_truncate(m: &DenseMatrix, r: usize) -> Result<TruncatedSvd> {
    ensure_finite("svd_truncate input", m)?;
    let min_dim = m.nrows().min(m.ncols());
    if r == 0 || r > min_dim {
        return Err(Error::InvalidArgument(format!(
            "truncation rank {r} must lie in 1..={min_dim}"
        )));
    }
    let svd = SVD::new(m.clone(), true, true);
    let sv = svd.singular_values.clone();
    let sigma1 = sv[0];
    let rank = sv.iter().filter(|&&s| sigma1 > 0.0 && s >= RANK_TOL * sigma1).count();
    if sigma1 == 0.0 || sv[r - 1] < RANK_TOL * sigma1 {
        return Err(Error::RankDeficient { requested: r, rank });
    }
    let u = svd.u.expect("u requested").columns(0, r).into_owned();
    let v = svd.v_t.expect("v requested").rows(0, r).transpose();
    Ok(TruncatedSvd { u, s: sv.rows(0, r).into_owned(), v, all_singular_values: sv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, DMatrix};

    #[test]
    fn diagonal() {
        let t = svd_truncate(&DMatrix::from_diagonal(&DenseVector::from_vec(vec![3.0, 2.0, 1.0])), 2).unwrap();
        assert!((t.s[0] - 3.0).abs() < 1e-14 && (t.s[1] - 2.0).abs() < 1e-14);
        assert!((t.tail_singular_value() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_matrix_rejected() {
        for r in 1..=2 {
            assert!(matches!(svd_truncate(&DenseMatrix::zeros(2, 2), r), Err(Error::RankDeficient { .. })));
        }
    }

    #[test]
    fn beyond_rank_rejected() {
        let m = dmatrix![1.0, 1.0; 1.0, 1.0];
        assert!(matches!(svd_truncate(&m, 2), Err(Error::RankDeficient { rank: 1, .. })));
    }

    #[test]
    fn orthonormal_factors_and_truncation_error() {
        let m = dmatrix![4.0, 1.0, 0.5; 1.0, 3.0, 0.2; 0.5, 0.2, 1.0; 0.1, 0.0, 2.0];
        let t = svd_truncate(&m, 2).unwrap();
        assert!((t.u.transpose() * &t.u - DenseMatrix::identity(2, 2)).norm() < 1e-13);
        assert!((t.v.transpose() * &t.v - DenseMatrix::identity(2, 2)).norm() < 1e-13);
        let approx = &t.u * DMatrix::from_diagonal(&t.s) * t.v.transpose();
        let err2 = SVD::new(&m - approx, false, false).singular_values[0];
        assert!((err2 - t.tail_singular_value()).abs() < 1e-12);
    }
}
