use nalgebra::{Complex, DMatrix, Schur};

use crate::error::{Error, Result};

/// Real Schur form `a = q t qᵀ` with the diagonal block partition of `t`.
pub(crate) struct RealSchur {
    pub q: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub blocks: Vec<(usize, usize)>,
}

impl RealSchur {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let schur = Schur::try_new(a.clone(), f64::EPSILON, 1000 * n.max(1))
            .ok_or(Error::SchurFailed)?;
        let (q, t) = schur.unpack();
        let blocks = diagonal_blocks(&t);
        Ok(Self { q, t, blocks })
    }

    pub fn eigenvalues(&self) -> Vec<Complex<f64>> {
        block_eigenvalues(&self.t, &self.blocks)
    }
}

/// Partition an upper quasi-triangular matrix into 1x1 and 2x2 diagonal
/// blocks, returned as `(start, size)`.
pub(crate) fn diagonal_blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::with_capacity(n);
    let mut k = 0;
    while k < n {
        if k + 1 < n && t[(k + 1, k)] != 0.0 {
            blocks.push((k, 2));
            k += 2;
        } else {
            blocks.push((k, 1));
            k += 1;
        }
    }
    blocks
}

pub(crate) fn block_eigenvalues(t: &DMatrix<f64>, blocks: &[(usize, usize)]) -> Vec<Complex<f64>> {
    let mut out = Vec::with_capacity(t.nrows());
    for &(k, size) in blocks {
        if size == 1 {
            out.push(Complex::new(t[(k, k)], 0.0));
        } else {
            let (a, b, c, d) = (t[(k, k)], t[(k, k + 1)], t[(k + 1, k)], t[(k + 1, k + 1)]);
            let half_tr = 0.5 * (a + d);
            let disc = 0.25 * (a - d) * (a - d) + b * c;
            if disc >= 0.0 {
                let s = disc.sqrt();
                out.push(Complex::new(half_tr + s, 0.0));
                out.push(Complex::new(half_tr - s, 0.0));
            } else {
                let s = (-disc).sqrt();
                out.push(Complex::new(half_tr, s));
                out.push(Complex::new(half_tr, -s));
            }
        }
    }
    out
}
