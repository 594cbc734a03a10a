//! Bartels–Stewart Lyapunov solver on the real Schur form.
//!
//! For `a = q t qᵀ` the equation `a x + x aᵀ + c = 0` becomes
//! `t y + y tᵀ = -qᵀ c q` with `x = q y qᵀ`, which is solved block by block
//! from the bottom-right corner. The transposed equation `aᵀ x + x a + c = 0`
//! reuses the same decomposition: reversing the index order of `tᵀ` gives
//! another upper quasi-triangular matrix.

use nalgebra::DMatrix;

use super::schur::{block_eigenvalues, diagonal_blocks, RealSchur};
use super::{asymmetry, audit, ensure_finite, ensure_square, DenseMatrix};
use crate::error::{Error, Result};

const STABILITY_MARGIN: f64 = -1e-12;
const SYMMETRY_TOL: f64 = 1e-10;

/// Factorized Lyapunov operator for a fixed stable matrix. Build once, solve
/// for as many right-hand sides as needed.
pub struct LyapunovSolver {
    q: DenseMatrix,
    t: DenseMatrix,
    blocks: Vec<(usize, usize)>,
    t_rev: DenseMatrix,
    blocks_rev: Vec<(usize, usize)>,
    abscissa: f64,
}

impl LyapunovSolver {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let n = ensure_square("lyapunov", a)?;
        ensure_finite("lyapunov matrix", a)?;
        let RealSchur { q, t, blocks } = RealSchur::new(a)?;
        let abscissa = block_eigenvalues(&t, &blocks)
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if n > 0 && abscissa >= STABILITY_MARGIN {
            return Err(Error::NotStable { abscissa });
        }
        let t_rev = DMatrix::from_fn(n, n, |i, j| t[(n - 1 - j, n - 1 - i)]);
        let blocks_rev = diagonal_blocks(&t_rev);
        Ok(Self { q, t, blocks, t_rev, blocks_rev, abscissa })
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn spectral_abscissa(&self) -> f64 {
        self.abscissa
    }

    /// Solve `a x + x aᵀ + c = 0`.
    pub fn solve(&self, c: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rhs(c)?;
        audit::record_solve(self.dim());
        let f = -(self.q.transpose() * c * &self.q);
        let y = solve_quasi_triangular(&self.t, &self.blocks, &f)?;
        Ok(finish(&self.q, &y))
    }

    /// Solve `aᵀ x + x a + c = 0`.
    pub fn solve_transposed(&self, c: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_rhs(c)?;
        audit::record_solve(self.dim());
        let n = self.dim();
        let f = -(self.q.transpose() * c * &self.q);
        let f_rev = DMatrix::from_fn(n, n, |i, j| f[(n - 1 - i, n - 1 - j)]);
        let y_rev = solve_quasi_triangular(&self.t_rev, &self.blocks_rev, &f_rev)?;
        let y = DMatrix::from_fn(n, n, |i, j| y_rev[(n - 1 - i, n - 1 - j)]);
        Ok(finish(&self.q, &y))
    }

    fn check_rhs(&self, c: &DenseMatrix) -> Result<()> {
        let n = self.dim();
        if c.nrows() != n || c.ncols() != n {
            return Err(Error::Shape {
                op: "lyapunov",
                detail: format!("rhs is {}x{}, expected {n}x{n}", c.nrows(), c.ncols()),
            });
        }
        ensure_finite("lyapunov rhs", c)?;
        let asym = asymmetry(c);
        if asym > SYMMETRY_TOL * c.norm().max(1.0) {
            return Err(Error::NotSymmetric { op: "lyapunov", asymmetry: asym });
        }
        Ok(())
    }
}

fn finish(q: &DenseMatrix, y: &DenseMatrix) -> DenseMatrix {
    let x = q * y * q.transpose();
    (&x + x.transpose()) * 0.5
}

/// Solve `a x + x aᵀ + c = 0` for stable `a` and symmetric `c`.
pub fn solve_lyapunov(a: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix> {
    LyapunovSolver::new(a)?.solve(c)
}

/// Solve `aᵀ x + x a + c = 0` for stable `a` and symmetric `c`.
pub fn solve_lyapunov_transposed(a: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix> {
    LyapunovSolver::new(a)?.solve_transposed(c)
}

/// Solve `t y + y tᵀ = f` for upper quasi-triangular `t`.
fn solve_quasi_triangular(
    t: &DenseMatrix,
    blocks: &[(usize, usize)],
    f: &DenseMatrix,
) -> Result<DenseMatrix> {
    let n = t.nrows();
    let mut y = DenseMatrix::zeros(n, n);
    for &(l0, ls) in blocks.iter().rev() {
        let l1 = l0 + ls;
        // Columns of y to the right of this block are final.
        let mut r = f.columns(l0, ls).into_owned();
        if l1 < n {
            r -= y.columns(l1, n - l1) * t.view((l0, l1), (ls, n - l1)).transpose();
        }
        let t_ll = t.view((l0, l0), (ls, ls)).into_owned();
        for &(k0, ks) in blocks.iter().rev() {
            let k1 = k0 + ks;
            let mut rhs = r.rows(k0, ks).into_owned();
            if k1 < n {
                rhs -= t.view((k0, k1), (ks, n - k1)) * y.view((k1, l0), (n - k1, ls));
            }
            let t_kk = t.view((k0, k0), (ks, ks)).into_owned();
            let blk = solve_small_sylvester(&t_kk, &t_ll, &rhs)?;
            y.view_mut((k0, l0), (ks, ls)).copy_from(&blk);
        }
    }
    Ok(y)
}

/// `t_kk y + y t_llᵀ = rhs` for blocks of size at most 2.
fn solve_small_sylvester(t_kk: &DenseMatrix, t_ll: &DenseMatrix, rhs: &DenseMatrix) -> Result<DenseMatrix> {
    let (ks, ls) = (t_kk.nrows(), t_ll.nrows());
    if ks == 1 && ls == 1 {
        let d = t_kk[(0, 0)] + t_ll[(0, 0)];
        if d == 0.0 {
            return Err(Error::Singular("lyapunov block"));
        }
        return Ok(DenseMatrix::from_element(1, 1, rhs[(0, 0)] / d));
    }
    let m = DMatrix::<f64>::identity(ls, ls).kronecker(t_kk) + t_ll.kronecker(&DMatrix::<f64>::identity(ks, ks));
    let b = DMatrix::from_column_slice(ks * ls, 1, rhs.as_slice());
    let sol = m.lu().solve(&b).ok_or(Error::Singular("lyapunov block"))?;
    Ok(DMatrix::from_column_slice(ks, ls, sol.as_slice()))
}
