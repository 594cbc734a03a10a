//! POD-DEIM baseline for the reactor: snapshot POD basis, QDEIM point
//! selection and a reduced model whose nonlinear term is sampled at the
//! selected grid points only.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::integrate::{rk4, TimeGrid, Trajectory};
use crate::linalg::{svd_truncate, DenseMatrix, DenseVector};
use crate::reactor::ReactorFom;

/// Sampled training states, one column per sample.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub states: DenseMatrix,
    pub snapshot_dt: f64,
    /// Free-form provenance: input, initial state, noise seed.
    pub meta: BTreeMap<String, String>,
}

impl SnapshotSet {
    pub fn from_trajectory(traj: &Trajectory, snapshot_dt: f64, meta: BTreeMap<String, String>) -> Result<Self> {
        if traj.states.is_empty() {
            return Err(Error::InvalidArgument("trajectory has no samples".into()));
        }
        let states = DenseMatrix::from_columns(&traj.states);
        if !states.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("snapshot matrix"));
        }
        Ok(Self { states, snapshot_dt, meta })
    }
}

/// Leading `r` left singular vectors of `x`.
pub fn pod_basis(x: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    Ok(svd_truncate(x, r)?.u)
}

/// Basis layout for the two fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasisLayout {
    /// One basis for the stacked state `[ψ; θ]`.
    #[default]
    Stacked,
    /// Block-diagonal basis, `⌈r/2⌉` concentration and `⌊r/2⌋` temperature
    /// modes.
    PerField,
}

pub fn reactor_pod_basis(x: &DenseMatrix, r: usize, layout: BasisLayout) -> Result<DenseMatrix> {
    match layout {
        BasisLayout::Stacked => pod_basis(x, r),
        BasisLayout::PerField => {
            let n = x.nrows() / 2;
            let (rp, rt) = (r.div_ceil(2), r / 2);
            let vp = pod_basis(&x.rows(0, n).into_owned(), rp)?;
            let mut v = DenseMatrix::zeros(2 * n, r);
            v.view_mut((0, 0), (n, rp)).copy_from(&vp);
            if rt > 0 {
                let vt = pod_basis(&x.rows(n, n).into_owned(), rt)?;
                v.view_mut((n, rp), (n, rt)).copy_from(&vt);
            }
            Ok(v)
        }
    }
}

/// Interpolation indices from a column-pivoted QR of `Uᵀ`, pivoting on the
/// largest remaining column norm.
pub fn qdeim_points(u: &DenseMatrix) -> Result<Vec<usize>> {
    let (q, r) = u.shape();
    if r == 0 || r > q {
        return Err(Error::InvalidArgument(format!("basis is {q}x{r}; need 1 <= r <= q")));
    }
    let mut m = u.transpose();
    let mut perm: Vec<usize> = (0..q).collect();
    let scale = m.norm();
    for k in 0..r {
        let (best, best_norm) = (k..q)
            .map(|j| (j, m.view((k, j), (r - k, 1)).norm()))
            .fold((k, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        if best_norm <= 1e-12 * scale {
            return Err(Error::RankDeficient { requested: r, rank: k });
        }
        m.swap_columns(k, best);
        perm.swap(k, best);
        // Householder reflection zeroing column k below the diagonal.
        let mut v = m.view((k, k), (r - k, 1)).into_owned();
        let alpha = -v[0].signum() * best_norm;
        let alpha = if alpha == 0.0 { best_norm } else { alpha };
        v[0] -= alpha;
        let vnorm2 = v.norm_squared();
        if vnorm2 > 0.0 {
            let mut block = m.view_mut((k, k), (r - k, q - k));
            let proj = v.transpose() * &block;
            block -= &v * proj * (2.0 / vnorm2);
        }
    }
    Ok(perm[..r].to_vec())
}

/// Classical greedy DEIM selection, kept for comparison with QDEIM.
pub fn greedy_deim_points(u: &DenseMatrix) -> Result<Vec<usize>> {
    let (q, r) = u.shape();
    if r == 0 || r > q {
        return Err(Error::InvalidArgument(format!("basis is {q}x{r}; need 1 <= r <= q")));
    }
    let argmax = |v: &DenseVector| v.iamax();
    let mut points = vec![argmax(&u.column(0).into_owned())];
    for l in 1..r {
        let pu = DenseMatrix::from_fn(l, l, |i, j| u[(points[i], j)]);
        let rhs = DenseVector::from_fn(l, |i, _| u[(points[i], l)]);
        let c = pu.lu().solve(&rhs).ok_or(Error::Singular("greedy DEIM"))?;
        let resid = u.column(l) - u.columns(0, l) * c;
        points.push(argmax(&resid));
    }
    Ok(points)
}

/// `‖(Pᵀ U)^{-1}‖₂`, the DEIM error amplification factor.
pub fn deim_amplification(u: &DenseMatrix, points: &[usize]) -> Result<f64> {
    let pu = DenseMatrix::from_fn(points.len(), u.ncols(), |i, j| u[(points[i], j)]);
    let inv = pu.try_inverse().ok_or(Error::Singular("PᵀU"))?;
    Ok(nalgebra::linalg::SVD::new(inv, false, false).singular_values.max())
}

/// Reaction snapshots `ψ ∘ poly(θ)` for each stacked state column.
pub fn reaction_snapshots(fom: &ReactorFom, states: &DenseMatrix) -> DenseMatrix {
    let n = fom.n;
    let cols: Vec<DenseVector> = states
        .column_iter()
        .map(|c| fom.reaction(c.rows(0, n).as_slice(), c.rows(n, n).as_slice()))
        .collect();
    DenseMatrix::from_columns(&cols)
}

/// Multiplicative noise `X + level · X ∘ (-1 + 2Ξ)`, `Ξ` iid standard
/// normal drawn column by column from a seeded generator.
pub fn add_noise(x: &DenseMatrix, level: f64, seed: u64) -> Result<DenseMatrix> {
    if !(level >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise level must be non-negative, got {level}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = x.clone();
    for v in out.iter_mut() {
        let xi: f64 = StandardNormal.sample(&mut rng);
        *v += level * *v * (-1.0 + 2.0 * xi);
    }
    Ok(out)
}

/// Reduced reactor model with DEIM-sampled reaction.
#[derive(Debug, Clone)]
pub struct PodDeimRom {
    pub v: DenseMatrix,
    pub points: Vec<usize>,
    a: DenseMatrix,
    b_const: DenseVector,
    b_input: DenseVector,
    /// Maps sampled reaction values to the reduced right-hand side.
    e: DenseMatrix,
    /// Rows of `V` giving ψ and θ at the sample points.
    psi_rows: DenseMatrix,
    theta_rows: DenseMatrix,
    c: DenseVector,
    coeffs: [f64; 4],
}

pub fn build_pod_deim_rom(fom: &ReactorFom, v: &DenseMatrix, u_f: &DenseMatrix, points: &[usize]) -> Result<PodDeimRom> {
    let n = fom.n;
    if v.nrows() != 2 * n || u_f.nrows() != n || points.len() != u_f.ncols() {
        return Err(Error::Shape {
            op: "build_pod_deim_rom",
            detail: format!("V {:?}, U_f {:?}, {} points, n = {n}", v.shape(), u_f.shape(), points.len()),
        });
    }
    if let Some(p) = points.iter().find(|&&p| p >= n) {
        return Err(Error::InvalidArgument(format!("interpolation point {p} outside the grid")));
    }
    let vp = v.rows(0, n);
    let vt = v.rows(n, n);
    let a = vp.transpose() * &fom.a_psi * vp + vt.transpose() * &fom.a_theta * vt;
    let b_const = vp.transpose() * &fom.b_psi + vt.transpose() * &fom.b_theta;
    let b_input = vt.transpose() * &fom.b;
    let pu = DenseMatrix::from_fn(points.len(), u_f.ncols(), |i, j| u_f[(points[i], j)]);
    let pu_inv = pu.try_inverse().ok_or(Error::Singular("PᵀU_f"))?;
    let lift = (vt.transpose() * fom.heat_of_reaction - vp.transpose()) * fom.damkohler * u_f;
    let e = lift * pu_inv;
    let psi_rows = DenseMatrix::from_fn(points.len(), v.ncols(), |i, j| v[(points[i], j)]);
    let theta_rows = DenseMatrix::from_fn(points.len(), v.ncols(), |i, j| v[(n + points[i], j)]);
    let c = v.row(2 * n - 1).transpose();
    Ok(PodDeimRom { v: v.clone(), points: points.to_vec(), a, b_const, b_input, e, psi_rows, theta_rows, c, coeffs: fom.coeffs })
}

impl PodDeimRom {
    pub fn dim(&self) -> usize {
        self.v.ncols()
    }

    fn sampled_reaction(&self, xr: &[f64]) -> DenseVector {
        let x = DenseVector::from_column_slice(xr);
        let psi = &self.psi_rows * &x;
        let theta = &self.theta_rows * &x;
        let c = &self.coeffs;
        psi.zip_map(&theta, |p, t| p * (c[0] + t * (c[1] + t * (c[2] + t * c[3]))))
    }

    fn rhs_into(&self, xr: &[f64], u: f64, out: &mut [f64]) {
        let x = DenseVector::from_column_slice(xr);
        let val = &self.a * &x + &self.b_const + &self.b_input * u + &self.e * self.sampled_reaction(xr);
        out.copy_from_slice(val.as_slice());
    }

    pub fn rhs(&self, xr: &DenseVector, u: f64) -> DenseVector {
        let mut out = DenseVector::zeros(self.dim());
        self.rhs_into(xr.as_slice(), u, out.as_mut_slice());
        out
    }

    pub fn output(&self, xr: &[f64]) -> f64 {
        self.c.as_slice().iter().zip(xr).map(|(a, b)| a * b).sum()
    }

    /// Simulate from the projection of a full initial state.
    pub fn simulate<U: Fn(f64) -> f64>(&self, u: U, x0_full: &DenseVector, grid: TimeGrid) -> Result<Trajectory> {
        let x0 = self.v.transpose() * x0_full;
        let mut traj = Trajectory::default();
        rk4(
            |t, x, dx| self.rhs_into(x, u(t), dx),
            x0.as_slice(),
            grid,
            |t, x| {
                traj.times.push(t);
                traj.outputs.push(DenseVector::from_element(1, self.output(x)));
                traj.states.push(DenseVector::from_column_slice(x));
            },
        )?;
        Ok(traj)
    }
}
