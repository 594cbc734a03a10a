//! Balancing transformations, reduced-model projection and diagnostics for
//! choosing the stabilization parameter.

use log::warn;

use crate::error::{Error, Result};
use crate::gramians::{assemble, LinearGramians, TruncatedGramians};
use crate::integrate::TimeGrid;
use crate::linalg::{
    lu_solve, numerical_abscissa, psd_factor, spectral_abscissa, svd_truncate, DenseMatrix, DenseVector,
    TruncatedSvd, DEFAULT_PSD_REL_TOL, RANK_TOL,
};
use crate::qbsys::{QBSystem, StabilizedQB, StructuredQB};
use crate::tensor3::{project, SparseTensor3};

/// Ratio `σ_{r+1}/σ_r` above which the truncated subspace is ill-defined.
pub const NEAR_TIE_RATIO: f64 = 0.999;

/// Projection pair with `Wᵀ V = I_r`.
#[derive(Debug, Clone)]
pub struct Balancing {
    pub v: DenseMatrix,
    pub w: DenseMatrix,
    /// Leading `r` singular values, descending.
    pub sigma: DenseVector,
    /// Every singular value of the factor product.
    pub all_sigma: DenseVector,
}

fn scaled_by_inv_sqrt(m: &DenseMatrix, s: &DenseVector) -> DenseMatrix {
    let mut out = m.clone();
    for (j, sj) in s.iter().enumerate() {
        out.column_mut(j).scale_mut(1.0 / sj.sqrt());
    }
    out
}

fn warn_near_tie(svd: &TruncatedSvd) {
    let r = svd.s.len();
    let tail = svd.tail_singular_value();
    if tail > 0.0 && tail / svd.s[r - 1] > NEAR_TIE_RATIO {
        warn!(
            "sigma_{} = {:e} and sigma_{} = {:e} nearly tie; the rank-{r} subspace is ill-defined",
            r,
            svd.s[r - 1],
            r + 1,
            tail
        );
    }
}

/// Square-root factors and the full SVD of their product. Balancing bases
/// are nested, so every reduced order is a prefix of the same SVD.
#[derive(Debug, Clone)]
pub struct BalancingFactors {
    lp: DenseMatrix,
    lq: DenseMatrix,
    svd: TruncatedSvd,
}

impl BalancingFactors {
    pub fn new(p: &DenseMatrix, q: &DenseMatrix) -> Result<Self> {
        let lp = psd_factor(p, DEFAULT_PSD_REL_TOL)?.factor;
        let lq = psd_factor(q, DEFAULT_PSD_REL_TOL)?.factor;
        let product = lq.transpose() * &lp;
        let full = product.nrows().min(product.ncols());
        if full == 0 {
            return Err(Error::RankDeficient { requested: 1, rank: 0 });
        }
        // Full thin SVD; the rank check happens per truncation.
        let svd = nalgebra::SVD::new(product, true, true);
        let u = svd.u.expect("u requested");
        let v = svd.v_t.expect("v requested").transpose();
        let s = svd.singular_values;
        Ok(Self { lp, lq, svd: TruncatedSvd { u, v, all_singular_values: s.clone(), s } })
    }

    pub fn singular_values(&self) -> &DenseVector {
        &self.svd.all_singular_values
    }

    /// Numerical rank of the factor product.
    pub fn rank(&self) -> usize {
        let s = &self.svd.all_singular_values;
        let s1 = s.max();
        s.iter().filter(|&&v| s1 > 0.0 && v >= RANK_TOL * s1).count()
    }

    pub fn truncate(&self, r: usize) -> Result<Balancing> {
        let rank = self.rank();
        if r == 0 || r > rank {
            return Err(Error::RankDeficient { requested: r, rank });
        }
        let svd = TruncatedSvd {
            u: self.svd.u.columns(0, r).into_owned(),
            s: self.svd.all_singular_values.rows(0, r).into_owned(),
            v: self.svd.v.columns(0, r).into_owned(),
            all_singular_values: self.svd.all_singular_values.clone(),
        };
        warn_near_tie(&svd);
        let w = scaled_by_inv_sqrt(&(&self.lq * &svd.u), &svd.s);
        let v = scaled_by_inv_sqrt(&(&self.lp * &svd.v), &svd.s);
        Ok(Balancing { v, w, sigma: svd.s, all_sigma: svd.all_singular_values })
    }
}

/// Square-root balancing from two PSD Gramians.
pub fn balance(p: &DenseMatrix, q: &DenseMatrix, r: usize) -> Result<Balancing> {
    BalancingFactors::new(p, q)?.truncate(r)
}

/// Balancing of the linear part using only `n1`-sized factors. The lower
/// block of `W` maps through `Q12ᵀ L_{Q11}^{-ᵀ}`, so `Q11` must be
/// nonsingular.
pub fn linear_balance(lin: &LinearGramians, r: usize) -> Result<Balancing> {
    let n1 = lin.n1();
    let lp = psd_factor(&lin.p11, DEFAULT_PSD_REL_TOL)?;
    let lq = psd_factor(&lin.q11, DEFAULT_PSD_REL_TOL)?;
    if lq.rank < n1 {
        return Err(Error::RankDeficient { requested: n1, rank: lq.rank });
    }
    let product = lq.factor.transpose() * &lp.factor;
    let rank_cap = product.nrows().min(product.ncols());
    if r == 0 || r > rank_cap {
        return Err(Error::RankDeficient { requested: r, rank: rank_cap });
    }
    let svd = svd_truncate(&product, r)?;
    warn_near_tie(&svd);
    let us = scaled_by_inv_sqrt(&svd.u, &svd.s);
    let upper_w = &lq.factor * &us;
    let lower_w = lin.q12.transpose() * lu_solve("L_Q11ᵀ", &lq.factor.transpose(), &us)?;
    let upper_v = scaled_by_inv_sqrt(&(&lp.factor * &svd.v), &svd.s);
    let n = n1 + lin.n2();
    let mut w = DenseMatrix::zeros(n, r);
    w.view_mut((0, 0), (n1, r)).copy_from(&upper_w);
    w.view_mut((n1, 0), (lin.n2(), r)).copy_from(&lower_w);
    let mut v = DenseMatrix::zeros(n, r);
    v.view_mut((0, 0), (n1, r)).copy_from(&upper_v);
    Ok(Balancing { v, w, sigma: svd.s, all_sigma: svd.all_singular_values })
}

/// Reduced model plus the projection that produced it.
#[derive(Debug, Clone)]
pub struct RomBundle {
    pub r: usize,
    pub v: DenseMatrix,
    pub w: DenseMatrix,
    pub sigma: DenseVector,
    pub rom: QBSystem,
}

/// Petrov–Galerkin projection of every operator.
pub fn project_system(sys: &QBSystem, v: &DenseMatrix, w: &DenseMatrix) -> Result<QBSystem> {
    let n = sys.dim();
    if v.shape() != w.shape() || v.nrows() != n {
        return Err(Error::Shape {
            op: "project_system",
            detail: format!("system dimension {n}, V {:?}, W {:?}", v.shape(), w.shape()),
        });
    }
    let wt = w.transpose();
    let a = &wt * sys.a() * v;
    let h = SparseTensor3::from_dense_mode1(&project(sys.h(), w, v)?)?;
    let nk = sys.n().iter().map(|m| &wt * m * v).collect();
    QBSystem::new(a, h, nk, &wt * sys.b(), sys.c() * v)
}

/// Which operators a reduced model is projected from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RomSource {
    /// `A`, `H` without the stabilizing terms. The reduced model then
    /// inherits the zero modes of the auxiliary block, which a projection
    /// no longer confines to the lifted manifold.
    Unstabilized,
    /// `A(α)`, `H(α)`. Same dynamics on the manifold, damped off it.
    #[default]
    Stabilized,
}

pub fn project_rom(stab: &StabilizedQB, bal: &Balancing, source: RomSource) -> Result<RomBundle> {
    let sys = match source {
        RomSource::Unstabilized => stab.base().system().clone(),
        RomSource::Stabilized => stab.system(),
    };
    let rom = project_system(&sys, &bal.v, &bal.w)?;
    Ok(RomBundle { r: bal.v.ncols(), v: bal.v.clone(), w: bal.w.clone(), sigma: bal.sigma.clone(), rom })
}

/// Gramians, balancing and projection in one call.
pub fn reduce(stab: &StabilizedQB, r: usize, source: RomSource) -> Result<RomBundle> {
    let tg = TruncatedGramians::compute(stab)?;
    let (p, q) = assemble(&tg);
    project_rom(stab, &balance(&p, &q, r)?, source)
}

/// Short simulation of a small balanced model used as a boundedness check.
pub struct AlphaProbe<'a> {
    pub r: usize,
    pub grid: TimeGrid,
    pub input: &'a dyn Fn(f64) -> DenseVector,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProbeOutcome {
    Bounded { max_abs_output: f64 },
    Diverged { time: f64 },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlphaDiagnostics {
    pub alpha: f64,
    pub numerical_abscissa: f64,
    pub spectral_abscissa: f64,
    pub probe: Option<ProbeOutcome>,
}

/// `max(spectral abscissa of A11, -α)`: `A(α)` is block upper triangular.
pub fn stabilized_spectral_abscissa(s: &StructuredQB, alpha: f64) -> Result<f64> {
    let a11 = spectral_abscissa(&s.a11())?;
    Ok(if s.n2() > 0 { a11.max(-alpha) } else { a11 })
}

fn run_probe(s: &StructuredQB, alpha: f64, probe: &AlphaProbe<'_>) -> ProbeOutcome {
    let rom = match s.stabilize(alpha).and_then(|st| reduce(&st, probe.r, RomSource::Stabilized)) {
        Ok(b) => b.rom,
        Err(e) => return ProbeOutcome::Failed(e.to_string()),
    };
    match rom.simulate(probe.input, &DenseVector::zeros(rom.dim()), probe.grid) {
        Ok(traj) => ProbeOutcome::Bounded {
            max_abs_output: traj.outputs.iter().map(|y| y.amax()).fold(0.0, f64::max),
        },
        Err(Error::Diverged { time }) => ProbeOutcome::Diverged { time },
        Err(e) => ProbeOutcome::Failed(e.to_string()),
    }
}

/// Field-of-values and spectral diagnostics of `A(α)` for each candidate.
/// Reports only; choosing α is left to the caller.
pub fn select_alpha(s: &StructuredQB, candidates: &[f64], probe: Option<&AlphaProbe<'_>>) -> Result<Vec<AlphaDiagnostics>> {
    let spec_a11 = spectral_abscissa(&s.a11())?;
    candidates
        .iter()
        .map(|&alpha| {
            if !(alpha > 0.0) {
                return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
            }
            let mut a = s.system().a().clone();
            for i in s.n1()..a.nrows() {
                a[(i, i)] = -alpha;
            }
            Ok(AlphaDiagnostics {
                alpha,
                numerical_abscissa: numerical_abscissa(&a)?,
                spectral_abscissa: if s.n2() > 0 { spec_a11.max(-alpha) } else { spec_a11 },
                probe: probe.map(|p| run_probe(s, alpha, p)),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gramians::linear_gramians;
    use crate::qbsys::{partition, LiftDef};
    use nalgebra::dmatrix;

    fn scalar_block(alpha: f64) -> StabilizedQB {
        let sys = QBSystem::new(
            dmatrix![-1.0, 1.0; 0.0, 0.0],
            SparseTensor3::zeros(2),
            vec![DenseMatrix::zeros(2, 2)],
            dmatrix![1.0; 0.0],
            dmatrix![1.0, 0.0],
        )
        .unwrap();
        partition(&sys, 1)
            .unwrap()
            .with_lift_defs(vec![LiftDef { aux: 1, p: 0, q: 0 }])
            .unwrap()
            .stabilize(alpha)
            .unwrap()
    }

    #[test]
    fn identity_gramians_are_balanced() {
        let i = DenseMatrix::identity(4, 4);
        let b = balance(&i, &i, 4).unwrap();
        assert!(b.sigma.iter().all(|s| (s - 1.0).abs() < 1e-14));
        assert!((b.w.transpose() * &b.v - &i).norm() < 1e-13);
    }

    #[test]
    fn scalar_block_balance_rank_one() {
        let lin = linear_gramians(&scalar_block(1.0)).unwrap();
        let b = balance(&lin.p1(), &lin.q1(), 1).unwrap();
        assert!((b.sigma[0] - 0.5).abs() < 1e-14);
        assert!(balance(&lin.p1(), &lin.q1(), 2).is_err());
    }

    #[test]
    fn scalar_block_linear_balance() {
        let lin = linear_gramians(&scalar_block(1.0)).unwrap();
        let b = linear_balance(&lin, 1).unwrap();
        let sign = b.w[(0, 0)].signum();
        assert!((b.w[(0, 0)] * sign - 1.0).abs() < 1e-14);
        assert!((b.w[(1, 0)] * sign - 0.5).abs() < 1e-14);
        assert!((b.v[(0, 0)] * sign - 1.0).abs() < 1e-14);
        assert_eq!(b.v[(1, 0)], 0.0);
        assert!(((b.w.transpose() * &b.v)[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_projection_reproduces_system() {
        let s = scalar_block(1.0);
        let i = DenseMatrix::identity(2, 2);
        let rom = project_system(s.base().system(), &i, &i).unwrap();
        assert_eq!(rom.a(), s.base().system().a());
        assert_eq!(rom.h().entries(), s.base().system().h().entries());
    }

    #[test]
    fn diagonal_a11_abscissa() {
        let sys = QBSystem::new(
            dmatrix![-1.0, 0.0, 0.0; 0.0, -3.0, 0.0; 0.0, 0.0, 0.0],
            SparseTensor3::zeros(3),
            vec![DenseMatrix::zeros(3, 3)],
            dmatrix![1.0; 1.0; 0.0],
            dmatrix![1.0, 1.0, 0.0],
        )
        .unwrap();
        let st = partition(&sys, 2).unwrap();
        let d = select_alpha(&st, &[1.0, 2.0, 5.0], None).unwrap();
        for row in &d {
            assert!((row.numerical_abscissa + 1.0).abs() < 1e-14);
            assert!((row.spectral_abscissa + 1.0).abs() < 1e-14);
        }
        assert!(select_alpha(&st, &[0.0], None).is_err());
    }
}
