//! Truncated Gramians of lifted QB systems. The structured path only ever
//! solves Lyapunov equations of the original dimension `n1`; auxiliary
//! blocks follow from shifted linear solves and explicit formulas. A dense
//! full-dimension path serves as the reference.
//!
//! The Schur-complement factor that appears when balancing the linear part
//! is never needed: the projection matrices do not depend on it.

use crate::error::{Error, Result};
use crate::linalg::{lu_solve, symmetrize, DenseMatrix, LyapunovSolver};
use crate::qbsys::{QBSystem, StabilizedQB};
use crate::tensor3::{pair_contract_mode1, pair_contract_mode2};

/// Default dimension cap for [`dense_truncated_oracle`].
pub const DENSE_ORACLE_CAP: usize = 100;

/// Gramians of the linear part `(A(α), B, C)`.
#[derive(Debug, Clone)]
pub struct LinearGramians {
    pub alpha: f64,
    pub p11: DenseMatrix,
    pub q11: DenseMatrix,
    pub q12: DenseMatrix,
    /// Unscaled lower-right observability block; `Q22 = q22_tilde / (2α)`.
    pub q22_tilde: DenseMatrix,
}

impl LinearGramians {
    pub fn n1(&self) -> usize {
        self.p11.nrows()
    }
    pub fn n2(&self) -> usize {
        self.q12.ncols()
    }

    pub fn p1(&self) -> DenseMatrix {
        let (n1, n) = (self.n1(), self.n1() + self.n2());
        let mut p = DenseMatrix::zeros(n, n);
        p.view_mut((0, 0), (n1, n1)).copy_from(&self.p11);
        p
    }

    pub fn q1(&self) -> DenseMatrix {
        let (n1, n2) = (self.n1(), self.n2());
        let mut q = DenseMatrix::zeros(n1 + n2, n1 + n2);
        q.view_mut((0, 0), (n1, n1)).copy_from(&self.q11);
        q.view_mut((0, n1), (n1, n2)).copy_from(&self.q12);
        q.view_mut((n1, 0), (n2, n1)).copy_from(&self.q12.transpose());
        q.view_mut((n1, n1), (n2, n2)).copy_from(&(&self.q22_tilde / (2.0 * self.alpha)));
        q
    }
}

/// Controllability corrections, unscaled: `P_T = P1 + [blocks] / (2α)`.
#[derive(Debug, Clone)]
pub struct ControllabilityBlocks {
    pub pt11: DenseMatrix,
    pub pt12: DenseMatrix,
    pub pt22: DenseMatrix,
}

/// Observability corrections, already scaled: `Q_T = Q1 + [blocks]`.
#[derive(Debug, Clone)]
pub struct ObservabilityBlocks {
    pub qh11: DenseMatrix,
    pub qh12: DenseMatrix,
    pub qh22: DenseMatrix,
}

#[derive(Debug, Clone)]
pub struct TruncatedGramians {
    pub alpha: f64,
    pub linear: LinearGramians,
    pub controllability: ControllabilityBlocks,
    pub observability: ObservabilityBlocks,
}

impl TruncatedGramians {
    /// Compute every block for one stabilized system.
    pub fn compute(s: &StabilizedQB) -> Result<Self> {
        let linear = linear_gramians(s)?;
        let controllability = truncated_controllability(s, &linear)?;
        let observability = truncated_observability(s, &linear)?;
        Ok(Self { alpha: s.alpha(), linear, controllability, observability })
    }
}

fn check_alpha(s: &StabilizedQB, lin: &LinearGramians) -> Result<()> {
    if s.alpha() != lin.alpha || s.base().n1() != lin.n1() || s.base().n2() != lin.n2() {
        return Err(Error::InvalidArgument(format!(
            "linear Gramians computed for alpha {} (n1 {}), system has alpha {} (n1 {})",
            lin.alpha,
            lin.n1(),
            s.alpha(),
            s.base().n1()
        )));
    }
    Ok(())
}

fn shifted(a11: &DenseMatrix, alpha: f64) -> DenseMatrix {
    a11 - DenseMatrix::identity(a11.nrows(), a11.nrows()) * alpha
}

pub fn linear_gramians(s: &StabilizedQB) -> Result<LinearGramians> {
    let st = s.base();
    let (a11, a12, b1, c1) = (st.a11(), st.a12(), st.b1(), st.c1());
    let alpha = s.alpha();
    let lyap = LyapunovSolver::new(&a11)?;
    let p11 = lyap.solve(&(&b1 * b1.transpose()))?;
    let q11 = lyap.solve_transposed(&(c1.transpose() * &c1))?;
    let q12 = -lu_solve("A11ᵀ - αI", &shifted(&a11.transpose(), alpha), &(&q11 * &a12))?;
    let q22_tilde = symmetrize(&(a12.transpose() * &q12 + q12.transpose() * &a12));
    Ok(LinearGramians { alpha, p11, q11, q12, q22_tilde })
}

pub fn truncated_controllability(s: &StabilizedQB, lin: &LinearGramians) -> Result<ControllabilityBlocks> {
    check_alpha(s, lin)?;
    let st = s.base();
    let (n1, n2) = (st.n1(), st.n2());
    let (a11, a12) = (st.a11(), st.a12());
    let p1 = lin.p1();
    // P1 vanishes outside the leading block, so only entries with both
    // trailing indices below n1 contribute.
    let quad = pair_contract_mode1(s.h_alpha(), s.h_alpha(), &p1, &p1)?;
    let mut pt22 = quad.view((n1, n1), (n2, n2)).into_owned();
    for n21 in st.n21() {
        pt22 += &n21 * &lin.p11 * n21.transpose();
    }
    let pt22 = symmetrize(&pt22);
    let pt12 = -lu_solve("A11 - αI", &shifted(&a11, s.alpha()), &(&a12 * &pt22))?;
    let lyap = LyapunovSolver::new(&a11)?;
    let pt11 = lyap.solve(&(&a12 * pt12.transpose() + &pt12 * a12.transpose()))?;
    Ok(ControllabilityBlocks { pt11, pt12, pt22 })
}

pub fn truncated_observability(s: &StabilizedQB, lin: &LinearGramians) -> Result<ObservabilityBlocks> {
    check_alpha(s, lin)?;
    let st = s.base();
    let (n1, n2) = (st.n1(), st.n2());
    let (a11, a12) = (st.a11(), st.a12());
    let two_alpha = 2.0 * s.alpha();
    // The Q1 factor pairs with the row index and P1 with the last index, so
    // Q1 goes in the first contraction slot.
    let g = pair_contract_mode2(s.h_alpha(), s.h_alpha(), &lin.q1(), &lin.p1())?;
    let mut s11 = g.view((0, 0), (n1, n1)).into_owned();
    let mut s12 = g.view((0, n1), (n1, n2)).into_owned();
    let mut s22 = g.view((n1, n1), (n2, n2)).into_owned();
    for (n21, n22) in st.n21().iter().zip(st.n22()) {
        let q22n21 = &lin.q22_tilde * n21 / two_alpha;
        let q22n22 = &lin.q22_tilde * &n22 / two_alpha;
        s11 += n21.transpose() * &q22n21;
        s12 += n21.transpose() * &q22n22;
        s22 += n22.transpose() * &q22n22;
    }
    let lyap = LyapunovSolver::new(&a11)?;
    let qh11 = lyap.solve_transposed(&symmetrize(&s11))?;
    let qh12 = -lu_solve("A11ᵀ - αI", &shifted(&a11.transpose(), s.alpha()), &(s12 + &qh11 * &a12))?;
    let qh22 = symmetrize(&((a12.transpose() * &qh12 + qh12.transpose() * &a12 + s22) / two_alpha));
    Ok(ObservabilityBlocks { qh11, qh12, qh22 })
}

fn place_blocks(out: &mut DenseMatrix, b11: &DenseMatrix, b12: &DenseMatrix, b22: &DenseMatrix, scale: f64) {
    let (n1, n2) = (b11.nrows(), b22.nrows());
    let mut v = out.view_mut((0, 0), (n1, n1));
    v += b11 * scale;
    let mut v = out.view_mut((0, n1), (n1, n2));
    v += b12 * scale;
    let mut v = out.view_mut((n1, 0), (n2, n1));
    v += b12.transpose() * scale;
    let mut v = out.view_mut((n1, n1), (n2, n2));
    v += b22 * scale;
}

/// Full `(P_T, Q_T)` from the stored blocks.
pub fn assemble(tg: &TruncatedGramians) -> (DenseMatrix, DenseMatrix) {
    let mut p = tg.linear.p1();
    let c = &tg.controllability;
    place_blocks(&mut p, &c.pt11, &c.pt12, &c.pt22, 1.0 / (2.0 * tg.alpha));
    let mut q = tg.linear.q1();
    let o = &tg.observability;
    place_blocks(&mut q, &o.qh11, &o.qh12, &o.qh22, 1.0);
    (symmetrize(&p), symmetrize(&q))
}

/// `Σ_{r,r'} ⟨X_rᵀ M_r Y, M_{r'}⟩`-type Gram matrix of the rows of a dense
/// matricization `m` (rows reshaped to `n × n`), i.e. `m (X ⊗ Y) mᵀ`.
fn dense_kron_gram(m: &DenseMatrix, x: &DenseMatrix, y: &DenseMatrix) -> DenseMatrix {
    let n = x.nrows();
    let slabs: Vec<DenseMatrix> =
        (0..m.nrows()).map(|r| DenseMatrix::from_fn(n, n, |a, b| m[(r, a * n + b)])).collect();
    let mixed: Vec<DenseMatrix> = slabs.iter().map(|s| x.transpose() * s * y).collect();
    DenseMatrix::from_fn(m.nrows(), m.nrows(), |r, rr| mixed[r].dot(&slabs[rr]))
}

/// Reference truncated Gramians from full-dimension dense Lyapunov solves.
/// `sys` must already carry the stabilized `A(α)` and `H(α)`.
pub fn dense_truncated_oracle(sys: &QBSystem) -> Result<(DenseMatrix, DenseMatrix)> {
    dense_truncated_oracle_capped(sys, DENSE_ORACLE_CAP)
}

pub fn dense_truncated_oracle_capped(sys: &QBSystem, cap: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    let n = sys.dim();
    if n > cap {
        return Err(Error::TooLarge { size: n, cap });
    }
    let lyap = LyapunovSolver::new(sys.a())?;
    let (b, c) = (sys.b(), sys.c());
    let p1 = lyap.solve(&(b * b.transpose()))?;
    let q1 = lyap.solve_transposed(&(c.transpose() * c))?;
    let h1 = sys.h().dense_mode1_capped(cap)?;
    let h2 = sys.h().dense_mode2_capped(cap)?;
    let mut rp = dense_kron_gram(&h1, &p1, &p1) + b * b.transpose();
    let mut rq = dense_kron_gram(&h2, &q1, &p1) + c.transpose() * c;
    for nk in sys.n() {
        rp += nk * &p1 * nk.transpose();
        rq += nk.transpose() * &q1 * nk;
    }
    let pt = lyap.solve(&symmetrize(&rp))?;
    let qt = lyap.solve_transposed(&symmetrize(&rq))?;
    Ok((pt, qt))
}
