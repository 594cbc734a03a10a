//! Quadratic-bilinear systems
//! `ẋ = A x + H (x ⊗ x) + Σ_k u_k N_k x + B u`, `y = C x`,
//! their lifted block structure, artificial stabilization and simulation.

use crate::error::{Error, Result};
use crate::integrate::{rk4, TimeGrid, Trajectory};
use crate::linalg::{Csr, DenseMatrix, DenseVector};
use crate::tensor3::{Entry, SparseTensor3};

/// Full QB system. The quadratic tensor is kept symmetric in its trailing
/// modes.
#[derive(Debug, Clone)]
pub struct QBSystem {
    a: DenseMatrix,
    h: SparseTensor3,
    n: Vec<DenseMatrix>,
    b: DenseMatrix,
    c: DenseMatrix,
}

impl QBSystem {
    pub fn new(a: DenseMatrix, h: SparseTensor3, n: Vec<DenseMatrix>, b: DenseMatrix, c: DenseMatrix) -> Result<Self> {
        let dim = a.nrows();
        let shape_err = |detail: String| Error::Shape { op: "QBSystem::new", detail };
        if a.ncols() != dim {
            return Err(shape_err(format!("A is {}x{}", a.nrows(), a.ncols())));
        }
        if h.dim() != dim {
            return Err(shape_err(format!("H has dimension {}, A has {dim}", h.dim())));
        }
        if b.nrows() != dim {
            return Err(shape_err(format!("B has {} rows, expected {dim}", b.nrows())));
        }
        if n.len() != b.ncols() {
            return Err(shape_err(format!("{} bilinear matrices for {} inputs", n.len(), b.ncols())));
        }
        if let Some(bad) = n.iter().find(|nk| nk.shape() != (dim, dim)) {
            return Err(shape_err(format!("bilinear matrix is {:?}", bad.shape())));
        }
        if c.ncols() != dim || c.nrows() == 0 {
            return Err(shape_err(format!("C is {}x{}", c.nrows(), c.ncols())));
        }
        for m in std::iter::once(&a).chain(&n).chain([&b, &c]) {
            crate::linalg::ensure_finite("QB system matrix", m)?;
        }
        Ok(Self { a, h: h.symmetrize(), n, b, c })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }
    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }
    pub fn h(&self) -> &SparseTensor3 {
        &self.h
    }
    pub fn n(&self) -> &[DenseMatrix] {
        &self.n
    }
    pub fn b(&self) -> &DenseMatrix {
        &self.b
    }
    pub fn c(&self) -> &DenseMatrix {
        &self.c
    }

    /// `A x + H(x ⊗ x) + Σ u_k N_k x + B u`.
    pub fn rhs(&self, x: &DenseVector, u: &DenseVector) -> Result<DenseVector> {
        if x.len() != self.dim() || u.len() != self.inputs() {
            return Err(Error::Shape {
                op: "rhs",
                detail: format!("state {} (expected {}), input {} (expected {})", x.len(), self.dim(), u.len(), self.inputs()),
            });
        }
        let mut out = &self.a * x + &self.b * u;
        self.h.apply_add(x.as_slice(), x.as_slice(), out.as_mut_slice());
        for (nk, uk) in self.n.iter().zip(u.iter()) {
            out += nk * x * *uk;
        }
        Ok(out)
    }

    pub fn output(&self, x: &DenseVector) -> DenseVector {
        &self.c * x
    }

    /// Fixed-step RK4 simulation from `x0` under input `u(t)`.
    pub fn simulate<U>(&self, u: U, x0: &DenseVector, grid: TimeGrid) -> Result<Trajectory>
    where
        U: Fn(f64) -> DenseVector,
    {
        if x0.len() != self.dim() {
            return Err(Error::Shape {
                op: "simulate",
                detail: format!("initial state has length {}, expected {}", x0.len(), self.dim()),
            });
        }
        let fast = FastRhs::new(self);
        let m = self.inputs();
        let mut traj = Trajectory::default();
        let mut u_err = None;
        rk4(
            |t, x, dx| {
                let ut = u(t);
                if ut.len() != m {
                    u_err.get_or_insert(ut.len());
                    dx.fill(0.0);
                    return;
                }
                fast.eval(x, ut.as_slice(), dx);
            },
            x0.as_slice(),
            grid,
            |t, x| {
                let xv = DenseVector::from_column_slice(x);
                traj.times.push(t);
                traj.outputs.push(self.output(&xv));
                traj.states.push(xv);
            },
        )?;
        if let Some(len) = u_err {
            return Err(Error::Shape { op: "simulate", detail: format!("input function returned length {len}, expected {m}") });
        }
        Ok(traj)
    }
}

/// Sparse copies of the operators for time stepping.
struct FastRhs<'a> {
    a: Csr,
    n: Vec<Csr>,
    b: &'a DenseMatrix,
    h: &'a SparseTensor3,
}

impl<'a> FastRhs<'a> {
    fn new(sys: &'a QBSystem) -> Self {
        Self { a: Csr::from_dense(&sys.a), n: sys.n.iter().map(Csr::from_dense).collect(), b: &sys.b, h: &sys.h }
    }

    fn eval(&self, x: &[f64], u: &[f64], dx: &mut [f64]) {
        dx.fill(0.0);
        self.a.mul_add(x, 1.0, dx);
        self.h.apply_add(x, x, dx);
        for (k, &uk) in u.iter().enumerate() {
            if uk != 0.0 {
                self.n[k].mul_add(x, uk, dx);
            }
            for (i, d) in dx.iter_mut().enumerate() {
                *d += self.b[(i, k)] * uk;
            }
        }
    }
}

/// Auxiliary coordinate `aux` equals the product of lifted coordinates
/// `p` and `q` on the lifted manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LiftDef {
    pub aux: usize,
    pub p: usize,
    pub q: usize,
}

/// QB system with the lifted block structure: original coordinates
/// `0..n1` evolve linearly, auxiliary coordinates `n1..N` carry all
/// quadratic and bilinear terms and have no linear part.
#[derive(Debug, Clone)]
pub struct StructuredQB {
    sys: QBSystem,
    n1: usize,
    lift_defs: Vec<LiftDef>,
}

impl StructuredQB {
    pub fn system(&self) -> &QBSystem {
        &self.sys
    }
    pub fn n1(&self) -> usize {
        self.n1
    }
    pub fn n2(&self) -> usize {
        self.sys.dim() - self.n1
    }
    pub fn lift_defs(&self) -> &[LiftDef] {
        &self.lift_defs
    }

    pub fn a11(&self) -> DenseMatrix {
        self.sys.a.view((0, 0), (self.n1, self.n1)).into_owned()
    }
    pub fn a12(&self) -> DenseMatrix {
        self.sys.a.view((0, self.n1), (self.n1, self.n2())).into_owned()
    }
    pub fn b1(&self) -> DenseMatrix {
        self.sys.b.rows(0, self.n1).into_owned()
    }
    pub fn c1(&self) -> DenseMatrix {
        self.sys.c.columns(0, self.n1).into_owned()
    }
    /// Lower-left blocks `N21` of every bilinear matrix.
    pub fn n21(&self) -> Vec<DenseMatrix> {
        self.sys.n.iter().map(|nk| nk.view((self.n1, 0), (self.n2(), self.n1)).into_owned()).collect()
    }
    /// Lower-right blocks `N22` of every bilinear matrix.
    pub fn n22(&self) -> Vec<DenseMatrix> {
        self.sys.n.iter().map(|nk| nk.view((self.n1, self.n1), (self.n2(), self.n2())).into_owned()).collect()
    }

    /// Attach quadratic lift definitions, one per auxiliary coordinate.
    pub fn with_lift_defs(mut self, defs: Vec<LiftDef>) -> Result<Self> {
        let dim = self.sys.dim();
        let mut seen = vec![false; dim];
        for d in &defs {
            if d.aux < self.n1 || d.aux >= dim || d.p >= dim || d.q >= dim {
                return Err(Error::InvalidArgument(format!("lift definition {d:?} out of range")));
            }
            if std::mem::replace(&mut seen[d.aux], true) {
                return Err(Error::InvalidArgument(format!("auxiliary {} defined twice", d.aux)));
            }
        }
        self.lift_defs = defs;
        Ok(self)
    }

    /// Apply the artificial stabilization `-α w + α (x_p x_q)` to every
    /// auxiliary row.
    pub fn stabilize(&self, alpha: f64) -> Result<StabilizedQB> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        let dim = self.sys.dim();
        let mut defined = vec![None; dim];
        for d in &self.lift_defs {
            defined[d.aux] = Some(*d);
        }
        let mut extra = Vec::with_capacity(self.n2());
        for (aux, def) in defined.iter().enumerate().skip(self.n1) {
            let d = def.ok_or(Error::MissingLiftDef { index: aux })?;
            extra.push(Entry { i: aux, j: d.p, k: d.q, v: alpha });
        }
        let h_tilde = SparseTensor3::from_entries(dim, extra)?;
        let h_alpha = self.sys.h.add(&h_tilde)?.symmetrize();
        let mut a_alpha = self.sys.a.clone();
        for aux in self.n1..dim {
            a_alpha[(aux, aux)] = -alpha;
        }
        Ok(StabilizedQB { base: self.clone(), alpha, a_alpha, h_alpha })
    }
}

fn nonzero(m: nalgebra::DMatrixView<'_, f64>) -> bool {
    m.iter().any(|&v| v != 0.0)
}

/// Check the lifted block structure with exact zeros and extract blocks.
pub fn partition(sys: &QBSystem, n1: usize) -> Result<StructuredQB> {
    let dim = sys.dim();
    if n1 == 0 || n1 > dim {
        return Err(Error::InvalidArgument(format!("n1 = {n1} must lie in 1..={dim}")));
    }
    let n2 = dim - n1;
    let block = |name: &str| Err(Error::Structure { block: name.to_string() });
    if nonzero(sys.a.view((n1, 0), (n2, n1))) {
        return block("A21");
    }
    if nonzero(sys.a.view((n1, n1), (n2, n2))) {
        return block("A22");
    }
    if sys.h.entries().iter().any(|e| e.i < n1) {
        return block("H1 (quadratic rows of original coordinates)");
    }
    for (k, nk) in sys.n.iter().enumerate() {
        if nonzero(nk.view((0, 0), (n1, dim))) {
            return block(&format!("N{}[1:n1, :]", k + 1));
        }
    }
    if nonzero(sys.b.view((n1, 0), (n2, sys.inputs()))) {
        return block("B2");
    }
    if nonzero(sys.c.view((0, n1), (sys.outputs(), n2))) {
        return block("C2");
    }
    Ok(StructuredQB { sys: sys.clone(), n1, lift_defs: Vec::new() })
}

/// Structured system with `A(α) = [[A11, A12], [0, -αI]]` and
/// `H(α) = H + H̃(α)`.
#[derive(Debug, Clone)]
pub struct StabilizedQB {
    base: StructuredQB,
    alpha: f64,
    a_alpha: DenseMatrix,
    h_alpha: SparseTensor3,
}

impl StabilizedQB {
    pub fn base(&self) -> &StructuredQB {
        &self.base
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn a_alpha(&self) -> &DenseMatrix {
        &self.a_alpha
    }
    pub fn h_alpha(&self) -> &SparseTensor3 {
        &self.h_alpha
    }

    /// The stabilized operators packaged as a plain QB system.
    pub fn system(&self) -> QBSystem {
        let s = &self.base.sys;
        QBSystem { a: self.a_alpha.clone(), h: self.h_alpha.clone(), n: s.n.clone(), b: s.b.clone(), c: s.c.clone() }
    }
}
