//! Fixtures and brute-force oracles shared by the integration suites.
#![allow(dead_code)]

use nalgebra::DMatrix;
use qbbt::linalg::{solve_lyapunov, solve_lyapunov_transposed};
use qbbt::qbsys::{partition, LiftDef, QBSystem, StructuredQB};
use qbbt::{DenseMatrix, DenseVector, Entry, SparseTensor3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> DenseMatrix {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let g = uniform_matrix(rng, n, n, -1.0, 1.0);
    &g * g.transpose() + DenseMatrix::identity(n, n) * 0.1
}

pub fn random_tensor(rng: &mut ChaCha8Rng, n: usize, nnz: usize) -> SparseTensor3 {
    let entries: Vec<Entry> = (0..nnz)
        .map(|_| Entry {
            i: rng.random_range(0..n),
            j: rng.random_range(0..n),
            k: rng.random_range(0..n),
            v: rng.random_range(-2.0..2.0),
        })
        .collect();
    SparseTensor3::from_entries(n, entries).unwrap()
}

/// Explicit Kronecker product, built entry by entry.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    DMatrix::from_fn(ra * rb, ca * cb, |r, c| a[(r / rb, c / cb)] * b[(r % rb, c % cb)])
}

pub fn kron_vec(x: &DenseVector, y: &DenseVector) -> DenseVector {
    DenseVector::from_fn(x.len() * y.len(), |r, _| x[r / y.len()] * y[r % y.len()])
}

/// `H⁽¹⁾[i, j·N + k] = Σ v` straight from the entry list.
pub fn mode1(t: &SparseTensor3) -> DenseMatrix {
    let n = t.dim();
    let mut m = DenseMatrix::zeros(n, n * n);
    for e in t.entries() {
        m[(e.i, e.j * n + e.k)] += e.v;
    }
    m
}

/// `H⁽²⁾[j, i·N + k] = Σ v` straight from the entry list.
pub fn mode2(t: &SparseTensor3) -> DenseMatrix {
    let n = t.dim();
    let mut m = DenseMatrix::zeros(n, n * n);
    for e in t.entries() {
        m[(e.j, e.i * n + e.k)] += e.v;
    }
    m
}

pub fn rel_err(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Seeded structured system with `n1` original and `n2` auxiliary
/// coordinates: stable `A11`, dense `A12`, `h_nnz` quadratic entries
/// confined to auxiliary rows, bilinear coupling in auxiliary rows only.
pub fn synthetic_structured(seed: u64, n1: usize, n2: usize, h_nnz: usize, m: usize) -> StructuredQB {
    let mut rng = rng(seed);
    let n = n1 + n2;
    let mut a = DenseMatrix::zeros(n, n);
    let a11 = uniform_matrix(&mut rng, n1, n1, 0.0, 1.0) - DenseMatrix::identity(n1, n1) * (n1 as f64 + 1.0);
    a.view_mut((0, 0), (n1, n1)).copy_from(&a11);
    a.view_mut((0, n1), (n1, n2)).copy_from(&uniform_matrix(&mut rng, n1, n2, -0.5, 0.5));
    let entries: Vec<Entry> = (0..h_nnz)
        .map(|_| Entry {
            i: rng.random_range(n1..n),
            j: rng.random_range(0..n),
            k: rng.random_range(0..n),
            v: rng.random_range(-1.0..1.0),
        })
        .collect();
    let h = SparseTensor3::from_entries(n, entries).unwrap();
    let nk = (0..m)
        .map(|_| {
            let mut nm = DenseMatrix::zeros(n, n);
            nm.view_mut((n1, 0), (n2, n)).copy_from(&uniform_matrix(&mut rng, n2, n, -0.5, 0.5));
            nm
        })
        .collect();
    let mut b = DenseMatrix::zeros(n, m);
    b.view_mut((0, 0), (n1, m)).copy_from(&uniform_matrix(&mut rng, n1, m, -1.0, 1.0));
    let mut c = DenseMatrix::zeros(1, n);
    c.view_mut((0, 0), (1, n1)).copy_from(&uniform_matrix(&mut rng, 1, n1, -1.0, 1.0));
    let sys = QBSystem::new(a, h, nk, b, c).unwrap();
    let defs = (n1..n).map(|aux| LiftDef { aux, p: (aux - n1) % n1, q: (aux - n1 + 1) % n1 }).collect();
    partition(&sys, n1).unwrap().with_lift_defs(defs).unwrap()
}

/// Truncated Gramians of `sys` by full-dimension Kronecker algebra:
/// `A P + P Aᵀ + H⁽¹⁾(P1⊗P1)H⁽¹⁾ᵀ + Σ N P1 Nᵀ + BBᵀ = 0` and its dual.
/// In the dual term `Q1` weights the output index `i`, which is the major
/// index of the `mode2` layout above, hence `Q1 ⊗ P1`.
pub fn kronecker_truncated_gramians(sys: &QBSystem) -> (DenseMatrix, DenseMatrix) {
    let a = sys.a();
    let bbt = sys.b() * sys.b().transpose();
    let ctc = sys.c().transpose() * sys.c();
    let p1 = solve_lyapunov(a, &bbt).unwrap();
    let q1 = solve_lyapunov_transposed(a, &ctc).unwrap();
    let h1 = mode1(sys.h());
    let h2 = mode2(sys.h());
    let mut rhs_p = &h1 * kron(&p1, &p1) * h1.transpose() + &bbt;
    let mut rhs_q = &h2 * kron(&q1, &p1) * h2.transpose() + &ctc;
    for nk in sys.n() {
        rhs_p += nk * &p1 * nk.transpose();
        rhs_q += nk.transpose() * &q1 * nk;
    }
    let sym = |m: DenseMatrix| (&m + m.transpose()) * 0.5;
    (
        solve_lyapunov(a, &sym(rhs_p)).unwrap(),
        solve_lyapunov_transposed(a, &sym(rhs_q)).unwrap(),
    )
}

/// Fixed-step classical RK4 for a scalar ODE, written independently of the
/// library integrator.
pub fn rk4_scalar(f: impl Fn(f64, f64) -> f64, x0: f64, t_end: f64, dt: f64, every: usize) -> Vec<f64> {
    let steps = (t_end / dt).round() as usize;
    let mut x = x0;
    let mut out = vec![x];
    for s in 0..steps {
        let t = s as f64 * dt;
        let k1 = f(t, x);
        let k2 = f(t + dt / 2.0, x + dt / 2.0 * k1);
        let k3 = f(t + dt / 2.0, x + dt / 2.0 * k2);
        let k4 = f(t + dt, x + dt * k3);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (s + 1) % every == 0 {
            out.push(x);
        }
    }
    out
}
