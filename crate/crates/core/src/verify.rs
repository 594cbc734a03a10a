//! Self-check suites behind the command-line `oracle` and `lift-check`
//! entry points. Each check reports a measured discrepancy and the
//! tolerance it must meet.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::gramians::{assemble, dense_truncated_oracle, TruncatedGramians};
use crate::integrate::{rk4, TimeGrid};
use crate::lifting::{example2_system, lift_poly_scalar};
use crate::linalg::{rel_frobenius_error, DenseMatrix, DenseVector};
use crate::qbsys::{partition, LiftDef, QBSystem, StructuredQB};
use crate::reactor::{assemble_fom, lifted_input, ReactorConfig};
use crate::tensor3::{pair_contract_mode1, pair_contract_mode2, Entry, SparseTensor3};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tol: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.tol
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed() { "ok  " } else { "FAIL" };
        write!(f, "{tag} {:<48} {:.3e} (tol {:.0e})", self.name, self.value, self.tol)
    }
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// Seeded structured system: stable `A11`, dense `A12`, quadratic and
/// bilinear terms confined to auxiliary rows, inputs and output on the
/// original block.
pub fn synthetic_structured(seed: u64, n1: usize, n2: usize, h_nnz: usize, m: usize) -> Result<StructuredQB> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n1 + n2;
    let mut a = DenseMatrix::zeros(n, n);
    let a11 = uniform(&mut rng, n1, n1, 0.0, 1.0) - DenseMatrix::identity(n1, n1) * (n1 as f64 + 1.0);
    a.view_mut((0, 0), (n1, n1)).copy_from(&a11);
    a.view_mut((0, n1), (n1, n2)).copy_from(&uniform(&mut rng, n1, n2, -0.5, 0.5));
    let entries: Vec<Entry> = (0..h_nnz)
        .map(|_| Entry {
            i: rng.random_range(n1..n),
            j: rng.random_range(0..n),
            k: rng.random_range(0..n),
            v: rng.random_range(-1.0..1.0),
        })
        .collect();
    let h = SparseTensor3::from_entries(n, entries)?;
    let nk = (0..m)
        .map(|_| {
            let mut nm = DenseMatrix::zeros(n, n);
            nm.view_mut((n1, 0), (n2, n)).copy_from(&uniform(&mut rng, n2, n, -0.5, 0.5));
            nm
        })
        .collect();
    let mut b = DenseMatrix::zeros(n, m);
    b.view_mut((0, 0), (n1, m)).copy_from(&uniform(&mut rng, n1, m, -1.0, 1.0));
    let mut c = DenseMatrix::zeros(1, n);
    c.view_mut((0, 0), (1, n1)).copy_from(&uniform(&mut rng, 1, n1, -1.0, 1.0));
    let sys = QBSystem::new(a, h, nk, b, c)?;
    let defs = (n1..n).map(|aux| LiftDef { aux, p: (aux - n1) % n1, q: (aux - n1 + 1) % n1 }).collect();
    partition(&sys, n1)?.with_lift_defs(defs)
}

/// Structured truncated Gramians against the dense full-dimension
/// reference, on a synthetic system and the small lifted reactor.
pub fn gramian_suite(alphas: &[f64], tol: f64) -> Result<Vec<Check>> {
    let systems = [
        ("synthetic(4,6)", synthetic_structured(1, 4, 6, 8, 2)?),
        ("reactor(n=5)", assemble_fom(&ReactorConfig::default().with_n(5))?.lift()?.structured()?),
    ];
    let mut out = Vec::new();
    for (label, s) in &systems {
        for &alpha in alphas {
            let stab = s.stabilize(alpha)?;
            let (p, q) = assemble(&TruncatedGramians::compute(&stab)?);
            let (po, qo) = dense_truncated_oracle(&stab.system())?;
            out.push(Check { name: format!("gramian P {label} alpha={alpha}"), value: rel_frobenius_error(&p, &po), tol });
            out.push(Check { name: format!("gramian Q {label} alpha={alpha}"), value: rel_frobenius_error(&q, &qo), tol });
        }
    }
    Ok(out)
}

/// Sparse tensor contractions against explicit Kronecker products for
/// every dimension up to `max_dim`.
pub fn tensor_suite(seed: u64, max_dim: usize, tol: f64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 3];
    for n in 1..=max_dim {
        let nnz = 3 * n;
        let mut tensor = || -> Result<SparseTensor3> {
            let entries: Vec<Entry> = (0..nnz)
                .map(|_| Entry {
                    i: rng.random_range(0..n),
                    j: rng.random_range(0..n),
                    k: rng.random_range(0..n),
                    v: rng.random_range(-2.0..2.0),
                })
                .collect();
            SparseTensor3::from_entries(n, entries)
        };
        let (t1, t2) = (tensor()?, tensor()?);
        let gp = uniform(&mut rng, n, n, -1.0, 1.0);
        let gq = uniform(&mut rng, n, n, -1.0, 1.0);
        let (p, q) = (&gp * gp.transpose(), &gq * gq.transpose());
        let kron = p.kronecker(&q);
        let rel = |a: &DenseMatrix, b: &DenseMatrix| rel_frobenius_error(a, b);
        let m1 = t1.dense_mode1()? * &kron * t2.dense_mode1()?.transpose();
        worst[0] = worst[0].max(rel(&pair_contract_mode1(&t1, &t2, &p, &q)?, &m1));
        let m2 = t1.dense_mode2()? * &kron * t2.dense_mode2()?.transpose();
        worst[1] = worst[1].max(rel(&pair_contract_mode2(&t1, &t2, &p, &q)?, &m2));
        let x = DenseVector::from_fn(n, |i, _| ((i + 1) as f64).sin());
        let y = DenseVector::from_fn(n, |i, _| ((i + 2) as f64).cos());
        let dense = t1.dense_mode1()? * x.kronecker(&y);
        let sparse = t1.apply_quadratic(&x, &y)?;
        worst[2] = worst[2].max((&sparse - &dense).norm() / dense.norm().max(f64::MIN_POSITIVE));
    }
    Ok(vec![
        Check { name: format!("pair contraction mode 1, N <= {max_dim}"), value: worst[0], tol },
        Check { name: format!("pair contraction mode 2, N <= {max_dim}"), value: worst[1], tol },
        Check { name: format!("quadratic apply, N <= {max_dim}"), value: worst[2], tol },
    ])
}

fn rel_series(y: &[f64], y_ref: &[f64]) -> f64 {
    let num: f64 = y.iter().zip(y_ref).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let den: f64 = y_ref.iter().map(|b| b * b).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

fn direct_scalar(f: impl Fn(f64, f64) -> f64, x0: f64, grid: TimeGrid) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    rk4(|t, x, dx| dx[0] = f(t, x[0]), &[x0], grid, |_, x| out.push(x[0]))?;
    Ok(out)
}

/// Lifted simulations against direct integration of the original
/// nonlinear equations over `[0, t_end]`.
pub fn lifting_suite(reactor_n: usize, t_end: f64, tol: f64) -> Result<Vec<Check>> {
    let grid = TimeGrid::new(t_end, 1e-4, 0.01);
    let mut out = Vec::new();

    let cubic = lift_poly_scalar(&[0.0, 0.0, -1.0], 1.0)?;
    let z0 = cubic.spec.lift_state(&DenseVector::from_element(1, 0.5))?;
    let y = cubic.system.simulate(|t| DenseVector::from_element(1, t.cos()), &z0, grid)?.output_series(0);
    let direct = direct_scalar(|t, x| -x * x * x + t.cos(), 0.5, grid)?;
    out.push(Check { name: "cubic scalar lift".into(), value: rel_series(&y, &direct), tol });

    let expo = example2_system(-1.0, 0.5)?;
    let z0 = expo.spec.lift_state(&DenseVector::from_element(1, 0.2))?;
    let y = expo.system.simulate(|t| DenseVector::from_element(1, t.sin()), &z0, grid)?.output_series(0);
    let direct = direct_scalar(|t, x| -x + (-x).exp() + 0.5 * t.sin(), 0.2, grid)?;
    out.push(Check { name: "exponential scalar lift".into(), value: rel_series(&y, &direct), tol });

    let fom = assemble_fom(&ReactorConfig::default().with_n(reactor_n))?;
    let lifted = fom.lift()?;
    let x0 = fom.steady_state(0.5)?;
    let y_fom = fom.simulate(|t| t.cos(), &x0, grid)?.output_series(0);
    let z0 = lifted.spec.lift_state(&x0)?;
    let y = lifted.system.simulate(|t| lifted_input(t.cos()), &z0, grid)?.output_series(0);
    out.push(Check { name: format!("reactor lift (n={reactor_n})"), value: rel_series(&y, &y_fom), tol });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_at_small_sizes() {
        for c in gramian_suite(&[1.0], 1e-7).unwrap() {
            assert!(c.passed(), "{c}");
        }
        for c in tensor_suite(3, 6, 1e-12).unwrap() {
            assert!(c.passed(), "{c}");
        }
        for c in lifting_suite(5, 0.5, 1e-6).unwrap() {
            assert!(c.passed(), "{c}");
        }
    }

    #[test]
    fn synthetic_is_seeded() {
        let a = synthetic_structured(4, 3, 2, 4, 1).unwrap();
        let b = synthetic_structured(4, 3, 2, 4, 1).unwrap();
        assert_eq!(a.system().a(), b.system().a());
        assert_eq!(a.n1(), 3);
    }
}
