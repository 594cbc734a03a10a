//! Sparse tensor contractions against explicit Kronecker products.

mod common;

use common::*;
use proptest::prelude::*;
use qbbt::lifting::{example2_system, lift_poly_scalar};
use qbbt::reactor::{assemble_fom, ReactorConfig};
use qbbt::tensor3::{pair_contract_mode1, pair_contract_mode2, project};
use qbbt::{DenseMatrix, DenseVector, SparseTensor3};

const TOL: f64 = 1e-12;

/// Seeded fixtures of every size up to 20 plus the two lifting examples.
fn fixtures() -> Vec<SparseTensor3> {
    let mut out = Vec::new();
    for (seed, n) in (1..=20).enumerate() {
        let mut r = rng(100 + seed as u64);
        out.push(random_tensor(&mut r, n, 2 * n + 3));
    }
    let mut r = rng(7);
    out.push(random_tensor(&mut r, 6, 10).symmetrize());
    out.push(example2_system(-1.0, 1.0).unwrap().raw_h);
    out.push(lift_poly_scalar(&[0.0, 0.0, 1.0], 1.0).unwrap().raw_h);
    out
}

#[test]
fn apply_quadratic_matches_kronecker_vector() {
    for (idx, t) in fixtures().iter().enumerate() {
        let n = t.dim();
        let mut r = rng(200 + idx as u64);
        let x = DenseVector::from_fn(n, |_, _| rand::Rng::random_range(&mut r, -1.0..1.0));
        let y = DenseVector::from_fn(n, |_, _| rand::Rng::random_range(&mut r, -1.0..1.0));
        let got = t.apply_quadratic(&x, &y).unwrap();
        let want = mode1(t) * kron_vec(&x, &y);
        assert!((&got - &want).norm() <= TOL * want.norm().max(1.0), "fixture {idx} (N={n})");
    }
}

#[test]
fn reactor_tensor_matches_dense_matricization() {
    let lifted = assemble_fom(&ReactorConfig::default().with_n(5)).unwrap().lift().unwrap();
    let h = lifted.system.h();
    let mut r = rng(11);
    let x = DenseVector::from_fn(h.dim(), |_, _| rand::Rng::random_range(&mut r, -1.0..1.0));
    let got = h.apply_quadratic(&x, &x).unwrap();
    let want = h.dense_mode1().unwrap() * kron_vec(&x, &x);
    assert!((&got - &want).norm() <= 1e-13 * want.norm());
    assert_eq!(h.dense_mode1().unwrap(), mode1(h));
    assert_eq!(h.dense_mode2().unwrap(), mode2(h));
}

#[test]
fn symmetrized_example_keeps_quadratic_value() {
    let raw = lift_poly_scalar(&[0.0, 0.0, 1.0], 1.0).unwrap().raw_h;
    let x = DenseVector::from_element(3, 1.0);
    let before = raw.apply_quadratic(&x, &x).unwrap();
    let after = raw.symmetrize().apply_quadratic(&x, &x).unwrap();
    assert_eq!(before, nalgebra::dvector![0.0, 2.0, 3.0]);
    assert!((before - after).norm() < 1e-15);
}

#[test]
fn pair_contractions_match_kronecker_products() {
    let fx = fixtures();
    for (idx, t1) in fx.iter().enumerate() {
        let n = t1.dim();
        let mut r = rng(300 + idx as u64);
        let t2 = random_tensor(&mut r, n, n + 2);
        let (p, q) = (random_spd(&mut r, n), random_spd(&mut r, n));
        let g1 = pair_contract_mode1(t1, &t2, &p, &q).unwrap();
        let want1 = mode1(t1) * kron(&p, &q) * mode1(&t2).transpose();
        assert!(rel_err(&g1, &want1) <= TOL || want1.norm() == 0.0 && g1.norm() == 0.0, "mode1 fixture {idx}");
        let g2 = pair_contract_mode2(t1, &t2, &p, &q).unwrap();
        let want2 = mode2(t1) * kron(&p, &q) * mode2(&t2).transpose();
        assert!(rel_err(&g2, &want2) <= TOL || want2.norm() == 0.0 && g2.norm() == 0.0, "mode2 fixture {idx}");
    }
}

#[test]
fn contraction_skips_zero_blocks_exactly() {
    // P supported on the leading block only, as for linear Gramians of
    // lifted systems.
    let mut r = rng(5);
    let t = random_tensor(&mut r, 9, 40);
    let mut p = DenseMatrix::zeros(9, 9);
    p.view_mut((0, 0), (3, 3)).copy_from(&random_spd(&mut r, 3));
    let g = pair_contract_mode1(&t, &t, &p, &p).unwrap();
    let want = mode1(&t) * kron(&p, &p) * mode1(&t).transpose();
    assert!(rel_err(&g, &want) <= TOL);
}

#[test]
fn projection_matches_kronecker_product() {
    for (idx, t) in fixtures().iter().enumerate() {
        let n = t.dim();
        let r = n.min(3);
        let mut g = rng(400 + idx as u64);
        let w = uniform_matrix(&mut g, n, r, -1.0, 1.0);
        let v = uniform_matrix(&mut g, n, r, -1.0, 1.0);
        let got = project(t, &w, &v).unwrap();
        let want = w.transpose() * mode1(t) * kron(&v, &v);
        assert!((&got - &want).norm() <= TOL * want.norm().max(1.0), "fixture {idx}");
    }
}

fn arb_tensor() -> impl Strategy<Value = SparseTensor3> {
    (2usize..7).prop_flat_map(|n| {
        prop::collection::vec((0..n, 0..n, 0..n, -3.0f64..3.0), 0..12).prop_map(move |raw| {
            SparseTensor3::from_entries(n, raw.into_iter().map(|(i, j, k, v)| qbbt::Entry { i, j, k, v })).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn symmetrize_preserves_quadratic_form(t in arb_tensor(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = DenseVector::from_fn(t.dim(), |_, _| rand::Rng::random_range(&mut r, -2.0..2.0));
        let s = t.symmetrize();
        prop_assert!(s.is_symmetric(1e-14));
        let a = t.apply_quadratic(&x, &x).unwrap();
        let b = s.apply_quadratic(&x, &x).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + x.norm().powi(2)));
    }

    #[test]
    fn self_contraction_is_symmetric_psd(t in arb_tensor(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_spd(&mut r, t.dim());
        let g = pair_contract_mode1(&t, &t, &p, &p).unwrap();
        prop_assert!((&g - g.transpose()).norm() <= 1e-12 * (1.0 + g.norm()));
        let min_eig = nalgebra::SymmetricEigen::new((&g + g.transpose()) * 0.5).eigenvalues.min();
        prop_assert!(min_eig >= -1e-10 * (1.0 + g.norm()));
    }

    #[test]
    fn contractions_are_bilinear_in_weights(t in arb_tensor(), seed in any::<u64>(), s in 0.1f64..3.0) {
        let mut r = rng(seed);
        let n = t.dim();
        let (p, q) = (random_spd(&mut r, n), random_spd(&mut r, n));
        let base = pair_contract_mode2(&t, &t, &p, &q).unwrap();
        let scaled = pair_contract_mode2(&t, &t, &(&p * s), &q).unwrap();
        prop_assert!((scaled - base * s).norm() <= 1e-12 * (1.0 + s));
    }
}
