//! Structured truncated Gramians against full-dimension Kronecker solves.

mod common;

use common::*;
use qbbt::gramians::{assemble, dense_truncated_oracle, linear_gramians, TruncatedGramians};
use qbbt::linalg::audit::audit_lyapunov_solves;
use qbbt::linalg::{psd_factor, solve_lyapunov, solve_lyapunov_transposed, DEFAULT_PSD_REL_TOL};
use qbbt::reactor::{assemble_fom, ReactorConfig};
use qbbt::StructuredQB;

const ALPHAS: [f64; 4] = [0.5, 1.0, 5.0, 20.0];

fn reactor(n: usize) -> StructuredQB {
    assemble_fom(&ReactorConfig::default().with_n(n)).unwrap().lift().unwrap().structured().unwrap()
}

fn check_against_kronecker(s: &StructuredQB, alpha: f64, tol: f64) {
    let stab = s.stabilize(alpha).unwrap();
    let (p, q) = assemble(&TruncatedGramians::compute(&stab).unwrap());
    let (p_ref, q_ref) = kronecker_truncated_gramians(&stab.system());
    let (ep, eq) = (rel_err(&p, &p_ref), rel_err(&q, &q_ref));
    assert!(ep <= tol && eq <= tol, "alpha {alpha}: P err {ep:.2e}, Q err {eq:.2e}");
}

#[test]
fn synthetic_system_matches_kronecker_oracle() {
    let s = synthetic_structured(42, 4, 6, 8, 2);
    for alpha in ALPHAS {
        check_against_kronecker(&s, alpha, 1e-8);
    }
}

#[test]
fn reactor_matches_kronecker_oracle() {
    let s = reactor(5);
    for alpha in ALPHAS {
        check_against_kronecker(&s, alpha, 1e-7);
    }
}

#[test]
fn library_oracle_agrees_with_test_oracle() {
    let s = synthetic_structured(9, 3, 5, 10, 1);
    let sys = s.stabilize(2.0).unwrap().system();
    let (p, q) = dense_truncated_oracle(&sys).unwrap();
    let (p_ref, q_ref) = kronecker_truncated_gramians(&sys);
    assert!(rel_err(&p, &p_ref) <= 1e-10);
    assert!(rel_err(&q, &q_ref) <= 1e-10);
}

#[test]
fn linear_gramians_match_full_dimension_solves() {
    let stab = reactor(10).stabilize(20.0).unwrap();
    let lin = linear_gramians(&stab).unwrap();
    let sys = stab.system();
    let p_ref = solve_lyapunov(sys.a(), &(sys.b() * sys.b().transpose())).unwrap();
    let q_ref = solve_lyapunov_transposed(sys.a(), &(sys.c().transpose() * sys.c())).unwrap();
    assert!(rel_err(&lin.p1(), &p_ref) <= 1e-8);
    assert!(rel_err(&lin.q1(), &q_ref) <= 1e-8);
}

#[test]
fn structured_pipeline_solves_only_original_dimension() {
    let stab = reactor(50).stabilize(20.0).unwrap();
    let (tg, dims) = audit_lyapunov_solves(|| TruncatedGramians::compute(&stab));
    tg.unwrap();
    assert!(!dims.is_empty());
    assert!(dims.iter().all(|&d| d <= 100), "solve dimensions {dims:?}");
}

#[test]
fn zero_corrections_assemble_to_linear_gramian() {
    let stab = synthetic_structured(4, 3, 4, 6, 1).stabilize(1.0).unwrap();
    let mut tg = TruncatedGramians::compute(&stab).unwrap();
    for m in [&mut tg.controllability.pt11, &mut tg.controllability.pt12, &mut tg.controllability.pt22] {
        m.fill(0.0);
    }
    let (p, _) = assemble(&tg);
    let n1 = 3;
    assert_eq!(p.view((0, 0), (n1, n1)).into_owned(), tg.linear.p11);
    assert!(p.view((n1, 0), (4, 7)).iter().chain(p.view((0, n1), (7, 4)).iter()).all(|&v| v == 0.0));
}

#[test]
fn assembled_gramian_factor_reconstructs() {
    let stab = reactor(5).stabilize(20.0).unwrap();
    let (p, q) = assemble(&TruncatedGramians::compute(&stab).unwrap());
    for s in [p, q] {
        let f = psd_factor(&s, DEFAULT_PSD_REL_TOL).unwrap();
        let recon = &f.factor * f.factor.transpose();
        assert!((recon - &s).norm() <= 1e-10 * s.norm());
    }
}
