//! Tubular reactor discretization, equilibria and lifted structure.

use qbbt::linalg::spectral_abscissa;
use qbbt::reactor::{assemble_fom, lifted_input, taylor_arrhenius, ReactorConfig, ReactorFom};
use qbbt::{partition, DenseVector, TimeGrid};

fn fom(n: usize) -> ReactorFom {
    assemble_fom(&ReactorConfig::default().with_n(n)).unwrap()
}

fn uniform(n: usize, psi: f64, theta: f64) -> DenseVector {
    DenseVector::from_fn(2 * n, |i, _| if i < n { psi } else { theta })
}

#[test]
fn taylor_coefficients_match_derivative_oracle() {
    let gamma: f64 = 5.0;
    // Derivatives of exp(γ - γ/θ) at θ = 1, then expand Σ d_k/k! (θ-1)^k
    // into monomials.
    let d = [1.0, gamma, gamma * gamma - 2.0 * gamma, gamma.powi(3) - 6.0 * gamma * gamma + 6.0 * gamma];
    let t = [d[0], d[1], d[2] / 2.0, d[3] / 6.0];
    let binom = |n: i32, k: i32| (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64);
    let mut want = [0.0; 4];
    for (k, tk) in t.iter().enumerate() {
        for (j, w) in want.iter_mut().enumerate().take(k + 1) {
            *w += tk * binom(k as i32, j as i32) * (-1.0f64).powi((k - j) as i32);
        }
    }
    let got = taylor_arrhenius(gamma, 1.0).unwrap();
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= 1e-12);
    }
    let frozen = [8.0 / 3.0, -7.5, 5.0, 5.0 / 6.0];
    for (g, f) in got.iter().zip(&frozen) {
        assert!((g - f).abs() <= 1e-12);
    }
    for i in 0..=40 {
        let theta = 0.98 + 0.001 * i as f64;
        let poly = got[0] + got[1] * theta + got[2] * theta * theta + got[3] * theta.powi(3);
        assert!((poly - (gamma - gamma / theta).exp()).abs() <= 0.02);
    }
}

#[test]
fn temperature_operator_is_stable_at_full_scale() {
    assert!(spectral_abscissa(&fom(199).a_theta).unwrap() < 0.0);
}

#[test]
fn pure_transport_equilibrium_is_a_linear_solve() {
    let mut cfg = ReactorConfig::default().with_n(30);
    cfg.damkohler = 0.0;
    let f = assemble_fom(&cfg).unwrap();
    let x = f.steady_state(0.0).unwrap();
    assert!(f.rhs(&x, 0.0).unwrap().amax() <= 1e-12);
    assert_eq!(f.rhs(&x, 0.0).unwrap().len(), 60);
}

/// Exit temperature at equilibrium without reaction under a constant
/// heat input.
fn transport_exit_temperature(n: usize) -> f64 {
    let mut cfg = ReactorConfig::default().with_n(n);
    cfg.damkohler = 0.0;
    let f = assemble_fom(&cfg).unwrap();
    let x = f.steady_state(0.5).unwrap();
    f.output(x.as_slice())
}

#[test]
fn exit_temperature_converges_at_second_order() {
    let y: Vec<f64> = [50, 100, 200, 400, 800].iter().map(|&n| transport_exit_temperature(n)).collect();
    let gaps: Vec<f64> = y.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
    let orders: Vec<f64> = gaps.windows(2).map(|g| (g[0] / g[1]).log2()).collect();
    // The n=100/200 gap is within four times the n=200/400 gap.
    assert!(gaps[1] <= 4.0 * gaps[2], "gaps {gaps:?}");
    // Pre-asymptotic on coarse grids at Pe = 25, then second order.
    assert!(orders.windows(2).all(|o| o[1] > o[0]), "orders {orders:?}");
    assert!(orders[2] >= 1.9, "orders {orders:?}");
}

#[test]
fn constant_input_settles() {
    let f = fom(50);
    let traj = f.simulate(|_| 0.5, &uniform(50, 0.0, 1.0), TimeGrid::new(30.0, 1e-4, 0.01)).unwrap();
    let y = traj.output_series(0);
    assert!((y[3000] - y[2500]).abs() <= 1e-6);
}

#[test]
fn equilibrium_matches_long_time_limit() {
    let f = fom(50);
    let ss = f.steady_state(0.5).unwrap();
    assert!(f.rhs(&ss, 0.5).unwrap().amax() <= 1e-11);
    let traj = f.simulate(|_| 0.5, &uniform(50, 0.0, 1.0), TimeGrid::new(60.0, 1e-4, 1.0)).unwrap();
    assert!((traj.final_state().unwrap() - &ss).amax() <= 1e-6);
}

#[test]
fn lifted_structure() {
    let n = 6;
    let lifted = fom(n).lift().unwrap();
    let sys = &lifted.system;
    assert_eq!(sys.dim(), 7 * n);
    assert_eq!(sys.inputs(), 2);
    let st = partition(sys, 2 * n).unwrap();
    assert_eq!(st.n2(), 5 * n);
    for nk in sys.n() {
        assert!(nk.rows(0, 2 * n).iter().all(|&v| v == 0.0));
    }
    assert!(sys.h().entries().iter().all(|e| e.i >= 2 * n));
    assert!(sys.b().rows(2 * n, 5 * n).iter().all(|&v| v == 0.0));
    assert_eq!(sys.c()[(0, 2 * n - 1)], 1.0);
    assert_eq!(sys.c().iter().filter(|&&v| v != 0.0).count(), 1);
}

#[test]
fn constant_input_channel_carries_boundary_sources() {
    let n = 7;
    let f = fom(n);
    let sys = f.lift().unwrap().system;
    let zero = DenseVector::zeros(7 * n);
    assert!(sys.rhs(&zero, &DenseVector::zeros(2)).unwrap().iter().all(|&v| v == 0.0));
    let forced = sys.rhs(&zero, &lifted_input(0.0)).unwrap();
    assert_eq!(forced.rows(0, n), f.b_psi.rows(0, n));
    assert_eq!(forced.rows(n, n), f.b_theta.rows(0, n));
    assert!(forced.rows(2 * n, 5 * n).iter().all(|&v| v == 0.0));
}

#[test]
fn tensor_nonzeros_grow_linearly() {
    let nnz: Vec<usize> = [10, 20, 40, 80].iter().map(|&n| fom(n).lift().unwrap().system.h().nnz()).collect();
    let steps: Vec<usize> = nnz.windows(2).map(|w| w[1] - w[0]).collect();
    assert_eq!(steps[1], 2 * steps[0]);
    assert_eq!(steps[2], 2 * steps[1]);
}
