//! Non-adiabatic tubular reactor: finite-difference full model, steady
//! states, and its exact quadratic-bilinear lift.
//!
//! Grid: `n` unknowns per field at `s_i = i h`, `h = 1/(n+1)`. The inflow
//! ghost value is eliminated with the Robin condition discretized by a
//! second-order forward difference, the outflow ghost value with a
//! second-order backward difference of the Neumann condition. The output is
//! the temperature at the last grid node.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::integrate::{rk4, TimeGrid, Trajectory};
use crate::lifting::{AuxDef, LiftSpec, LiftedSystem};
use crate::linalg::{spectral_abscissa, Csr, DenseMatrix, DenseVector};
use crate::qbsys::QBSystem;
use crate::tensor3::{Entry, SparseTensor3};

#[derive(Debug, Clone, PartialEq)]
pub struct ReactorConfig {
    pub damkohler: f64,
    pub peclet: f64,
    pub heat_of_reaction: f64,
    pub heat_transfer: f64,
    pub theta_ref: f64,
    pub activation_energy: f64,
    /// Grid points per field.
    pub n: usize,
    /// Constant reaction coefficients `c0..c3`; `None` uses the Taylor
    /// expansion of the Arrhenius factor.
    pub reaction_coefficients: Option<[f64; 4]>,
    /// Input influence `b(s)` at the grid nodes; `None` means `b ≡ 1`.
    pub input_profile: Option<Vec<f64>>,
}

impl Default for ReactorConfig {
    fn default() -> Self {
        Self {
            damkohler: 0.17,
            peclet: 25.0,
            heat_of_reaction: 0.5,
            heat_transfer: 2.5,
            theta_ref: 1.0,
            activation_energy: 5.0,
            n: 50,
            reaction_coefficients: None,
            input_profile: None,
        }
    }
}

impl ReactorConfig {
    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidArgument(format!("reactor needs n >= 3, got {}", self.n)));
        }
        if !(self.peclet > 0.0) {
            return Err(Error::InvalidArgument(format!("Peclet number must be positive, got {}", self.peclet)));
        }
        if let Some(b) = &self.input_profile {
            if b.len() != self.n {
                return Err(Error::InvalidArgument(format!("input profile has {} entries, expected {}", b.len(), self.n)));
            }
        }
        let scalars = [
            self.damkohler,
            self.peclet,
            self.heat_of_reaction,
            self.heat_transfer,
            self.theta_ref,
            self.activation_energy,
        ];
        if scalars.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("reactor parameter"));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> Result<[f64; 4]> {
        match self.reaction_coefficients {
            Some(c) => Ok(c),
            None => taylor_arrhenius(self.activation_energy, self.theta_ref),
        }
    }

    /// Update from `key = value` pairs. Unknown keys are rejected.
    pub fn apply_overrides(&mut self, kv: &BTreeMap<String, String>) -> Result<()> {
        let num = |key: &str, v: &str| -> Result<f64> {
            v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("{key}: cannot parse '{v}' as a number")))
        };
        for (key, value) in kv {
            match key.as_str() {
                "damkohler" | "D" => self.damkohler = num(key, value)?,
                "peclet" | "Pe" => self.peclet = num(key, value)?,
                "heat_of_reaction" | "B" => self.heat_of_reaction = num(key, value)?,
                "heat_transfer" | "beta" => self.heat_transfer = num(key, value)?,
                "theta_ref" => self.theta_ref = num(key, value)?,
                "activation_energy" | "gamma" => self.activation_energy = num(key, value)?,
                "n" => {
                    self.n = value.trim().parse().map_err(|_| Error::Parse(format!("n: cannot parse '{value}'")))?
                }
                "reaction_coefficients" => {
                    let parts: Vec<f64> = value.split(',').map(|p| num(key, p)).collect::<Result<_>>()?;
                    let arr: [f64; 4] = parts
                        .try_into()
                        .map_err(|_| Error::Parse("reaction_coefficients needs four comma-separated values".into()))?;
                    self.reaction_coefficients = Some(arr);
                }
                "input_profile" => {
                    let parts: Vec<f64> = value.split(',').map(|p| num(key, p)).collect::<Result<_>>()?;
                    self.input_profile = Some(parts);
                }
                other => return Err(Error::Parse(format!("unknown reactor key '{other}'"))),
            }
        }
        self.validate()
    }

    /// Resolved parameters as `key = value` pairs.
    pub fn to_kv(&self) -> Result<Vec<(String, String)>> {
        let c = self.coefficients()?;
        let mut out = vec![
            ("damkohler".to_string(), format!("{:.16e}", self.damkohler)),
            ("peclet".to_string(), format!("{:.16e}", self.peclet)),
            ("heat_of_reaction".to_string(), format!("{:.16e}", self.heat_of_reaction)),
            ("heat_transfer".to_string(), format!("{:.16e}", self.heat_transfer)),
            ("theta_ref".to_string(), format!("{:.16e}", self.theta_ref)),
            ("activation_energy".to_string(), format!("{:.16e}", self.activation_energy)),
            ("n".to_string(), self.n.to_string()),
            ("reaction_coefficients".to_string(), c.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(",")),
        ];
        out.push((
            "input_profile".to_string(),
            match &self.input_profile {
                Some(b) => b.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(","),
                None => "ones".to_string(),
            },
        ));
        Ok(out)
    }
}

/// Monomial coefficients of the cubic Taylor polynomial of
/// `exp(γ - γ/θ)` about `θ_ref`.
pub fn taylor_arrhenius(gamma: f64, theta_ref: f64) -> Result<[f64; 4]> {
    if !(theta_ref > 0.0) {
        return Err(Error::InvalidArgument(format!("theta_ref must be positive, got {theta_ref}")));
    }
    let t = theta_ref;
    let g = (gamma - gamma / t).exp();
    let d = [
        g,
        g * gamma / t.powi(2),
        g * (gamma.powi(2) / t.powi(4) - 2.0 * gamma / t.powi(3)),
        g * (gamma.powi(3) / t.powi(6) - 6.0 * gamma.powi(2) / t.powi(5) + 6.0 * gamma / t.powi(4)),
    ];
    // Σ_k d_k/k! (θ - t)^k expanded into powers of θ.
    let fact = [1.0, 1.0, 2.0, 6.0];
    let binom = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]];
    let mut c = [0.0; 4];
    for k in 0..4 {
        for j in 0..=k {
            c[j] += d[k] / fact[k] * binom[k][j] * (-t).powi((k - j) as i32);
        }
    }
    Ok(c)
}

/// Discretized operators of the two-field model.
#[derive(Debug, Clone)]
pub struct ReactorFom {
    pub n: usize,
    pub a_psi: DenseMatrix,
    pub a_theta: DenseMatrix,
    pub b_psi: DenseVector,
    pub b_theta: DenseVector,
    pub b: DenseVector,
    pub coeffs: [f64; 4],
    pub damkohler: f64,
    pub heat_of_reaction: f64,
}

/// Advection–diffusion matrix with boundary closure and the constant
/// inflow contribution of the Robin condition.
fn advection_diffusion(n: usize, pe: f64) -> (DenseMatrix, f64) {
    let h = 1.0 / (n as f64 + 1.0);
    let d = 1.0 / (pe * h * h);
    let c = 1.0 / (2.0 * h);
    let (lower, diag, upper) = (d + c, -2.0 * d, d - c);
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = diag;
        if i > 0 {
            a[(i, i - 1)] = lower;
        }
        if i + 1 < n {
            a[(i, i + 1)] = upper;
        }
    }
    let kappa = pe + 3.0 / (2.0 * h);
    a[(0, 0)] += lower * 2.0 / (h * kappa);
    a[(0, 1)] -= lower / (2.0 * h * kappa);
    a[(n - 1, n - 2)] -= upper / 3.0;
    a[(n - 1, n - 1)] += upper * 4.0 / 3.0;
    (a, lower * pe / kappa)
}

pub fn assemble_fom(cfg: &ReactorConfig) -> Result<ReactorFom> {
    cfg.validate()?;
    let n = cfg.n;
    let (l, inflow) = advection_diffusion(n, cfg.peclet);
    let a_psi = l.clone();
    let a_theta = l - DenseMatrix::identity(n, n) * cfg.heat_transfer;
    for (name, m) in [("A_psi", &a_psi), ("A_theta", &a_theta)] {
        let abscissa = spectral_abscissa(m)?;
        if abscissa >= 0.0 {
            log::warn!("{name} is not stable: spectral abscissa {abscissa:e}");
            return Err(Error::NotStable { abscissa });
        }
    }
    let mut b_psi = DenseVector::zeros(n);
    b_psi[0] = inflow;
    let mut b_theta = DenseVector::from_element(n, cfg.heat_transfer * cfg.theta_ref);
    b_theta[0] += inflow;
    let b = match &cfg.input_profile {
        Some(p) => DenseVector::from_column_slice(p),
        None => DenseVector::from_element(n, 1.0),
    };
    Ok(ReactorFom {
        n,
        a_psi,
        a_theta,
        b_psi,
        b_theta,
        b,
        coeffs: cfg.coefficients()?,
        damkohler: cfg.damkohler,
        heat_of_reaction: cfg.heat_of_reaction,
    })
}

impl ReactorFom {
    fn poly(&self, t: f64) -> f64 {
        let c = &self.coeffs;
        c[0] + t * (c[1] + t * (c[2] + t * c[3]))
    }

    fn poly_derivative(&self, t: f64) -> f64 {
        let c = &self.coeffs;
        c[1] + t * (2.0 * c[2] + t * 3.0 * c[3])
    }

    /// Reaction term `ψ ∘ (c0 + c1 θ + c2 θ² + c3 θ³)`.
    pub fn reaction(&self, psi: &[f64], theta: &[f64]) -> DenseVector {
        DenseVector::from_iterator(self.n, psi.iter().zip(theta).map(|(p, t)| p * self.poly(*t)))
    }

    /// Time derivative of the stacked state `[ψ; θ]`.
    pub fn rhs(&self, x: &DenseVector, u: f64) -> Result<DenseVector> {
        if x.len() != 2 * self.n {
            return Err(Error::Shape { op: "reactor rhs", detail: format!("state length {}, expected {}", x.len(), 2 * self.n) });
        }
        let mut out = DenseVector::zeros(2 * self.n);
        self.rhs_into(&self.operators(), x.as_slice(), u, out.as_mut_slice());
        Ok(out)
    }

    fn operators(&self) -> (Csr, Csr) {
        (Csr::from_dense(&self.a_psi), Csr::from_dense(&self.a_theta))
    }

    fn rhs_into(&self, ops: &(Csr, Csr), x: &[f64], u: f64, out: &mut [f64]) {
        let n = self.n;
        let (psi, theta) = x.split_at(n);
        let (dpsi, dtheta) = out.split_at_mut(n);
        dpsi.fill(0.0);
        dtheta.fill(0.0);
        ops.0.mul_add(psi, 1.0, dpsi);
        ops.1.mul_add(theta, 1.0, dtheta);
        for i in 0..n {
            let f = psi[i] * self.poly(theta[i]);
            dpsi[i] += self.b_psi[i] - self.damkohler * f;
            dtheta[i] += self.b_theta[i] + self.b[i] * u + self.heat_of_reaction * self.damkohler * f;
        }
    }

    /// Output: temperature at the last grid node.
    pub fn output(&self, x: &[f64]) -> f64 {
        x[2 * self.n - 1]
    }

    /// RK4 simulation of the nonlinear model from a stacked initial state.
    pub fn simulate<U: Fn(f64) -> f64>(&self, u: U, x0: &DenseVector, grid: TimeGrid) -> Result<Trajectory> {
        if x0.len() != 2 * self.n {
            return Err(Error::Shape { op: "reactor simulate", detail: format!("initial state length {}", x0.len()) });
        }
        let ops = self.operators();
        let mut traj = Trajectory::default();
        rk4(
            |t, x, dx| self.rhs_into(&ops, x, u(t), dx),
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

    /// Newton iteration for the equilibrium under a constant input, started
    /// from `ψ ≡ 1`, `θ ≡ 1`. Converged once the residual is below `1e-11`,
    /// or below the rounding floor of the stencil on very fine grids.
    pub fn steady_state(&self, u: f64) -> Result<DenseVector> {
        const MAX_ITER: usize = 50;
        const TOL: f64 = 1e-11;
        let n = self.n;
        let op_norm = self.a_psi.row_iter().chain(self.a_theta.row_iter()).map(|r| r.abs().sum()).fold(0.0, f64::max);
        let mut x = DenseVector::from_element(2 * n, 1.0);
        let mut history = Vec::new();
        for _ in 0..=MAX_ITER {
            let f = self.rhs(&x, u)?;
            let res = f.amax();
            history.push(res);
            if !res.is_finite() {
                break;
            }
            let floor = 64.0 * f64::EPSILON * op_norm * x.amax();
            if res <= TOL.max(floor) {
                return Ok(x);
            }
            if history.len() > MAX_ITER {
                break;
            }
            let mut jac = DenseMatrix::zeros(2 * n, 2 * n);
            jac.view_mut((0, 0), (n, n)).copy_from(&self.a_psi);
            jac.view_mut((n, n), (n, n)).copy_from(&self.a_theta);
            let (dk, bdk) = (self.damkohler, self.heat_of_reaction * self.damkohler);
            for i in 0..n {
                let (p, t) = (x[i], x[n + i]);
                let (df_dpsi, df_dtheta) = (self.poly(t), p * self.poly_derivative(t));
                jac[(i, i)] -= dk * df_dpsi;
                jac[(i, n + i)] -= dk * df_dtheta;
                jac[(n + i, i)] += bdk * df_dpsi;
                jac[(n + i, n + i)] += bdk * df_dtheta;
            }
            let step = jac.lu().solve(&f).ok_or(Error::Singular("steady-state Jacobian"))?;
            x -= step;
        }
        Err(Error::NoConvergence { history })
    }

    /// Lift to quadratic-bilinear form with state
    /// `[ψ, θ, ψθ, ψθ², ψθ³, θ², θ³]` and inputs `[1, u]`.
    pub fn lift(&self) -> Result<LiftedSystem> {
        let n = self.n;
        let dim = 7 * n;
        let (psi, theta) = (0, n);
        let w = |k: usize| (k + 1) * n; // start of w_k, k = 1..5
        let (dk, bdk) = (self.damkohler, self.heat_of_reaction * self.damkohler);
        let c = self.coeffs;

        let mut a = DenseMatrix::zeros(dim, dim);
        a.view_mut((psi, psi), (n, n)).copy_from(&self.a_psi);
        a.view_mut((theta, theta), (n, n)).copy_from(&self.a_theta);
        for i in 0..n {
            a[(psi + i, psi + i)] -= dk * c[0];
            a[(theta + i, psi + i)] += bdk * c[0];
            for k in 1..=3 {
                a[(psi + i, w(k) + i)] = -dk * c[k];
                a[(theta + i, w(k) + i)] = bdk * c[k];
            }
        }
        let mut bm = DenseMatrix::zeros(dim, 2);
        bm.view_mut((psi, 0), (n, 1)).copy_from(&self.b_psi);
        bm.view_mut((theta, 0), (n, 1)).copy_from(&self.b_theta);
        bm.view_mut((theta, 1), (n, 1)).copy_from(&self.b);

        // Time derivatives of ψ_i and θ_i as linear forms in the lifted
        // state plus input coefficients.
        let row_form = |row: usize| -> Vec<(usize, f64)> {
            (0..dim).filter(|&col| a[(row, col)] != 0.0).map(|col| (col, a[(row, col)])).collect()
        };
        let mut entries = Vec::new();
        let mut nmats = [DenseMatrix::zeros(dim, dim), DenseMatrix::zeros(dim, dim)];
        let mut add = |target: usize, factor_coord: usize, scale: f64, source: usize| {
            for (col, v) in row_form(source) {
                entries.push(Entry { i: target, j: factor_coord, k: col, v: scale * v });
            }
            for (ch, nm) in nmats.iter_mut().enumerate() {
                let bv = bm[(source, ch)];
                if bv != 0.0 {
                    nm[(target, factor_coord)] += scale * bv;
                }
            }
        };
        for i in 0..n {
            let (p, t) = (psi + i, theta + i);
            // w1 = ψθ
            add(w(1) + i, t, 1.0, p);
            add(w(1) + i, p, 1.0, t);
            // w2 = ψθ²
            add(w(2) + i, w(4) + i, 1.0, p);
            add(w(2) + i, w(1) + i, 2.0, t);
            // w3 = ψθ³
            add(w(3) + i, w(5) + i, 1.0, p);
            add(w(3) + i, w(2) + i, 3.0, t);
            // w4 = θ²
            add(w(4) + i, t, 2.0, t);
            // w5 = θ³
            add(w(5) + i, w(4) + i, 3.0, t);
        }
        let raw_h = SparseTensor3::from_entries(dim, entries)?;
        let mut cm = DenseMatrix::zeros(1, dim);
        cm[(0, theta + n - 1)] = 1.0;
        let [n1m, n2m] = nmats;
        let system = QBSystem::new(a, raw_h.clone(), vec![n1m, n2m], bm, cm)?;

        let mut aux = Vec::with_capacity(5 * n);
        let pairs: [(usize, usize); 5] = [(psi, theta), (w(1), theta), (w(2), theta), (theta, theta), (w(4), theta)];
        for (p0, q0) in pairs {
            aux.extend((0..n).map(|i| AuxDef::HadamardProduct { p: p0 + i, q: q0 + i }));
        }
        let spec = LiftSpec::new(2 * n, aux)?;
        Ok(LiftedSystem { system, spec, raw_h })
    }
}

/// Input vector `[1, u]` of the lifted reactor.
pub fn lifted_input(u: f64) -> DenseVector {
    DenseVector::from_column_slice(&[1.0, u])
}
