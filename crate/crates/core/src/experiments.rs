//! Reactor comparison study: balanced QB models versus POD-DEIM across
//! reduced orders for four input/training scenarios.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::balancing::{project_rom, select_alpha, AlphaDiagnostics, BalancingFactors, RomSource};
use crate::error::{Error, Result};
use crate::gramians::{assemble, TruncatedGramians};
use crate::integrate::{TimeGrid, DEFAULT_DT, DEFAULT_SAMPLE_EVERY};
use crate::io::write_kv;
use crate::linalg::{DenseMatrix, DenseVector};
use crate::poddeim::{add_noise, build_pod_deim_rom, qdeim_points, reaction_snapshots, reactor_pod_basis, BasisLayout};
use crate::reactor::{assemble_fom, lifted_input, ReactorConfig, ReactorFom};

/// Scalar control signals used by the study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputSignal {
    Constant(f64),
    /// `cos t`
    Cosine,
    /// `0.5 (1 + t² e^{-t/4} sin 6t)`, relaxing to 0.5.
    DampedOscillation,
}

impl InputSignal {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            InputSignal::Constant(c) => c,
            InputSignal::Cosine => t.cos(),
            InputSignal::DampedOscillation => 0.5 * (1.0 + t * t * (-t / 4.0).exp() * (6.0 * t).sin()),
        }
    }
}

impl fmt::Display for InputSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSignal::Constant(c) => write!(f, "constant({c})"),
            InputSignal::Cosine => write!(f, "cos(t)"),
            InputSignal::DampedOscillation => write!(f, "0.5*(1+t^2*exp(-t/4)*sin(6t))"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    /// Equilibrium under a constant input.
    SteadyState { u: f64 },
    /// Spatially uniform concentration and temperature.
    Uniform { psi: f64, theta: f64 },
}

impl InitialState {
    pub fn resolve(&self, fom: &ReactorFom) -> Result<DenseVector> {
        match *self {
            InitialState::SteadyState { u } => fom.steady_state(u),
            InitialState::Uniform { psi, theta } => {
                let n = fom.n;
                Ok(DenseVector::from_fn(2 * n, |i, _| if i < n { psi } else { theta }))
            }
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialState::SteadyState { u } => write!(f, "steady_state(u={u})"),
            InitialState::Uniform { psi, theta } => write!(f, "uniform(psi={psi},theta={theta})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub level: f64,
    pub seed: u64,
}

pub const DEFAULT_R_LIST: [usize; 9] = [4, 6, 8, 10, 12, 14, 16, 18, 20];
pub const DEFAULT_ALPHA: f64 = 20.0;
pub const DEFAULT_SEED: u64 = 20190601;

#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    pub case_id: u8,
    pub u_test: InputSignal,
    pub u_train: InputSignal,
    pub x0_test: InitialState,
    pub x0_train: InitialState,
    pub noise: Option<NoiseSpec>,
    pub t_train: f64,
    pub t_f: f64,
    pub r_list: Vec<usize>,
    pub alpha: f64,
    pub dt: f64,
    pub sample_every: f64,
    pub layout: BasisLayout,
    pub rom_source: RomSource,
}

impl CaseSpec {
    /// The four study scenarios with default horizons and orders.
    pub fn standard(case_id: u8, seed: u64) -> Result<Self> {
        let x0 = InitialState::SteadyState { u: 0.5 };
        let (u_test, u_train, x0_train, noise) = match case_id {
            1 => (InputSignal::Cosine, InputSignal::Cosine, x0, None),
            2 => (InputSignal::Cosine, InputSignal::Cosine, x0, Some(NoiseSpec { level: 0.1, seed })),
            3 => (InputSignal::DampedOscillation, InputSignal::Constant(0.5), x0, None),
            4 => (InputSignal::Cosine, InputSignal::Constant(0.5), InitialState::Uniform { psi: 0.0, theta: 1.0 }, None),
            other => return Err(Error::InvalidArgument(format!("unknown case {other}; expected 1..=4"))),
        };
        Ok(Self {
            case_id,
            u_test,
            u_train,
            x0_test: x0,
            x0_train,
            noise,
            t_train: 15.0,
            t_f: 30.0,
            r_list: DEFAULT_R_LIST.to_vec(),
            alpha: DEFAULT_ALPHA,
            dt: DEFAULT_DT,
            sample_every: DEFAULT_SAMPLE_EVERY,
            layout: BasisLayout::Stacked,
            rom_source: RomSource::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_train > 0.0 && self.t_train <= self.t_f) {
            return Err(Error::InvalidArgument(format!("need 0 < t_train <= t_f, got {} and {}", self.t_train, self.t_f)));
        }
        if self.r_list.is_empty() || self.r_list[0] == 0 || self.r_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!("r list must be positive and strictly ascending: {:?}", self.r_list)));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {}", self.alpha)));
        }
        TimeGrid::new(self.t_f, self.dt, self.sample_every).resolve()?;
        TimeGrid::new(self.t_train, self.dt, self.sample_every).resolve()?;
        Ok(())
    }

    pub fn to_kv(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("case".to_string(), self.case_id.to_string()),
            ("u_test".to_string(), self.u_test.to_string()),
            ("u_train".to_string(), self.u_train.to_string()),
            ("x0_test".to_string(), self.x0_test.to_string()),
            ("x0_train".to_string(), self.x0_train.to_string()),
            ("t_train".to_string(), format!("{}", self.t_train)),
            ("t_f".to_string(), format!("{}", self.t_f)),
            ("r_list".to_string(), self.r_list.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")),
            ("alpha".to_string(), format!("{}", self.alpha)),
            ("dt".to_string(), format!("{}", self.dt)),
            ("sample_every".to_string(), format!("{}", self.sample_every)),
            ("basis_layout".to_string(), format!("{:?}", self.layout)),
            ("rom_source".to_string(), format!("{:?}", self.rom_source)),
        ];
        match self.noise {
            Some(n) => {
                kv.push(("noise_level".to_string(), format!("{}", n.level)));
                kv.push(("noise_seed".to_string(), n.seed.to_string()));
            }
            None => kv.push(("noise_level".to_string(), "0".to_string())),
        }
        kv
    }
}

/// `Σ |y_i - y_r,i|` over matching sample grids.
pub fn output_error(y: &[f64], y_r: &[f64]) -> Result<f64> {
    if y.len() != y_r.len() {
        return Err(Error::Shape { op: "output_error", detail: format!("{} vs {} samples", y.len(), y_r.len()) });
    }
    Ok(y.iter().zip(y_r).map(|(a, b)| (a - b).abs()).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    QbBt,
    PodDeim,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::QbBt => "qbbt",
            Method::PodDeim => "pod_deim",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub method: Method,
    pub r: usize,
    /// Output error, or the failing stage and message.
    pub outcome: std::result::Result<f64, String>,
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub spec: CaseSpec,
    pub rows: Vec<ErrorRow>,
    /// Sample times, including `t = 0`.
    pub times: Vec<f64>,
    pub y_fom: Vec<f64>,
    pub y_rom: BTreeMap<(Method, usize), Vec<f64>>,
    pub balancing_sigma: Vec<f64>,
    pub pod_sigma: Vec<f64>,
    pub alpha: Option<AlphaDiagnostics>,
}

impl CaseResult {
    pub fn error(&self, method: Method, r: usize) -> Option<f64> {
        self.rows.iter().find(|row| row.method == method && row.r == r).and_then(|row| row.outcome.clone().ok())
    }

    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(|r| r.outcome.is_err())
    }
}

fn stage<T>(name: &str, r: Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| format!("{name}: {e}"))
}

/// Error over samples after the initial one.
fn sampled_error(y_fom: &[f64], y_rom: &[f64]) -> Result<f64> {
    output_error(&y_fom[1..], &y_rom[1..])
}

pub fn run_case(spec: &CaseSpec, cfg: &ReactorConfig) -> Result<CaseResult> {
    spec.validate()?;
    let fom = assemble_fom(cfg)?;
    let grid = TimeGrid::new(spec.t_f, spec.dt, spec.sample_every);
    let x0 = spec.x0_test.resolve(&fom)?;
    let u_test = spec.u_test;
    let fom_traj = fom.simulate(|t| u_test.eval(t), &x0, grid)?;
    let y_fom = fom_traj.output_series(0);
    let mut rows = Vec::new();
    let mut y_rom = BTreeMap::new();

    // Balanced truncation: one Gramian computation and one SVD serve all orders.
    let lifted = fom.lift()?;
    let bt_setup = stage("lift", lifted.structured())
        .and_then(|st| stage("stabilize", st.stabilize(spec.alpha)).map(|s| (st, s)))
        .and_then(|(st, s)| {
            let tg = stage("gramians", TruncatedGramians::compute(&s))?;
            let (p, q) = assemble(&tg);
            let factors = stage("balancing", BalancingFactors::new(&p, &q))?;
            Ok((st, s, factors))
        });
    let mut balancing_sigma = Vec::new();
    let mut alpha_diag = None;
    match &bt_setup {
        Ok((st, stab, factors)) => {
            balancing_sigma = factors.singular_values().iter().copied().collect();
            alpha_diag = select_alpha(st, &[spec.alpha], None).ok().and_then(|mut d| d.pop());
            let z0 = lifted.spec.lift_state(&x0)?;
            for &r in &spec.r_list {
                let outcome = stage("balancing", factors.truncate(r))
                    .and_then(|bal| stage("projection", project_rom(stab, &bal, spec.rom_source)))
                    .and_then(|bundle| {
                        let xr0 = bundle.w.transpose() * &z0;
                        let traj = stage("qbbt_simulation", bundle.rom.simulate(|t| lifted_input(u_test.eval(t)), &xr0, grid))?;
                        let y = traj.output_series(0);
                        let err = stage("error", sampled_error(&y_fom, &y))?;
                        y_rom.insert((Method::QbBt, r), y);
                        Ok(err)
                    });
                rows.push(ErrorRow { method: Method::QbBt, r, outcome });
            }
        }
        Err(msg) => {
            for &r in &spec.r_list {
                rows.push(ErrorRow { method: Method::QbBt, r, outcome: Err(msg.clone()) });
            }
        }
    }

    // POD-DEIM from training snapshots.
    let train_setup = (|| {
        let x0_train = stage("training_initial_state", spec.x0_train.resolve(&fom))?;
        let u_train = spec.u_train;
        let train_grid = TimeGrid::new(spec.t_train, spec.dt, spec.sample_every);
        let traj = stage("training_simulation", fom.simulate(|t| u_train.eval(t), &x0_train, train_grid))?;
        let x = DenseMatrix::from_columns(&traj.states);
        let x = match spec.noise {
            Some(n) => stage("noise", add_noise(&x, n.level, n.seed))?,
            None => x,
        };
        let f = reaction_snapshots(&fom, &x);
        Ok::<_, String>((x, f))
    })();
    let mut pod_sigma = Vec::new();
    match &train_setup {
        Ok((x, f)) => {
            pod_sigma = nalgebra::SVD::new(x.clone(), false, false).singular_values.iter().copied().collect();
            for &r in &spec.r_list {
                let outcome = stage("pod_basis", reactor_pod_basis(x, r, spec.layout))
                    .and_then(|v| {
                        let u_f = stage("reaction_basis", crate::poddeim::pod_basis(f, r))?;
                        let points = stage("qdeim", qdeim_points(&u_f))?;
                        stage("pod_deim_rom", build_pod_deim_rom(&fom, &v, &u_f, &points))
                    })
                    .and_then(|rom| {
                        let traj = stage("pod_deim_simulation", rom.simulate(|t| u_test.eval(t), &x0, grid))?;
                        let y = traj.output_series(0);
                        let err = stage("error", sampled_error(&y_fom, &y))?;
                        y_rom.insert((Method::PodDeim, r), y);
                        Ok(err)
                    });
                rows.push(ErrorRow { method: Method::PodDeim, r, outcome });
            }
        }
        Err(msg) => {
            for &r in &spec.r_list {
                rows.push(ErrorRow { method: Method::PodDeim, r, outcome: Err(msg.clone()) });
            }
        }
    }

    Ok(CaseResult {
        spec: spec.clone(),
        rows,
        times: fom_traj.times.clone(),
        y_fom,
        y_rom,
        balancing_sigma,
        pod_sigma,
        alpha: alpha_diag,
    })
}

fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "nan".to_string()
    }
}

pub fn write_errors_csv(path: &Path, rows: &[ErrorRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "r", "error", "status"])?;
    for row in rows {
        let (err, status) = match &row.outcome {
            Ok(e) => (fmt_num(*e), "ok".to_string()),
            Err(msg) => ("nan".to_string(), format!("failed {msg}")),
        };
        w.write_record([row.method.to_string(), row.r.to_string(), err, status])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_outputs_csv(path: &Path, res: &CaseResult, r: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "y_fom", "y_qbbt", "y_pod"])?;
    let q = res.y_rom.get(&(Method::QbBt, r));
    let p = res.y_rom.get(&(Method::PodDeim, r));
    for (i, (&t, &y)) in res.times.iter().zip(&res.y_fom).enumerate() {
        let pick = |s: Option<&Vec<f64>>| s.map_or(f64::NAN, |v| v[i]);
        w.write_record([fmt_num(t), fmt_num(y), fmt_num(pick(q)), fmt_num(pick(p))])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_diag_csv(path: &Path, res: &CaseResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["quantity", "index", "value"])?;
    for (i, s) in res.balancing_sigma.iter().enumerate() {
        w.write_record(["balancing_sigma".to_string(), (i + 1).to_string(), fmt_num(*s)])?;
    }
    for (i, s) in res.pod_sigma.iter().enumerate() {
        w.write_record(["pod_sigma".to_string(), (i + 1).to_string(), fmt_num(*s)])?;
    }
    if let Some(d) = &res.alpha {
        w.write_record(["alpha".to_string(), "0".to_string(), fmt_num(d.alpha)])?;
        w.write_record(["numerical_abscissa".to_string(), "0".to_string(), fmt_num(d.numerical_abscissa)])?;
        w.write_record(["spectral_abscissa".to_string(), "0".to_string(), fmt_num(d.spectral_abscissa)])?;
    }
    w.flush()?;
    Ok(())
}

/// Write `errors.csv`, `outputs_<case>_<r>.csv`, `diag.csv` and
/// `manifest.txt` into `dir`.
pub fn write_case_outputs(dir: &Path, res: &CaseResult, cfg: &ReactorConfig, seed: u64) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_errors_csv(&dir.join("errors.csv"), &res.rows)?;
    for &r in &res.spec.r_list {
        write_outputs_csv(&dir.join(format!("outputs_{}_{}.csv", res.spec.case_id, r)), res, r)?;
    }
    write_diag_csv(&dir.join("diag.csv"), res)?;
    let mut kv = res.spec.to_kv();
    kv.push(("seed".to_string(), seed.to_string()));
    kv.extend(cfg.to_kv()?);
    write_kv(&dir.join("manifest.txt"), kv)
}

/// One summary line per row, for terminals.
pub fn format_table(res: &CaseResult) -> String {
    let mut out = Vec::new();
    writeln!(out, "case {}: {:>4} {:>14} {:>14}", res.spec.case_id, "r", "qbbt", "pod_deim").ok();
    for &r in &res.spec.r_list {
        let cell = |m| {
            res.rows
                .iter()
                .find(|row| row.method == m && row.r == r)
                .map(|row| match &row.outcome {
                    Ok(e) => format!("{e:14.4e}"),
                    Err(_) => format!("{:>14}", "failed"),
                })
                .unwrap_or_default()
        };
        writeln!(out, "        {:>4} {} {}", r, cell(Method::QbBt), cell(Method::PodDeim)).ok();
    }
    String::from_utf8(out).unwrap_or_default()
}
