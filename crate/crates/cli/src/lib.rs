//! Command-line front end. Exit codes: 0 on success, 1 when any table row
//! or check fails (or a run aborts), 2 on usage and configuration errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand};
use log::info;

use qbbt::balancing::{select_alpha, RomSource};
use qbbt::experiments::{format_table, run_case, write_case_outputs, CaseSpec, NoiseSpec, DEFAULT_SEED};
use qbbt::io::read_kv;
use qbbt::poddeim::BasisLayout;
use qbbt::reactor::{assemble_fom, ReactorConfig};
use qbbt::verify::{gramian_suite, lifting_suite, tensor_suite, Check};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "qbbt", version, about = "Balanced truncation of lifted quadratic-bilinear models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one comparison case and write errors, outputs and diagnostics.
    Run {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        case: u8,
        /// `key = value` file with reactor parameters and study settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        /// Reduced orders, comma separated and strictly ascending.
        #[arg(long, value_delimiter = ',')]
        r_list: Option<Vec<usize>>,
    },
    /// Structured-versus-dense equivalence checks for Gramians and tensors.
    Oracle {
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,5,20")]
        alphas: Vec<f64>,
    },
    /// Abscissa diagnostics of the stabilized lifted reactor.
    AlphaSweep {
        #[arg(long, value_delimiter = ',', required = true)]
        candidates: Vec<f64>,
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write `alpha_sweep.csv` here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lifted simulations against direct nonlinear integration.
    LiftCheck {
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 5.0)]
        t_end: f64,
    },
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn usage<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Usage(e.into())
}

/// Parse arguments, execute, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = String::new();
    let code = execute(&cli, &mut stdout);
    print!("{stdout}");
    code
}

/// Execute a parsed command, appending human-readable output to `out`.
pub fn execute(cli: &Cli, out: &mut String) -> u8 {
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            EXIT_FAILED
        }
    }
}

fn dispatch(cli: &Cli, out: &mut String) -> Result<u8, Failure> {
    match &cli.command {
        Command::Run { case, config, out: dir, seed, alpha, n, r_list } => {
            let settings = StudySettings::load(config.as_deref(), *seed, *alpha, *n, r_list.clone())?;
            cmd_run(*case, &settings, dir, out)
        }
        Command::Oracle { alphas } => {
            let mut checks = gramian_suite(alphas, 1e-7).context("gramian suite")?;
            checks.extend(tensor_suite(DEFAULT_SEED, 20, 1e-12).context("tensor suite")?);
            Ok(report(&checks, out))
        }
        Command::AlphaSweep { candidates, n, config, out: dir } => {
            let mut settings = StudySettings::load(config.as_deref(), None, None, Some(*n), None)?;
            settings.reactor.n = *n;
            cmd_alpha_sweep(&settings.reactor, candidates, dir.as_deref(), out)
        }
        Command::LiftCheck { n, t_end } => {
            if *n < 3 || !(*t_end > 0.0) {
                return Err(usage(anyhow::anyhow!("lift-check needs n >= 3 and a positive t-end")));
            }
            let checks = lifting_suite(*n, *t_end, 1e-6).context("lifting suite")?;
            Ok(report(&checks, out))
        }
    }
}

fn report(checks: &[Check], out: &mut String) -> u8 {
    for c in checks {
        let _ = writeln!(out, "{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    let _ = writeln!(out, "{} checks, {} failed", checks.len(), failed);
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

/// Reactor parameters plus study overrides, resolved from the config file
/// and then from flags.
#[derive(Debug, Clone)]
pub struct StudySettings {
    pub reactor: ReactorConfig,
    pub seed: u64,
    pub alpha: Option<f64>,
    pub r_list: Option<Vec<usize>>,
    pub t_f: Option<f64>,
    pub t_train: Option<f64>,
    pub noise_level: Option<f64>,
    pub layout: Option<BasisLayout>,
    pub rom_source: Option<RomSource>,
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> anyhow::Result<Vec<T>> {
    v.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| anyhow::anyhow!("{key}: cannot parse '{p}'")))
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &str) -> anyhow::Result<T> {
    v.trim().parse::<T>().map_err(|_| anyhow::anyhow!("{key}: cannot parse '{v}'"))
}

impl StudySettings {
    fn load(
        config: Option<&Path>,
        seed: Option<u64>,
        alpha: Option<f64>,
        n: Option<usize>,
        r_list: Option<Vec<usize>>,
    ) -> Result<Self, Failure> {
        let kv = match config {
            Some(p) => read_kv(p).with_context(|| format!("reading {}", p.display())).map_err(usage)?,
            None => BTreeMap::new(),
        };
        let mut s = Self::from_kv(kv).map_err(usage)?;
        if let Some(v) = seed {
            s.seed = v;
        }
        if let Some(v) = alpha {
            s.alpha = Some(v);
        }
        if let Some(v) = n {
            s.reactor.n = v;
        }
        if let Some(v) = r_list {
            s.r_list = Some(v);
        }
        s.reactor.validate().map_err(usage)?;
        Ok(s)
    }

    /// Split study keys from reactor keys; unknown keys are rejected by the
    /// reactor parser.
    pub fn from_kv(mut kv: BTreeMap<String, String>) -> anyhow::Result<Self> {
        let mut take = |k: &str| kv.remove(k);
        let seed = take("seed").map(|v| parse_one("seed", &v)).transpose()?.unwrap_or(DEFAULT_SEED);
        let alpha = take("alpha").map(|v| parse_one("alpha", &v)).transpose()?;
        let r_list = take("r_list").map(|v| parse_list("r_list", &v)).transpose()?;
        let t_f = take("t_f").map(|v| parse_one("t_f", &v)).transpose()?;
        let t_train = take("t_train").map(|v| parse_one("t_train", &v)).transpose()?;
        let noise_level = take("noise_level").map(|v| parse_one("noise_level", &v)).transpose()?;
        let layout = take("layout")
            .map(|v| match v.as_str() {
                "stacked" => Ok(BasisLayout::Stacked),
                "per_field" => Ok(BasisLayout::PerField),
                other => Err(anyhow::anyhow!("layout: expected stacked or per_field, got '{other}'")),
            })
            .transpose()?;
        let rom_source = take("rom_source")
            .map(|v| match v.as_str() {
                "stabilized" => Ok(RomSource::Stabilized),
                "unstabilized" => Ok(RomSource::Unstabilized),
                other => Err(anyhow::anyhow!("rom_source: expected stabilized or unstabilized, got '{other}'")),
            })
            .transpose()?;
        let mut reactor = ReactorConfig::default();
        reactor.apply_overrides(&kv)?;
        Ok(Self { reactor, seed, alpha, r_list, t_f, t_train, noise_level, layout, rom_source })
    }

    pub fn case_spec(&self, case_id: u8) -> anyhow::Result<CaseSpec> {
        let mut spec = CaseSpec::standard(case_id, self.seed)?;
        if let Some(a) = self.alpha {
            spec.alpha = a;
        }
        if let Some(r) = &self.r_list {
            spec.r_list = r.clone();
        }
        if let Some(t) = self.t_f {
            spec.t_f = t;
        }
        if let Some(t) = self.t_train {
            spec.t_train = t;
        }
        if let Some(level) = self.noise_level {
            spec.noise = (level > 0.0).then_some(NoiseSpec { level, seed: self.seed });
        }
        if let Some(l) = self.layout {
            spec.layout = l;
        }
        if let Some(src) = self.rom_source {
            spec.rom_source = src;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn cmd_run(case: u8, settings: &StudySettings, dir: &Path, out: &mut String) -> Result<u8, Failure> {
    let spec = settings.case_spec(case).map_err(usage)?;
    info!("case {case}: n = {}, alpha = {}, r = {:?}", settings.reactor.n, spec.alpha, spec.r_list);
    let res = run_case(&spec, &settings.reactor).with_context(|| format!("case {case}"))?;
    write_case_outputs(dir, &res, &settings.reactor, settings.seed)
        .with_context(|| format!("writing results to {}", dir.display()))?;
    out.push_str(&format_table(&res));
    for row in &res.rows {
        if let Err(msg) = &row.outcome {
            let _ = writeln!(out, "failed: {} r={} {}", row.method, row.r, msg);
        }
    }
    Ok(if res.any_failed() { EXIT_FAILED } else { EXIT_OK })
}

fn cmd_alpha_sweep(cfg: &ReactorConfig, candidates: &[f64], dir: Option<&Path>, out: &mut String) -> Result<u8, Failure> {
    if candidates.is_empty() || candidates.iter().any(|a| !(*a > 0.0)) {
        return Err(usage(anyhow::anyhow!("candidates must be positive")));
    }
    let structured = assemble_fom(cfg)
        .and_then(|f| f.lift())
        .and_then(|l| l.structured())
        .context("building the lifted reactor")?;
    let diags = select_alpha(&structured, candidates, None).context("abscissa evaluation")?;
    let mut csv = String::from("alpha,numerical_abscissa,spectral_abscissa\n");
    let _ = writeln!(out, "{:>10} {:>20} {:>20}", "alpha", "numerical_abscissa", "spectral_abscissa");
    for d in &diags {
        let _ = writeln!(out, "{:>10} {:>20.6e} {:>20.6e}", d.alpha, d.numerical_abscissa, d.spectral_abscissa);
        let _ = writeln!(csv, "{:.16e},{:.16e},{:.16e}", d.alpha, d.numerical_abscissa, d.spectral_abscissa);
    }
    if let Some(w) = diags.windows(2).find(|w| w[0].numerical_abscissa > 0.0 && w[1].numerical_abscissa <= 0.0) {
        let _ = writeln!(out, "numerical abscissa changes sign in ({}, {}]", w[0].alpha, w[1].alpha);
    }
    if let Some(dir) = dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join("alpha_sweep.csv"), csv).context("writing alpha_sweep.csv")?;
    }
    Ok(EXIT_OK)
}
