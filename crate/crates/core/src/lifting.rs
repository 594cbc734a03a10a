//! Lifting transformations that turn polynomial and exponential right-hand
//! sides into exact quadratic-bilinear form.

use crate::error::{Error, Result};
use crate::integrate::Trajectory;
use crate::linalg::{DenseMatrix, DenseVector};
use crate::qbsys::{partition, LiftDef, QBSystem, StructuredQB};
use crate::tensor3::{Entry, SparseTensor3};

/// How one auxiliary coordinate is defined in terms of earlier coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuxDef {
    /// `x_base ^ exponent`, exponent ≥ 2.
    MonomialPower { base: usize, exponent: u32 },
    /// `x_p · x_q`.
    HadamardProduct { p: usize, q: usize },
    /// `exp(coefficient · x_base)`. Not polynomial, so it cannot be stabilized.
    Exponential { coefficient: f64, base: usize },
}

/// Ordered auxiliary definitions appended after `n_orig` original coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftSpec {
    n_orig: usize,
    aux: Vec<AuxDef>,
}

impl LiftSpec {
    pub fn new(n_orig: usize, aux: Vec<AuxDef>) -> Result<Self> {
        for (pos, def) in aux.iter().enumerate() {
            let limit = n_orig + pos;
            let refs = match *def {
                AuxDef::MonomialPower { base, exponent } => {
                    if exponent < 2 {
                        return Err(Error::InvalidArgument(format!("auxiliary {limit}: exponent {exponent} < 2")));
                    }
                    vec![base]
                }
                AuxDef::HadamardProduct { p, q } => vec![p, q],
                AuxDef::Exponential { base, .. } => vec![base],
            };
            if let Some(bad) = refs.iter().find(|&&r| r >= limit) {
                return Err(Error::InvalidArgument(format!(
                    "auxiliary {limit} references coordinate {bad}, which is not defined before it"
                )));
            }
        }
        Ok(Self { n_orig, aux })
    }

    pub fn n_orig(&self) -> usize {
        self.n_orig
    }
    pub fn aux(&self) -> &[AuxDef] {
        &self.aux
    }
    pub fn dim(&self) -> usize {
        self.n_orig + self.aux.len()
    }

    /// True when every auxiliary is a polynomial in the original state.
    pub fn is_polynomial(&self) -> bool {
        !self.aux.iter().any(|d| matches!(d, AuxDef::Exponential { .. }))
    }

    /// Evaluate every auxiliary definition in order.
    pub fn lift_state(&self, x_orig: &DenseVector) -> Result<DenseVector> {
        if x_orig.len() != self.n_orig {
            return Err(Error::Shape {
                op: "lift_state",
                detail: format!("state has length {}, expected {}", x_orig.len(), self.n_orig),
            });
        }
        let mut out = DenseVector::zeros(self.dim());
        out.rows_mut(0, self.n_orig).copy_from(x_orig);
        for (pos, def) in self.aux.iter().enumerate() {
            out[self.n_orig + pos] = match *def {
                AuxDef::MonomialPower { base, exponent } => out[base].powi(exponent as i32),
                AuxDef::HadamardProduct { p, q } => out[p] * out[q],
                AuxDef::Exponential { coefficient, base } => (coefficient * out[base]).exp(),
            };
        }
        Ok(out)
    }

    /// Express every auxiliary as a single product of two lifted
    /// coordinates. Higher powers chain through the previous power.
    pub fn lift_defs(&self) -> Result<Vec<LiftDef>> {
        let mut defs = Vec::with_capacity(self.aux.len());
        for (pos, def) in self.aux.iter().enumerate() {
            let aux = self.n_orig + pos;
            let (p, q) = match *def {
                AuxDef::HadamardProduct { p, q } => (p, q),
                AuxDef::MonomialPower { base, exponent: 2 } => (base, base),
                AuxDef::MonomialPower { base, exponent } => {
                    let prev = self.aux[..pos]
                        .iter()
                        .position(|d| *d == AuxDef::MonomialPower { base, exponent: exponent - 1 })
                        .ok_or(Error::MissingLiftDef { index: aux })?;
                    (base, self.n_orig + prev)
                }
                AuxDef::Exponential { .. } => return Err(Error::MissingLiftDef { index: aux }),
            };
            defs.push(LiftDef { aux, p, q });
        }
        Ok(defs)
    }
}

/// A lifted system together with its lifting and the tensor exactly as
/// built (before symmetrization).
#[derive(Debug, Clone)]
pub struct LiftedSystem {
    pub system: QBSystem,
    pub spec: LiftSpec,
    pub raw_h: SparseTensor3,
}

impl LiftedSystem {
    /// Partition at the original dimension, attaching lift definitions when
    /// the lifting is polynomial.
    pub fn structured(&self) -> Result<StructuredQB> {
        let st = partition(&self.system, self.spec.n_orig())?;
        if self.spec.is_polynomial() {
            st.with_lift_defs(self.spec.lift_defs()?)
        } else {
            Ok(st)
        }
    }
}

/// Lift `ẋ = Σ_{k=1}^{d} a_k x^k + b u` with `w_ℓ = x^{ℓ+1}` and
/// `ẇ_ℓ = (ℓ+1) w_{ℓ-1} (a_1 x + Σ_k a_{k+1} w_k + b u)`, `w_0 = x`.
pub fn lift_poly_scalar(a: &[f64], b: f64) -> Result<LiftedSystem> {
    let d = a.len();
    if d < 2 {
        return Err(Error::InvalidArgument(format!("polynomial degree {d} < 2, nothing to lift")));
    }
    let mut am = DenseMatrix::zeros(d, d);
    for (k, &ak) in a.iter().enumerate() {
        am[(0, k)] = ak;
    }
    let mut entries = Vec::new();
    let mut nk = DenseMatrix::zeros(d, d);
    for l in 1..d {
        let factor = (l + 1) as f64;
        for (k, &ak) in a.iter().enumerate() {
            entries.push(Entry { i: l, j: l - 1, k, v: factor * ak });
        }
        nk[(l, l - 1)] = factor * b;
    }
    let raw_h = SparseTensor3::from_entries(d, entries)?;
    let mut bm = DenseMatrix::zeros(d, 1);
    bm[(0, 0)] = b;
    let mut c = DenseMatrix::zeros(1, d);
    c[(0, 0)] = 1.0;
    let system = QBSystem::new(am, raw_h.clone(), vec![nk], bm, c)?;
    let spec = LiftSpec::new(1, (2..=d as u32).map(|e| AuxDef::MonomialPower { base: 0, exponent: e }).collect())?;
    Ok(LiftedSystem { system, spec, raw_h })
}

/// Lift `ẋ = a x + e^{-x} + b u` with `w = e^{-x}`.
pub fn example2_system(a: f64, b: f64) -> Result<LiftedSystem> {
    let am = DenseMatrix::from_row_slice(2, 2, &[a, 1.0, 0.0, 0.0]);
    let raw_h = SparseTensor3::from_entries(2, [Entry { i: 1, j: 1, k: 0, v: -a }, Entry { i: 1, j: 1, k: 1, v: -1.0 }])?;
    let nk = DenseMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -b]);
    let bm = DenseMatrix::from_column_slice(2, 1, &[b, 0.0]);
    let c = DenseMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
    let system = QBSystem::new(am, raw_h.clone(), vec![nk], bm, c)?;
    let spec = LiftSpec::new(1, vec![AuxDef::Exponential { coefficient: -1.0, base: 0 }])?;
    Ok(LiftedSystem { system, spec, raw_h })
}

/// Largest deviation of sampled auxiliaries from their definitions
/// evaluated at the sampled original coordinates.
pub fn consistency_residual(spec: &LiftSpec, traj: &Trajectory) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in &traj.states {
        if x.len() != spec.dim() {
            return Err(Error::Shape {
                op: "consistency_residual",
                detail: format!("state has length {}, expected {}", x.len(), spec.dim()),
            });
        }
        let lifted = spec.lift_state(&x.rows(0, spec.n_orig()).into_owned())?;
        worst = worst.max((x - lifted).amax());
    }
    Ok(worst)
}
