//! Balanced truncation of quadratic-bilinear systems obtained by lifting,
//! with a tubular reactor benchmark and a POD-DEIM baseline.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod balancing;
pub mod error;
pub mod experiments;
pub mod gramians;
pub mod integrate;
pub mod io;
pub mod lifting;
pub mod linalg;
pub mod poddeim;
pub mod qbsys;
pub mod reactor;
pub mod tensor3;
pub mod verify;

pub use error::{Error, Result};
pub use integrate::{TimeGrid, Trajectory};
pub use linalg::{DenseMatrix, DenseVector};
pub use qbsys::{partition, LiftDef, QBSystem, StabilizedQB, StructuredQB};
pub use tensor3::{Entry, SparseTensor3};
