use thiserror::Error;

/// Errors raised across the crate. Messages carry enough context to tell
/// which stage or block failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("matrix is not stable: spectral abscissa {abscissa:.3e} (must be < -1e-12)")]
    NotStable { abscissa: f64 },

    #[error("matrix is not symmetric in {op}: asymmetry {asymmetry:.3e}")]
    NotSymmetric { op: &'static str, asymmetry: f64 },

    #[error("matrix is not numerically positive semidefinite: min eigenvalue {min_eig:.3e}, max eigenvalue {max_eig:.3e}")]
    NotPsd { min_eig: f64, max_eig: f64 },

    #[error("requested rank {requested} exceeds numerical rank {rank}; lower r")]
    RankDeficient { requested: usize, rank: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("structure violation: block {block} is not zero")]
    Structure { block: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("auxiliary coordinate {index} has no quadratic lift definition")]
    MissingLiftDef { index: usize },

    #[error("simulation diverged at t = {time}")]
    Diverged { time: f64 },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("schur decomposition did not converge")]
    SchurFailed,

    #[error("newton iteration did not converge; residual history {history:?}")]
    NoConvergence { history: Vec<f64> },

    #[error("instance too large for dense path: {size} > cap {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
