//! Shared benchmark fixtures.

use qbbt::reactor::{assemble_fom, ReactorConfig, ReactorFom};
use qbbt::StabilizedQB;

/// Full reactor model at `n` grid points with default parameters.
pub fn reactor_fom(n: usize) -> ReactorFom {
    assemble_fom(&ReactorConfig::default().with_n(n)).expect("default reactor assembles")
}

/// Lifted reactor stabilized at `alpha`.
pub fn stabilized_reactor(n: usize, alpha: f64) -> StabilizedQB {
    reactor_fom(n)
        .lift()
        .and_then(|l| l.structured())
        .and_then(|s| s.stabilize(alpha))
        .expect("lifted reactor stabilizes")
}
