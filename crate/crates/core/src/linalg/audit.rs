//! Records the dimension of every Lyapunov solve made on the current thread
//! while an audit is active.

use std::cell::RefCell;

thread_local! {
    static SOLVE_DIMS: RefCell<Option<Vec<usize>>> = const { RefCell::new(None) };
}

pub(crate) fn record_solve(dim: usize) {
    SOLVE_DIMS.with(|cell| {
        if let Some(dims) = cell.borrow_mut().as_mut() {
            dims.push(dim);
        }
    });
}

/// Run `f` and return its result together with the dimensions of all
/// Lyapunov solves it performed on this thread. Audits nest: an inner audit
/// sees only its own solves, which are then also reported to the outer one.
pub fn audit_lyapunov_solves<R>(f: impl FnOnce() -> R) -> (R, Vec<usize>) {
    let outer = SOLVE_DIMS.with(|cell| cell.borrow_mut().replace(Vec::new()));
    let result = f();
    let dims = SOLVE_DIMS.with(|cell| {
        let mut slot = cell.borrow_mut();
        let dims = slot.take().unwrap_or_default();
        if let Some(mut outer) = outer {
            outer.extend_from_slice(&dims);
            *slot = Some(outer);
        }
        dims
    });
    (result, dims)
}
