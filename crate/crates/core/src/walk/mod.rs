//! Simple random walk on Z^2: lattice geometry, the exact transition kernel,
//! path and bridge sampling, and the RNG streams used throughout the crate.

mod kernel;
mod lattice;
mod path;
mod rng;

pub use kernel::{
    exact_transition, kernel_sup_bound_check, lclt_approx, lclt_max_relative_error,
    log_binomial_half, KernelValue, SupBoundReport,
};
pub use lattice::{LatticePoint, Step};
pub use path::{sample_bridge, sample_path, BridgeWalker, FreeWalker, WalkPath};
pub use rng::RngStream;
