//! Exact kernels, Monte Carlo estimators and asymptotic checks for the moments
//! of two-dimensional directed polymer partition functions in the weak-disorder
//! window.
//!
//! The crate is organised bottom-up:
//!
//! * [`walk`]: lattice points, the exact simple-random-walk kernel, path and
//!   bridge samplers, and the counter-based RNG streams everything else uses.
//! * [`disorder`]: scalar disorder quantities, the exact law of the pair
//!   local time, exact and Monte Carlo moments of the partition function.
//! * [`schedule`]: the multi-scale time decomposition and its parameter
//!   constraints.
//! * [`intersections`]: stopping times, greedy disjoint intersections,
//!   meeting probabilities under bridges, and Poisson approximation.
//! * [`hitting`]: Brownian disc-hitting formulas, `K_0`, and simulators used
//!   as continuum oracles for the lattice estimates.

pub mod disorder;
pub mod error;
pub mod hitting;
pub mod intersections;
pub mod presets;
pub mod schedule;
pub mod series;
pub mod serde_ext;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
pub use walk::{LatticePoint, RngStream, WalkPath};
