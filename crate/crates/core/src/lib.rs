//! Convex optimization driven only by noisy pairwise comparisons.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`]: vectors, uniform sphere directions and Euclidean projection.
//! * [`transfer`]: transfer functions mapping a value difference to a mean preference.
//! * [`oracle`]: the signed-Bernoulli comparison channel with query accounting.
//! * [`objectives`]: quadratic test objectives with certified constants and property checkers.
//! * [`solver`]: relative-gradient descent, its epoch-restarted variant and parameter tuning.
//! * [`diagnostics`]: Monte Carlo kernels checking the expectation identities the solvers rely on.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
mod error;
pub mod geometry;
pub mod objectives;
pub mod oracle;
pub mod solver;
pub mod transfer;

pub use error::{Error, Result};
pub use geometry::{BallDomain, ConvexDomain, Vector};
pub use objectives::{Objective, Quadratic};
pub use oracle::{ComparisonOracle, Outcome};
pub use solver::{EpochSchedule, Recording, RunRecord, SolverConfig};
pub use transfer::{ProxyParams, SeriesSpec, TransferFunction};

/// Seeded generator used everywhere a reproducible stream is needed.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the `stream`-th independent generator derived from `seed`.
pub fn derived_rng(seed: u64, stream: u64) -> SeededRng {
    use rand::SeedableRng;
    let mut rng = SeededRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
