//! Gromov-Wasserstein solvers built around Bregman alternating projected
//! gradient (BAPG), together with the double-loop Bregman baselines, a set of
//! convergence diagnostics and the graph alignment / partition pipelines.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem, the command line or serialization lives in the companion
//! `bapg-cli` crate.
//!
//! Module map:
//!
//! | module          | contents                                                   |
//! |-----------------|------------------------------------------------------------|
//! | [`linalg`]      | dense row-major matrices, Jacobi eigensolver, `exp(-A)`    |
//! | [`gw`]          | problem model, objective, Bregman divergences, projections |
//! | [`solvers`]     | KL-BAPG, quadratic BAPG, BPG, BPG-S, eBPG                   |
//! | [`diagnostics`] | error-bound residual, fixed-point residual, rho sweeps      |
//! | [`graph`]       | graphs, generators, noise, alignment, partition, toy 2D     |
#![no_std]
#![deny(rust_2018_idioms)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod error;
pub mod graph;
pub mod gw;
pub mod linalg;
pub mod solvers;

pub use error::{Axis, GwError, Result};
pub use gw::{BregmanGeometry, Coupling, GwProblem, Marginal};
pub use linalg::{DenseMatrix, SymEigDecomposition};
pub use solvers::{solve, Init, Method, SolveReport, SolverConfig, TraceRecord};

/// Seedable generator used by every randomized routine in the crate.
///
/// ChaCha with 8 rounds, seeded through `SeedableRng::seed_from_u64`
/// (PCG32 seed expansion), so a `u64` seed reproduces the same stream on any
/// platform.
pub type GwRng = rand_chacha::ChaCha8Rng;

/// Builds the crate's generator from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> GwRng {
    use rand::SeedableRng;
    GwRng::seed_from_u64(seed)
}
