//! Numerical laboratory for semilinear stochastic reaction-diffusion
//! equations on an interval: finite-volume elliptic operators and their
//! semigroups, noise coefficient validation, exponential-Euler simulation,
//! and Monte Carlo tests of martingale, Markov and uniqueness properties.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod elliptic;
pub mod error;
pub mod export;
pub mod markov;
pub mod martingale;
pub mod presets;
pub mod quadrature;
pub mod regularizer;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use elliptic::{
    sup_norm, BoundaryCondition, Diffusion, EllipticOperator, Propagator, SemigroupCache, SpatialGrid,
};
pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use simulate::{Ensemble, EnsembleSpec, InitialLaw, Model, Trajectory, WienerIncrements};
