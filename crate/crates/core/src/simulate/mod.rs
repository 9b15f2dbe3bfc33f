//! Truncated cylindrical Wiener noise and exponential-Euler integration of
//! the discretized stochastic reaction-diffusion equation.

mod ensemble;
mod factorization;
mod integrator;
mod wiener;

use std::sync::Arc;

pub use ensemble::{
    map_paths, run_ensemble, stream_ensemble, Ensemble, EnsembleSpec, InitialLaw, InitialSampler, INITIAL_STAGE,
};
pub use factorization::{apply_factorization, factorization_weight};
pub use integrator::{simulate, simulate_stream, simulate_with_increments, step_mild, MildStepper, Trajectory};
pub use wiener::WienerIncrements;

use crate::coefficients::{NoiseFamily, PolynomialDrift};
use crate::elliptic::{SemigroupCache, SpatialGrid};
use crate::error::{invalid, Result};

/// The discretized equation `du = [Au + F(u)]dt + Σ_k g_k(u) dw_k`.
#[derive(Debug, Clone)]
pub struct Model {
    pub cache: Arc<SemigroupCache>,
    pub drift: PolynomialDrift,
    pub noise: NoiseFamily,
}

impl Model {
    pub fn new(cache: Arc<SemigroupCache>, drift: PolynomialDrift, noise: NoiseFamily) -> Result<Self> {
        let n = cache.n();
        if drift.coeffs()[0].len() != n || noise.nodes().len() != n {
            return Err(invalid("drift, noise and operator must share the same grid"));
        }
        Ok(Self { cache, drift, noise })
    }

    pub fn grid(&self) -> &SpatialGrid {
        self.cache.grid()
    }

    pub fn n(&self) -> usize {
        self.cache.n()
    }

    /// Number of noise modes.
    pub fn k(&self) -> usize {
        self.noise.k()
    }

    /// Same dynamics with the drift replaced by `F + c`.
    pub fn with_drift_offset(&self, c: f64) -> Self {
        Self { cache: Arc::clone(&self.cache), drift: self.drift.with_offset(c), noise: self.noise.clone() }
    }
}

/// Number of steps of size `dt` covering `horizon`, rounding to the nearest step.
pub fn step_count(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(invalid(format!("horizon must be >= 0, got {horizon}")));
    }
    Ok((horizon / dt).round() as usize)
}
