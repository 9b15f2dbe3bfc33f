//! Shared fixtures for the criterion benchmarks.

use std::sync::Arc;

use rdlab_core::coefficients::{NoiseFamily, PolynomialDrift, ProfileKind};
use rdlab_core::{BoundaryCondition, Diffusion, EllipticOperator, Model, SemigroupCache, SpatialGrid};

/// Allen-Cahn type model `f(r) = r − r³` with square-root noise on `n` nodes.
pub fn reaction_diffusion_model(n: usize, modes: usize) -> Model {
    let grid = SpatialGrid::new(n, 1.0, BoundaryCondition::Dirichlet).expect("valid grid");
    let op = EllipticOperator::assemble(&grid, &Diffusion::Constant(0.1)).expect("elliptic");
    let cache = SemigroupCache::new(&op);
    let coeffs: Vec<f64> = (1..=modes).map(|k| 0.5f64.powi(k as i32)).collect();
    let noise = NoiseFamily::holder_sqrt(&cache, &coeffs, ProfileKind::Sine);
    let drift = PolynomialDrift::constant(&grid, &[0.0, 1.0, 0.0, -1.0]);
    Model::new(Arc::new(cache), drift, noise).expect("consistent model")
}
