//! Reference models used by the batteries, the benchmarks and the CLI.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::coefficients::{NoiseFamily, PolynomialDrift, ProfileKind};
use crate::elliptic::{BoundaryCondition, Diffusion, EllipticOperator, SemigroupCache, SpatialGrid};
use crate::error::Result;
use crate::simulate::Model;

/// Truncation level of the square-root noise in the nonlinear presets.
pub const SQRT_NOISE_CAP: f64 = 4.0;

/// `c_k = scale · decay^k`, `k = 1..=modes`.
pub fn geometric_coeffs(scale: f64, decay: f64, modes: usize) -> Vec<f64> {
    (1..=modes).map(|k| scale * decay.powi(k as i32)).collect()
}

/// Heat operator with `a ≡ 1` on `[0, π]` with Dirichlet conditions.
pub fn dirichlet_heat(n: usize) -> Result<Arc<SemigroupCache>> {
    let grid = SpatialGrid::new(n, PI, BoundaryCondition::Dirichlet)?;
    Ok(Arc::new(SemigroupCache::new(&EllipticOperator::assemble(&grid, &Diffusion::Constant(1.0))?)))
}

/// Ornstein–Uhlenbeck model: `F = 0` and additive noise along the first
/// eigenvectors, `g_k = q_k v_k`, so every coordinate `⟨u, v_k⟩` is a scalar
/// OU process with rate `−λ_k` and volatility `q_k`.
pub fn ou_model(n: usize, q: &[f64]) -> Result<Model> {
    let cache = dirichlet_heat(n)?;
    let noise = NoiseFamily::additive(&cache, q, ProfileKind::Eigen);
    Model::new(Arc::clone(&cache), PolynomialDrift::zero(cache.grid()), noise)
}

fn sqrt_noise_model(n: usize, drift: &[f64], coeffs: &[f64]) -> Result<Model> {
    let cache = dirichlet_heat(n)?;
    let noise = NoiseFamily::holder_sqrt(&cache, coeffs, ProfileKind::Sine).truncated(SQRT_NOISE_CAP)?;
    Model::new(Arc::clone(&cache), PolynomialDrift::constant(cache.grid(), drift), noise)
}

/// `f(r) = r − r³` with `g_k(x, r) = c_k sin(kx) √(|r| ∧ 4)`.
pub fn reaction_diffusion_model(n: usize, coeffs: &[f64]) -> Result<Model> {
    sqrt_noise_model(n, &[0.0, 1.0, 0.0, -1.0], coeffs)
}

/// `f(r) = −r³` with `g_k(x, r) = c_k sin(kx) √(|r| ∧ 4)`.
pub fn dissipative_model(n: usize, coeffs: &[f64]) -> Result<Model> {
    sqrt_noise_model(n, &[0.0, 0.0, 0.0, -1.0], coeffs)
}

/// `f(r) = −r³` with additive noise `g_k(x) = c_k sin(kx)`.
pub fn dissipative_additive_model(n: usize, coeffs: &[f64]) -> Result<Model> {
    let cache = dirichlet_heat(n)?;
    let noise = NoiseFamily::additive(&cache, coeffs, ProfileKind::Sine);
    Model::new(Arc::clone(&cache), PolynomialDrift::constant(cache.grid(), &[0.0, 0.0, 0.0, -1.0]), noise)
}

/// `amp · sin(x)` on the nodes.
pub fn sine_state(grid: &SpatialGrid, amp: f64) -> Vec<f64> {
    grid.nodes().iter().map(|&x| amp * (PI * x / grid.length()).sin()).collect()
}
