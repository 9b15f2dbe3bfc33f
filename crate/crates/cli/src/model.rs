//! Builds core objects from a parsed configuration.

use std::f64::consts::PI;
use std::sync::Arc;

use rdlab_core::coefficients::{Modulus, NoiseFamily, PolynomialDrift};
use rdlab_core::{EllipticOperator, Model, Result, SemigroupCache, SpatialGrid};

use crate::config::{InitialState, ModelConfig, NoiseKind};

pub fn build_model(cfg: &ModelConfig) -> Result<Model> {
    let grid = SpatialGrid::new(cfg.n, cfg.length, cfg.bc)?;
    let cache = Arc::new(SemigroupCache::new(&EllipticOperator::assemble(&grid, &cfg.diffusion)?));
    let nz = &cfg.noise;
    let mut noise = match nz.kind {
        NoiseKind::None => NoiseFamily::empty(&grid),
        NoiseKind::HolderSqrt => NoiseFamily::holder_sqrt(&cache, &nz.coeffs, nz.profile),
        NoiseKind::Lipschitz => NoiseFamily::lipschitz(&cache, &nz.coeffs, nz.profile),
        NoiseKind::Additive => NoiseFamily::additive(&cache, &nz.coeffs, nz.profile),
        NoiseKind::CustomTable => {
            let sigma: Vec<Modulus> = nz
                .sigma_coef
                .iter()
                .zip(&nz.sigma_exponent)
                .map(|(&coef, &exponent)| Modulus::Power { coef, exponent })
                .collect();
            NoiseFamily::custom_table(&cache, &nz.coeffs, nz.profile, nz.table.clone(), &nz.alpha, &nz.beta, &sigma)?
        }
    };
    if let Some(level) = nz.truncation {
        noise = noise.truncated(level)?;
    }
    noise = noise.with_tail_bound(nz.tail_bound);
    Model::new(Arc::clone(&cache), PolynomialDrift::constant(&grid, &cfg.drift), noise)
}

pub fn initial_state(model: &Model, init: &InitialState) -> Vec<f64> {
    let grid = model.grid();
    match init {
        InitialState::Zero => vec![0.0; grid.n()],
        InitialState::Sine(amp) => grid.nodes().iter().map(|&x| amp * (PI * x / grid.length()).sin()).collect(),
        InitialState::Eigen(coeffs) => {
            let mut u = vec![0.0; grid.n()];
            for (k, c) in coeffs.iter().enumerate() {
                for (ui, vi) in u.iter_mut().zip(model.cache.eigvec(k)) {
                    *ui += c * vi;
                }
            }
            u
        }
        InitialState::Values(v) => v.clone(),
    }
}
