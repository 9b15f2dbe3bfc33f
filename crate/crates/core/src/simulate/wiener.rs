use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::rng::{stream_rng, StreamKey};

/// `steps × K` table of independent `N(0, dt)` increments, one column per
/// scalar Brownian motion.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerIncrements {
    dt: f64,
    steps: usize,
    k: usize,
    table: Vec<f64>,
    seed: u64,
    key: StreamKey,
}

impl WienerIncrements {
    pub fn sample(seed: u64, path_index: u64, steps: usize, k: usize, dt: f64) -> Result<Self> {
        Self::sample_stream(seed, StreamKey::path(path_index), steps, k, dt)
    }

    /// Draws row by row (all modes of step 0, then step 1, ...) from the
    /// stream selected by `key`.
    pub fn sample_stream(seed: u64, key: StreamKey, steps: usize, k: usize, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        let mut rng = stream_rng(seed, key);
        let scale = dt.sqrt();
        let table = (0..steps * k)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            })
            .collect();
        Ok(Self { dt, steps, k, table, seed, key })
    }

    /// Increments over `factor` consecutive steps summed into one, so the
    /// coarse path is the same Brownian path seen at a coarser resolution.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || !self.steps.is_multiple_of(factor) {
            return Err(invalid(format!("cannot coarsen {} steps by {factor}", self.steps)));
        }
        let steps = self.steps / factor;
        let mut table = vec![0.0; steps * self.k];
        for s in 0..steps {
            for j in 0..factor {
                let src = self.row(s * factor + j);
                for (t, v) in table[s * self.k..(s + 1) * self.k].iter_mut().zip(src) {
                    *t += v;
                }
            }
        }
        Ok(Self { dt: self.dt * factor as f64, steps, k: self.k, table, seed: self.seed, key: self.key })
    }

    pub fn row(&self, step: usize) -> &[f64] {
        &self.table[step * self.k..(step + 1) * self.k]
    }

    /// Increments of mode `k` over all steps.
    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.steps).map(|s| self.table[s * self.k + k]).collect()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }
}
