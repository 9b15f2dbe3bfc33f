use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::rng::{stream_rng, StreamKey};
use crate::simulate::{simulate, step_count, Model, Trajectory};

/// Stage tag reserved for initial-state draws.
pub const INITIAL_STAGE: u32 = u32::MAX;

/// Evaluates `f(path_index)` for `0..paths` in parallel and collects in
/// path order, so the output does not depend on the worker count.
pub fn map_paths<T, F>(paths: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..paths as u64).into_par_iter().map(f).collect()
}

/// Parameters shared by every path of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub horizon: f64,
    pub dt: f64,
    pub stop_level: f64,
    pub paths: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn steps(&self) -> Result<usize> {
        step_count(self.horizon, self.dt)
    }

    /// Time index closest to `t`.
    pub fn index_of(&self, t: f64) -> usize {
        (t / self.dt).round() as usize
    }
}

pub type InitialSampler = Arc<dyn Fn(&mut ChaCha8Rng) -> Vec<f64> + Send + Sync>;

/// Law of `u(0)`.
#[derive(Clone)]
pub enum InitialLaw {
    Point(Vec<f64>),
    Sampler(InitialSampler),
}

impl fmt::Debug for InitialLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Point(u) => f.debug_tuple("Point").field(u).finish(),
            Self::Sampler(_) => f.write_str("Sampler(..)"),
        }
    }
}

impl InitialLaw {
    /// Initial state of one path; samplers read from a stream separate
    /// from the path's noise.
    pub fn draw(&self, seed: u64, path_index: u64) -> Vec<f64> {
        match self {
            Self::Point(u) => u.clone(),
            Self::Sampler(s) => {
                let mut rng = stream_rng(seed, StreamKey::child(path_index, INITIAL_STAGE, 0));
                s(&mut rng)
            }
        }
    }
}

/// Ordered collection of trajectories with path indices `0..paths`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub spec: EnsembleSpec,
    pub trajectories: Vec<Trajectory>,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    /// `f(u(t_i))` for every path.
    pub fn observe<F: Fn(&[f64]) -> f64>(&self, i: usize, f: F) -> Vec<f64> {
        self.trajectories.iter().map(|tr| f(tr.state(i.min(tr.len() - 1)))).collect()
    }

    pub fn final_states(&self) -> Vec<&[f64]> {
        self.trajectories.iter().map(|tr| tr.last()).collect()
    }

    /// Fraction of paths stopped at or before index `i`.
    pub fn stopped_fraction(&self, i: usize) -> f64 {
        let s = self.trajectories.iter().filter(|tr| tr.is_stopped_at(i)).count();
        s as f64 / self.len().max(1) as f64
    }
}

pub fn run_ensemble(model: &Model, law: &InitialLaw, spec: EnsembleSpec) -> Result<Ensemble> {
    if spec.paths == 0 {
        return Err(invalid("paths must be >= 1"));
    }
    let trajectories = map_paths(spec.paths, |p| {
        let u0 = law.draw(spec.seed, p);
        simulate(model, &u0, spec.horizon, spec.dt, spec.stop_level, spec.seed, p)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble { spec, trajectories })
}

/// Simulates every path of `spec` and reduces it with `visit` without
/// keeping the trajectories; results come back in path order.
pub fn stream_ensemble<T, V>(model: &Model, law: &InitialLaw, spec: EnsembleSpec, visit: V) -> Result<Vec<T>>
where
    T: Send,
    V: Fn(&Trajectory) -> T + Sync + Send,
{
    if spec.paths == 0 {
        return Err(invalid("paths must be >= 1"));
    }
    map_paths(spec.paths, |p| {
        let u0 = law.draw(spec.seed, p);
        simulate(model, &u0, spec.horizon, spec.dt, spec.stop_level, spec.seed, p).map(|tr| visit(&tr))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{NoiseFamily, PolynomialDrift, ProfileKind};
    use crate::elliptic::{BoundaryCondition, Diffusion, EllipticOperator, SemigroupCache, SpatialGrid};
    use rand::Rng;

    fn model() -> Model {
        let g = SpatialGrid::new(8, 1.0, BoundaryCondition::Dirichlet).unwrap();
        let c = SemigroupCache::new(&EllipticOperator::assemble(&g, &Diffusion::Constant(0.1)).unwrap());
        let noise = NoiseFamily::holder_sqrt(&c, &[0.5, 0.25], ProfileKind::Sine);
        Model::new(Arc::new(c), PolynomialDrift::zero(&g), noise).unwrap()
    }

    fn spec(paths: usize) -> EnsembleSpec {
        EnsembleSpec { horizon: 0.05, dt: 0.01, stop_level: 10.0, paths, seed: 11 }
    }

    #[test]
    fn singleton_matches_simulate() {
        let m = model();
        let u0 = vec![0.3; 8];
        let e = run_ensemble(&m, &InitialLaw::Point(u0.clone()), spec(1)).unwrap();
        let tr = simulate(&m, &u0, 0.05, 0.01, 10.0, 11, 0).unwrap();
        assert_eq!(e.trajectories[0], tr);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let m = model();
        let law = InitialLaw::Sampler(Arc::new(|rng: &mut ChaCha8Rng| (0..8).map(|_| rng.random::<f64>()).collect()));
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_ensemble(&m, &law, spec(40)).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn point_mass_shares_start() {
        let e = run_ensemble(&model(), &InitialLaw::Point(vec![0.1; 8]), spec(5)).unwrap();
        assert!(e.trajectories.iter().all(|t| t.state(0) == [0.1; 8]));
        assert!(run_ensemble(&model(), &InitialLaw::Point(vec![0.1; 8]), spec(0)).is_err());
    }

    #[test]
    fn streaming_matches_stored() {
        let m = model();
        let law = InitialLaw::Point(vec![0.2; 8]);
        let e = run_ensemble(&m, &law, spec(6)).unwrap();
        let s = stream_ensemble(&m, &law, spec(6), |tr| tr.last().to_vec()).unwrap();
        let stored: Vec<Vec<f64>> = e.final_states().into_iter().map(<[f64]>::to_vec).collect();
        assert_eq!(s, stored);
    }
}
