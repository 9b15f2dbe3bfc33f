//! Exponential Euler in mild form:
//! `u_{i+1} = S(dt)·(u_i + dt·F(u_i) + Σ_k ΔW_k g_k(·, u_i))`.

use crate::coefficients::{NoiseFamily, PolynomialDrift};
use crate::elliptic::{sup_norm, Propagator, SemigroupCache};
use crate::error::{invalid, Error, Result};
use crate::rng::StreamKey;
use crate::simulate::{step_count, Model, WienerIncrements};

/// Reusable stepping context for one model and step size.
#[derive(Debug, Clone)]
pub struct MildStepper<'a> {
    model: &'a Model,
    prop: Propagator,
    dt: f64,
}

impl<'a> MildStepper<'a> {
    pub fn new(model: &'a Model, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        Ok(Self { model, prop: model.cache.propagator(dt)?, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    /// One step into `out`; `scratch` has length `n`. Fails with
    /// [`Error::BlowUp`] (step 0) if the new state is not finite.
    pub fn step_into(&self, u: &[f64], dw: &[f64], scratch: &mut [f64], out: &mut [f64]) -> Result<()> {
        explicit_increment(&self.model.drift, &self.model.noise, u, self.dt, dw, scratch);
        self.prop.apply_into(scratch, out);
        if out.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::BlowUp { step: 0 })
        }
    }

    /// Integrates from `u0` with the given increments, calling
    /// `visit(i, u_i)` for every time index `0..=steps`. Once
    /// `‖u_i‖∞ ≥ stop_level` the state is frozen (stopped process); a
    /// non-finite step freezes the last finite state. Returns the stop index.
    pub fn run<V: FnMut(usize, &[f64])>(
        &self,
        u0: &[f64],
        incr: &WienerIncrements,
        stop_level: f64,
        mut visit: V,
    ) -> Option<usize> {
        let n = u0.len();
        let mut u = u0.to_vec();
        let mut next = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        let mut stop = (sup_norm(&u) >= stop_level).then_some(0);
        visit(0, &u);
        for i in 0..incr.steps() {
            if stop.is_none() {
                match self.step_into(&u, incr.row(i), &mut scratch, &mut next) {
                    Ok(()) => {
                        std::mem::swap(&mut u, &mut next);
                        if sup_norm(&u) >= stop_level {
                            stop = Some(i + 1);
                        }
                    }
                    Err(_) => stop = Some(i),
                }
            }
            visit(i + 1, &u);
        }
        stop
    }
}

fn explicit_increment(
    drift: &PolynomialDrift,
    noise: &NoiseFamily,
    u: &[f64],
    dt: f64,
    dw: &[f64],
    out: &mut [f64],
) {
    for (i, (o, &r)) in out.iter_mut().zip(u).enumerate() {
        *o = r + dt * drift.eval_at(i, r);
    }
    noise.accumulate(u, dw, out);
}

/// One exponential-Euler step.
pub fn step_mild(
    cache: &SemigroupCache,
    drift: &PolynomialDrift,
    noise: &NoiseFamily,
    u: &[f64],
    dt: f64,
    dw: &[f64],
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    if dw.len() != noise.k() {
        return Err(invalid(format!("expected {} noise increments, got {}", noise.k(), dw.len())));
    }
    let mut tmp = vec![0.0; u.len()];
    explicit_increment(drift, noise, u, dt, dw, &mut tmp);
    let out = cache.apply_semigroup(dt, &tmp)?;
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::BlowUp { step: 0 })
    }
}

/// Time-discrete sample path on the uniform grid `t_i = i·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dt: f64,
    n: usize,
    states: Vec<f64>,
    pub seed: u64,
    pub path_index: u64,
    pub stop_level: f64,
    /// First index with `‖u_i‖∞ ≥ stop_level` (or the last finite index
    /// before a blow-up); states are frozen from there on.
    pub stop_index: Option<usize>,
}

impl Trajectory {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of recorded states (`steps + 1`).
    pub fn len(&self) -> usize {
        self.states.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.n..(i + 1) * self.n]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks_exact(self.n)
    }

    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn is_stopped_at(&self, i: usize) -> bool {
        self.stop_index.is_some_and(|s| i >= s)
    }

    /// `sup_{i ≤ upto} ‖u_i‖∞`.
    pub fn running_sup(&self, upto: usize) -> f64 {
        (0..=upto.min(self.len() - 1)).map(|i| sup_norm(self.state(i))).fold(0.0, f64::max)
    }
}

/// Simulates one path over `[0, horizon]` with the stream of `path_index`.
pub fn simulate(
    model: &Model,
    u0: &[f64],
    horizon: f64,
    dt: f64,
    stop_level: f64,
    seed: u64,
    path_index: u64,
) -> Result<Trajectory> {
    if !(horizon > 0.0) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    let steps = step_count(horizon, dt)?.max(1);
    let incr = WienerIncrements::sample(seed, path_index, steps, model.k(), dt)?;
    simulate_with_increments(model, u0, &incr, stop_level)
}

/// Like [`simulate`] but draws the noise from an arbitrary stream key
/// (multi-stage estimators).
pub fn simulate_stream(
    model: &Model,
    u0: &[f64],
    horizon: f64,
    dt: f64,
    stop_level: f64,
    seed: u64,
    key: StreamKey,
) -> Result<Trajectory> {
    if !(horizon > 0.0) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    let steps = step_count(horizon, dt)?.max(1);
    let incr = WienerIncrements::sample_stream(seed, key, steps, model.k(), dt)?;
    simulate_with_increments(model, u0, &incr, stop_level)
}

/// Simulates with caller-supplied increments (coupled experiments).
pub fn simulate_with_increments(
    model: &Model,
    u0: &[f64],
    incr: &WienerIncrements,
    stop_level: f64,
) -> Result<Trajectory> {
    let n = model.n();
    if u0.len() != n {
        return Err(invalid(format!("initial state has {} entries, grid has {n}", u0.len())));
    }
    if incr.k() != model.k() {
        return Err(invalid(format!("increments have {} modes, model has {}", incr.k(), model.k())));
    }
    let key = incr.key();
    let mk = |states: Vec<f64>, stop_index| Trajectory {
        dt: incr.dt(),
        n,
        states,
        seed: incr.seed(),
        path_index: key.path,
        stop_level,
        stop_index,
    };
    if !u0.iter().all(|v| v.is_finite()) {
        return Ok(mk(u0.to_vec(), Some(0)));
    }
    let stepper = MildStepper::new(model, incr.dt())?;
    let mut states = Vec::with_capacity((incr.steps() + 1) * n);
    let stop = stepper.run(u0, incr, stop_level, |_, u| states.extend_from_slice(u));
    Ok(mk(states, stop))
}
