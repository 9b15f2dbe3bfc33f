//! Monte Carlo estimates of the transition semigroup `T(t)f(x) = E f(u^x(t))`
//! and statistical checks of the Markov, Chapman–Kolmogorov and Feller
//! properties.

use crate::elliptic::{sup_norm, SpatialGrid};
use crate::error::{invalid, Result};
use crate::martingale::CylTestFunction;
use crate::rng::StreamKey;
use crate::simulate::{map_paths, simulate_stream, step_count, stream_ensemble, Ensemble, EnsembleSpec, InitialLaw, Model};
use crate::stats::{empirical_quantile, ks_two_sample, KsResult, MeanEstimate};

/// Stage tags for child streams.
const STAGE_FIRST: u32 = 1;
const STAGE_SECOND: u32 = 2;
const STAGE_RESTART: u32 = 3;

/// Real functional of the state.
pub trait Observable: Send + Sync {
    fn eval(&self, grid: &SpatialGrid, u: &[f64]) -> f64;
}

impl Observable for CylTestFunction {
    fn eval(&self, grid: &SpatialGrid, u: &[f64]) -> f64 {
        CylTestFunction::eval(self, grid, u)
    }
}

/// Wraps a closure `u ↦ f(u)` as an [`Observable`].
pub struct FnObservable<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Send + Sync> Observable for FnObservable<F> {
    fn eval(&self, _: &SpatialGrid, u: &[f64]) -> f64 {
        (self.0)(u)
    }
}

/// Discretization and sample size shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSettings {
    pub dt: f64,
    pub paths: usize,
    pub seed: u64,
    pub stop_level: f64,
}

impl McSettings {
    fn check(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if self.paths == 0 {
            return Err(invalid("paths must be >= 1"));
        }
        Ok(())
    }
}

/// Monte Carlo value of `T(t)f(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionEstimate {
    pub x: Vec<f64>,
    pub t: f64,
    pub value: f64,
    pub std_error: f64,
    pub paths: usize,
    /// `max |f|` over the sampled endpoints.
    pub max_abs: f64,
    /// `min f` over the sampled endpoints.
    pub min_value: f64,
}

impl TransitionEstimate {
    fn from_samples(x: &[f64], t: f64, samples: &[f64]) -> Self {
        let est = MeanEstimate::from_samples(samples);
        TransitionEstimate {
            x: x.to_vec(),
            t,
            value: est.mean,
            std_error: est.std_error,
            paths: samples.len(),
            max_abs: samples.iter().map(|v| v.abs()).fold(0.0, f64::max),
            min_value: samples.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn estimate(&self) -> MeanEstimate {
        MeanEstimate { mean: self.value, std_error: self.std_error, count: self.paths }
    }
}

/// Endpoint of a stopped path after `t`, starting from `x` on stream `key`.
fn endpoint(model: &Model, x: &[f64], t: f64, mc: &McSettings, key: StreamKey) -> Result<Vec<f64>> {
    if step_count(t, mc.dt)? == 0 {
        return Ok(x.to_vec());
    }
    Ok(simulate_stream(model, x, t, mc.dt, mc.stop_level, mc.seed, key)?.last().to_vec())
}

fn collect<T: Send>(rows: Vec<Result<T>>) -> Result<Vec<T>> {
    rows.into_iter().collect()
}

pub fn estimate_transition(
    model: &Model,
    x: &[f64],
    f: &dyn Observable,
    t: f64,
    mc: &McSettings,
) -> Result<TransitionEstimate> {
    mc.check()?;
    if !(t >= 0.0) {
        return Err(invalid(format!("t must be >= 0, got {t}")));
    }
    let grid = model.grid();
    if step_count(t, mc.dt)? == 0 {
        let v = f.eval(grid, x);
        return Ok(TransitionEstimate::from_samples(x, t, &vec![v; mc.paths]));
    }
    let samples = collect(map_paths(mc.paths, |p| Ok(f.eval(grid, &endpoint(model, x, t, mc, StreamKey::path(p))?))))?;
    Ok(TransitionEstimate::from_samples(x, t, &samples))
}

/// Direct `T(s+t)f(x)` against the two-stage `T(s)(T(t)f)(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CkReport {
    pub direct: MeanEstimate,
    pub composed: MeanEstimate,
    pub z: f64,
}

fn z_between(a: &MeanEstimate, b: &MeanEstimate) -> f64 {
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    let d = (a.mean - b.mean).abs();
    if se > 0.0 {
        d / se
    } else if d <= 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Direct estimate on path streams; the composed one runs to `s` and then
/// restarts every endpoint on a fresh child stream for `t`.
pub fn chapman_kolmogorov_test(
    model: &Model,
    x: &[f64],
    f: &dyn Observable,
    s: f64,
    t: f64,
    mc: &McSettings,
) -> Result<CkReport> {
    mc.check()?;
    if !(s >= 0.0 && t > 0.0) {
        return Err(invalid(format!("need s >= 0 and t > 0, got s = {s}, t = {t}")));
    }
    let grid = model.grid();
    let rows = collect(map_paths(mc.paths, |p| -> Result<(f64, f64)> {
        let direct = f.eval(grid, &endpoint(model, x, s + t, mc, StreamKey::path(p))?);
        let mid = endpoint(model, x, s, mc, StreamKey::child(p, STAGE_FIRST, 0))?;
        let end = endpoint(model, &mid, t, mc, StreamKey::child(p, STAGE_SECOND, 0))?;
        Ok((direct, f.eval(grid, &end)))
    }))?;
    let direct = MeanEstimate::from_samples(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
    let composed = MeanEstimate::from_samples(&rows.iter().map(|r| r.1).collect::<Vec<_>>());
    Ok(CkReport { direct, composed, z: z_between(&direct, &composed) })
}

/// Options of the restart test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartOptions {
    /// Constant added to every node of the restart state (power control).
    pub shift: f64,
    /// Restart at `τ ∧ s` with `τ` the first time `‖u‖∞ ≥ level`.
    pub level: Option<f64>,
    /// Significance level of the KS test.
    pub alpha: f64,
}

impl Default for RestartOptions {
    fn default() -> Self {
        Self { shift: 0.0, level: None, alpha: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartReport {
    pub ks: KsResult,
    pub alpha: f64,
    pub pass: bool,
    /// Number of paths restarted before `s` because they reached the level.
    pub early_restarts: usize,
}

/// Sample A holds `f(u(r + t))` of uninterrupted paths, sample B holds
/// `f(ũ(t))` where `ũ` restarts from `u(r)` on a fresh stream; `r = s` or the
/// hitting time of the level capped at `s`. The two samples are compared by
/// a two-sample KS test.
pub fn restart_markov_test(
    model: &Model,
    x: &[f64],
    f: &dyn Observable,
    s: f64,
    t: f64,
    mc: &McSettings,
    opts: &RestartOptions,
) -> Result<RestartReport> {
    mc.check()?;
    if !(s > 0.0 && t > 0.0) {
        return Err(invalid(format!("need s > 0 and t > 0, got s = {s}, t = {t}")));
    }
    let grid = model.grid();
    let si = step_count(s, mc.dt)?;
    let ti = step_count(t, mc.dt)?;
    let rows = collect(map_paths(mc.paths, |p| -> Result<(f64, f64, bool)> {
        let tr = simulate_stream(model, x, s + t, mc.dt, mc.stop_level, mc.seed, StreamKey::path(p))?;
        let hit = opts.level.and_then(|lv| (0..=si).find(|&i| sup_norm(tr.state(i.min(tr.len() - 1))) >= lv));
        let r = hit.unwrap_or(si).min(tr.len() - 1);
        let a = f.eval(grid, tr.state((r + ti).min(tr.len() - 1)));
        let start: Vec<f64> = tr.state(r).iter().map(|v| v + opts.shift).collect();
        let b = f.eval(grid, &endpoint(model, &start, t, mc, StreamKey::child(p, STAGE_RESTART, 0))?);
        Ok((a, b, hit.is_some_and(|h| h < si)))
    }))?;
    let a: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let b: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let ks = ks_two_sample(&a, &b);
    Ok(RestartReport { ks, alpha: opts.alpha, pass: ks.p_value >= opts.alpha, early_restarts: rows.iter().filter(|r| r.2).count() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FellerGap {
    pub delta: f64,
    /// `|T(t)f(x + δe) − T(t)f(x)|` from common random numbers.
    pub gap: f64,
    /// Standard error of the paired difference.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FellerReport {
    pub base: MeanEstimate,
    pub gaps: Vec<FellerGap>,
    /// `gap_{m+1} ≤ gap_m + 3·(pooled paired SE)` for every `m`.
    pub nonincreasing: bool,
    /// Final gap within `3·SE` of the base estimate.
    pub final_within_noise: bool,
}

pub fn feller_test(
    model: &Model,
    x: &[f64],
    direction: &[f64],
    deltas: &[f64],
    f: &dyn Observable,
    t: f64,
    mc: &McSettings,
) -> Result<FellerReport> {
    mc.check()?;
    if direction.len() != x.len() {
        return Err(invalid("perturbation direction must live on the model grid"));
    }
    if deltas.is_empty() || deltas.iter().any(|d| !(*d >= 0.0)) || deltas.windows(2).any(|w| w[1] > w[0]) {
        return Err(invalid("perturbation sizes must be nonnegative and decreasing"));
    }
    let grid = model.grid();
    let rows = collect(map_paths(mc.paths, |p| -> Result<Vec<f64>> {
        let key = StreamKey::path(p);
        let base = f.eval(grid, &endpoint(model, x, t, mc, key)?);
        let mut row = vec![base];
        for &d in deltas {
            let start: Vec<f64> = x.iter().zip(direction).map(|(u, e)| u + d * e).collect();
            row.push(f.eval(grid, &endpoint(model, &start, t, mc, key)?) - base);
        }
        Ok(row)
    }))?;
    let column = |j: usize| MeanEstimate::from_samples(&rows.iter().map(|r| r[j]).collect::<Vec<_>>());
    let base = column(0);
    let gaps: Vec<FellerGap> = deltas
        .iter()
        .enumerate()
        .map(|(m, &delta)| {
            let e = column(m + 1);
            FellerGap { delta, gap: e.mean.abs(), std_error: e.std_error }
        })
        .collect();
    let nonincreasing = gaps
        .windows(2)
        .all(|w| w[1].gap <= w[0].gap + 3.0 * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt());
    let final_within_noise = gaps.last().is_some_and(|g| g.gap <= 3.0 * base.std_error);
    Ok(FellerReport { base, gaps, nonincreasing, final_within_noise })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContainmentReport {
    pub horizon: f64,
    pub quantile: f64,
    /// Empirical `quantile` of `sup_{t ≤ T} ‖u(t)‖∞`.
    pub radius: f64,
    pub paths: usize,
}

fn check_quantile(q: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(invalid(format!("quantile must lie in (0, 1], got {q}")));
    }
    Ok(())
}

pub fn compact_containment(ensemble: &Ensemble, horizon: f64, quantile: f64) -> Result<ContainmentReport> {
    check_quantile(quantile)?;
    if horizon > ensemble.spec.horizon + 0.5 * ensemble.spec.dt {
        return Err(invalid(format!("horizon {horizon} exceeds the ensemble horizon {}", ensemble.spec.horizon)));
    }
    let upto = ensemble.spec.index_of(horizon);
    let sups: Vec<f64> = ensemble.trajectories.iter().map(|tr| tr.running_sup(upto)).collect();
    Ok(ContainmentReport { horizon, quantile, radius: empirical_quantile(&sups, quantile), paths: sups.len() })
}

/// Containment radii at several horizons from one streamed ensemble.
pub fn compact_containment_streamed(
    model: &Model,
    law: &InitialLaw,
    spec: EnsembleSpec,
    horizons: &[f64],
    quantile: f64,
) -> Result<Vec<ContainmentReport>> {
    check_quantile(quantile)?;
    let idx = horizon_indices(&spec, horizons)?;
    let sups = stream_ensemble(model, law, spec, |tr| idx.iter().map(|&i| tr.running_sup(i)).collect::<Vec<_>>())?;
    Ok(horizons
        .iter()
        .enumerate()
        .map(|(j, &h)| {
            let col: Vec<f64> = sups.iter().map(|r| r[j]).collect();
            ContainmentReport { horizon: h, quantile, radius: empirical_quantile(&col, quantile), paths: col.len() }
        })
        .collect())
}

fn horizon_indices(spec: &EnsembleSpec, horizons: &[f64]) -> Result<Vec<usize>> {
    horizons
        .iter()
        .map(|&h| {
            if !(h >= 0.0) || h > spec.horizon + 0.5 * spec.dt {
                Err(invalid(format!("horizon {h} outside [0, {}]", spec.horizon)))
            } else {
                Ok(spec.index_of(h))
            }
        })
        .collect()
}

/// `E‖u(T)‖∞²` at each requested horizon from one streamed ensemble.
pub fn sup_norm_second_moments(
    model: &Model,
    law: &InitialLaw,
    spec: EnsembleSpec,
    horizons: &[f64],
) -> Result<Vec<(f64, MeanEstimate)>> {
    let idx = horizon_indices(&spec, horizons)?;
    let rows = stream_ensemble(model, law, spec, |tr| {
        idx.iter().map(|&i| sup_norm(tr.state(i.min(tr.len() - 1))).powi(2)).collect::<Vec<_>>()
    })?;
    Ok(horizons
        .iter()
        .enumerate()
        .map(|(j, &h)| (h, MeanEstimate::from_samples(&rows.iter().map(|r| r[j]).collect::<Vec<_>>())))
        .collect())
}
