//! Generator of the equation on cylindrical test functions and Monte Carlo
//! checks that `M^f(t) = f(u(t)) − ∫_0^t Lf(u(r)) dr` is a martingale with
//! the predicted quadratic variation.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::elliptic::SpatialGrid;
use crate::error::{invalid, Error, Result};
use crate::rng::{stream_rng, StreamKey};
use crate::simulate::{stream_ensemble, Ensemble, EnsembleSpec, InitialLaw, Model, Trajectory};
use crate::stats::{compensated_sum, MeanEstimate};

/// Minimum number of paths alive at the window start.
pub const MIN_ACTIVE_PATHS: usize = 30;

/// A `C²` function of `m` real variables with exact derivatives.
pub trait TestPhi: Send + Sync {
    fn arity(&self) -> usize;
    fn value(&self, s: &[f64]) -> f64;
    fn grad(&self, s: &[f64]) -> Vec<f64>;
    /// Row-major `m × m` Hessian.
    fn hess(&self, s: &[f64]) -> Vec<f64>;
}

/// `φ(s) = s`.
#[derive(Debug, Clone, Copy)]
pub struct LinearPhi;

impl TestPhi for LinearPhi {
    fn arity(&self) -> usize {
        1
    }
    fn value(&self, s: &[f64]) -> f64 {
        s[0]
    }
    fn grad(&self, _: &[f64]) -> Vec<f64> {
        vec![1.0]
    }
    fn hess(&self, _: &[f64]) -> Vec<f64> {
        vec![0.0]
    }
}

/// `φ(s) = s²`.
#[derive(Debug, Clone, Copy)]
pub struct SquarePhi;

impl TestPhi for SquarePhi {
    fn arity(&self) -> usize {
        1
    }
    fn value(&self, s: &[f64]) -> f64 {
        s[0] * s[0]
    }
    fn grad(&self, s: &[f64]) -> Vec<f64> {
        vec![2.0 * s[0]]
    }
    fn hess(&self, _: &[f64]) -> Vec<f64> {
        vec![2.0]
    }
}

/// `φ(s) = Σ_k [a_k s_k + b_k sin(ω_k s_k) + d_k s_k²] + c Σ_{k<l} s_k s_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolyPhi {
    pub linear: Vec<f64>,
    pub sine_amp: Vec<f64>,
    pub sine_freq: Vec<f64>,
    pub quad: Vec<f64>,
    pub cross: f64,
}

impl TrigPolyPhi {
    /// Coefficients drawn uniformly from `[−1, 1]` (frequencies from `[0.5, 2]`).
    pub fn random(m: usize, seed: u64) -> Self {
        let mut rng = stream_rng(seed, StreamKey::child(0, 7, m as u32));
        let mut draw = |lo: f64, hi: f64, k: usize| -> Vec<f64> { (0..k).map(|_| rng.random_range(lo..hi)).collect() };
        let linear = draw(-1.0, 1.0, m);
        let sine_amp = draw(-1.0, 1.0, m);
        let sine_freq = draw(0.5, 2.0, m);
        let quad = draw(-1.0, 1.0, m);
        let cross = draw(-1.0, 1.0, 1)[0];
        Self { linear, sine_amp, sine_freq, quad, cross }
    }
}

impl TestPhi for TrigPolyPhi {
    fn arity(&self) -> usize {
        self.linear.len()
    }
    fn value(&self, s: &[f64]) -> f64 {
        let m = self.arity();
        let mut v = 0.0;
        for k in 0..m {
            v += self.linear[k] * s[k] + self.sine_amp[k] * (self.sine_freq[k] * s[k]).sin() + self.quad[k] * s[k] * s[k];
            for l in k + 1..m {
                v += self.cross * s[k] * s[l];
            }
        }
        v
    }
    fn grad(&self, s: &[f64]) -> Vec<f64> {
        let m = self.arity();
        let total: f64 = s.iter().sum();
        (0..m)
            .map(|k| {
                self.linear[k]
                    + self.sine_amp[k] * self.sine_freq[k] * (self.sine_freq[k] * s[k]).cos()
                    + 2.0 * self.quad[k] * s[k]
                    + self.cross * (total - s[k])
            })
            .collect()
    }
    fn hess(&self, s: &[f64]) -> Vec<f64> {
        let m = self.arity();
        let mut h = vec![self.cross; m * m];
        for k in 0..m {
            let w = self.sine_freq[k];
            h[k * m + k] = -self.sine_amp[k] * w * w * (w * s[k]).sin() + 2.0 * self.quad[k];
        }
        h
    }
}

/// `α φ_a(s_a) + β φ_b(s_b)` on concatenated arguments.
struct CombinedPhi {
    alpha: f64,
    a: Arc<dyn TestPhi>,
    beta: f64,
    b: Arc<dyn TestPhi>,
}

impl TestPhi for CombinedPhi {
    fn arity(&self) -> usize {
        self.a.arity() + self.b.arity()
    }
    fn value(&self, s: &[f64]) -> f64 {
        let ma = self.a.arity();
        self.alpha * self.a.value(&s[..ma]) + self.beta * self.b.value(&s[ma..])
    }
    fn grad(&self, s: &[f64]) -> Vec<f64> {
        let ma = self.a.arity();
        let mut g: Vec<f64> = self.a.grad(&s[..ma]).into_iter().map(|x| self.alpha * x).collect();
        g.extend(self.b.grad(&s[ma..]).into_iter().map(|x| self.beta * x));
        g
    }
    fn hess(&self, s: &[f64]) -> Vec<f64> {
        let (ma, mb) = (self.a.arity(), self.b.arity());
        let m = ma + mb;
        let (ha, hb) = (self.a.hess(&s[..ma]), self.b.hess(&s[ma..]));
        let mut h = vec![0.0; m * m];
        for i in 0..ma {
            for j in 0..ma {
                h[i * m + j] = self.alpha * ha[i * ma + j];
            }
        }
        for i in 0..mb {
            for j in 0..mb {
                h[(ma + i) * m + ma + j] = self.beta * hb[i * mb + j];
            }
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionKind {
    Linear,
    Square,
    General,
}

impl fmt::Display for FunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Linear => "linear",
            Self::Square => "square",
            Self::General => "general",
        })
    }
}

/// `f(u) = φ(⟨u, x*_1⟩, …, ⟨u, x*_m⟩)` with the weighted pairing of the grid.
#[derive(Clone)]
pub struct CylTestFunction {
    functionals: Vec<Vec<f64>>,
    phi: Arc<dyn TestPhi>,
    kind: FunctionKind,
}

impl fmt::Debug for CylTestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CylTestFunction").field("kind", &self.kind).field("functionals", &self.functionals).finish()
    }
}

impl CylTestFunction {
    pub fn linear(x_star: Vec<f64>) -> Self {
        Self { functionals: vec![x_star], phi: Arc::new(LinearPhi), kind: FunctionKind::Linear }
    }

    pub fn square(x_star: Vec<f64>) -> Self {
        Self { functionals: vec![x_star], phi: Arc::new(SquarePhi), kind: FunctionKind::Square }
    }

    pub fn general(functionals: Vec<Vec<f64>>, phi: Arc<dyn TestPhi>) -> Result<Self> {
        if functionals.len() != phi.arity() {
            return Err(invalid(format!("phi takes {} arguments, got {} functionals", phi.arity(), functionals.len())));
        }
        if functionals.is_empty() {
            return Err(invalid("a cylindrical function needs at least one functional"));
        }
        let n = functionals[0].len();
        if functionals.iter().any(|x| x.len() != n) {
            return Err(invalid("functionals must share one grid"));
        }
        Ok(Self { functionals, phi, kind: FunctionKind::General })
    }

    /// `α f + β g`.
    pub fn combine(alpha: f64, f: &Self, beta: f64, g: &Self) -> Result<Self> {
        let mut functionals = f.functionals.clone();
        functionals.extend(g.functionals.iter().cloned());
        let phi = CombinedPhi { alpha, a: Arc::clone(&f.phi), beta, b: Arc::clone(&g.phi) };
        Self::general(functionals, Arc::new(phi))
    }

    pub fn kind(&self) -> FunctionKind {
        self.kind
    }

    pub fn functionals(&self) -> &[Vec<f64>] {
        &self.functionals
    }

    pub fn phi(&self) -> &dyn TestPhi {
        self.phi.as_ref()
    }

    pub fn pairings(&self, grid: &SpatialGrid, u: &[f64]) -> Vec<f64> {
        self.functionals.iter().map(|x| grid.inner(u, x)).collect()
    }

    pub fn eval(&self, grid: &SpatialGrid, u: &[f64]) -> f64 {
        self.phi.value(&self.pairings(grid, u))
    }

    /// Largest deviation of central finite differences from the supplied
    /// gradient and Hessian at `points`, relative to `max(1, |exact|)`.
    pub fn derivative_mismatch(&self, points: &[Vec<f64>]) -> f64 {
        let m = self.phi.arity();
        let mut worst = 0.0f64;
        let rel = |fd: f64, exact: f64| (fd - exact).abs() / exact.abs().max(1.0);
        for s in points {
            let g = self.phi.grad(s);
            let h = self.phi.hess(s);
            for k in 0..m {
                let step = 1e-4 * (1.0 + s[k].abs());
                let mut sp = s.clone();
                let mut sm = s.clone();
                sp[k] += step;
                sm[k] -= step;
                let fd = (self.phi.value(&sp) - self.phi.value(&sm)) / (2.0 * step);
                worst = worst.max(rel(fd, g[k]));
                let (gp, gm) = (self.phi.grad(&sp), self.phi.grad(&sm));
                for l in 0..m {
                    worst = worst.max(rel((gp[l] - gm[l]) / (2.0 * step), h[l * m + k]));
                }
            }
        }
        worst
    }
}

/// The generator `L` of a model bound to one test function, with `A x*_k`
/// precomputed.
pub struct Generator<'a> {
    model: &'a Model,
    f: &'a CylTestFunction,
    a_x: Vec<Vec<f64>>,
    drift_zero: bool,
}

impl<'a> Generator<'a> {
    pub fn new(model: &'a Model, f: &'a CylTestFunction) -> Result<Self> {
        if f.functionals[0].len() != model.n() {
            return Err(invalid("test function and model use different grids"));
        }
        let a_x = f.functionals.iter().map(|x| model.cache.apply_operator(x)).collect();
        Ok(Self { model, f, a_x, drift_zero: model.drift.is_zero() })
    }

    pub fn test_function(&self) -> &CylTestFunction {
        self.f
    }

    pub fn eval_f(&self, u: &[f64]) -> f64 {
        self.f.eval(self.model.grid(), u)
    }

    /// `Lf(u) = Σ_k ∂_kφ·[⟨u, A x*_k⟩ + ⟨F(u), x*_k⟩] + ½ Σ_{k,l} [G(u)*x*_k, G(u)*x*_l] ∂²_{kl}φ`.
    pub fn apply(&self, u: &[f64]) -> f64 {
        let grid = self.model.grid();
        let s = self.f.pairings(grid, u);
        let grad = self.f.phi.grad(&s);
        let fu = (!self.drift_zero).then(|| self.model.drift.eval(u));
        let m = s.len();
        let mut first = 0.0;
        for ((&dk, x), ax) in grad.iter().zip(&self.f.functionals).zip(&self.a_x) {
            if dk != 0.0 {
                let reaction = fu.as_ref().map_or(0.0, |fu| grid.inner(fu, x));
                first += dk * (grid.inner(u, ax) + reaction);
            }
        }
        if self.model.noise.is_zero() {
            return first;
        }
        let hess = self.f.phi.hess(&s);
        if hess.iter().all(|h| *h == 0.0) {
            return first;
        }
        let gx: Vec<Vec<f64>> = self.f.functionals.iter().map(|x| self.model.noise.adjoint_apply(u, x)).collect();
        let mut second = 0.0;
        for k in 0..m {
            for l in 0..m {
                let h = hess[k * m + l];
                if h != 0.0 {
                    second += h * gx[k].iter().zip(&gx[l]).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        first + 0.5 * second
    }

    fn lf_values(&self, traj: &Trajectory, from: usize, to: usize) -> Vec<f64> {
        (from..=to).map(|i| self.apply(traj.state(i))).collect()
    }

    /// `∫ Lf` over `[t_i, t_{i+1}]` by the trapezoid rule, zero once the path is stopped.
    fn segments(traj: &Trajectory, from: usize, lf: &[f64]) -> Vec<f64> {
        (0..lf.len() - 1)
            .map(|j| if traj.is_stopped_at(from + j) { 0.0 } else { 0.5 * traj.dt() * (lf[j] + lf[j + 1]) })
            .collect()
    }

    pub fn mf_path(&self, traj: &Trajectory) -> Vec<f64> {
        let last = traj.len() - 1;
        let seg = Self::segments(traj, 0, &self.lf_values(traj, 0, last));
        let mut out = Vec::with_capacity(traj.len());
        let (mut acc, mut comp) = (0.0f64, 0.0f64);
        out.push(self.eval_f(traj.state(0)));
        for i in 1..=last {
            // Neumaier step keeps long integrals reproducible to the last bit.
            let t = acc + seg[i - 1];
            comp += if acc.abs() >= seg[i - 1].abs() { (acc - t) + seg[i - 1] } else { (seg[i - 1] - t) + acc };
            acc = t;
            out.push(self.eval_f(traj.state(i)) - (acc + comp));
        }
        out
    }

    /// `M^f(t_j) − M^f(t_i)` with a Richardson estimate of the trapezoid error.
    fn increment(&self, traj: &Trajectory, i: usize, j: usize) -> (f64, f64) {
        let lf = self.lf_values(traj, i, j);
        let seg = Self::segments(traj, i, &lf);
        let fine = compensated_sum(seg.iter().copied());
        let inc = self.eval_f(traj.state(j)) - self.eval_f(traj.state(i)) - fine;
        let bias = if (j - i).is_multiple_of(2) && j > i {
            let coarse = compensated_sum((i..j).step_by(2).map(|k| {
                if traj.is_stopped_at(k) {
                    0.0
                } else if traj.is_stopped_at(k + 1) {
                    seg[k - i]
                } else {
                    traj.dt() * (lf[k - i] + lf[k + 2 - i])
                }
            }));
            (fine - coarse) / 3.0
        } else {
            0.0
        };
        (inc, bias)
    }
}

pub fn generator_apply(model: &Model, f: &CylTestFunction, u: &[f64]) -> Result<f64> {
    Ok(Generator::new(model, f)?.apply(u))
}

/// `M^f(t_i) = f(u_i) − ∫_0^{t_i} Lf(u(r)) dr`, frozen after the stop index.
pub fn mf_path(model: &Model, f: &CylTestFunction, traj: &Trajectory) -> Result<Vec<f64>> {
    Ok(Generator::new(model, f)?.mf_path(traj))
}

/// Bounded continuous weight `h(u)` applied at a sample time.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    Tanh(Vec<f64>),
    Clip(Vec<f64>),
    One,
}

impl WeightKind {
    pub fn eval(&self, grid: &SpatialGrid, u: &[f64]) -> f64 {
        match self {
            Self::Tanh(y) => grid.inner(u, y).tanh(),
            Self::Clip(y) => grid.inner(u, y).clamp(-1.0, 1.0),
            Self::One => 1.0,
        }
    }

    pub fn bound(&self) -> f64 {
        1.0
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Tanh(_) => "tanh",
            Self::Clip(_) => "clip",
            Self::One => "one",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightFactor {
    pub time: f64,
    pub kind: WeightKind,
}

/// Product `Π_j h_j(u(s_j))` used to test conditional means through
/// unconditional ones.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightSpec {
    pub factors: Vec<WeightFactor>,
}

impl WeightSpec {
    pub fn unit() -> Self {
        Self::default()
    }

    pub fn single(time: f64, kind: WeightKind) -> Self {
        Self { factors: vec![WeightFactor { time, kind }] }
    }

    pub fn bound(&self) -> f64 {
        self.factors.iter().map(|f| f.kind.bound()).product()
    }

    pub fn eval(&self, grid: &SpatialGrid, traj: &Trajectory) -> f64 {
        self.factors
            .iter()
            .map(|f| f.kind.eval(grid, traj.state(time_index(f.time, traj.dt()))))
            .product()
    }

    pub fn describe(&self) -> String {
        if self.factors.is_empty() {
            return "one".into();
        }
        self.factors.iter().map(|f| format!("{}@{}", f.kind.name(), f.time)).collect::<Vec<_>>().join("*")
    }
}

fn time_index(t: f64, dt: f64) -> usize {
    (t / dt).round() as usize
}

/// Weighted increment mean `E[(M^f(t∧τ) − M^f(s∧τ)) Π_j h_j(u(s_j))]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleStatistic {
    pub estimate: f64,
    pub std_error: f64,
    pub paths: usize,
    pub active_paths: usize,
    pub window: (f64, f64),
    pub weights: WeightSpec,
    /// Mean Richardson estimate of the trapezoid error in the increment.
    pub quadrature_bias: f64,
}

impl MartingaleStatistic {
    pub fn z_score(&self) -> f64 {
        if self.std_error > 0.0 {
            self.estimate.abs() / self.std_error
        } else if self.estimate.abs() <= 1e-9 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn passes(&self, z: f64) -> bool {
        self.z_score() <= z
    }
}

/// One entry of a martingale battery.
#[derive(Debug, Clone)]
pub struct MartingaleCase {
    pub id: String,
    pub f: CylTestFunction,
    pub s: f64,
    pub t: f64,
    pub weights: WeightSpec,
}

struct CaseSample {
    value: f64,
    bias: f64,
    active: bool,
}

fn check_window(s: f64, t: f64, weights: &WeightSpec, horizon: f64, dt: f64) -> Result<(usize, usize)> {
    if !(0.0 <= s && s < t) {
        return Err(invalid(format!("need 0 <= s < t, got s = {s}, t = {t}")));
    }
    if t > horizon + 0.5 * dt {
        return Err(invalid(format!("t = {t} exceeds the simulated horizon {horizon}")));
    }
    if let Some(f) = weights.factors.iter().find(|f| !(f.time >= 0.0 && f.time <= s + 1e-12)) {
        return Err(invalid(format!("weight time {} must lie in [0, s]", f.time)));
    }
    Ok((time_index(s, dt), time_index(t, dt)))
}

fn case_sample(gen: &Generator<'_>, weights: &WeightSpec, i: usize, j: usize, traj: &Trajectory) -> CaseSample {
    let h = weights.eval(gen.model.grid(), traj);
    let (inc, bias) = gen.increment(traj, i, j);
    CaseSample { value: inc * h, bias: bias * h, active: !traj.is_stopped_at(i) }
}

fn aggregate(samples: &[CaseSample], s: f64, t: f64, weights: &WeightSpec) -> Result<MartingaleStatistic> {
    let active = samples.iter().filter(|c| c.active).count();
    if active < MIN_ACTIVE_PATHS {
        return Err(Error::InsufficientSample { available: active, required: MIN_ACTIVE_PATHS });
    }
    let values: Vec<f64> = samples.iter().map(|c| c.value).collect();
    let est = MeanEstimate::from_samples(&values);
    let bias = compensated_sum(samples.iter().map(|c| c.bias)) / samples.len() as f64;
    Ok(MartingaleStatistic {
        estimate: est.mean,
        std_error: est.std_error,
        paths: samples.len(),
        active_paths: active,
        window: (s, t),
        weights: weights.clone(),
        quadrature_bias: bias,
    })
}

/// Martingale test on a stored ensemble. `model` supplies the generator and
/// may differ from the model that produced the ensemble (power controls).
pub fn martingale_test(
    model: &Model,
    f: &CylTestFunction,
    ensemble: &Ensemble,
    s: f64,
    t: f64,
    weights: &WeightSpec,
) -> Result<MartingaleStatistic> {
    let spec = ensemble.spec;
    let (i, j) = check_window(s, t, weights, spec.horizon, spec.dt)?;
    let gen = Generator::new(model, f)?;
    let samples: Vec<CaseSample> =
        ensemble.trajectories.iter().map(|tr| case_sample(&gen, weights, i, j.min(tr.len() - 1), tr)).collect();
    aggregate(&samples, s, t, weights)
}

/// Runs all `cases` on one streamed ensemble of `sim_model`, with the
/// generator taken from `gen_model`.
pub fn martingale_battery(
    sim_model: &Model,
    gen_model: &Model,
    law: &InitialLaw,
    spec: EnsembleSpec,
    cases: &[MartingaleCase],
) -> Result<Vec<MartingaleStatistic>> {
    let windows = cases
        .iter()
        .map(|c| check_window(c.s, c.t, &c.weights, spec.horizon, spec.dt))
        .collect::<Result<Vec<_>>>()?;
    let gens = cases.iter().map(|c| Generator::new(gen_model, &c.f)).collect::<Result<Vec<_>>>()?;
    let per_path = stream_ensemble(sim_model, law, spec, |tr| {
        cases
            .iter()
            .zip(&gens)
            .zip(&windows)
            .map(|((c, g), &(i, j))| case_sample(g, &c.weights, i, j.min(tr.len() - 1), tr))
            .collect::<Vec<_>>()
    })?;
    let mut by_case: Vec<Vec<CaseSample>> = cases.iter().map(|_| Vec::with_capacity(spec.paths)).collect();
    for row in per_path {
        for (dst, v) in by_case.iter_mut().zip(row) {
            dst.push(v);
        }
    }
    cases.iter().zip(by_case).map(|(c, samples)| aggregate(&samples, c.s, c.t, &c.weights)).collect()
}

/// Realized versus predicted quadratic variation of `⟨u, x*⟩` on `[0, t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QvReport {
    pub realized: f64,
    pub predicted: f64,
    pub rel_err: f64,
    pub paths: usize,
}

fn qv_sample(model: &Model, x_star: &[f64], a_x: &[f64], traj: &Trajectory, upto: usize) -> (f64, f64) {
    let grid = model.grid();
    let dt = traj.dt();
    let pair = |u: &[f64]| grid.inner(u, x_star);
    let gnorm = |u: &[f64]| model.noise.adjoint_apply(u, x_star).iter().map(|g| g * g).sum::<f64>();
    let mut realized = Vec::with_capacity(upto);
    let mut predicted = Vec::with_capacity(upto);
    let mut g_prev = gnorm(traj.state(0));
    for i in 0..upto {
        if traj.is_stopped_at(i) {
            break;
        }
        let (u, v) = (traj.state(i), traj.state(i + 1));
        let drift = grid.inner(u, a_x) + grid.inner(&model.drift.eval(u), x_star);
        let d = pair(v) - pair(u) - dt * drift;
        realized.push(d * d);
        let g_next = gnorm(v);
        predicted.push(0.5 * dt * (g_prev + g_next));
        g_prev = g_next;
    }
    (compensated_sum(realized), compensated_sum(predicted))
}

fn qv_report(pairs: &[(f64, f64)]) -> QvReport {
    let n = pairs.len() as f64;
    let realized = compensated_sum(pairs.iter().map(|p| p.0)) / n;
    let predicted = compensated_sum(pairs.iter().map(|p| p.1)) / n;
    let rel_err = if predicted > 0.0 { (realized - predicted).abs() / predicted } else { realized.abs() };
    QvReport { realized, predicted, rel_err, paths: pairs.len() }
}

pub fn quadratic_variation_test(model: &Model, x_star: &[f64], ensemble: &Ensemble, t: f64) -> Result<QvReport> {
    let spec = ensemble.spec;
    let (_, j) = check_window(0.0, t, &WeightSpec::unit(), spec.horizon, spec.dt)?;
    let a_x = model.cache.apply_operator(x_star);
    let pairs: Vec<(f64, f64)> =
        ensemble.trajectories.iter().map(|tr| qv_sample(model, x_star, &a_x, tr, j.min(tr.len() - 1))).collect();
    Ok(qv_report(&pairs))
}

/// Streamed variant of [`quadratic_variation_test`].
pub fn quadratic_variation_streamed(
    model: &Model,
    law: &InitialLaw,
    spec: EnsembleSpec,
    x_star: &[f64],
    t: f64,
) -> Result<QvReport> {
    let (_, j) = check_window(0.0, t, &WeightSpec::unit(), spec.horizon, spec.dt)?;
    let a_x = model.cache.apply_operator(x_star);
    let pairs = stream_ensemble(model, law, spec, |tr| qv_sample(model, x_star, &a_x, tr, j.min(tr.len() - 1)))?;
    Ok(qv_report(&pairs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{NoiseFamily, PolynomialDrift, ProfileKind};
    use crate::elliptic::{BoundaryCondition, Diffusion, EllipticOperator, SemigroupCache};
    use crate::simulate::{run_ensemble, simulate};

    fn heat(n: usize) -> (SpatialGrid, Arc<SemigroupCache>) {
        let g = SpatialGrid::new(n, 1.0, BoundaryCondition::Dirichlet).unwrap();
        let c = SemigroupCache::new(&EllipticOperator::assemble(&g, &Diffusion::Constant(1.0)).unwrap());
        (g, Arc::new(c))
    }

    fn pure_noise() -> (SpatialGrid, Model) {
        let g = SpatialGrid::new(5, 1.0, BoundaryCondition::Neumann).unwrap();
        let c = SemigroupCache::zero(&g);
        let noise = NoiseFamily::additive(&c, &[1.0], ProfileKind::Flat);
        let m = Model::new(Arc::new(c), PolynomialDrift::zero(&g), noise).unwrap();
        (g, m)
    }

    #[test]
    fn linear_on_eigenvector_gives_eigenvalue() {
        let (g, c) = heat(7);
        let m = Model::new(c.clone(), PolynomialDrift::zero(&g), NoiseFamily::empty(&g)).unwrap();
        for k in 0..3 {
            let v = c.eigvec(k);
            let lf = generator_apply(&m, &CylTestFunction::linear(v.clone()), &v).unwrap();
            assert!((lf - c.eigvals()[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn linear_generator_is_drift_pairing() {
        let (g, c) = heat(6);
        let drift = PolynomialDrift::constant(&g, &[0.3, 1.0, 0.0, -1.0]);
        let noise = NoiseFamily::holder_sqrt(&c, &[0.5], ProfileKind::Sine);
        let m = Model::new(c.clone(), drift.clone(), noise).unwrap();
        let x: Vec<f64> = (0..6).map(|i| (i as f64 * 0.7).cos()).collect();
        let u: Vec<f64> = (0..6).map(|i| (i as f64 * 1.3).sin()).collect();
        let lf = generator_apply(&m, &CylTestFunction::linear(x.clone()), &u).unwrap();
        let expected = g.inner(&u, &c.apply_operator(&x)) + g.inner(&drift.eval(&u), &x);
        assert!((lf - expected).abs() < 1e-12);
    }

    #[test]
    fn square_with_unit_noise() {
        let (g, m) = pure_noise();
        let x = vec![1.0 / g.total_weight(); 5];
        let f = CylTestFunction::square(x);
        for u in [[0.0; 5], [1.0, -2.0, 0.5, 3.0, 0.0]] {
            assert!((generator_apply(&m, &f, &u).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_are_consistent() {
        for m in 1..4 {
            let phi = Arc::new(TrigPolyPhi::random(m, 5));
            let f = CylTestFunction::general(vec![vec![1.0; 3]; m], phi).unwrap();
            let pts: Vec<Vec<f64>> = (0..20).map(|p| (0..m).map(|k| ((p * 7 + k) as f64 * 0.37).sin() * 2.0).collect()).collect();
            assert!(f.derivative_mismatch(&pts) < 1e-6);
        }
        let sq = CylTestFunction::square(vec![1.0]);
        assert!(sq.derivative_mismatch(&[vec![0.3], vec![-5.0]]) < 1e-6);
    }

    #[test]
    fn general_arity_mismatch() {
        let phi = Arc::new(TrigPolyPhi::random(2, 1));
        assert!(CylTestFunction::general(vec![vec![1.0]], phi).is_err());
    }

    #[test]
    fn deterministic_mf_is_conserved() {
        let (g, c) = heat(8);
        let m = Model::new(c.clone(), PolynomialDrift::zero(&g), NoiseFamily::empty(&g)).unwrap();
        let u0: Vec<f64> = c.eigvec(0).iter().zip(c.eigvec(1)).map(|(a, b)| a + 0.5 * b).collect();
        let f = CylTestFunction::square(c.eigvec(0));
        let tr = simulate(&m, &u0, 0.2, 1e-3, 100.0, 0, 0).unwrap();
        let mf = mf_path(&m, &f, &tr).unwrap();
        assert_eq!(mf[0], f.eval(&g, &u0));
        let drift = mf.iter().map(|v| (v - mf[0]).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-4, "{drift}");
    }

    #[test]
    fn pure_noise_mf_is_random_walk() {
        let (g, m) = pure_noise();
        let x = vec![0.7; 5];
        let f = CylTestFunction::linear(x.clone());
        let u0 = vec![0.2; 5];
        let tr = simulate(&m, &u0, 0.05, 0.01, 100.0, 3, 2).unwrap();
        let inc = crate::simulate::WienerIncrements::sample(3, 2, 5, 1, 0.01).unwrap();
        let mf = mf_path(&m, &f, &tr).unwrap();
        let one_x = g.inner(&[1.0; 5], &x);
        let mut w = 0.0;
        for i in 0..5 {
            w += inc.row(i)[0];
            assert!((mf[i + 1] - (g.inner(&u0, &x) + one_x * w)).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_paths_is_an_error() {
        let (_, m) = pure_noise();
        let spec = EnsembleSpec { horizon: 0.1, dt: 0.01, stop_level: 100.0, paths: 10, seed: 1 };
        let e = run_ensemble(&m, &InitialLaw::Point(vec![0.0; 5]), spec).unwrap();
        let f = CylTestFunction::linear(vec![1.0; 5]);
        let r = martingale_test(&m, &f, &e, 0.02, 0.08, &WeightSpec::unit());
        assert!(matches!(r, Err(Error::InsufficientSample { available: 10, .. })));
    }

    #[test]
    fn linearity_of_mf() {
        let (g, c) = heat(6);
        let noise = NoiseFamily::holder_sqrt(&c, &[0.5, 0.3], ProfileKind::Sine);
        let m = Model::new(c.clone(), PolynomialDrift::constant(&g, &[0.0, 1.0, 0.0, -1.0]), noise).unwrap();
        let tr = simulate(&m, &[0.4; 6], 0.1, 1e-3, 100.0, 9, 0).unwrap();
        let f = CylTestFunction::square(c.eigvec(0));
        let h = CylTestFunction::general(vec![c.eigvec(1), c.eigvec(2)], Arc::new(TrigPolyPhi::random(2, 3))).unwrap();
        let combo = CylTestFunction::combine(2.0, &f, -0.5, &h).unwrap();
        let (mf, mh, mc) = (mf_path(&m, &f, &tr).unwrap(), mf_path(&m, &h, &tr).unwrap(), mf_path(&m, &combo, &tr).unwrap());
        for i in 0..tr.len() {
            assert!((mc[i] - (2.0 * mf[i] - 0.5 * mh[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn qv_without_noise_is_quadrature_noise() {
        let (g, c) = heat(6);
        let m = Model::new(c.clone(), PolynomialDrift::zero(&g), NoiseFamily::empty(&g)).unwrap();
        let spec = EnsembleSpec { horizon: 0.1, dt: 1e-3, stop_level: 100.0, paths: 2, seed: 1 };
        let e = run_ensemble(&m, &InitialLaw::Point(c.eigvec(0)), spec).unwrap();
        let r = quadratic_variation_test(&m, &c.eigvec(0), &e, 0.1).unwrap();
        assert_eq!(r.predicted, 0.0);
        let lam = c.eigvals()[0];
        let defect = (lam * 1e-3).exp_m1() - lam * 1e-3;
        let exact: f64 = (0..100).map(|i| ((lam * i as f64 * 1e-3).exp() * defect).powi(2)).sum();
        assert!((r.realized - exact).abs() < 1e-12 * (1.0 + exact), "{} vs {exact}", r.realized);
    }

    #[test]
    fn battery_matches_stored_test() {
        let (g, c) = heat(6);
        let noise = NoiseFamily::additive(&c, &[0.5, 0.5], ProfileKind::Eigen);
        let m = Model::new(c.clone(), PolynomialDrift::zero(&g), noise).unwrap();
        let spec = EnsembleSpec { horizon: 0.1, dt: 1e-2, stop_level: 100.0, paths: 40, seed: 4 };
        let law = InitialLaw::Point(c.eigvec(0));
        let e = run_ensemble(&m, &law, spec).unwrap();
        let f = CylTestFunction::square(c.eigvec(1));
        let w = WeightSpec::single(0.02, WeightKind::Tanh(c.eigvec(0)));
        let direct = martingale_test(&m, &f, &e, 0.04, 0.1, &w).unwrap();
        let case = MartingaleCase { id: "sq".into(), f, s: 0.04, t: 0.1, weights: w };
        let streamed = martingale_battery(&m, &m, &law, spec, &[case]).unwrap();
        assert_eq!(streamed[0], direct);
    }
}
