//! Regularizations `φ_n` of `|·|` adapted to a modulus `h`, and coupled-path
//! experiments probing pathwise uniqueness.
//!
//! Levels `1 = a_0 > a_1 > …` satisfy `∫_{a_n}^{a_{n−1}} h^{−2} = n`. On each
//! level `ψ_n = κ_n χ_n · 2/(n h²)` with a `C²` plateau cutoff `χ_n` supported
//! in `(a_n, a_{n−1})` and `κ_n` normalizing `∫ψ_n = 1`; then
//! `φ_n(r) = ∫_0^{|r|} ∫_0^s ψ_n`.

use std::sync::Arc;

use crate::coefficients::{validate_noise_family, validate_osgood, NoiseLattice, OsgoodClass};
use crate::coefficients::{DEFAULT_OSGOOD_RMIN, DEFAULT_OSGOOD_TOL};
use crate::elliptic::sup_norm;
use crate::error::{invalid, Error, Result};
use crate::quadrature::{adaptive_simpson, log_space_integral};
use crate::simulate::{map_paths, simulate_with_increments, step_count, Model, WienerIncrements};
use crate::stats::MeanEstimate;

/// Quadrature tolerance for the cached `ψ` and `φ` integrals.
pub const PHI_TOL: f64 = 1e-9;
const SEGMENTS: usize = 48;
const CUTOFF_WIDTH: f64 = 0.1;

pub type Modulus = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `6x⁵ − 15x⁴ + 10x³`: zero first and second derivatives at both ends.
fn smootherstep(x: f64) -> f64 {
    x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
}

/// Plateau cutoff on `(0, 1)` rising over `[0, w]` and falling over `[1 − w, 1]`.
fn plateau(x: f64, w: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else if x < w {
        smootherstep(x / w)
    } else if x > 1.0 - w {
        smootherstep((1.0 - x) / w)
    } else {
        1.0
    }
}

/// `∫_a^b f` after `r = e^s`.
fn log_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let g = |s: f64| {
        let r = s.exp();
        f(r) * r
    };
    adaptive_simpson(&g, a.ln(), b.ln(), tol)
}

#[derive(Debug, Clone)]
struct Level {
    n: usize,
    lo: f64,
    hi: f64,
    width: f64,
    kappa: f64,
    nodes: Vec<f64>,
    /// `Ψ(node_j) = ∫_{lo}^{node_j} ψ`.
    psi_cum: Vec<f64>,
    /// `Φ(node_j) = ∫_{lo}^{node_j} Ψ`.
    phi_cum: Vec<f64>,
}

/// `φ_n(r)` with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiValue {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// One row of the level table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRow {
    pub n: usize,
    pub a_n: f64,
    /// Independent quadrature of `∫_{a_n}^{a_{n−1}} h^{−2}` (should equal `n`).
    pub int_check: f64,
    /// `sup_r (|r| − φ_n(r))` over a sample grid (bounded by `a_{n−1}`).
    pub phi_sup_gap: f64,
}

#[derive(Clone)]
pub struct RegularizerFamily {
    h: Modulus,
    a: Vec<f64>,
    levels: Vec<Level>,
}

impl std::fmt::Debug for RegularizerFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RegularizerFamily").field("a", &self.a).finish()
    }
}

/// Builds levels `1..=n_max` for the modulus `max(h(r), √r)`.
pub fn build_levels<H>(h: H, n_max: usize) -> Result<RegularizerFamily>
where
    H: Fn(f64) -> f64 + Send + Sync + 'static,
{
    if n_max == 0 {
        return Err(invalid("n_max must be >= 1"));
    }
    let h: Modulus = Arc::new(move |r: f64| h(r).max(r.sqrt()));
    let report = validate_osgood(|r| h(r), DEFAULT_OSGOOD_RMIN, DEFAULT_OSGOOD_TOL)?;
    if report.class != OsgoodClass::Diverges {
        return Err(Error::OsgoodFailure(format!(
            "the integral of h^-2 near zero is classified as {}, pathwise regularization needs divergence",
            report.class
        )));
    }
    let mut a = vec![1.0];
    let mut levels = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let hi = a[n - 1];
        let lo = solve_level(&h, n, hi)?;
        levels.push(build_level(&h, n, lo, hi)?);
        a.push(lo);
    }
    Ok(RegularizerFamily { h, a, levels })
}

/// Finds `ρ < hi` with `∫_ρ^{hi} h^{−2} = n` by safeguarded Newton in `ln ρ`.
fn solve_level(h: &Modulus, n: usize, hi: f64) -> Result<f64> {
    let target = n as f64;
    let inv_sq = |r: f64| {
        let v = h(r);
        1.0 / (v * v)
    };
    let integral = |s: f64| log_space_integral(&inv_sq, s.exp(), hi, 1e-13 * target);
    let fail = |reason: String| Error::LevelConstructionFailure { level: n, reason };
    let s_hi0 = hi.ln();
    let mut s_lo = s_hi0 - 1.0;
    while integral(s_lo) < target {
        s_lo -= 1.0 + 0.5 * (s_hi0 - s_lo);
        if s_lo < -700.0 {
            return Err(fail(format!("no lower bracket above 1e-300 below {hi:e}")));
        }
    }
    let mut s_hi = s_hi0;
    let mut s = 0.5 * (s_lo + s_hi);
    for _ in 0..200 {
        let resid = integral(s) - target;
        if resid.abs() <= 1e-12 * target {
            return Ok(s.exp());
        }
        if resid > 0.0 {
            s_lo = s;
        } else {
            s_hi = s;
        }
        let r = s.exp();
        let slope = -inv_sq(r) * r;
        let newton = s - resid / slope;
        s = if slope.is_finite() && slope < 0.0 && newton > s_lo && newton < s_hi { newton } else { 0.5 * (s_lo + s_hi) };
        if s_hi - s_lo < 1e-15 * s_lo.abs().max(1.0) {
            return Ok(s.exp());
        }
    }
    Err(fail("root finder did not converge".into()))
}

fn build_level(h: &Modulus, n: usize, lo: f64, hi: f64) -> Result<Level> {
    let span = (hi / lo).ln();
    let nodes: Vec<f64> = (0..=SEGMENTS)
        .map(|j| match j {
            0 => lo,
            j if j == SEGMENTS => hi,
            j => lo * (span * j as f64 / SEGMENTS as f64).exp(),
        })
        .collect();
    let mut width = CUTOFF_WIDTH;
    for _ in 0..6 {
        let shape = |r: f64| {
            let v = h(r);
            plateau((r / lo).ln() / span, width) * 2.0 / (n as f64 * v * v)
        };
        let pieces: Vec<f64> = nodes.windows(2).map(|w| log_simpson(&shape, w[0], w[1], 1e-3 * PHI_TOL / SEGMENTS as f64)).collect();
        let mass: f64 = pieces.iter().sum();
        let kappa = 1.0 / mass;
        if kappa > 1.0 {
            width *= 0.5;
            continue;
        }
        let mut psi_cum = vec![0.0; SEGMENTS + 1];
        for j in 0..SEGMENTS {
            psi_cum[j + 1] = psi_cum[j] + kappa * pieces[j];
        }
        let mut level = Level { n, lo, hi, width, kappa, nodes, psi_cum, phi_cum: vec![0.0; SEGMENTS + 1] };
        let phi_pieces: Vec<f64> = (0..SEGMENTS)
            .map(|j| {
                let (a, b) = (level.nodes[j], level.nodes[j + 1]);
                let inner = |r: f64| level.psi_from(h, j, r);
                adaptive_simpson(&inner, a, b, 1e-3 * PHI_TOL * (b - a))
            })
            .collect();
        for (j, piece) in phi_pieces.into_iter().enumerate() {
            level.phi_cum[j + 1] = level.phi_cum[j] + piece;
        }
        return Ok(level);
    }
    Err(Error::LevelConstructionFailure {
        level: n,
        reason: "cutoff normalization exceeds the cap for every admissible transition width".into(),
    })
}

impl Level {
    fn psi(&self, h: &Modulus, r: f64) -> f64 {
        if r <= self.lo || r >= self.hi {
            return 0.0;
        }
        let v = h(r);
        let x = (r / self.lo).ln() / (self.hi / self.lo).ln();
        self.kappa * plateau(x, self.width) * 2.0 / (self.n as f64 * v * v)
    }

    /// `Ψ(r)` for `r` in segment `j`.
    fn psi_from(&self, h: &Modulus, j: usize, r: f64) -> f64 {
        let f = |t: f64| self.psi(h, t);
        self.psi_cum[j] + log_simpson(&f, self.nodes[j], r, 1e-3 * PHI_TOL)
    }

    fn segment(&self, r: f64) -> usize {
        self.nodes.partition_point(|&x| x <= r).saturating_sub(1).min(SEGMENTS - 1)
    }

    fn eval(&self, h: &Modulus, r: f64) -> PhiValue {
        let x = r.abs();
        let sgn = r.signum();
        if x <= self.lo {
            return PhiValue { value: 0.0, d1: 0.0, d2: 0.0 };
        }
        if x >= self.hi {
            let total = self.psi_cum[SEGMENTS];
            return PhiValue { value: self.phi_cum[SEGMENTS] + total * (x - self.hi), d1: sgn * total, d2: 0.0 };
        }
        let j = self.segment(x);
        let big_psi = |t: f64| self.psi_from(h, j, t);
        let value = self.phi_cum[j] + adaptive_simpson(&big_psi, self.nodes[j], x, 1e-3 * PHI_TOL * (x - self.nodes[j]));
        PhiValue { value, d1: sgn * big_psi(x), d2: self.psi(h, x) }
    }
}

impl RegularizerFamily {
    pub fn n_max(&self) -> usize {
        self.levels.len()
    }

    /// `a_0 = 1, a_1, …, a_{n_max}`.
    pub fn a_seq(&self) -> &[f64] {
        &self.a
    }

    /// The floored modulus `max(h(r), √r)`.
    pub fn h(&self, r: f64) -> f64 {
        (self.h)(r)
    }

    fn level(&self, n: usize) -> Result<&Level> {
        if n == 0 || n > self.levels.len() {
            return Err(invalid(format!("level {n} outside 1..={}", self.levels.len())));
        }
        Ok(&self.levels[n - 1])
    }

    /// Normalization constant of `ψ_n` (at most 1).
    pub fn normalization(&self, n: usize) -> Result<f64> {
        Ok(self.level(n)?.kappa)
    }

    pub fn psi(&self, n: usize, r: f64) -> Result<f64> {
        Ok(self.level(n)?.psi(&self.h, r.abs()))
    }

    /// `∫ ψ_n` from the cached segment integrals.
    pub fn psi_mass(&self, n: usize) -> Result<f64> {
        Ok(self.level(n)?.psi_cum[SEGMENTS])
    }

    pub fn eval_phi(&self, n: usize, r: f64) -> Result<PhiValue> {
        Ok(self.level(n)?.eval(&self.h, r))
    }

    /// Level table with independent integral checks and sampled `φ` gaps.
    pub fn level_table(&self) -> Vec<LevelRow> {
        self.levels
            .iter()
            .map(|lv| {
                let inv_sq = |r: f64| {
                    let v = (self.h)(r);
                    1.0 / (v * v)
                };
                let int_check = log_simpson(&inv_sq, lv.lo, lv.hi, 1e-12);
                let samples = sample_points(lv.lo, lv.hi);
                let phi_sup_gap = samples.iter().map(|&r| r.abs() - lv.eval(&self.h, r).value).fold(0.0, f64::max);
                LevelRow { n: lv.n, a_n: lv.lo, int_check, phi_sup_gap }
            })
            .collect()
    }
}

/// Log-spaced points across `[lo/10, 10·hi]` and uniform points on `[0, 2]`.
pub fn sample_points(lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = ((0.1 * lo).ln(), (10.0 * hi).ln());
    let mut v: Vec<f64> = (0..=200).map(|j| (a + (b - a) * j as f64 / 200.0).exp()).collect();
    v.extend((0..=100).map(|j| 0.02 * j as f64));
    v
}

/// Configuration of the coupled-path experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessSetup {
    /// Initial perturbation sizes.
    pub deltas: Vec<f64>,
    /// Perturbation direction `e` (the second path starts at `u0 + δe`).
    pub perturbation: Vec<f64>,
    pub horizon: f64,
    /// Coarsest step; the mesh study halves it `mesh_levels` times.
    pub dt: f64,
    pub mesh_levels: usize,
    pub paths: usize,
    pub seed: u64,
    pub stop_level: f64,
}

/// Mean of `sup_{t ≤ T} ‖u_1(t) − u_2(t)‖∞` over coupled paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentRow {
    pub delta: f64,
    pub dt: f64,
    pub paths: usize,
    pub mean_sup_diff: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    /// One row per `δ` at the coarse step.
    pub delta_rows: Vec<ExperimentRow>,
    /// Row `l` compares steps `dt/2^l` and `dt/2^{l+1}`; `dt` holds the coarser one.
    pub mesh_rows: Vec<ExperimentRow>,
}

fn nonincreasing(rows: &[ExperimentRow]) -> bool {
    rows.windows(2).all(|w| w[1].mean_sup_diff <= w[0].mean_sup_diff)
}

impl UniquenessReport {
    /// Mean sup-differences do not grow as `δ` decreases.
    pub fn delta_nonincreasing(&self) -> bool {
        let mut rows = self.delta_rows.clone();
        rows.sort_by(|a, b| b.delta.total_cmp(&a.delta));
        nonincreasing(&rows)
    }

    pub fn mesh_nonincreasing(&self) -> bool {
        nonincreasing(&self.mesh_rows)
    }
}

fn sup_diff_every(a: &[f64], stride_a: usize, n: usize, b: &[f64], stride_b: usize, count: usize) -> f64 {
    (0..count)
        .map(|i| {
            let (x, y) = (&a[i * stride_a * n..i * stride_a * n + n], &b[i * stride_b * n..i * stride_b * n + n]);
            x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Runs pairs of trajectories driven by identical Wiener increments: initial
/// data `u0` versus `u0 + δe`, and step `dt/2^l` versus `dt/2^{l+1}` with
/// summed increments.
pub fn coupled_uniqueness_experiment(model: &Model, u0: &[f64], setup: &UniquenessSetup) -> Result<UniquenessReport> {
    let n = model.n();
    if u0.len() != n || setup.perturbation.len() != n {
        return Err(invalid("initial state and perturbation must live on the model grid"));
    }
    if setup.paths == 0 {
        return Err(invalid("paths must be >= 1"));
    }
    if setup.deltas.iter().any(|d| !(*d >= 0.0)) {
        return Err(invalid("perturbation sizes must be >= 0"));
    }
    if !model.noise.is_zero() {
        let cert = validate_noise_family(&model.noise, &NoiseLattice::default());
        if !cert.check("osgood").is_some_and(|c| c.passed) {
            return Err(Error::OsgoodFailure("noise modulus fails the Osgood condition".into()));
        }
    }
    let steps = step_count(setup.horizon, setup.dt)?.max(1);
    let levels = setup.mesh_levels;
    let refine = 1usize << levels;
    let fine_dt = setup.dt / refine as f64;
    let k = model.k();
    let per_path = map_paths(setup.paths, |p| -> Result<(Vec<f64>, Vec<f64>)> {
        let fine = WienerIncrements::sample(setup.seed, p, steps * refine, k, fine_dt)?;
        let by_level: Vec<WienerIncrements> =
            (0..=levels).map(|l| fine.coarsen(1 << (levels - l))).collect::<Result<_>>()?;
        let base = simulate_with_increments(model, u0, &by_level[0], setup.stop_level)?;
        let deltas = setup
            .deltas
            .iter()
            .map(|&d| {
                let start: Vec<f64> = u0.iter().zip(&setup.perturbation).map(|(u, e)| u + d * e).collect();
                let tr = simulate_with_increments(model, &start, &by_level[0], setup.stop_level)?;
                Ok(base.states().zip(tr.states()).map(|(x, y)| diff_sup(x, y)).fold(0.0, f64::max))
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut trajs = vec![base];
        for inc in &by_level[1..] {
            trajs.push(simulate_with_increments(model, u0, inc, setup.stop_level)?);
        }
        let flat: Vec<Vec<f64>> = trajs.iter().map(|t| t.states().flatten().copied().collect()).collect();
        let mesh = (0..levels)
            .map(|l| sup_diff_every(&flat[l], 1 << l, n, &flat[l + 1], 1 << (l + 1), steps + 1))
            .collect();
        Ok((deltas, mesh))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    type PathDiffs = (Vec<f64>, Vec<f64>);
    let column = |f: &dyn Fn(&PathDiffs) -> f64| -> MeanEstimate {
        MeanEstimate::from_samples(&per_path.iter().map(f).collect::<Vec<_>>())
    };
    let delta_rows = setup
        .deltas
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let e = column(&|r| r.0[i]);
            ExperimentRow { delta: d, dt: setup.dt, paths: setup.paths, mean_sup_diff: e.mean, std_error: e.std_error }
        })
        .collect();
    let mesh_rows = (0..levels)
        .map(|l| {
            let e = column(&|r| r.1[l]);
            ExperimentRow {
                delta: 0.0,
                dt: setup.dt / (1u64 << l) as f64,
                paths: setup.paths,
                mean_sup_diff: e.mean,
                std_error: e.std_error,
            }
        })
        .collect();
    Ok(UniquenessReport { delta_rows, mesh_rows })
}

fn diff_sup(x: &[f64], y: &[f64]) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    sup_norm(&d)
}
