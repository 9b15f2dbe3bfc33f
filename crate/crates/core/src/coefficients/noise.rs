//! Multiplicative noise coefficients `g_k(x, r)` driving independent
//! Brownian motions, truncated to `K` modes.
//!
//! Each mode factors as `g_k(x, r) = c_k · p_k(x) · ρ(x, r)` with a spatial
//! profile `p_k` and a response `ρ`. The family carries the growth constants
//! `α_k, β_k` and Hölder moduli `σ_k` so that it can be certified on a lattice.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::elliptic::{interpolate, sup_norm, BoundaryCondition, SemigroupCache, SpatialGrid};
use crate::error::{invalid, Result};

/// Spatial shape of one noise mode.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Flat,
    /// `sin(kπx/L)`.
    Sine(usize),
    /// `cos((k−1)πx/L)`, so mode 1 is flat.
    Cosine(usize),
    /// Values at the grid nodes with the two boundary values.
    Sampled { values: Vec<f64>, boundary: (f64, f64) },
}

impl Profile {
    fn value(&self, x: f64, length: f64) -> f64 {
        match self {
            Self::Flat => 1.0,
            Self::Sine(k) => (*k as f64 * PI * x / length).sin(),
            Self::Cosine(k) => ((*k as f64 - 1.0) * PI * x / length).cos(),
            Self::Sampled { .. } => unreachable!("sampled profiles are looked up by node"),
        }
    }

    fn at_nodes(&self, grid: &SpatialGrid) -> Vec<f64> {
        match self {
            Self::Sampled { values, .. } => values.clone(),
            p => grid.nodes().iter().map(|&x| p.value(x, grid.length())).collect(),
        }
    }

    fn at_boundary(&self, length: f64) -> (f64, f64) {
        match self {
            Self::Sampled { boundary, .. } => *boundary,
            p => {
                let clean = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
                (clean(p.value(0.0, length)), clean(p.value(length, length)))
            }
        }
    }

    fn sup(&self) -> f64 {
        match self {
            Self::Sampled { values, boundary } => sup_norm(values).max(boundary.0.abs()).max(boundary.1.abs()),
            _ => 1.0,
        }
    }
}

/// How a family picks the profile of mode `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Flat,
    Sine,
    Cosine,
    /// `k`-th eigenvector of the discrete operator.
    Eigen,
}

impl ProfileKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flat" => Ok(Self::Flat),
            "sine" => Ok(Self::Sine),
            "cosine" => Ok(Self::Cosine),
            "eigen" => Ok(Self::Eigen),
            other => Err(invalid(format!("unknown noise profile '{other}'"))),
        }
    }

    fn profile(&self, k: usize, cache: &SemigroupCache) -> Profile {
        match self {
            Self::Flat => Profile::Flat,
            Self::Sine => Profile::Sine(k),
            Self::Cosine => Profile::Cosine(k),
            Self::Eigen => {
                let values = cache.eigvec(k - 1);
                let boundary = match cache.grid().bc() {
                    BoundaryCondition::Dirichlet => (0.0, 0.0),
                    BoundaryCondition::Neumann => (values[0], values[values.len() - 1]),
                };
                Profile::Sampled { values, boundary }
            }
        }
    }
}

/// `ρ(x, r)`.
#[derive(Clone)]
pub enum Response {
    Constant,
    Linear,
    /// `√|r|`.
    Sqrt,
    /// Piecewise-linear table in `r`.
    Table(Vec<(f64, f64)>),
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant => f.write_str("Constant"),
            Self::Linear => f.write_str("Linear"),
            Self::Sqrt => f.write_str("Sqrt"),
            Self::Table(t) => write!(f, "Table({} points)", t.len()),
            Self::Custom(_) => f.write_str("Custom"),
        }
    }
}

impl Response {
    #[inline]
    fn eval(&self, x: f64, r: f64) -> f64 {
        match self {
            Self::Constant => 1.0,
            Self::Linear => r,
            Self::Sqrt => r.abs().sqrt(),
            Self::Table(t) => interpolate(t, r),
            Self::Custom(g) => g(x, r),
        }
    }
}

/// Modulus of continuity `σ_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum Modulus {
    Zero,
    /// `coef · r^exponent`.
    Power { coef: f64, exponent: f64 },
    /// Piecewise-linear table, constant beyond its last point.
    Table(Vec<(f64, f64)>),
}

impl Modulus {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Power { coef, exponent } => {
                if r <= 0.0 {
                    0.0
                } else {
                    coef * r.powf(*exponent)
                }
            }
            Self::Table(t) => interpolate(t, r),
        }
    }
}

/// One retained mode.
#[derive(Debug, Clone)]
pub struct NoiseMode {
    pub amplitude: f64,
    pub profile: Profile,
    pub response: Response,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: Modulus,
    values: Vec<f64>,
}

/// Truncated family `g_1..g_K` with its certificates' data.
#[derive(Debug, Clone)]
pub struct NoiseFamily {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    length: f64,
    bc: BoundaryCondition,
    modes: Vec<NoiseMode>,
    clamp: Option<f64>,
    tail_bound: f64,
    hs_exponent: f64,
}

/// Default number of retained modes.
pub const DEFAULT_MODES: usize = 64;

impl NoiseFamily {
    pub fn empty(grid: &SpatialGrid) -> Self {
        Self {
            nodes: grid.nodes().to_vec(),
            weights: grid.weights().to_vec(),
            length: grid.length(),
            bc: grid.bc(),
            modes: Vec::new(),
            clamp: None,
            tail_bound: 0.0,
            hs_exponent: 2.0,
        }
    }

    /// Adds a mode whose growth and modulus constants are supplied by the caller.
    #[allow(clippy::too_many_arguments)]
    pub fn push_mode(
        &mut self,
        grid: &SpatialGrid,
        amplitude: f64,
        profile: Profile,
        response: Response,
        alpha: f64,
        beta: f64,
        sigma: Modulus,
    ) {
        let values: Vec<f64> = profile.at_nodes(grid).iter().map(|p| amplitude * p).collect();
        self.modes.push(NoiseMode { amplitude, profile, response, alpha, beta, sigma, values });
    }

    fn build(
        cache: &SemigroupCache,
        coeffs: &[f64],
        kind: ProfileKind,
        response: Response,
        constants: impl Fn(f64) -> (f64, f64, Modulus),
    ) -> Self {
        let grid = cache.grid();
        let mut fam = Self::empty(grid);
        for (j, &c) in coeffs.iter().enumerate() {
            let profile = kind.profile(j + 1, cache);
            let scale = c.abs() * profile.sup();
            let (alpha, beta, sigma) = constants(scale);
            fam.push_mode(grid, c, profile, response.clone(), alpha, beta, sigma);
        }
        fam
    }

    /// `g_k(x, r) = c_k p_k(x) √|r|` with `α_k = β_k = |c_k| sup|p_k|` and
    /// `σ_k(r) = |c_k| sup|p_k| √r`.
    pub fn holder_sqrt(cache: &SemigroupCache, coeffs: &[f64], kind: ProfileKind) -> Self {
        Self::build(cache, coeffs, kind, Response::Sqrt, |s| (s, s, Modulus::Power { coef: s, exponent: 0.5 }))
    }

    /// `g_k(x, r) = c_k p_k(x) r`.
    pub fn lipschitz(cache: &SemigroupCache, coeffs: &[f64], kind: ProfileKind) -> Self {
        Self::build(cache, coeffs, kind, Response::Linear, |s| (0.0, s, Modulus::Power { coef: s, exponent: 1.0 }))
    }

    /// State-independent noise `g_k(x, r) = c_k p_k(x)`.
    pub fn additive(cache: &SemigroupCache, coeffs: &[f64], kind: ProfileKind) -> Self {
        Self::build(cache, coeffs, kind, Response::Constant, |s| (s, 0.0, Modulus::Zero))
    }

    /// Tabulated response shared by all modes, with caller-declared
    /// constants (declarations are what the validator checks).
    pub fn custom_table(
        cache: &SemigroupCache,
        coeffs: &[f64],
        kind: ProfileKind,
        table: Vec<(f64, f64)>,
        alpha: &[f64],
        beta: &[f64],
        sigma: &[Modulus],
    ) -> Result<Self> {
        let k = coeffs.len();
        if alpha.len() != k || beta.len() != k || sigma.len() != k {
            return Err(invalid(format!("custom_table needs {k} values each for alpha, beta and sigma")));
        }
        let mut sorted = table;
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let grid = cache.grid();
        let mut fam = Self::empty(grid);
        for j in 0..k {
            fam.push_mode(
                grid,
                coeffs[j],
                kind.profile(j + 1, cache),
                Response::Table(sorted.clone()),
                alpha[j],
                beta[j],
                sigma[j].clone(),
            );
        }
        Ok(fam)
    }

    /// Bounded approximant: the state argument is clamped to `[−level, level]`
    /// before evaluation. Growth constants and moduli carry over unchanged.
    pub fn truncated(mut self, level: f64) -> Result<Self> {
        if !(level > 0.0) {
            return Err(invalid(format!("truncation level must be positive, got {level}")));
        }
        self.clamp = Some(level);
        Ok(self)
    }

    pub fn with_tail_bound(mut self, tail: f64) -> Self {
        self.tail_bound = tail;
        self
    }

    pub fn with_hs_exponent(mut self, p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(invalid(format!("norm exponent must be >= 1, got {p}")));
        }
        self.hs_exponent = p;
        Ok(self)
    }

    pub fn modes(&self) -> &[NoiseMode] {
        &self.modes
    }

    pub fn k(&self) -> usize {
        self.modes.len()
    }

    pub fn clamp(&self) -> Option<f64> {
        self.clamp
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|m| m.amplitude == 0.0)
    }

    #[inline]
    fn clamped(&self, r: f64) -> f64 {
        match self.clamp {
            Some(m) => r.clamp(-m, m),
            None => r,
        }
    }

    /// `g_k(x_i, r)` with 0-based mode index.
    #[inline]
    pub fn g(&self, k: usize, i: usize, r: f64) -> f64 {
        let m = &self.modes[k];
        m.values[i] * m.response.eval(self.nodes[i], self.clamped(r))
    }

    /// `g_k(x, r)` at the boundary (`left` selects `x = 0`).
    pub fn g_boundary(&self, k: usize, left: bool, r: f64) -> f64 {
        let m = &self.modes[k];
        let (pl, pr) = m.profile.at_boundary(self.length);
        let (x, p) = if left { (0.0, pl) } else { (self.length, pr) };
        m.amplitude * p * m.response.eval(x, self.clamped(r))
    }

    /// Column `k` of `G(u)`: `g_k(x_i, u_i)`.
    pub fn eval_columns(&self, u: &[f64]) -> Vec<Vec<f64>> {
        (0..self.k()).map(|k| u.iter().enumerate().map(|(i, &r)| self.g(k, i, r)).collect()).collect()
    }

    /// `out_i += Σ_k dW_k g_k(x_i, u_i)`.
    pub fn accumulate(&self, u: &[f64], dw: &[f64], out: &mut [f64]) {
        for (k, m) in self.modes.iter().enumerate() {
            let w = dw[k];
            if w == 0.0 || m.amplitude == 0.0 {
                continue;
            }
            match m.response {
                Response::Constant => {
                    for (o, v) in out.iter_mut().zip(&m.values) {
                        *o += w * v;
                    }
                }
                _ => {
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += w * self.g(k, i, u[i]);
                    }
                }
            }
        }
    }

    /// `G(u)* x*`: entries `⟨g_k(·, u), x*⟩_w`.
    pub fn adjoint_apply(&self, u: &[f64], x_star: &[f64]) -> Vec<f64> {
        (0..self.k())
            .map(|k| (0..u.len()).map(|i| self.weights[i] * self.g(k, i, u[i]) * x_star[i]).sum())
            .collect()
    }

    /// Square-function norm `(Σ_i w_i (Σ_k g_k(x_i,u_i)²)^{p/2})^{1/p}`.
    pub fn hs_norm(&self, u: &[f64]) -> f64 {
        let p = self.hs_exponent;
        let s: f64 = (0..u.len())
            .map(|i| {
                let sq: f64 = (0..self.k()).map(|k| self.g(k, i, u[i]).powi(2)).sum();
                self.weights[i] * sq.powf(0.5 * p)
            })
            .sum();
        s.powf(1.0 / p)
    }

    pub fn alpha_l2(&self) -> f64 {
        self.modes.iter().map(|m| m.alpha * m.alpha).sum::<f64>().sqrt()
    }

    pub fn beta_l2(&self) -> f64 {
        self.modes.iter().map(|m| m.beta * m.beta).sum::<f64>().sqrt()
    }

    /// Linear-growth bound `max(L, L^{1/p})·(‖α‖₂ + ‖β‖₂‖u‖∞)` for [`hs_norm`](Self::hs_norm).
    pub fn growth_bound(&self, u: &[f64]) -> f64 {
        let l = self.length;
        l.max(l.powf(1.0 / self.hs_exponent)) * (self.alpha_l2() + self.beta_l2() * sup_norm(u))
    }

    /// `h(r) = Σ_k σ_k(r)`.
    pub fn modulus_sum(&self, r: f64) -> f64 {
        self.modes.iter().map(|m| m.sigma.eval(r)).sum()
    }
}
