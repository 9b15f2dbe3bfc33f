//! Divergence-form elliptic operator `u ↦ (a u')'` on an interval, its
//! flux-form finite-difference discretization and the cached spectral
//! decomposition that provides exact semigroup and resolvent actions.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};

/// Default lower bound for the diffusion coefficient.
pub const DEFAULT_ELLIPTICITY_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dirichlet" => Ok(Self::Dirichlet),
            "neumann" => Ok(Self::Neumann),
            other => Err(invalid(format!("unknown boundary condition '{other}'"))),
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dirichlet => "dirichlet",
            Self::Neumann => "neumann",
        })
    }
}

/// Uniform grid of `n` interior nodes `x_i = i·h`, `h = L/(n+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    n: usize,
    length: f64,
    spacing: f64,
    bc: BoundaryCondition,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl SpatialGrid {
    /// Builds the grid. Both boundary conditions use the interior nodes with
    /// equal weights `h` (the trapezoid rule with the boundary samples
    /// absorbed), which keeps the flux-form matrix weight-symmetric.
    pub fn new(n: usize, length: f64, bc: BoundaryCondition) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("grid needs n >= 2 interior nodes, got {n}")));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(invalid(format!("domain length must be positive, got {length}")));
        }
        let spacing = length / (n + 1) as f64;
        let nodes = (1..=n).map(|i| i as f64 * spacing).collect();
        let weights = vec![spacing; n];
        Ok(Self { n, length, spacing, bc, nodes, weights })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `⟨u, v⟩_w = Σ w_i u_i v_i`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights.iter().zip(u).zip(v).map(|((w, a), b)| w * a * b).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

pub fn sup_norm(u: &[f64]) -> f64 {
    u.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Scalar diffusion coefficient `a(x)` on `[0, L]`.
#[derive(Debug, Clone, PartialEq)]
pub enum Diffusion {
    Constant(f64),
    /// `a(x) = intercept + slope·x`.
    Affine { intercept: f64, slope: f64 },
    /// `a(x) = base + amplitude·exp(−((x − center)/width)²)`.
    Bump { base: f64, amplitude: f64, center: f64, width: f64 },
    /// Linear interpolation of `(x, a)` samples sorted by `x`; constant
    /// extrapolation outside the table.
    Table(Vec<(f64, f64)>),
}

impl Diffusion {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Affine { intercept, slope } => intercept + slope * x,
            Self::Bump { base, amplitude, center, width } => {
                let z = (x - center) / width;
                base + amplitude * (-z * z).exp()
            }
            Self::Table(points) => interpolate(points, x),
        }
    }
}

pub(crate) fn interpolate(points: &[(f64, f64)], x: f64) -> f64 {
    match points.len() {
        0 => f64::NAN,
        1 => points[0].1,
        _ => {
            if x <= points[0].0 {
                return points[0].1;
            }
            let last = points[points.len() - 1];
            if x >= last.0 {
                return last.1;
            }
            let j = points.partition_point(|p| p.0 <= x);
            let (x0, y0) = points[j - 1];
            let (x1, y1) = points[j];
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        }
    }
}

/// Symmetric tridiagonal matrix stored by bands.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i+1`.
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self { diag: vec![0.0; n], off: vec![0.0; n.saturating_sub(1)] }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * u[i];
            if i > 0 {
                acc += self.off[i - 1] * u[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * u[i + 1];
            }
            out[i] = acc;
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if i + 1 == j {
                self.off[i]
            } else if j + 1 == i {
                self.off[j]
            } else {
                0.0
            }
        })
    }
}

/// Flux-form discretization of `div(a ∇·)`.
#[derive(Debug, Clone)]
pub struct EllipticOperator {
    grid: SpatialGrid,
    a_flux: Vec<f64>,
    matrix: Tridiagonal,
}

impl EllipticOperator {
    /// Assembles `(Au)_i = [a_{i+½}(u_{i+1} − u_i) − a_{i−½}(u_i − u_{i−1})]/h²`
    /// with ghost values `u_0 = u_{n+1} = 0` (Dirichlet) or `u_0 = u_1`,
    /// `u_{n+1} = u_n` (Neumann).
    pub fn assemble(grid: &SpatialGrid, a: &Diffusion) -> Result<Self> {
        Self::assemble_with(grid, |x| a.eval(x), DEFAULT_ELLIPTICITY_FLOOR)
    }

    pub fn assemble_with<F: Fn(f64) -> f64>(grid: &SpatialGrid, a: F, floor: f64) -> Result<Self> {
        let n = grid.n();
        let h = grid.spacing();
        // Flux points x_{j+½} for j = 0..n, plus the nodes and both ends for
        // the ellipticity check.
        let a_flux: Vec<f64> = (0..=n).map(|j| a((j as f64 + 0.5) * h)).collect();
        let probes = a_flux
            .iter()
            .enumerate()
            .map(|(j, &v)| ((j as f64 + 0.5) * h, v))
            .chain(grid.nodes().iter().map(|&x| (x, a(x))))
            .chain([(0.0, a(0.0)), (grid.length(), a(grid.length()))]);
        for (x, value) in probes {
            if !(value >= floor) {
                return Err(Error::EllipticityViolation { x, value, floor });
            }
        }
        let h2 = h * h;
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for i in 0..n {
            let left = a_flux[i];
            let right = a_flux[i + 1];
            diag[i] = -(left + right) / h2;
            if i + 1 < n {
                off[i] = right / h2;
            }
        }
        if grid.bc() == BoundaryCondition::Neumann {
            diag[0] += a_flux[0] / h2;
            diag[n - 1] += a_flux[n] / h2;
        }
        Ok(Self { grid: grid.clone(), a_flux, matrix: Tridiagonal { diag, off } })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn a_flux(&self) -> &[f64] {
        &self.a_flux
    }

    pub fn matrix(&self) -> &Tridiagonal {
        &self.matrix
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.apply(u)
    }
}

/// Eigendecomposition of the discrete operator with respect to `⟨·,·⟩_w`.
///
/// Immutable after construction; every `apply_*` method is pure.
#[derive(Debug, Clone)]
pub struct SemigroupCache {
    grid: SpatialGrid,
    matrix: Tridiagonal,
    eigvals: Vec<f64>,
    /// Row-major `n × n`; column `k` holds `v_k`.
    eigvecs: Vec<f64>,
    zero_operator: bool,
}

impl SemigroupCache {
    pub fn new(op: &EllipticOperator) -> Self {
        let grid = op.grid().clone();
        let n = grid.n();
        let sw: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
        // B = W^{1/2} A W^{-1/2} is symmetric; v_k = W^{-1/2} q_k.
        let mut b = op.matrix().to_dense();
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] *= sw[i] / sw[j];
            }
        }
        let b = (&b + b.transpose()) * 0.5;
        let eig = SymmetricEigen::new(b);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]));
        let mut eigvals = Vec::with_capacity(n);
        let mut eigvecs = vec![0.0; n * n];
        for (k, &src) in order.iter().enumerate() {
            // Positive spectrum is rounding noise of a nonpositive operator.
            eigvals.push(eig.eigenvalues[src].min(0.0));
            let mut col: Vec<f64> = (0..n).map(|i| eig.eigenvectors[(i, src)] / sw[i]).collect();
            orient(&mut col);
            for i in 0..n {
                eigvecs[i * n + k] = col[i];
            }
        }
        Self { grid, matrix: op.matrix().clone(), eigvals, eigvecs, zero_operator: false }
    }

    /// Cache for the zero operator `A = 0`, whose semigroup is the identity.
    pub fn zero(grid: &SpatialGrid) -> Self {
        let n = grid.n();
        let mut eigvecs = vec![0.0; n * n];
        for i in 0..n {
            eigvecs[i * n + i] = 1.0 / grid.weights()[i].sqrt();
        }
        Self {
            grid: grid.clone(),
            matrix: Tridiagonal::zeros(n),
            eigvals: vec![0.0; n],
            eigvecs,
            zero_operator: true,
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn matrix(&self) -> &Tridiagonal {
        &self.matrix
    }

    pub fn is_zero_operator(&self) -> bool {
        self.zero_operator
    }

    /// Eigenvalues in nonincreasing order, all `≤ 0`.
    pub fn eigvals(&self) -> &[f64] {
        &self.eigvals
    }

    /// `v_k` for `k = 0..n` (0-based), normalized so `⟨v_k, v_k⟩_w = 1`.
    pub fn eigvec(&self, k: usize) -> Vec<f64> {
        let n = self.n();
        (0..n).map(|i| self.eigvecs[i * n + k]).collect()
    }

    pub fn apply_operator(&self, u: &[f64]) -> Vec<f64> {
        self.matrix.apply(u)
    }

    /// Coordinates `⟨u, v_k⟩_w`.
    pub fn coordinates(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n();
        let w = self.grid.weights();
        let mut c = vec![0.0; n];
        for i in 0..n {
            let wu = w[i] * u[i];
            let row = &self.eigvecs[i * n..(i + 1) * n];
            for k in 0..n {
                c[k] += wu * row[k];
            }
        }
        c
    }

    pub(crate) fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let row = &self.eigvecs[i * n..(i + 1) * n];
                row.iter().zip(coeffs).map(|(v, c)| v * c).sum()
            })
            .collect()
    }

    /// `S(t)u = Σ_k e^{λ_k t} ⟨u, v_k⟩_w v_k`.
    pub fn apply_semigroup(&self, t: f64, u: &[f64]) -> Result<Vec<f64>> {
        if !(t >= 0.0) {
            return Err(invalid(format!("semigroup time must be >= 0, got {t}")));
        }
        if t == 0.0 || self.zero_operator {
            return Ok(u.to_vec());
        }
        let mut c = self.coordinates(u);
        for (ck, lk) in c.iter_mut().zip(&self.eigvals) {
            *ck *= (lk * t).exp();
        }
        Ok(self.synthesize(&c))
    }

    /// `R(λ, A)u = Σ_k (λ − λ_k)^{-1} ⟨u, v_k⟩_w v_k` for `λ > 0`.
    pub fn apply_resolvent(&self, lambda: f64, u: &[f64]) -> Result<Vec<f64>> {
        if !(lambda > 0.0) {
            return Err(invalid(format!("resolvent parameter must be > 0, got {lambda}")));
        }
        let mut c = self.coordinates(u);
        for (ck, lk) in c.iter_mut().zip(&self.eigvals) {
            *ck /= lambda - lk;
        }
        Ok(self.synthesize(&c))
    }

    /// Dense matrix of `S(dt)` for repeated stepping.
    pub fn propagator(&self, dt: f64) -> Result<Propagator> {
        if !(dt >= 0.0) {
            return Err(invalid(format!("propagator step must be >= 0, got {dt}")));
        }
        let n = self.n();
        if dt == 0.0 || self.zero_operator {
            return Ok(Propagator { n, dense: None });
        }
        let w = self.grid.weights();
        let decay: Vec<f64> = self.eigvals.iter().map(|l| (l * dt).exp()).collect();
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            let vi = &self.eigvecs[i * n..(i + 1) * n];
            for j in 0..n {
                let vj = &self.eigvecs[j * n..(j + 1) * n];
                let s: f64 = (0..n).map(|k| vi[k] * decay[k] * vj[k]).sum();
                dense[i * n + j] = s * w[j];
            }
        }
        Ok(Propagator { n, dense: Some(dense) })
    }

    /// `max_k ‖A v_k − λ_k v_k‖∞ / max(1, |λ_k|)`.
    pub fn max_scaled_residual(&self) -> f64 {
        (0..self.n())
            .map(|k| {
                let v = self.eigvec(k);
                let av = self.matrix.apply(&v);
                let r = av.iter().zip(&v).map(|(a, b)| (a - self.eigvals[k] * b).abs()).fold(0.0, f64::max);
                r / self.eigvals[k].abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Keeps eigenvector signs deterministic: the component sum is made
/// positive, falling back to the first significant entry.
fn orient(v: &mut [f64]) {
    let sum: f64 = v.iter().sum();
    let scale = sup_norm(v);
    let flip = if sum.abs() > 1e-8 * scale * v.len() as f64 {
        sum < 0.0
    } else {
        v.iter().find(|x| x.abs() > 1e-8 * scale).is_some_and(|x| *x < 0.0)
    };
    if flip {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// `S(dt)` as a dense matrix (or the exact identity).
#[derive(Debug, Clone)]
pub struct Propagator {
    n: usize,
    dense: Option<Vec<f64>>,
}

impl Propagator {
    pub fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        match &self.dense {
            None => out.copy_from_slice(u),
            Some(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &m[i * self.n..(i + 1) * self.n];
                    *o = row.iter().zip(u).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply_into(u, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn dirichlet3() -> SemigroupCache {
        let g = SpatialGrid::new(3, 1.0, BoundaryCondition::Dirichlet).unwrap();
        SemigroupCache::new(&EllipticOperator::assemble(&g, &Diffusion::Constant(1.0)).unwrap())
    }

    #[test]
    fn grid_examples() {
        let g = SpatialGrid::new(3, 1.0, BoundaryCondition::Dirichlet).unwrap();
        assert_eq!(g.spacing(), 0.25);
        assert_eq!(g.nodes(), &[0.25, 0.5, 0.75]);
        let g = SpatialGrid::new(2, 2.0, BoundaryCondition::Neumann).unwrap();
        assert!((g.spacing() - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            SpatialGrid::new(1, 1.0, BoundaryCondition::Dirichlet),
            Err(Error::InvalidParameter(_))
        ));
        assert!(SpatialGrid::new(4, 0.0, BoundaryCondition::Dirichlet).is_err());
    }

    #[test]
    fn grid_weight_sum_is_trapezoid_consistent() {
        for n in [2, 3, 10, 257] {
            for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
                let g = SpatialGrid::new(n, 2.5, bc).unwrap();
                let s = g.total_weight();
                assert!(s <= 2.5 + 1e-12 && s >= 2.5 * (1.0 - 2.0 * g.spacing() / 2.5) - 1e-12);
                assert!(g.weights().iter().all(|w| *w > 0.0));
            }
        }
    }

    #[test]
    fn boundary_condition_parsing() {
        assert_eq!("Dirichlet".parse::<BoundaryCondition>().unwrap(), BoundaryCondition::Dirichlet);
        let err = "Robin".parse::<BoundaryCondition>().unwrap_err();
        assert!(err.to_string().contains("unknown boundary condition"));
    }

    #[test]
    fn first_dirichlet_eigenpair() {
        let g = SpatialGrid::new(3, 1.0, BoundaryCondition::Dirichlet).unwrap();
        let op = EllipticOperator::assemble(&g, &Diffusion::Constant(1.0)).unwrap();
        let u: Vec<f64> = g.nodes().iter().map(|x| (PI * x).sin()).collect();
        let lambda1 = -64.0 * (PI / 8.0).sin().powi(2);
        let au = op.apply(&u);
        for (a, b) in au.iter().zip(&u) {
            assert!((a - lambda1 * b).abs() < 1e-12);
        }
        let cache = SemigroupCache::new(&op);
        assert!((cache.eigvals()[0] - lambda1).abs() < 1e-10);
    }

    #[test]
    fn neumann_constants_in_kernel() {
        let g = SpatialGrid::new(6, 1.0, BoundaryCondition::Neumann).unwrap();
        let op = EllipticOperator::assemble(&g, &Diffusion::Affine { intercept: 1.0, slope: 0.5 }).unwrap();
        assert!(op.apply(&[2.0; 6]).iter().all(|v| v.abs() < 1e-12));
        let cache = SemigroupCache::new(&op);
        assert!(cache.eigvals()[0].abs() < 1e-10);
        let out = cache.apply_semigroup(0.7, &[2.0; 6]).unwrap();
        assert!(out.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn ellipticity_violation() {
        let g = SpatialGrid::new(4, 1.0, BoundaryCondition::Dirichlet).unwrap();
        let err = EllipticOperator::assemble(&g, &Diffusion::Constant(-1.0)).unwrap_err();
        assert!(matches!(err, Error::EllipticityViolation { .. }));
    }

    #[test]
    fn semigroup_and_resolvent_edge_cases() {
        let c = dirichlet3();
        let u = [0.3, -1.0, 2.0];
        assert_eq!(c.apply_semigroup(0.0, &u).unwrap(), u.to_vec());
        assert!(c.apply_semigroup(-1.0, &u).is_err());
        assert!(c.apply_resolvent(0.0, &u).is_err());
        let v1 = c.eigvec(0);
        let out = c.apply_semigroup(0.3, &v1).unwrap();
        let f = (c.eigvals()[0] * 0.3).exp();
        for (a, b) in out.iter().zip(&v1) {
            assert!((a - f * b).abs() < 1e-12);
        }
        let lam = 2.0;
        let out = c.apply_resolvent(lam, &v1).unwrap();
        for (a, b) in out.iter().zip(&v1) {
            assert!((a - b / (lam - c.eigvals()[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_operator_is_identity() {
        let g = SpatialGrid::new(4, 1.0, BoundaryCondition::Neumann).unwrap();
        let c = SemigroupCache::zero(&g);
        let u = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(c.propagator(0.1).unwrap().apply(&u), u.to_vec());
        assert_eq!(c.apply_semigroup(5.0, &u).unwrap(), u.to_vec());
    }

    #[test]
    fn propagator_matches_semigroup() {
        let g = SpatialGrid::new(12, 2.0, BoundaryCondition::Dirichlet).unwrap();
        let d = Diffusion::Bump { base: 1.0, amplitude: 0.5, center: 1.0, width: 0.3 };
        let c = SemigroupCache::new(&EllipticOperator::assemble(&g, &d).unwrap());
        let u: Vec<f64> = (0..12).map(|i| (i as f64 * 0.7).cos()).collect();
        let a = c.propagator(0.01).unwrap().apply(&u);
        let b = c.apply_semigroup(0.01, &u).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn table_interpolation() {
        let d = Diffusion::Table(vec![(0.0, 1.0), (1.0, 3.0)]);
        assert_eq!(d.eval(0.5), 2.0);
        assert_eq!(d.eval(-1.0), 1.0);
        assert_eq!(d.eval(2.0), 3.0);
    }
}
