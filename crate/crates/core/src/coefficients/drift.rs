//! Polynomial reaction term `f(x, r) = Σ_j b_j(x) r^j`.

use rand::Rng;

use crate::elliptic::{sup_norm, BoundaryCondition, SpatialGrid};
use crate::error::{invalid, Result};
use crate::rng::{stream_rng, StreamKey};

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialDrift {
    /// `coeffs[j][i] = b_j(x_i)`.
    coeffs: Vec<Vec<f64>>,
    /// `b_0` at `x = 0` and `x = L`.
    boundary_b0: (f64, f64),
    bc: BoundaryCondition,
}

impl PolynomialDrift {
    /// Samples each `b_j` on the grid. Trailing identically-zero
    /// coefficients are dropped.
    pub fn from_functions(grid: &SpatialGrid, b: &[&dyn Fn(f64) -> f64]) -> Self {
        let mut coeffs: Vec<Vec<f64>> =
            b.iter().map(|bj| grid.nodes().iter().map(|&x| bj(x)).collect()).collect();
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.iter().all(|v| *v == 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(vec![0.0; grid.n()]);
        }
        let boundary_b0 = b.first().map_or((0.0, 0.0), |b0| (b0(0.0), b0(grid.length())));
        Self { coeffs, boundary_b0, bc: grid.bc() }
    }

    /// Coefficients constant in `x`: `f(r) = Σ_j c[j] r^j`.
    pub fn constant(grid: &SpatialGrid, c: &[f64]) -> Self {
        let fns: Vec<Box<dyn Fn(f64) -> f64>> =
            c.iter().map(|&cj| Box::new(move |_x: f64| cj) as Box<dyn Fn(f64) -> f64>).collect();
        let refs: Vec<&dyn Fn(f64) -> f64> = fns.iter().map(|b| b.as_ref()).collect();
        Self::from_functions(grid, &refs)
    }

    pub fn zero(grid: &SpatialGrid) -> Self {
        Self::constant(grid, &[0.0])
    }

    /// Same drift with `b_0` shifted by `c`, i.e. `F + c`.
    pub fn with_offset(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0].iter_mut().for_each(|b| *b += c);
        out.boundary_b0.0 += c;
        out.boundary_b0.1 += c;
        out
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn boundary_b0(&self) -> (f64, f64) {
        self.boundary_b0
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.iter().all(|v| *v == 0.0))
    }

    /// `ε` with `b_top ≤ −ε` on the grid, if the degree is odd and the top
    /// coefficient is strictly negative.
    pub fn eps_lead(&self) -> Option<f64> {
        if self.degree().is_multiple_of(2) {
            return None;
        }
        let top = self.coeffs[self.degree()].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (top < 0.0).then_some(-top)
    }

    /// Checks odd degree, a strictly negative leading coefficient and, for
    /// Dirichlet problems, `b_0 = 0` on the boundary.
    pub fn check_hypothesis(&self) -> Result<()> {
        if self.degree().is_multiple_of(2) {
            return Err(invalid(format!("drift degree {} is not odd", self.degree())));
        }
        if self.eps_lead().is_none() {
            return Err(invalid("leading drift coefficient is not strictly negative"));
        }
        if self.bc == BoundaryCondition::Dirichlet {
            let (l, r) = self.boundary_b0;
            if l.abs() > 1e-12 || r.abs() > 1e-12 {
                return Err(invalid(format!("Dirichlet problem needs b_0 = 0 on the boundary, got ({l}, {r})")));
            }
        }
        Ok(())
    }

    /// `f(x_i, r)` by Horner's scheme.
    #[inline]
    pub fn eval_at(&self, i: usize, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, bj| acc * r + bj[i])
    }

    /// `F(u)(x_i) = f(x_i, u_i)`.
    pub fn eval(&self, u: &[f64]) -> Vec<f64> {
        u.iter().enumerate().map(|(i, &r)| self.eval_at(i, r)).collect()
    }

    /// Radius beyond which `sign f(x, r) = −sign r` for every node.
    pub fn coercivity_radius(&self) -> Option<f64> {
        let eps = self.eps_lead()?;
        let lower: f64 = self.coeffs[..self.degree()].iter().map(|c| sup_norm(c)).sum();
        Some((lower / eps).max(1.0) * (1.0 + 1e-9))
    }

    /// Counts violations of the one-sided bound
    /// `⟨F(u+v) − F(v), u*⟩ ≤ a(1+‖v‖)^{d} − b‖u‖^{d}` over random state
    /// pairs, where `u*` evaluates at the lowest-index maximizer of `|u|`
    /// with the sign of `u` there and `d` is the (odd) degree.
    pub fn check_dissipativity(&self, a: f64, b: f64, samples: usize, seed: u64) -> Result<DissipativityReport> {
        if !(a > 0.0) || !(b > 0.0) {
            return Err(invalid(format!("dissipativity constants must be positive, got a = {a}, b = {b}")));
        }
        if self.degree().is_multiple_of(2) {
            return Err(invalid("dissipativity check needs an odd-degree drift"));
        }
        let d = self.degree() as i32;
        let n = self.coeffs[0].len();
        let mut rng = stream_rng(seed, StreamKey::path(0));
        let mut violations = 0;
        let mut worst_margin = f64::NEG_INFINITY;
        let mut u = vec![0.0; n];
        let mut v = vec![0.0; n];
        for _ in 0..samples {
            let su = 10f64.powf(rng.random_range(-2.0..1.0));
            let sv = 10f64.powf(rng.random_range(-2.0..1.0));
            u.iter_mut().for_each(|x| *x = rng.random_range(-su..su));
            v.iter_mut().for_each(|x| *x = rng.random_range(-sv..sv));
            let margin = self.dissipativity_margin(&u, &v, a, b, d);
            if margin > 0.0 {
                violations += 1;
            }
            worst_margin = worst_margin.max(margin);
        }
        Ok(DissipativityReport { samples, violations, worst_margin })
    }

    /// `LHS − RHS` of the dissipativity bound for one pair.
    pub fn dissipativity_margin(&self, u: &[f64], v: &[f64], a: f64, b: f64, d: i32) -> f64 {
        let x0 = argmax_abs(u);
        let sign = if u[x0] > 0.0 {
            1.0
        } else if u[x0] < 0.0 {
            -1.0
        } else {
            0.0
        };
        let lhs = sign * (self.eval_at(x0, u[x0] + v[x0]) - self.eval_at(x0, v[x0]));
        let rhs = a * (1.0 + sup_norm(v)).powi(d) - b * u[x0].abs().powi(d);
        lhs - rhs
    }
}

/// Lowest index attaining `max |u_i|`.
pub fn argmax_abs(u: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in u.iter().enumerate() {
        if x.abs() > u[best].abs() {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipativityReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest `LHS − RHS` seen; negative when every sample satisfied the bound.
    pub worst_margin: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SpatialGrid {
        SpatialGrid::new(5, 1.0, BoundaryCondition::Dirichlet).unwrap()
    }

    #[test]
    fn eval_examples() {
        let g = grid();
        let f = PolynomialDrift::constant(&g, &[0.0, 0.0, 0.0, -1.0]);
        assert_eq!(f.eval(&[2.0; 5]), vec![-8.0; 5]);
        let f = PolynomialDrift::constant(&g, &[0.0, 1.0, 0.0, -1.0]);
        assert_eq!(f.eval(&[0.0; 5]), vec![0.0; 5]);
        let b0 = |x: f64| x * (1.0 - x);
        let f = PolynomialDrift::from_functions(&g, &[&b0]);
        let expected: Vec<f64> = g.nodes().iter().map(|&x| b0(x)).collect();
        assert_eq!(f.eval(&[3.0, -1.0, 0.0, 7.0, 2.0]), expected);
        assert_eq!(f.degree(), 0);
    }

    #[test]
    fn hypothesis_checks() {
        let g = grid();
        assert!(PolynomialDrift::constant(&g, &[0.0, 1.0, 0.0, -1.0]).check_hypothesis().is_ok());
        assert!(PolynomialDrift::constant(&g, &[0.0, 0.0, 1.0]).check_hypothesis().is_err());
        assert!(PolynomialDrift::constant(&g, &[0.0, 0.0, 0.0, 1.0]).check_hypothesis().is_err());
        // Nonzero b_0 on a Dirichlet boundary.
        assert!(PolynomialDrift::constant(&g, &[1.0, 0.0, 0.0, -1.0]).check_hypothesis().is_err());
        assert_eq!(PolynomialDrift::constant(&g, &[0.0, 0.0, 0.0, -2.0]).eps_lead(), Some(2.0));
    }

    #[test]
    fn dissipativity_direct_examples() {
        let g = grid();
        let f = PolynomialDrift::constant(&g, &[0.0, 0.0, 0.0, -1.0]);
        // u ≡ 2, v ≡ 0, a = b = 1: LHS = −8, RHS = −7.
        let m = f.dissipativity_margin(&[2.0; 5], &[0.0; 5], 1.0, 1.0, 3);
        assert!((m - (-1.0)).abs() < 1e-12);
        // u ≡ 0: LHS = 0 ≤ a(1+‖v‖)³.
        let m = f.dissipativity_margin(&[0.0; 5], &[3.0, -1.0, 0.5, 0.0, 2.0], 1.0, 1.0, 3);
        assert!((m + 64.0).abs() < 1e-12);
        assert!(f.check_dissipativity(0.0, 1.0, 10, 1).is_err());
    }

    #[test]
    fn offset_and_argmax() {
        let g = grid();
        let f = PolynomialDrift::zero(&g).with_offset(1.5);
        assert_eq!(f.eval(&[9.0; 5]), vec![1.5; 5]);
        assert_eq!(argmax_abs(&[1.0, -3.0, 3.0, 2.0]), 1);
    }
}
