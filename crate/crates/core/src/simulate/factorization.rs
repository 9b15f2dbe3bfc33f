//! Discrete factorization operator
//! `[R_γ f](t) = ∫_0^t (t−s)^{γ−1} S(t−s) f(s) ds` by product integration in
//! the eigenbasis, exact for piecewise-constant `f`.

use statrs::function::gamma::{gamma_li, gamma_ui};

use crate::elliptic::SemigroupCache;
use crate::error::{invalid, Result};

/// `∫_a^b τ^{γ−1} e^{λτ} dτ` for `0 ≤ a < b`, `λ ≤ 0`, `γ ∈ (0, 1]`.
pub fn factorization_weight(gamma: f64, lambda: f64, a: f64, b: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if !(a >= 0.0 && b >= a) {
        return Err(invalid(format!("invalid interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    if lambda == 0.0 {
        return Ok(if gamma == 1.0 { b - a } else { (b.powf(gamma) - a.powf(gamma)) / gamma });
    }
    if gamma == 1.0 {
        return Ok((lambda * a).exp() * (lambda * (b - a)).exp_m1() / lambda);
    }
    let mu = -lambda;
    let (x0, x1) = (mu * a, mu * b);
    let scale = mu.powf(-gamma);
    // The upper tail avoids cancellation
    // once both endpoints sit past the bulk.
    let diff = if x0 > gamma + 1.0 {
        gamma_ui(gamma, x0) - gamma_ui(gamma, x1)
    } else {
        gamma_li(gamma, x1) - if x0 > 0.0 { gamma_li(gamma, x0) } else { 0.0 }
    };
    Ok(scale * diff)
}

/// Applies `R_γ` to `f_path` (`f_path[i] = f(t_i)`, piecewise constant on
/// `[t_i, t_{i+1})`) and returns `R_γ f` at every `t_i`.
pub fn apply_factorization(
    cache: &SemigroupCache,
    gamma: f64,
    f_path: &[Vec<f64>],
    dt: f64,
) -> Result<Vec<Vec<f64>>> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    if !(dt > 0.0) {
        return Err(invalid(format!("dt must be positive, got {dt}")));
    }
    let n = cache.n();
    let steps = f_path.len();
    if let Some(bad) = f_path.iter().find(|f| f.len() != n) {
        return Err(invalid(format!("state has {} entries, grid has {n}", bad.len())));
    }
    let lambdas = cache.eigvals();
    let coords: Vec<Vec<f64>> = f_path.iter().map(|f| cache.coordinates(f)).collect();
    // weights[m][k]: kernel mass of the lag interval [m·dt, (m+1)·dt).
    let weights: Vec<Vec<f64>> = (0..steps)
        .map(|m| {
            lambdas
                .iter()
                .map(|&l| factorization_weight(gamma, l, m as f64 * dt, (m + 1) as f64 * dt))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(steps);
    for i in 0..steps {
        let mut c = vec![0.0; n];
        for j in 0..i {
            let w = &weights[i - 1 - j];
            for k in 0..n {
                c[k] += w[k] * coords[j][k];
            }
        }
        out.push(cache.synthesize(&c));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{BoundaryCondition, Diffusion, EllipticOperator, SpatialGrid};
    use crate::quadrature::adaptive_simpson;

    fn cache() -> SemigroupCache {
        let g = SpatialGrid::new(6, 1.0, BoundaryCondition::Dirichlet).unwrap();
        SemigroupCache::new(&EllipticOperator::assemble(&g, &Diffusion::Constant(0.05)).unwrap())
    }

    #[test]
    fn weights_match_quadrature() {
        for &gamma in &[1.0, 0.75, 0.5, 0.3] {
            for &lambda in &[0.0, -0.5, -3.0, -40.0] {
                for &(a, b) in &[(0.0, 0.1), (0.1, 0.2), (0.5, 0.6), (2.0, 2.5)] {
                    let w = factorization_weight(gamma, lambda, a, b).unwrap();
                    // Substitution τ = a + (b−a)·s^{1/γ} removes the endpoint singularity.
                    let oracle = if a == 0.0 {
                        let f = |s: f64| {
                            let tau = b * s.powf(1.0 / gamma);
                            (lambda * tau).exp() * b.powf(gamma) / gamma
                        };
                        adaptive_simpson(&f, 0.0, 1.0, 1e-13)
                    } else {
                        let f = |t: f64| t.powf(gamma - 1.0) * (lambda * t).exp();
                        adaptive_simpson(&f, a, b, 1e-13)
                    };
                    assert!((w - oracle).abs() < 1e-9 * (1.0 + oracle.abs()), "γ={gamma} λ={lambda} [{a},{b}] {w} vs {oracle}");
                }
            }
        }
    }

    #[test]
    fn unit_gamma_on_eigenvector() {
        let c = cache();
        let dt = 0.01;
        let k = 1;
        let v = c.eigvec(k);
        let lam = c.eigvals()[k];
        let f: Vec<Vec<f64>> = (0..=100).map(|_| v.iter().map(|x| 2.0 * x).collect()).collect();
        let r = apply_factorization(&c, 1.0, &f, dt).unwrap();
        let t = 1.0;
        let expected = 2.0 * (lam * t).exp_m1() / lam;
        for (a, b) in r[100].iter().zip(&v) {
            assert!((a - expected * b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_operator_integrates() {
        let g = SpatialGrid::new(3, 1.0, BoundaryCondition::Neumann).unwrap();
        let c = SemigroupCache::zero(&g);
        let f = vec![vec![1.0; 3]; 51];
        let r = apply_factorization(&c, 1.0, &f, 0.02).unwrap();
        assert!(r[50].iter().all(|x| (x - 1.0).abs() < 1e-12));
        let z = apply_factorization(&c, 0.5, &vec![vec![0.0; 3]; 5], 0.02).unwrap();
        assert!(z.iter().flatten().all(|x| *x == 0.0));
    }

    #[test]
    fn rejects_bad_gamma() {
        assert!(apply_factorization(&cache(), 0.0, &[], 0.1).is_err());
        assert!(apply_factorization(&cache(), 1.5, &[], 0.1).is_err());
    }
}
