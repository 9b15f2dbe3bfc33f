//! Lattice certificates for the drift and noise hypotheses.

use crate::coefficients::drift::PolynomialDrift;
use crate::coefficients::noise::{NoiseFamily, Response};
use crate::coefficients::osgood::{validate_osgood, OsgoodClass, OsgoodReport, DEFAULT_OSGOOD_RMIN, DEFAULT_OSGOOD_TOL};
use crate::elliptic::BoundaryCondition;

const SLACK: f64 = 1e-12;

/// Sampling of the state axis `r ∈ [−R, R]`; the spatial lattice is the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseLattice {
    pub r_max: f64,
    pub r_points: usize,
}

impl Default for NoiseLattice {
    fn default() -> Self {
        Self { r_max: 10.0, r_points: 81 }
    }
}

impl NoiseLattice {
    /// Uniform points plus `0` and `±10^{-j}` (j = 1..8) to probe the modulus near zero.
    pub fn r_values(&self) -> Vec<f64> {
        let m = self.r_points.max(2);
        let mut v: Vec<f64> =
            (0..m).map(|j| -self.r_max + 2.0 * self.r_max * j as f64 / (m - 1) as f64).collect();
        v.push(0.0);
        for j in 1..=8 {
            let e = 10f64.powi(-j);
            if e < self.r_max {
                v.push(e);
                v.push(-e);
            }
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Human-readable worst sample (or summary when passing).
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCertificate {
    pub checks: Vec<CheckOutcome>,
    pub osgood: Option<OsgoodReport>,
    pub alpha_l2: f64,
    pub beta_l2: f64,
    pub tail_bound: f64,
}

impl NoiseCertificate {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Checks the growth bound, the Hölder moduli, monotonicity and vanishing
/// of `h` at zero, the Dirichlet boundary condition on `g_k(·, 0)`,
/// ℓ²-summability of the growth constants and the Osgood condition on `h`.
pub fn validate_noise_family(fam: &NoiseFamily, lattice: &NoiseLattice) -> NoiseCertificate {
    let rs = lattice.r_values();
    let n = fam.nodes().len();
    let mut checks = Vec::new();

    // For factorized responses g is linear in the profile value, so the node
    // with the largest |p_k| dominates; custom responses depend on x.
    let nodes_for = |k: usize| -> Vec<usize> {
        let m = &fam.modes()[k];
        if matches!(m.response, Response::Custom(_)) {
            (0..n).collect()
        } else {
            let best = (0..n).fold(0, |b, i| if fam.g(k, i, 1.0).abs() > fam.g(k, b, 1.0).abs() { i } else { b });
            vec![best]
        }
    };

    let mut worst = (f64::NEG_INFINITY, String::from("no modes"));
    for (k, m) in fam.modes().iter().enumerate() {
        for i in nodes_for(k) {
            for &r in &rs {
                let g = fam.g(k, i, r).abs();
                let bound = m.alpha + m.beta * r.abs();
                let excess = g - bound;
                if excess > worst.0 {
                    worst = (excess, format!("k={} x={:.6} r={} |g|={:.6e} bound={:.6e}", k + 1, fam.nodes()[i], r, g, bound));
                }
            }
        }
    }
    checks.push(CheckOutcome::new("growth", worst.0 <= SLACK, worst.1));

    let mut worst = (f64::NEG_INFINITY, String::from("no modes"));
    for (k, m) in fam.modes().iter().enumerate() {
        for i in nodes_for(k) {
            let gs: Vec<f64> = rs.iter().map(|&r| fam.g(k, i, r)).collect();
            for a in 0..rs.len() {
                for b in a + 1..rs.len() {
                    let diff = (gs[a] - gs[b]).abs();
                    let bound = m.sigma.eval((rs[a] - rs[b]).abs());
                    let excess = diff - bound;
                    if excess > worst.0 {
                        worst = (
                            excess,
                            format!("k={} x={:.6} r1={} r2={} diff={:.6e} sigma={:.6e}", k + 1, fam.nodes()[i], rs[a], rs[b], diff, bound),
                        );
                    }
                }
            }
        }
    }
    checks.push(CheckOutcome::new("holder_modulus", worst.0 <= SLACK, worst.1));

    let probes: Vec<f64> = (0..=200).map(|j| 1e-12 * (2.0 * lattice.r_max / 1e-12).powf(j as f64 / 200.0)).collect();
    let hs: Vec<f64> = probes.iter().map(|&r| fam.modulus_sum(r)).collect();
    let drop = hs.windows(2).enumerate().map(|(j, w)| (w[0] - w[1], j)).fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
    checks.push(CheckOutcome::new(
        "h_nondecreasing",
        drop.0 <= SLACK,
        format!("largest decrease {:.3e} at r={:.3e}", drop.0.max(0.0), probes.get(drop.1).copied().unwrap_or(0.0)),
    ));

    let at_zero = fam.modes().iter().enumerate().map(|(k, m)| (m.sigma.eval(0.0).abs(), k)).fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a });
    checks.push(CheckOutcome::new(
        "sigma_vanishes_at_zero",
        at_zero.0 <= SLACK,
        format!("max sigma_k(0) = {:.3e} (k={})", at_zero.0, at_zero.1 + 1),
    ));

    if fam.bc() == BoundaryCondition::Dirichlet {
        let worst = (0..fam.k())
            .flat_map(|k| [(fam.g_boundary(k, true, 0.0).abs(), k, 0.0), (fam.g_boundary(k, false, 0.0).abs(), k, fam.length())])
            .fold((0.0, 0, 0.0), |a, b| if b.0 > a.0 { b } else { a });
        checks.push(CheckOutcome::new(
            "dirichlet_boundary_zero",
            worst.0 <= SLACK,
            format!("max |g_k(x,0)| on boundary = {:.3e} (k={}, x={})", worst.0, worst.1 + 1, worst.2),
        ));
    }

    let (alpha_l2, beta_l2, tail) = (fam.alpha_l2(), fam.beta_l2(), fam.tail_bound());
    checks.push(CheckOutcome::new(
        "l2_summable",
        alpha_l2.is_finite() && beta_l2.is_finite() && tail.is_finite() && tail >= 0.0,
        format!("|alpha|_2={alpha_l2:.6e} |beta|_2={beta_l2:.6e} tail={tail:.3e} (K={})", fam.k()),
    ));

    let mut osgood = None;
    if probes.iter().all(|&r| fam.modulus_sum(r) == 0.0) {
        checks.push(CheckOutcome::new("osgood", true, "h vanishes identically (state-independent noise)".into()));
    } else {
        match validate_osgood(|r| fam.modulus_sum(r), DEFAULT_OSGOOD_RMIN, DEFAULT_OSGOOD_TOL) {
            Ok(rep) => {
                let passed = rep.class == OsgoodClass::Diverges;
                let last = rep.table.last().map_or(0.0, |p| p.1);
                checks.push(CheckOutcome::new("osgood", passed, format!("{} (I(1e-12) = {last:.6e})", rep.class)));
                osgood = Some(rep);
            }
            Err(e) => checks.push(CheckOutcome::new("osgood", false, e.to_string())),
        }
    }

    NoiseCertificate { checks, osgood, alpha_l2, beta_l2, tail_bound: tail }
}

/// Checks the polynomial drift: odd degree, strictly negative leading
/// coefficient and, for Dirichlet problems, vanishing `b_0` on the boundary.
pub fn validate_drift(drift: &PolynomialDrift, bc: BoundaryCondition) -> Vec<CheckOutcome> {
    let d = drift.degree();
    let mut out = vec![CheckOutcome::new("drift_odd_degree", d % 2 == 1, format!("degree {d}"))];
    out.push(match drift.eps_lead() {
        Some(eps) => CheckOutcome::new("drift_leading_negative", true, format!("b_top <= -{eps:.6e}")),
        None => CheckOutcome::new("drift_leading_negative", false, "leading coefficient not strictly negative".into()),
    });
    if bc == BoundaryCondition::Dirichlet {
        let (l, r) = drift.boundary_b0();
        out.push(CheckOutcome::new(
            "drift_b0_boundary_zero",
            l.abs() <= SLACK && r.abs() <= SLACK,
            format!("b_0(0) = {l:.3e}, b_0(L) = {r:.3e}"),
        ));
    }
    out
}
