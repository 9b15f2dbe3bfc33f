//! Numerical classification of the Osgood-type condition `∫_{0+} h^{-2} = ∞`.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::quadrature::log_space_integral;

/// Plateau tolerance on successive partial integrals.
pub const DEFAULT_OSGOOD_TOL: f64 = 1e-3;
/// Smallest lower limit in the default partial-integral table.
pub const DEFAULT_OSGOOD_RMIN: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsgoodClass {
    Diverges,
    Converges,
    Inconclusive,
}

impl fmt::Display for OsgoodClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Diverges => "diverges",
            Self::Converges => "converges",
            Self::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OsgoodReport {
    pub class: OsgoodClass,
    /// `(ρ, I(ρ))` with `I(ρ) = ∫_ρ^1 h^{-2}(r) dr`.
    pub table: Vec<(f64, f64)>,
}

/// Tabulates `I(ρ)` for `ρ = 10^{-2}, 10^{-4}, …` down to `r_min` and
/// classifies: `Diverges` if every successive increment is `≥ tol`,
/// `Converges` if the increments over the last four decades are `< tol`,
/// `Inconclusive` otherwise.
pub fn validate_osgood<H: Fn(f64) -> f64>(h: H, r_min: f64, tol: f64) -> Result<OsgoodReport> {
    if !(r_min > 0.0 && r_min < 1e-2) {
        return Err(invalid(format!("r_min must lie in (0, 1e-2), got {r_min}")));
    }
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    // Positivity on a dense log grid over [r_min, 1].
    let probes = 400;
    for j in 0..=probes {
        let r = r_min.powf(1.0 - j as f64 / probes as f64);
        let v = h(r);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidModulus { r, value: v });
        }
    }
    let inv_sq = |r: f64| {
        let v = h(r);
        1.0 / (v * v)
    };
    let mut table = Vec::new();
    let mut upper = 1.0f64;
    let mut acc = 0.0;
    let mut rho = 1e-2;
    while rho >= r_min * (1.0 - 1e-12) {
        let piece = log_space_integral(&inv_sq, rho, upper, 1e-10 * (1.0 + acc));
        if !piece.is_finite() {
            return Err(Error::InvalidModulus { r: rho, value: h(rho) });
        }
        acc += piece;
        table.push((rho, acc));
        upper = rho;
        rho *= 1e-2;
    }
    let diffs: Vec<f64> = table.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let tail = &diffs[diffs.len().saturating_sub(2)..];
    let class = if !diffs.is_empty() && diffs.iter().all(|d| *d >= tol) {
        OsgoodClass::Diverges
    } else if !tail.is_empty() && tail.iter().all(|d| *d < tol) {
        OsgoodClass::Converges
    } else {
        OsgoodClass::Inconclusive
    };
    Ok(OsgoodReport { class, table })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classify(h: impl Fn(f64) -> f64) -> OsgoodReport {
        validate_osgood(h, DEFAULT_OSGOOD_RMIN, DEFAULT_OSGOOD_TOL).unwrap()
    }

    #[test]
    fn holder_half_and_lipschitz_diverge() {
        assert_eq!(classify(|r: f64| 0.8 * r.sqrt()).class, OsgoodClass::Diverges);
        assert_eq!(classify(|r: f64| r).class, OsgoodClass::Diverges);
    }

    #[test]
    fn quarter_power_converges_to_closed_form() {
        let rep = classify(|r: f64| r.powf(0.25));
        assert_eq!(rep.class, OsgoodClass::Converges);
        for (rho, v) in &rep.table {
            assert!((v - 2.0 * (1.0 - rho.sqrt())).abs() < 1e-8, "rho = {rho}");
        }
        assert_eq!(rep.table.len(), 6);
    }

    #[test]
    fn rejects_nonpositive_modulus() {
        let err = validate_osgood(|r: f64| r - 0.5, DEFAULT_OSGOOD_RMIN, DEFAULT_OSGOOD_TOL).unwrap_err();
        assert!(matches!(err, Error::InvalidModulus { .. }));
    }

    #[test]
    fn mixed_tail_is_inconclusive() {
        // Plateaus between 1e-8 and 1e-10, then jumps again below 1e-10.
        let h = |r: f64| if r > 1e-10 { r.powf(0.25) } else { 1e-4 };
        assert_eq!(classify(h).class, OsgoodClass::Inconclusive);
    }
}
