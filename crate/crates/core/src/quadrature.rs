//! Adaptive Simpson quadrature.

/// Integrates `f` over `[a, b]` with adaptive Simpson refinement to absolute
/// tolerance `tol`. Reversed limits yield the negated integral.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrates `f` over `[lo, hi]` (`0 < lo < hi`) after the substitution
/// `r = e^s`, splitting at every decade. Suited to integrands with an
/// algebraic singularity at the origin.
pub fn log_space_integral<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, tol: f64) -> f64 {
    debug_assert!(lo > 0.0 && hi >= lo);
    let g = |s: f64| {
        let r = s.exp();
        f(r) * r
    };
    let (a, b) = (lo.ln(), hi.ln());
    let pieces = ((b - a) / std::f64::consts::LN_10).ceil().max(1.0) as usize;
    let width = (b - a) / pieces as f64;
    let piece_tol = tol / pieces as f64;
    (0..pieces)
        .map(|i| {
            let s0 = a + i as f64 * width;
            let s1 = if i + 1 == pieces { b } else { s0 + width };
            adaptive_simpson(&g, s0, s1, piece_tol)
        })
        .sum()
}

/// Composite trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}
