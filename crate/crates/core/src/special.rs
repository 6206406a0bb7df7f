//! Log-space special functions.
//!
//! Gamma ratios are evaluated with a shifted Stirling difference so that
//! quantities like `Γ(k + 2/d) Γ(k) / Γ(k + 1/d)^2 - 1` keep full relative
//! precision for `k` in the thousands.

use std::f64::consts::PI;

pub use statrs::function::gamma::ln_gamma;

const STIRLING_SHIFT: f64 = 10.0;

// B_{2n} / (2n (2n - 1))
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

/// `ln(n!)`.
pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// `ln Γ(x + a) - ln Γ(x)` for `x > 0`, `a >= 0`.
pub fn ln_gamma_ratio(x: f64, a: f64) -> f64 {
    assert!(x > 0.0 && a >= 0.0, "ln_gamma_ratio needs x > 0, a >= 0");
    if a == 0.0 {
        return 0.0;
    }
    let mut y = x;
    let mut correction = 0.0;
    while y < STIRLING_SHIFT {
        correction += (a / y).ln_1p();
        y += 1.0;
    }
    stirling_difference(y, a) - correction
}

fn stirling_difference(y: f64, a: f64) -> f64 {
    let ya = y + a;
    let mut s = (y - 0.5) * (a / y).ln_1p() + a * ya.ln() - a;
    // n = 1 term written without cancellation
    s += STIRLING_COEFFS[0] * (-a / (y * ya));
    let (iy, iya) = (1.0 / y, 1.0 / ya);
    let (iy2, iya2) = (iy * iy, iya * iya);
    let (mut py, mut pya) = (iy, iya);
    for c in &STIRLING_COEFFS[1..] {
        py *= iy2;
        pya *= iya2;
        s += c * (pya - py);
    }
    s
}

/// Numerically stable `ln(Σ exp(v))`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `ln Q(k, x)`, the regularized upper incomplete gamma function at integer shape.
///
/// Equals `ln P(Poisson(x) < k)`; evaluated as a finite log-sum of positive terms.
pub fn ln_gamma_q_int(k: u64, x: f64) -> f64 {
    assert!(k >= 1);
    if x <= 0.0 {
        return 0.0;
    }
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    let lx = x.ln();
    let terms: Vec<f64> = (0..k)
        .map(|s| -x + s as f64 * lx - ln_factorial(s))
        .collect();
    log_sum_exp(&terms).min(0.0)
}

/// `ln P(k, x)`, the regularized lower incomplete gamma function at integer shape.
pub fn ln_gamma_p_int(k: u64, x: f64) -> f64 {
    assert!(k >= 1);
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    let ln_q = ln_gamma_q_int(k, x);
    if ln_q < -std::f64::consts::LN_2 {
        // Q < 1/2: the complement is accurate
        return (-ln_q.exp()).ln_1p();
    }
    // Series Σ_{s>=k} x^s e^{-x} / s!, all terms positive.
    let lead = -x + k as f64 * x.ln() - ln_factorial(k);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut s = k as f64;
    loop {
        s += 1.0;
        term *= x / s;
        sum += term;
        if term < 1e-17 * sum || s > k as f64 + 1e6 {
            break;
        }
    }
    (lead + sum.ln()).min(0.0)
}

/// Standard Normal density.
pub fn std_normal_pdf(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

/// Standard Normal cumulative distribution function.
pub fn std_normal_cdf(u: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-u / std::f64::consts::SQRT_2)
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
pub fn chi_square_sf(statistic: f64, dof: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(dof)
        .map(|c| c.sf(statistic))
        .unwrap_or(f64::NAN)
}
