//! Closed-form law of the `k`-th analog-to-target distance.
//!
//! With `μ(B_{z,r}) = r^d` and a catalog of `L` independent states, the number
//! of analogs inside radius `r` is Poisson with mean `L r^d`, hence
//!
//! ```text
//! p_k(r)      = d L r^{d-1} (L r^d)^{k-1} e^{-L r^d} / (k-1)!
//! P(r_k > r)  = e^{-L r^d} Σ_{s<k} (L r^d)^s / s!
//! ⟨r_k⟩       = Γ(k + 1/d) / (L^{1/d} Γ(k))
//! ```
//!
//! Equivalently `L r_k^d` is a `Gamma(k, 1)` variable, which gives the exact
//! samplers. An optional scale `ρ` maps unit-metric distances `r` to `ρ r`.
//! All factorial and Gamma arithmetic is done in log space.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::special::{ln_factorial, ln_gamma, ln_gamma_p_int, ln_gamma_q_int, ln_gamma_ratio};
use crate::{Error, Result};

/// Parameters `(k, d, L, ρ)` of the distance law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistParams {
    pub k: u64,
    pub d: f64,
    pub l: u64,
    pub rho: f64,
}

impl DistParams {
    pub fn new(k: u64, d: f64, l: u64) -> Result<Self> {
        Self::with_rho(k, d, l, 1.0)
    }

    pub fn with_rho(k: u64, d: f64, l: u64, rho: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("analog rank k must be at least 1"));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::invalid(format!("dimension must be positive and finite, got {d}")));
        }
        if l == 0 || k > l {
            return Err(Error::invalid(format!("need 1 <= k <= L, got k={k}, L={l}")));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid(format!("rho must be positive, got {rho}")));
        }
        Ok(DistParams { k, d, l, rho })
    }

    fn ln_l(&self) -> f64 {
        (self.l as f64).ln()
    }

    /// `x = L (r/ρ)^d`, the Gamma-distributed variable.
    fn gamma_variable(&self, r: f64) -> f64 {
        (self.l as f64) * (r / self.rho).powf(self.d)
    }

    fn distance_of(&self, x: f64) -> f64 {
        self.rho * (x / self.l as f64).powf(1.0 / self.d)
    }
}

/// `ln P(N = k)` for `N ~ Poisson(L μ)`.
///
/// Uses the saddle-point form `-½ ln(2πk) - δ(k) - bd0(k, m)` of Loader (2000),
/// which keeps relative accuracy when `k` and `L μ` are large.
pub fn ln_poisson_count_pmf(k: u64, l: u64, mu: f64) -> f64 {
    assert!(mu >= 0.0, "mu must be non-negative");
    let mean = l as f64 * mu;
    if mean == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0 {
        return -mean;
    }
    let x = k as f64;
    -0.5 * (2.0 * std::f64::consts::PI * x).ln() - stirling_error(x) - bd0(x, mean)
}

/// `ln Γ(n + 1) - (n + ½) ln n + n - ½ ln 2π`.
fn stirling_error(n: f64) -> f64 {
    const S: [f64; 5] = [1.0 / 12.0, 1.0 / 360.0, 1.0 / 1260.0, 1.0 / 1680.0, 1.0 / 1188.0];
    if n <= 15.0 {
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - 0.5 * (2.0 * std::f64::consts::PI).ln();
    }
    let nn = n * n;
    if n > 500.0 {
        (S[0] - S[1] / nn) / n
    } else if n > 80.0 {
        (S[0] - (S[1] - S[2] / nn) / nn) / n
    } else if n > 35.0 {
        (S[0] - (S[1] - (S[2] - S[3] / nn) / nn) / nn) / n
    } else {
        (S[0] - (S[1] - (S[2] - (S[3] - S[4] / nn) / nn) / nn) / nn) / n
    }
}

/// `x ln(x/m) + m - x` without cancellation near `x = m`.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        for j in 1..1000 {
            ej *= v2;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                break;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

pub fn poisson_count_pmf(k: u64, l: u64, mu: f64) -> f64 {
    ln_poisson_count_pmf(k, l, mu).exp()
}

/// Log-density of `r_k`; `+∞` at `r = 0` when `k d < 1`.
pub fn ln_pdf_rk(r: f64, p: &DistParams) -> f64 {
    if r < 0.0 {
        return f64::NEG_INFINITY;
    }
    let kd = p.k as f64 * p.d;
    if r == 0.0 {
        return if kd < 1.0 {
            f64::INFINITY
        } else if kd == 1.0 {
            // p(0) = d L^k / (k-1)!
            p.d.ln() + p.k as f64 * p.ln_l() - ln_factorial(p.k - 1) - p.rho.ln()
        } else {
            f64::NEG_INFINITY
        };
    }
    let s = r / p.rho;
    let x = (p.ln_l() + p.d * s.ln()).exp();
    p.d.ln() + p.k as f64 * p.ln_l() + (kd - 1.0) * s.ln() - x - ln_factorial(p.k - 1) - p.rho.ln()
}

pub fn pdf_rk(r: f64, p: &DistParams) -> f64 {
    ln_pdf_rk(r, p).exp()
}

/// `ln P(r_k > r)`.
pub fn ln_survival_rk(r: f64, p: &DistParams) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    ln_gamma_q_int(p.k, p.gamma_variable(r))
}

pub fn survival_rk(r: f64, p: &DistParams) -> f64 {
    ln_survival_rk(r, p).exp()
}

/// `P(r_k <= r)`, accurate in the lower tail.
pub fn cdf_rk(r: f64, p: &DistParams) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    ln_gamma_p_int(p.k, p.gamma_variable(r)).exp()
}

pub fn mean_rk(p: &DistParams) -> f64 {
    let k = p.k as f64;
    p.rho * (ln_gamma_ratio(k, 1.0 / p.d) - p.ln_l() / p.d).exp()
}

pub fn var_rk(p: &DistParams) -> f64 {
    let k = p.k as f64;
    let r1 = ln_gamma_ratio(k, 1.0 / p.d);
    let r2 = ln_gamma_ratio(k, 2.0 / p.d);
    // Γ(k+2/d)Γ(k) - Γ(k+1/d)^2 = Γ(k)^2 e^{2 r1} (e^{r2 - 2 r1} - 1)
    p.rho * p.rho * (2.0 * r1 - 2.0 * p.ln_l() / p.d).exp() * (r2 - 2.0 * r1).exp_m1()
}

pub fn second_moment_rk(p: &DistParams) -> f64 {
    let k = p.k as f64;
    p.rho * p.rho * (ln_gamma_ratio(k, 2.0 / p.d) - 2.0 * p.ln_l() / p.d).exp()
}

pub fn std_rk(p: &DistParams) -> f64 {
    var_rk(p).sqrt()
}

/// Large-`k` approximation `(k/L)^{1/d}` of the mean (intended for `k >= 2`).
pub fn mean_rk_approx(p: &DistParams) -> f64 {
    p.rho * (p.k as f64 / p.l as f64).powf(1.0 / p.d)
}

/// Large-`k` approximation `1/(d √k)` of the relative standard deviation.
pub fn rel_std_rk_approx(p: &DistParams) -> f64 {
    1.0 / (p.d * (p.k as f64).sqrt())
}

/// Location of the density maximum; zero when `k d <= 1`.
pub fn mode_rk(p: &DistParams) -> f64 {
    let k = p.k as f64;
    if k * p.d <= 1.0 {
        0.0
    } else {
        p.rho * ((k - 1.0 / p.d) / p.l as f64).powf(1.0 / p.d)
    }
}

/// Interval outside which each tail of `r_k` carries less than `tail` mass.
pub fn support_bounds(p: &DistParams, tail: f64) -> (f64, f64) {
    let k = p.k as f64;
    let ln_tail = tail.ln();
    // upper: grow x until Q(k, x) < tail, then bisect
    let mut hi = k.max(1.0);
    while ln_gamma_q_int(p.k, hi) > ln_tail {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ln_gamma_q_int(p.k, mid) > ln_tail {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_hi = hi;
    // lower: shrink x until P(k, x) < tail
    let mut lo = k;
    while ln_gamma_p_int(p.k, lo) > ln_tail {
        lo /= 2.0;
    }
    let mut hi = lo * 2.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ln_gamma_p_int(p.k, mid) > ln_tail {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (p.distance_of(lo), p.distance_of(x_hi))
}

/// Log-density of the rescaled distance `u = d √k ((L/k)^{1/d} r - 1)`.
///
/// With `w = 1 + u/(d √k)`:
/// `h_k(u) = k^{k-1/2} / (k-1)! · w^{dk-1} · exp(-k w^d)`, zero for `w <= 0`.
pub fn ln_rescaled_pdf(u: f64, k: u64, d: f64) -> f64 {
    assert!(k >= 1 && d > 0.0);
    let kf = k as f64;
    let w = 1.0 + u / (d * kf.sqrt());
    if w <= 0.0 {
        return if w == 0.0 && d * kf < 1.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
    }
    (kf - 0.5) * kf.ln() - ln_gamma(kf) + (d * kf - 1.0) * w.ln() - kf * w.powf(d)
}

pub fn rescaled_pdf(u: f64, k: u64, d: f64) -> f64 {
    ln_rescaled_pdf(u, k, d).exp()
}

/// Lower end `-d √k` of the support of `h_k`.
pub fn rescaled_support_min(k: u64, d: f64) -> f64 {
    -d * (k as f64).sqrt()
}

/// Log joint density of `(r_1, ..., r_K)`; `-∞` unless `0 < r_1 < ... < r_K`.
pub fn ln_joint_pdf(r: &[f64], d: f64, l: u64) -> f64 {
    if r.is_empty() || !(r[0] > 0.0) || r.windows(2).any(|w| !(w[1] > w[0])) {
        return f64::NEG_INFINITY;
    }
    let kf = r.len() as f64;
    let last = *r.last().expect("non-empty");
    kf * (d * l as f64).ln() + (d - 1.0) * r.iter().map(|v| v.ln()).sum::<f64>() - l as f64 * last.powf(d)
}

pub fn joint_pdf(r: &[f64], d: f64, l: u64) -> f64 {
    ln_joint_pdf(r, d, l).exp()
}

/// Minimum catalog size for a given chance of an analog within `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalogSizeBound {
    /// Smallest `L` with `1 - exp(-L ε^d) >= confidence`.
    pub l_min: u64,
    /// `-ln(1 - confidence) / ε^d`, the small-`ε` form.
    pub van_den_dool_approx: f64,
    /// `ln(1 - confidence) / ln(1 - ε^d)`.
    pub van_den_dool_exact: f64,
}

pub fn min_catalog_size(epsilon: f64, d: f64, confidence: f64) -> Result<CatalogSizeBound> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid(format!("confidence must lie in (0, 1), got {confidence}")));
    }
    if !(d > 0.0) {
        return Err(Error::invalid("d must be positive"));
    }
    let alpha_d = (d * epsilon.ln()).exp();
    let need = -(-confidence).ln_1p();
    let approx = if alpha_d > 0.0 { need / alpha_d } else { f64::INFINITY };
    // 2^53: beyond it the ceiling is no longer an exact integer
    if !approx.is_finite() || approx > 9_007_199_254_740_992.0 {
        return Err(Error::Overflow(format!(
            "epsilon^d = {alpha_d:e} gives L >= {approx:e} (epsilon={epsilon}, d={d})"
        )));
    }
    let exact = need / -(-alpha_d).ln_1p();
    Ok(CatalogSizeBound {
        l_min: (approx.ceil() as u64).max(1),
        van_den_dool_approx: approx,
        van_den_dool_exact: exact,
    })
}

/// `n` exact draws of `r_k`: `r = ρ (G/L)^{1/d}` with `G ~ Gamma(k, 1)`.
pub fn sample_rk(p: &DistParams, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = Gamma::new(p.k as f64, 1.0).expect("k >= 1");
    (0..n).map(|_| p.distance_of(gamma.sample(&mut rng))).collect()
}

/// `n` joint draws of `(r_1, ..., r_K)`.
///
/// `L r_k^d` are the arrival times of a unit-rate Poisson process, so each
/// path accumulates `K` standard exponential gaps.
pub fn sample_joint(k_max: usize, d: f64, l: u64, rho: f64, n: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(k_max >= 1 && d > 0.0 && l >= 1 && rho > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut arrival = 0.0;
            (0..k_max)
                .map(|_| {
                    let gap: f64 = Exp1.sample(&mut rng);
                    arrival += gap;
                    rho * (arrival / l as f64).powf(1.0 / d)
                })
                .collect()
        })
        .collect()
}
