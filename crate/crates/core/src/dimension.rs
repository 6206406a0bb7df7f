//! Finite-resolution local dimension, power-law prefactor and rescaling.
//!
//! For sorted analog distances `r_1 <= ... <= r_K` the local dimension at
//! resolution `r_K` is the inverse mean log-ratio
//!
//! ```text
//! d = [ (1/(K-1)) Σ_{k<K} ln(r_K / r_k) ]^{-1}
//! ```
//!
//! i.e. the maximum-likelihood rate of the exponential law that the
//! log-ratios follow when `μ(B_{z,r}) ∝ r^d`. Only ratios enter, so `d` is
//! unchanged by any rescaling of the metric.

use serde::{Deserialize, Serialize};

use crate::neighbors::AnalogSet;
use crate::{Error, Result};

/// Default analog count for long (Lorenz) catalogs.
pub const DEFAULT_K_LONG: usize = 150;
/// Default analog count for short, hourly catalogs.
pub const DEFAULT_K_SHORT: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalDimEstimate {
    pub d: f64,
    pub k_used: usize,
    /// Resolution `r_K` at which the dimension was measured.
    pub r_k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrefactorFit {
    /// `C` in `r_k ≈ C k^{1/d}`.
    pub c: f64,
    /// `ρ = C L^{1/d}`.
    pub rho: f64,
    /// RMS of `ln r_k - ln(C k^{1/d})`.
    pub residual: f64,
}

pub fn estimate_local_dimension(a: &AnalogSet) -> Result<LocalDimEstimate> {
    let k = a.len();
    if k < 3 {
        return Err(Error::invalid(format!("local dimension needs K >= 3 analogs, got {k}")));
    }
    if let Some(i) = a.distances.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::ZeroDistance { index: i });
    }
    let r_max = a.distances[k - 1];
    let ln_max = r_max.ln();
    let mean = a.distances[..k - 1].iter().map(|r| ln_max - r.ln()).sum::<f64>() / (k - 1) as f64;
    if !(mean > 0.0) {
        return Err(Error::DegenerateDistances);
    }
    Ok(LocalDimEstimate {
        d: 1.0 / mean,
        k_used: k,
        r_k: r_max,
    })
}

/// Least squares in log scale with the slope pinned at `1/d`.
pub fn fit_prefactor(a: &AnalogSet, d: f64, catalog_size: usize) -> Result<PrefactorFit> {
    if !(d > 0.0) {
        return Err(Error::invalid("d must be positive"));
    }
    let k = a.len();
    if k == 0 {
        return Err(Error::invalid("fit_prefactor needs at least one analog"));
    }
    if catalog_size < k {
        return Err(Error::invalid(format!("catalog size {catalog_size} smaller than K={k}")));
    }
    if let Some(i) = a.distances.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::ZeroDistance { index: i });
    }
    let offsets: Vec<f64> = a
        .distances
        .iter()
        .enumerate()
        .map(|(i, r)| r.ln() - ((i + 1) as f64).ln() / d)
        .collect();
    let ln_c = offsets.iter().sum::<f64>() / k as f64;
    let residual = (offsets.iter().map(|o| (o - ln_c).powi(2)).sum::<f64>() / k as f64).sqrt();
    let c = ln_c.exp();
    let rho = (ln_c + (catalog_size as f64).ln() / d).exp();
    Ok(PrefactorFit { c, rho, residual })
}

/// `u_k = d √k (r_k / (C k^{1/d}) - 1)` for every analog.
pub fn rescale_distances(a: &AnalogSet, d: f64, c: f64) -> Result<Vec<f64>> {
    if !(d > 0.0 && c > 0.0) {
        return Err(Error::invalid("rescaling needs d > 0 and C > 0"));
    }
    Ok(a
        .distances
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let k = (i + 1) as f64;
            d * k.sqrt() * (r / (c * k.powf(1.0 / d)) - 1.0)
        })
        .collect())
}
