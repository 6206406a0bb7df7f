//! Kernel density estimates and one-dimensional distribution distances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::special::std_normal_pdf;
use crate::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 512;
pub const DEFAULT_GRID_PADDING: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeEstimate {
    pub samples: Vec<f64>,
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl KdeEstimate {
    /// Re-evaluate the estimate at an arbitrary point.
    pub fn eval(&self, x: f64) -> f64 {
        kde_at(&self.samples, self.bandwidth, x)
    }
}

/// `n` evenly spaced points spanning the samples, padded by `padding` bandwidths.
pub fn default_grid(samples: &[f64], bandwidth: f64, n: usize, padding: f64) -> Vec<f64> {
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - padding * bandwidth;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + padding * bandwidth;
    linspace(lo, hi, n)
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect()
        }
    }
}

fn kde_at(samples: &[f64], h: f64, x: f64) -> f64 {
    samples.iter().map(|s| std_normal_pdf((x - s) / h)).sum::<f64>() / (samples.len() as f64 * h)
}

/// Gaussian-kernel density estimate; uses [`default_grid`] when `grid` is `None`.
pub fn gaussian_kde(samples: &[f64], bandwidth: f64, grid: Option<&[f64]>) -> Result<KdeEstimate> {
    if samples.len() < 2 {
        return Err(Error::invalid("kernel density needs at least two samples"));
    }
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let grid = match grid {
        Some(g) => g.to_vec(),
        None => default_grid(samples, bandwidth, DEFAULT_GRID_POINTS, DEFAULT_GRID_PADDING),
    };
    let values = grid.par_iter().map(|&x| kde_at(samples, bandwidth, x)).collect();
    Ok(KdeEstimate { samples: samples.to_vec(), bandwidth, grid, values })
}

/// Trapezoid rule on an ascending grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

/// `max |f(x) - g(x)|` over the grid.
pub fn sup_norm<F: Fn(f64) -> f64>(grid: &[f64], values: &[f64], reference: F) -> f64 {
    grid.iter().zip(values).map(|(&x, &v)| (v - reference(x)).abs()).fold(0.0, f64::max)
}

fn sorted(samples: &[f64]) -> Vec<f64> {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// One-sample Kolmogorov-Smirnov statistic `sup |F_n - F|`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    assert!(!samples.is_empty(), "ks_distance needs samples");
    let s = sorted(samples);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut best) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        best = best.max((i as f64 / na - j as f64 / nb).abs());
    }
    best
}

/// Asymptotic Kolmogorov tail `P(D_n > d)` with the Stephens small-sample correction.
pub fn ks_pvalue(statistic: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * statistic;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let jf = j as f64;
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Effective size `n m / (n + m)` for the two-sample test.
pub fn ks_two_sample_pvalue(statistic: f64, n: usize, m: usize) -> f64 {
    ks_pvalue(statistic, (n * m) as f64 / (n + m) as f64)
}

/// Empirical 1-Wasserstein distance `∫ |F_a - F_b|`, for any sample sizes.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let (a, b) = (sorted(a), sorted(b));
    if a.len() == b.len() {
        return a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut prev = a[0].min(b[0]);
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        total += (x - prev) * (i as f64 / na - j as f64 / nb).abs();
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        prev = x;
    }
    total
}
