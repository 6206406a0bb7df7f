//! Synthetic gridded fields with a known effective dimension.
//!
//! The field on a periodic ring of `G` grid points is a sum of `m` traveling
//! waves with distinct wavenumbers and incommensurate angular frequencies,
//!
//! ```text
//! u(x_g, t) = Σ_j a_j cos(κ_j x_g - θ_j(t)) + σ ε_g(t)
//! θ_j(t + 1) = θ_j(t) + ω_j + s ξ_j(t)
//! ```
//!
//! with `ξ` standard Normal. The phase random walk has the uniform law on the
//! `m`-torus as its stationary distribution, so noise-free states fill the
//! torus and their local dimension is `m`. Times are hours.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, CatalogMetadata};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub n_modes: usize,
    pub grid_points: usize,
    /// Number of stacked fields (e.g. 2 for zonal and meridional wind).
    pub n_fields: usize,
    pub n_states: usize,
    /// Hours between retained states.
    pub stride_hours: i64,
    /// Standard deviation of the additive white noise, per grid value.
    pub noise: f64,
    /// Amplitude of mode `j` is `amplitude_decay^j`.
    pub amplitude_decay: f64,
    /// Standard deviation `s` of the hourly phase increments, radians.
    pub phase_diffusion: f64,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            n_modes: 5,
            grid_points: 64,
            n_fields: 1,
            n_states: 100_000,
            stride_hours: 1,
            noise: 0.01,
            amplitude_decay: 1.0,
            phase_diffusion: 1.0,
            seed: 0,
        }
    }
}

/// One traveling wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub amplitude: f64,
    pub wavenumber: usize,
    /// Radians per hour.
    pub omega: f64,
    pub phase: f64,
}

/// Modes for a configuration: wavenumbers `1..=m`, periods spread between
/// one and four days.
pub fn surrogate_modes(cfg: &SurrogateConfig) -> Vec<Mode> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.n_modes)
        .map(|j| {
            let period = 24.0 * (1.0 + 3.0 * (j as f64 + 0.5) / cfg.n_modes as f64);
            Mode {
                amplitude: cfg.amplitude_decay.powi(j as i32),
                wavenumber: j + 1,
                omega: 2.0 * PI / period,
                phase: rng.random::<f64>() * 2.0 * PI,
            }
        })
        .collect()
}

pub fn validate(cfg: &SurrogateConfig) -> Result<()> {
    if cfg.n_modes == 0 || cfg.n_states == 0 || cfg.n_fields == 0 || cfg.stride_hours < 1 {
        return Err(Error::invalid("surrogate needs at least one mode, field and state, and stride >= 1"));
    }
    if 2 * cfg.n_modes >= cfg.grid_points {
        return Err(Error::invalid(format!(
            "{} modes are not resolved on {} grid points (need grid_points > 2 m)",
            cfg.n_modes, cfg.grid_points
        )));
    }
    if !(cfg.noise >= 0.0) || !(cfg.amplitude_decay > 0.0) || !(cfg.phase_diffusion >= 0.0) {
        return Err(Error::invalid("noise and phase_diffusion must be >= 0, amplitude_decay > 0"));
    }
    Ok(())
}

/// Generate the catalog; row `i` is the state at hour `i * stride_hours`.
///
/// Field `f` is shifted by a quarter period `f π/2` in every mode. Phases
/// start at [`Mode::phase`] and advance hour by hour.
pub fn generate_surrogate(cfg: &SurrogateConfig) -> Result<Catalog> {
    validate(cfg)?;
    let modes = surrogate_modes(cfg);
    let g = cfg.grid_points;
    let dim = g * cfg.n_fields;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_0f_5u64);
    let noise = Normal::new(0.0, cfg.noise.max(f64::MIN_POSITIVE)).expect("valid std");
    let step = Normal::new(0.0, cfg.phase_diffusion.max(f64::MIN_POSITIVE)).expect("valid std");
    let mut theta: Vec<f64> = modes.iter().map(|m| m.phase).collect();
    let mut data = Vec::with_capacity(cfg.n_states * dim);
    let mut times = Vec::with_capacity(cfg.n_states);
    for i in 0..cfg.n_states {
        if i > 0 {
            for _ in 0..cfg.stride_hours {
                for (th, m) in theta.iter_mut().zip(&modes) {
                    *th += m.omega;
                    if cfg.phase_diffusion > 0.0 {
                        *th += step.sample(&mut rng);
                    }
                    *th = th.rem_euclid(2.0 * PI);
                }
            }
        }
        times.push(i as i64 * cfg.stride_hours);
        for f in 0..cfg.n_fields {
            let shift = f as f64 * PI / 2.0;
            for gp in 0..g {
                let x = 2.0 * PI * gp as f64 / g as f64;
                let mut v: f64 = modes
                    .iter()
                    .zip(&theta)
                    .map(|(m, th)| m.amplitude * (m.wavenumber as f64 * x - th + shift).cos())
                    .sum();
                if cfg.noise > 0.0 {
                    v += noise.sample(&mut rng);
                }
                data.push(v);
            }
        }
    }
    let metadata = CatalogMetadata {
        name: format!("surrogate-m{}", cfg.n_modes),
        units: "arbitrary".into(),
        extra: serde_json::json!({
            "n_modes": cfg.n_modes,
            "grid_points": g,
            "n_fields": cfg.n_fields,
            "noise": cfg.noise,
            "phase_diffusion": cfg.phase_diffusion,
            "time_unit": "hour",
        }),
    };
    Catalog::new(data, dim, Some(times), metadata)
}
