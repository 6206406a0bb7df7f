//! Lorenz-1963 system and its classical fourth-order Runge–Kutta integration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, CatalogMetadata};
use crate::{Error, Result};

/// Any coordinate beyond this magnitude is treated as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L63State {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl L63State {
    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        L63State { x1, x2, x3 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }

    fn axpy(self, h: f64, d: L63State) -> L63State {
        L63State::new(self.x1 + h * d.x1, self.x2 + h * d.x2, self.x3 + h * d.x3)
    }
}

impl Default for L63State {
    fn default() -> Self {
        L63State::new(1.0, 1.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct L63Params {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for L63Params {
    fn default() -> Self {
        L63Params {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

impl L63Params {
    pub fn validate(&self) -> Result<()> {
        if self.sigma > 0.0 && self.rho > 0.0 && self.beta > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("L63 parameters must be positive: {self:?}")))
        }
    }

    /// The two non-trivial equilibria `C±`, defined for `rho > 1`.
    pub fn nontrivial_equilibria(&self) -> Option<[L63State; 2]> {
        if self.rho <= 1.0 {
            return None;
        }
        let a = (self.beta * (self.rho - 1.0)).sqrt();
        let z = self.rho - 1.0;
        Some([L63State::new(a, a, z), L63State::new(-a, -a, z)])
    }
}

/// Right-hand side of the Lorenz-1963 equations.
pub fn l63_derivative(s: L63State, p: &L63Params) -> L63State {
    L63State::new(
        p.sigma * (s.x2 - s.x1),
        s.x1 * (p.rho - s.x3) - s.x2,
        s.x1 * s.x2 - p.beta * s.x3,
    )
}

pub fn rk4_step(s: L63State, p: &L63Params, dt: f64) -> L63State {
    let k1 = l63_derivative(s, p);
    let k2 = l63_derivative(s.axpy(0.5 * dt, k1), p);
    let k3 = l63_derivative(s.axpy(0.5 * dt, k2), p);
    let k4 = l63_derivative(s.axpy(dt, k3), p);
    L63State::new(
        s.x1 + dt / 6.0 * (k1.x1 + 2.0 * k2.x1 + 2.0 * k3.x1 + k4.x1),
        s.x2 + dt / 6.0 * (k1.x2 + 2.0 * k2.x2 + 2.0 * k3.x2 + k4.x2),
        s.x3 + dt / 6.0 * (k1.x3 + 2.0 * k2.x3 + 2.0 * k3.x3 + k4.x3),
    )
}

/// Trajectory generation settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub initial: L63State,
    pub params: L63Params,
    pub dt: f64,
    /// Number of retained states.
    pub n_states: usize,
    /// Integration steps discarded before the first retained state.
    pub burn_in: usize,
    /// Integration steps between retained states.
    pub stride: usize,
    /// Half-width of the uniform perturbation applied to `initial`; zero disables it.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            initial: L63State::default(),
            params: L63Params::default(),
            dt: 0.01,
            n_states: 10_000,
            burn_in: 10_000,
            stride: 1,
            jitter: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<L63State>,
    pub dt: f64,
    pub stride: usize,
    /// Integration step index of each retained state, counted after burn-in.
    pub steps: Vec<i64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Convert to a catalog whose timestamps are integration step indices.
    pub fn into_catalog(self, name: &str) -> Catalog {
        let data: Vec<f64> = self.states.iter().flat_map(|s| s.to_array()).collect();
        let metadata = CatalogMetadata {
            name: name.to_string(),
            units: "step".to_string(),
            extra: serde_json::json!({ "dt": self.dt, "stride": self.stride }),
        };
        Catalog::new(data, 3, Some(self.steps), metadata).expect("trajectory catalogs are well formed")
    }
}

fn check(s: L63State, step: usize) -> Result<()> {
    let bounded = |v: f64| v.is_finite() && v.abs() <= DIVERGENCE_BOUND;
    if bounded(s.x1) && bounded(s.x2) && bounded(s.x3) {
        Ok(())
    } else {
        Err(Error::NonFinite {
            step,
            state: s.to_array(),
        })
    }
}

pub fn generate_trajectory(cfg: &TrajectoryConfig) -> Result<Trajectory> {
    cfg.params.validate()?;
    if !(cfg.dt > 0.0) {
        return Err(Error::invalid("dt must be positive"));
    }
    if cfg.n_states == 0 {
        return Err(Error::invalid("n_states must be positive"));
    }
    if cfg.stride == 0 {
        return Err(Error::invalid("stride must be at least 1"));
    }
    if !cfg.initial.is_finite() {
        return Err(Error::invalid("initial state must be finite"));
    }
    let mut s = cfg.initial;
    if cfg.jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let j = cfg.jitter;
        s.x1 += rng.random_range(-j..=j);
        s.x2 += rng.random_range(-j..=j);
        s.x3 += rng.random_range(-j..=j);
    }
    let mut step = 0usize;
    for _ in 0..cfg.burn_in {
        s = rk4_step(s, &cfg.params, cfg.dt);
        step += 1;
        check(s, step)?;
    }
    let mut states = Vec::with_capacity(cfg.n_states);
    let mut steps = Vec::with_capacity(cfg.n_states);
    for i in 0..cfg.n_states {
        if i > 0 {
            for _ in 0..cfg.stride {
                s = rk4_step(s, &cfg.params, cfg.dt);
                step += 1;
                check(s, step)?;
            }
        }
        states.push(s);
        steps.push((i * cfg.stride) as i64);
    }
    Ok(Trajectory {
        states,
        dt: cfg.dt,
        stride: cfg.stride,
        steps,
    })
}
