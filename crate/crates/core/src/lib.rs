//! Analog-to-target distance distributions on dynamical-system attractors.
//!
//! The crate covers the whole chain used to study how far the `k`-th nearest
//! analog of a target state lies in a finite catalog:
//!
//! - [`lorenz`]: Lorenz-1963 trajectories used as ground-truth catalogs.
//! - [`catalog`]: state databases, random subsampling, temporal exclusion and
//!   the `.anacat` file format.
//! - [`neighbors`]: exact k-nearest-neighbor search (exhaustive scan and k-d tree).
//! - [`dimension`]: local dimension, prefactor and rescaling estimates.
//! - [`disttheory`]: closed-form densities, moments and samplers for `r_k`.
//! - [`density`]: kernel density estimates and goodness-of-fit statistics.
//! - [`dimred`]: EOF decomposition and the maximum-dimension criterion.
//! - [`clustering`]: Gaussian mixtures fitted by EM with BIC selection.
//! - [`surrogate`]: synthetic gridded fields with a known effective dimension.

pub mod catalog;
pub mod clustering;
pub mod density;
pub mod dimension;
pub mod dimred;
pub mod disttheory;
mod error;
pub mod lorenz;
pub mod neighbors;
pub mod quadrature;
pub mod special;
pub mod surrogate;

pub use error::{Error, Result};
