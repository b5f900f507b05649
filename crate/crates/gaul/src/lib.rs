//! Gradient-adjusted underdamped Langevin dynamics.
//!
//! A sampler family interpolating between overdamped and underdamped
//! Langevin dynamics through a skew-symmetric perturbation of the drift,
//! together with the exact covariance theory on Gaussian targets and a
//! small experiment harness.
//!
//! Start with the `examples/` directory for runnable tours of each
//! capability, or with [`sampler::simulate`] and [`harness::run_experiment`]
//! for programmatic use.

pub mod dynamics;
pub mod error;
pub mod gaussian_theory;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod potentials;
pub mod rng;
pub mod sampler;

pub use error::{GaulError, Result};
