//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by targets, dynamics, theory and harness operations.
#[derive(Debug, Error)]
pub enum GaulError {
    /// Invalid argument (dimension mismatch, out-of-range parameter, unknown rule).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Gradient singularity (e.g. bimodal potential at the origin).
    #[error("gradient singularity: {0}")]
    Singularity(String),

    /// Degenerate prior / singular sample covariance in logistic target setup.
    #[error("degenerate prior: {0}")]
    DegeneratePrior(String),

    /// Symmetrized diffusion matrix is indefinite for some coordinate.
    #[error("diffusion indefinite at coordinate {coord}: 4*a*c*gamma = {lhs} < (1-c)^2 = {rhs}")]
    DiffusionIndefinite { coord: usize, lhs: f64, rhs: f64 },

    /// Spectrum does not admit the requested construction (e.g. s1 <= sd).
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    /// Eigenvector formula hits a vanishing denominator.
    #[error("degenerate eigenvector: {0}")]
    DegenerateEigenvector(String),

    /// The discrete map is not a contraction; no fixed point is returned.
    #[error("no fixed point: {0}")]
    NoFixedPoint(String),

    /// Ensemble or covariance iteration produced non-finite or huge values.
    #[error("divergence at step {step}: {detail}")]
    Divergence { step: usize, detail: String },

    /// Covariance ODE integration left the PSD cone beyond tolerance.
    #[error("integration instability: {0}")]
    Instability(String),

    /// Matrix is not symmetric positive definite where required.
    #[error("domain error: {0}")]
    Domain(String),

    /// Histogram has no in-box samples.
    #[error("empty histogram: all {0} samples fall outside the box")]
    EmptyHistogram(usize),

    /// Unknown experiment name.
    #[error("unknown experiment '{0}'")]
    Catalog(String),

    /// Config or CSV parse failure.
    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    /// Filesystem failure while writing artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GaulError>;
