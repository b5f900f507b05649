//! Emit the spectral/fixed-point theory table for the 20-d benchmark.
//!
//! This is the `theory` CLI subcommand as a library call: per mode it
//! reports the continuous eigenvalues, the discrete stationary covariance
//! entries, and the mixing-rate constants, as CSV.

use gaul::harness::{resolve_experiment, theory_csv, ExperimentConfig};

fn main() -> gaul::Result<()> {
    let cfg = ExperimentConfig::named("theory-report");
    let resolved = resolve_experiment(&cfg)?;
    print!("{}", theory_csv(&resolved)?);
    Ok(())
}
