//! Sample a 2-d Gaussian-mixture target and track histogram KL.
//!
//! Non-Gaussian targets have no closed-form KL, so the harness bins the
//! ensemble on a fixed box and compares against the unnormalized density
//! e^{-f} at the bin centers. This example runs a scaled-down version of
//! the log-concave mixture benchmark with the gradient-adjusted method.

use gaul::dynamics::{DynamicsParams, Method};
use gaul::metrics::histogram_kl;
use gaul::potentials::{eval_potential, MixtureTarget};
use gaul::sampler::{init_ensemble, simulate_from, x_marginals, SimConfig};

fn main() -> gaul::Result<()> {
    let target = MixtureTarget::new(vec![0.5, 0.5])?;
    // a = 2 / (sqrt(L) - sqrt(m)) with the mixture's strong-convexity
    // bounds m = 1/2 and L = 1, gamma = sqrt(2) + a m.
    let a = 2.0 / (1.0 - 0.5f64.sqrt());
    let gamma = 2.0f64.sqrt() + 0.5 * a;
    let h = 2e-4;
    let params = DynamicsParams::new(a, gamma, 2, h, Method::Gaul)?;

    let bounds = [(-6.0, 6.0), (-6.0, 6.0)];
    let density = |x: &[f64]| (-eval_potential(&target, x).unwrap()).exp();

    let m = 50_000;
    let mut ensemble = init_ensemble(m, 2, 1.0, 12345)?;
    println!("{:>6} {:>12} {:>8}", "step", "hist KL", "dropped");
    for block in 0..=10 {
        let xs = x_marginals(&ensemble);
        let (kl, dropped) = histogram_kl(&xs, 2, density, &bounds, 50)?;
        println!("{:>6} {:>12.6} {:>8}", ensemble.step, kl, dropped);
        if block == 10 {
            break;
        }
        let config = SimConfig {
            target: &target,
            params: params.clone(),
            m,
            steps: 200,
            seed: ensemble.seed,
            record_every: 200,
            init_cov: 1.0,
        };
        ensemble = simulate_from(ensemble, &config)?.ensemble;
    }
    println!();
    println!("target has {} mixture components around +/-{:?}", 2, target.center());
    Ok(())
}
