//! Sample a Bayesian logistic-regression posterior.
//!
//! Synthetic data: n = 50 points in d = 2 drawn around the true
//! parameter (1, 1); the posterior is the ridge-regularized logistic
//! likelihood with alpha = 1/2. The strong-convexity bounds m and L of
//! the potential give the damping and step-size choices.

use gaul::dynamics::{DynamicsParams, Method};
use gaul::potentials::{make_logistic_target, synthesize_logistic_data};
use gaul::sampler::{simulate, SimConfig};

fn main() -> gaul::Result<()> {
    let theta_star = [1.0, 1.0];
    let (features, labels) = synthesize_logistic_data(50, 2, &theta_star, 7);
    let target = make_logistic_target(features, labels, 0.5)?;
    let (m_bound, l_bound) = (target.bound_m(), target.bound_l());
    println!("convexity bounds: m = {m_bound:.4}, L = {l_bound:.4}");

    let a = 1.0;
    let gamma = 2.0 * m_bound.sqrt() + a * m_bound;
    let params = DynamicsParams::new(a, gamma, 2, 1e-3, Method::Gaul)?;
    let config = SimConfig {
        target: &target,
        params,
        m: 100_000,
        steps: 400,
        seed: 12345,
        record_every: 100,
        init_cov: 1.0 / l_bound,
    };
    let record = simulate(&config)?;

    println!();
    println!("{:>6} {:>12} {:>12} {:>12}", "step", "var x1", "var x2", "cov x1x2");
    for cp in &record.checkpoints {
        println!(
            "{:>6} {:>12.6} {:>12.6} {:>12.6}",
            cp.step,
            cp.x_var[0],
            cp.x_var[1],
            cp.x_cov[(0, 1)]
        );
    }

    // Posterior mean from the terminal ensemble.
    let e = &record.ensemble;
    let mut mean = [0.0; 2];
    for i in 0..e.m {
        mean[0] += e.particles[i * 4];
        mean[1] += e.particles[i * 4 + 1];
    }
    println!();
    println!(
        "posterior mean ~ ({:.4}, {:.4}), truth used to generate the data: ({}, {})",
        mean[0] / e.m as f64,
        mean[1] / e.m as f64,
        theta_star[0],
        theta_star[1]
    );
    Ok(())
}
