//! Sample a stiff 1-d Gaussian and compare the ensemble variance decay
//! with the covariance recursion it should follow in expectation.
//!
//! Target: N(0, 1/100). The gradient-adjusted sampler uses a = 1 and
//! gamma = 120; the ensemble x-variance is printed next to the exact
//! covariance recursion and the discrete fixed point Y*_11.

use gaul::dynamics::{DynamicsParams, Method};
use gaul::gaussian_theory::{
    discrete_map, fixed_point_covariance, iterate_covariance, BlockCovariance,
};
use gaul::potentials::QuadraticTarget;
use gaul::sampler::{simulate, SimConfig};

fn main() -> gaul::Result<()> {
    let s = 100.0;
    let target = QuadraticTarget::new(vec![s])?;
    let (a, gamma, h) = (1.0, 120.0, 1e-4);
    let params = DynamicsParams::new(a, gamma, 1, h, Method::Gaul)?;

    let config = SimConfig {
        target: &target,
        params,
        m: 100_000,
        steps: 400,
        seed: 12345,
        record_every: 50,
        init_cov: 1.0,
    };
    let record = simulate(&config)?;

    let map = discrete_map(a, gamma, h, &[s])?;
    let fp = fixed_point_covariance(a, gamma, h, &[s])?;
    println!("discrete fixed point Y*_11 = {:.8} (unbiased value 1/s = {:.8})", fp.y11[0], 1.0 / s);
    println!();
    println!("{:>6} {:>14} {:>14} {:>12}", "step", "ensemble var", "recursion", "gap");
    for cp in &record.checkpoints {
        let theory =
            iterate_covariance(&BlockCovariance::identity(1), &map, cp.step as usize)?;
        println!(
            "{:>6} {:>14.8} {:>14.8} {:>12.3e}",
            cp.step,
            cp.x_var[0],
            theory.sig11[0],
            (cp.x_var[0] - theory.sig11[0]).abs()
        );
    }
    Ok(())
}
