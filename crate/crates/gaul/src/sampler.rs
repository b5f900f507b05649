//! Ensemble simulation of the discretized dynamics.
//!
//! All randomness is counter-based (see [`crate::rng`]): the noise of
//! particle `i` at step `k` is a pure function of `(seed, i, k)`, so the
//! particle loop can be partitioned across any number of worker threads
//! without changing the realized trajectory. Statistics are reduced in
//! fixed particle order, making whole runs bit-identical across thread
//! counts.

use crate::dynamics::{diffusion_factor, DiffusionFactor, DynamicsParams, Method};
use crate::error::{GaulError, Result};
use crate::linalg::Mat;
use crate::metrics::empirical_covariance;
use crate::potentials::Potential;
use crate::rng;
use rayon::prelude::*;

/// Particles per parallel work unit. Fixed (not derived from the thread
/// count) so that chunk boundaries never depend on the pool size.
const CHUNK: usize = 256;

/// Divergence guard: any state entry beyond this magnitude aborts the run.
const DIVERGENCE_LIMIT: f64 = 1e12;

/// A particle ensemble in phase space, stored particle-major as
/// (x_1..x_d, p_1..p_d) per particle.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub particles: Vec<f64>,
    pub step: u64,
    pub seed: u64,
    pub d: usize,
    pub m: usize,
}

/// Draw `m` particles with independent N(0, x_scale_j^2) positions and
/// N(0, p_scale_j^2) momenta, deterministically in `seed`.
pub fn init_ensemble_with_scales(
    m: usize,
    d: usize,
    x_scales: &[f64],
    p_scales: &[f64],
    seed: u64,
) -> Result<Ensemble> {
    if m == 0 || d == 0 {
        return Err(GaulError::Argument("need m >= 1 and d >= 1".into()));
    }
    if x_scales.len() != d || p_scales.len() != d {
        return Err(GaulError::Argument("scale length mismatch".into()));
    }
    let mut particles = vec![0.0; m * 2 * d];
    for i in 0..m {
        let base = i * 2 * d;
        for j in 0..d {
            particles[base + j] =
                x_scales[j] * rng::standard_normal(seed, rng::CTX_INIT, i as u64, 0, j as u64);
            particles[base + d + j] = p_scales[j]
                * rng::standard_normal(seed, rng::CTX_INIT, i as u64, 0, (d + j) as u64);
        }
    }
    Ok(Ensemble { particles, step: 0, seed, d, m })
}

/// Draw `m` particles i.i.d. N(0, init_cov * I) in phase space.
pub fn init_ensemble(m: usize, d: usize, init_cov: f64, seed: u64) -> Result<Ensemble> {
    if !(init_cov > 0.0) {
        return Err(GaulError::Argument("init_cov must be positive".into()));
    }
    let s = init_cov.sqrt();
    init_ensemble_with_scales(m, d, &vec![s; d], &vec![s; d], seed)
}

/// One Euler-Maruyama step with the noise amplitude multiplied by
/// `noise_scale` (1 for the scheme itself, 0 for drift-only diagnostics).
pub fn em_step_with_noise(
    ensemble: &mut Ensemble,
    params: &DynamicsParams,
    target: &dyn Potential,
    noise_scale: f64,
) -> Result<()> {
    let d = ensemble.d;
    if params.dim() != d || target.dim() != d {
        return Err(GaulError::Argument("dimension mismatch".into()));
    }
    let factor = match params.method {
        Method::Overdamped => None,
        _ => Some(diffusion_factor(params)?),
    };
    let step = ensemble.step;
    let seed = ensemble.seed;
    let h = params.h;
    let sh = h.sqrt();
    let diverged: Vec<usize> = ensemble
        .particles
        .par_chunks_mut(CHUNK * 2 * d)
        .enumerate()
        .flat_map_iter(|(chunk_idx, chunk)| {
            let mut grad = vec![0.0; d];
            let mut bad = Vec::new();
            for (k, state) in chunk.chunks_exact_mut(2 * d).enumerate() {
                let particle = (chunk_idx * CHUNK + k) as u64;
                let (x, p) = state.split_at_mut(d);
                // Gradient once per step, at the pre-update position.
                if target.gradient(x, &mut grad).is_err() {
                    bad.push(particle as usize);
                    continue;
                }
                match params.method {
                    Method::Overdamped => {
                        for j in 0..d {
                            let z = rng::standard_normal(
                                seed,
                                rng::CTX_DYNAMICS,
                                particle,
                                step,
                                (2 * j) as u64,
                            );
                            x[j] += -grad[j] * h
                                + noise_scale * std::f64::consts::SQRT_2 * sh * z;
                        }
                    }
                    _ => {
                        let factors: &DiffusionFactor = factor.as_ref().unwrap();
                        for j in 0..d {
                            let c = params.precond[j];
                            let z1 = rng::standard_normal(
                                seed,
                                rng::CTX_DYNAMICS,
                                particle,
                                step,
                                (2 * j) as u64,
                            );
                            let z2 = rng::standard_normal(
                                seed,
                                rng::CTX_DYNAMICS,
                                particle,
                                step,
                                (2 * j + 1) as u64,
                            );
                            let [f11, f12, f21, f22] = factors.factors[j];
                            let xj = x[j];
                            let pj = p[j];
                            x[j] = xj + h * (-params.a * c * grad[j] + c * pj)
                                + noise_scale * sh * (f11 * z1 + f12 * z2);
                            p[j] = pj + h * (-grad[j] - params.gamma * pj)
                                + noise_scale * sh * (f21 * z1 + f22 * z2);
                        }
                    }
                }
                if state
                    .iter()
                    .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
                {
                    bad.push(particle as usize);
                }
            }
            bad.into_iter()
        })
        .collect();
    ensemble.step += 1;
    if let Some(&particle) = diverged.first() {
        return Err(GaulError::Divergence {
            step: step as usize,
            detail: format!("particle {particle} left the finite range"),
        });
    }
    Ok(())
}

/// One Euler-Maruyama step of the configured dynamics.
pub fn em_step(
    ensemble: &mut Ensemble,
    params: &DynamicsParams,
    target: &dyn Potential,
) -> Result<()> {
    em_step_with_noise(ensemble, params, target, 1.0)
}

/// Simulation request: target, dynamics, ensemble size, horizon, recording
/// stride, and the variance of the isotropic Gaussian initialization.
pub struct SimConfig<'a> {
    pub target: &'a dyn Potential,
    pub params: DynamicsParams,
    pub m: usize,
    pub steps: usize,
    pub seed: u64,
    pub record_every: usize,
    pub init_cov: f64,
}

/// Ensemble statistics at one recorded step.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub step: u64,
    pub time: f64,
    /// Per-coordinate unbiased x variances.
    pub x_var: Vec<f64>,
    /// Per-coordinate unbiased p variances.
    pub p_var: Vec<f64>,
    /// Per-coordinate x-p covariances.
    pub xp_cov: Vec<f64>,
    /// Full d x d covariance of the x marginal.
    pub x_cov: Mat,
}

/// Output of [`simulate`]: the recorded statistics and the terminal ensemble.
#[derive(Debug)]
pub struct TrajectoryRecord {
    pub checkpoints: Vec<Checkpoint>,
    pub ensemble: Ensemble,
}

/// Statistics of the current ensemble state (unbiased, mean-subtracted).
pub fn ensemble_stats(ensemble: &Ensemble, h: f64) -> Result<Checkpoint> {
    let (d, m) = (ensemble.d, ensemble.m);
    if m < 2 {
        return Err(GaulError::Argument("need at least two particles".into()));
    }
    let mut mean = vec![0.0; 2 * d];
    for state in ensemble.particles.chunks_exact(2 * d) {
        for (acc, &v) in mean.iter_mut().zip(state) {
            *acc += v;
        }
    }
    for acc in &mut mean {
        *acc /= m as f64;
    }
    let mut x_var = vec![0.0; d];
    let mut p_var = vec![0.0; d];
    let mut xp_cov = vec![0.0; d];
    for state in ensemble.particles.chunks_exact(2 * d) {
        for j in 0..d {
            let dx = state[j] - mean[j];
            let dp = state[d + j] - mean[d + j];
            x_var[j] += dx * dx;
            p_var[j] += dp * dp;
            xp_cov[j] += dx * dp;
        }
    }
    let norm = 1.0 / (m as f64 - 1.0);
    for j in 0..d {
        x_var[j] *= norm;
        p_var[j] *= norm;
        xp_cov[j] *= norm;
    }
    let mut x_data = vec![0.0; m * d];
    for (i, state) in ensemble.particles.chunks_exact(2 * d).enumerate() {
        x_data[i * d..(i + 1) * d].copy_from_slice(&state[..d]);
    }
    let x_cov = empirical_covariance(&x_data, d)?;
    Ok(Checkpoint {
        step: ensemble.step,
        time: ensemble.step as f64 * h,
        x_var,
        p_var,
        xp_cov,
        x_cov,
    })
}

/// Copy of the x coordinates, one row per particle (for histograms and
/// terminal-sample CSVs).
pub fn x_marginals(ensemble: &Ensemble) -> Vec<f64> {
    let d = ensemble.d;
    let mut out = vec![0.0; ensemble.m * d];
    for (i, state) in ensemble.particles.chunks_exact(2 * d).enumerate() {
        out[i * d..(i + 1) * d].copy_from_slice(&state[..d]);
    }
    out
}

/// Run the configured simulation, recording statistics every
/// `record_every` steps (step 0 and the final step always included).
///
/// Deterministic in the seed and independent of the rayon pool size.
pub fn simulate(config: &SimConfig) -> Result<TrajectoryRecord> {
    let ensemble = init_ensemble(config.m, config.target.dim(), config.init_cov, config.seed)?;
    simulate_from(ensemble, config)
}

/// As [`simulate`] but starting from a caller-prepared ensemble (used for
/// stationarity checks and non-isotropic initializations).
pub fn simulate_from(mut ensemble: Ensemble, config: &SimConfig) -> Result<TrajectoryRecord> {
    if config.record_every == 0 {
        return Err(GaulError::Argument("record_every must be >= 1".into()));
    }
    let h = config.params.h;
    let mut checkpoints = vec![ensemble_stats(&ensemble, h)?];
    for k in 1..=config.steps {
        if let Err(e) = em_step(&mut ensemble, &config.params, config.target) {
            // Surface the last finite snapshot alongside the failure.
            return Err(match e {
                GaulError::Divergence { step, detail } => GaulError::Divergence {
                    step,
                    detail: format!(
                        "{detail}; last recorded step {}",
                        checkpoints.last().map(|c| c.step).unwrap_or(0)
                    ),
                },
                other => other,
            });
        }
        if k % config.record_every == 0 || k == config.steps {
            checkpoints.push(ensemble_stats(&ensemble, h)?);
        }
    }
    Ok(TrajectoryRecord { checkpoints, ensemble })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian_theory::{discrete_map, iterate_covariance, BlockCovariance};
    use crate::potentials::QuadraticTarget;

    fn gaul_params(a: f64, gamma: f64, h: f64, d: usize) -> DynamicsParams {
        DynamicsParams::new(a, gamma, d, h, Method::Gaul).unwrap()
    }

    #[test]
    fn init_variance_and_determinism() {
        let e1 = init_ensemble(100_000, 1, 1.0, 11).unwrap();
        let stats = ensemble_stats(&e1, 0.1).unwrap();
        assert!((stats.x_var[0] - 1.0).abs() < 0.02, "{}", stats.x_var[0]);
        assert!((stats.p_var[0] - 1.0).abs() < 0.02);
        let e2 = init_ensemble(100_000, 1, 1.0, 11).unwrap();
        assert_eq!(e1.particles, e2.particles);
        let e3 = init_ensemble(1000, 1, 0.25, 12).unwrap();
        let stats = ensemble_stats(&e3, 0.1).unwrap();
        assert!((stats.x_var[0] - 0.25).abs() < 0.06);
    }

    #[test]
    fn drift_only_arithmetic() {
        // s=1 quadratic, x=1, p=0, a=1, gamma=3, h=0.1 -> (0.9, -0.1).
        let target = QuadraticTarget::new(vec![1.0]).unwrap();
        let mut e = init_ensemble(1, 1, 1.0, 0).unwrap();
        e.particles = vec![1.0, 0.0];
        em_step_with_noise(&mut e, &gaul_params(1.0, 3.0, 0.1, 1), &target, 0.0).unwrap();
        assert!((e.particles[0] - 0.9).abs() < 1e-15);
        assert!((e.particles[1] + 0.1).abs() < 1e-15);
        // a=0, x=0, p=1, h=0.1 -> (0.1, 1 - 0.1 gamma).
        let gamma = 2.0;
        let mut e = init_ensemble(1, 1, 1.0, 0).unwrap();
        e.particles = vec![0.0, 1.0];
        let params = DynamicsParams::new(0.0, gamma, 1, 0.1, Method::Underdamped).unwrap();
        em_step_with_noise(&mut e, &params, &target, 0.0).unwrap();
        assert!((e.particles[0] - 0.1).abs() < 1e-15);
        assert!((e.particles[1] - (1.0 - 0.1 * gamma)).abs() < 1e-15);
    }

    #[test]
    fn overdamped_leaves_momentum_untouched() {
        // Flat-gradient region approximated by s -> 0 is awkward; instead
        // verify p is untouched and x moves by drift plus sqrt(2h) z.
        let target = QuadraticTarget::new(vec![1.0]).unwrap();
        let params = DynamicsParams::new(0.0, 0.5, 1, 0.01, Method::Overdamped).unwrap();
        let mut e = init_ensemble(3, 1, 1.0, 7).unwrap();
        let before = e.particles.clone();
        em_step(&mut e, &params, &target).unwrap();
        for i in 0..3 {
            assert_eq!(e.particles[2 * i + 1], before[2 * i + 1]);
            let z = rng::standard_normal(7, rng::CTX_DYNAMICS, i as u64, 0, 0);
            let want = before[2 * i] - before[2 * i] * 0.01
                + std::f64::consts::SQRT_2 * 0.1 * z;
            assert!((e.particles[2 * i] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_steps_records_initial_stats() {
        let target = QuadraticTarget::new(vec![1.0]).unwrap();
        let config = SimConfig {
            target: &target,
            params: gaul_params(1.0, 3.0, 0.01, 1),
            m: 500,
            steps: 0,
            seed: 5,
            record_every: 10,
            init_cov: 1.0,
        };
        let rec = simulate(&config).unwrap();
        assert_eq!(rec.checkpoints.len(), 1);
        let init = init_ensemble(500, 1, 1.0, 5).unwrap();
        let stats = ensemble_stats(&init, 0.01).unwrap();
        assert_eq!(rec.checkpoints[0].x_var, stats.x_var);
    }

    #[test]
    fn determinism_across_runs_and_thread_counts() {
        let target = QuadraticTarget::new(vec![2.0]).unwrap();
        let run = |threads: usize| -> Vec<f64> {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                let config = SimConfig {
                    target: &target,
                    params: gaul_params(1.0, 3.0, 0.01, 1),
                    m: 700,
                    steps: 50,
                    seed: 42,
                    record_every: 10,
                    init_cov: 1.0,
                };
                simulate(&config).unwrap().ensemble.particles
            })
        };
        let one = run(1);
        assert_eq!(one, run(2));
        assert_eq!(one, run(4));
    }

    #[test]
    fn stationarity_of_exact_gaussian_start() {
        // Initialize exactly at the product target (x ~ N(0, 1/s), p ~ N(0,1))
        // and verify 100 small steps keep the variances within 5 SEs.
        let s = 4.0;
        let m = 50_000;
        let target = QuadraticTarget::new(vec![s]).unwrap();
        let e = init_ensemble_with_scales(m, 1, &[1.0 / s.sqrt()], &[1.0], 21).unwrap();
        let params = gaul_params(1.0, 8.0, 1e-4, 1);
        let config = SimConfig {
            target: &target,
            params,
            m,
            steps: 100,
            seed: 21,
            record_every: 100,
            init_cov: 1.0,
        };
        let rec = simulate_from(e, &config).unwrap();
        let last = rec.checkpoints.last().unwrap();
        let se_x = (1.0 / s) * (2.0 / m as f64).sqrt();
        let se_p = (2.0 / m as f64).sqrt();
        assert!((last.x_var[0] - 1.0 / s).abs() < 5.0 * se_x, "{}", last.x_var[0]);
        assert!((last.p_var[0] - 1.0).abs() < 5.0 * se_p, "{}", last.p_var[0]);
    }

    #[test]
    fn matches_discrete_covariance_recursion() {
        // Empirical block covariance vs the exact per-mode recursion at
        // checkpoints 10, 100, N.
        let s = 2.0;
        let m = 100_000;
        let (a, gamma, h) = (1.0, 4.0, 0.02);
        let target = QuadraticTarget::new(vec![s]).unwrap();
        let config = SimConfig {
            target: &target,
            params: gaul_params(a, gamma, h, 1),
            m,
            steps: 200,
            seed: 33,
            record_every: 10,
            init_cov: 1.0,
        };
        let rec = simulate(&config).unwrap();
        let map = discrete_map(a, gamma, h, &[s]).unwrap();
        for &step in &[10u64, 100, 200] {
            let cp = rec
                .checkpoints
                .iter()
                .find(|c| c.step == step)
                .expect("checkpoint missing");
            let y = iterate_covariance(&BlockCovariance::identity(1), &map, step as usize).unwrap();
            let se = |v: f64| v * (2.0 / m as f64).sqrt();
            assert!(
                (cp.x_var[0] - y.sig11[0]).abs() < 5.0 * se(y.sig11[0]),
                "step {step}: x var {} vs {}",
                cp.x_var[0],
                y.sig11[0]
            );
            assert!(
                (cp.p_var[0] - y.sig22[0]).abs() < 5.0 * se(y.sig22[0]),
                "step {step}: p var {} vs {}",
                cp.p_var[0],
                y.sig22[0]
            );
            let se_cross = ((y.sig11[0] * y.sig22[0] + y.sig12[0] * y.sig12[0]) / m as f64).sqrt();
            assert!(
                (cp.xp_cov[0] - y.sig12[0]).abs() < 5.0 * se_cross,
                "step {step}: cross {} vs {}",
                cp.xp_cov[0],
                y.sig12[0]
            );
        }
    }

    #[test]
    fn noise_free_energy_decay() {
        let s = 3.0;
        let target = QuadraticTarget::new(vec![s]).unwrap();
        let (a, gamma) = (1.0, 4.0);
        let h = 0.5 / (a * s + gamma);
        let params = gaul_params(a, gamma, h, 1);
        let mut e = init_ensemble(50, 1, 1.0, 9).unwrap();
        let energy = |e: &Ensemble| -> f64 {
            e.particles
                .chunks_exact(2)
                .map(|st| 0.5 * s * st[0] * st[0] + 0.5 * st[1] * st[1])
                .sum()
        };
        let mut prev = energy(&e);
        for _ in 0..200 {
            em_step_with_noise(&mut e, &params, &target, 0.0).unwrap();
            let now = energy(&e);
            assert!(now <= prev + 1e-12, "energy rose: {now} > {prev}");
            prev = now;
        }
        assert!(prev < 1e-3 * energy(&init_ensemble(50, 1, 1.0, 9).unwrap()));
    }

    #[test]
    fn divergence_detected_with_step_index() {
        let target = QuadraticTarget::new(vec![100.0]).unwrap();
        // h far beyond stability.
        let config = SimConfig {
            target: &target,
            params: gaul_params(1.0, 3.0, 1.0, 1),
            m: 100,
            steps: 200,
            seed: 3,
            record_every: 50,
            init_cov: 1.0,
        };
        match simulate(&config) {
            Err(GaulError::Divergence { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
