//! Counter-based random streams.
//!
//! Every draw is a pure function of (seed, context, particle, step, draw
//! index), so ensembles can be partitioned across threads in any way
//! without changing the realized noise. Contexts keep independent uses of
//! the same seed (initialization, dynamics noise, data synthesis) from
//! colliding.

use statrs::function::erf::erf_inv;

/// Stream context for ensemble initialization draws.
pub const CTX_INIT: u64 = 0;
/// Stream context for per-step dynamics noise.
pub const CTX_DYNAMICS: u64 = 1;
/// Stream context for synthetic data generation (logistic regression).
pub const CTX_DATA: u64 = 2;

const GOLDEN: u64 = 0x9e3779b97f4a7c15;

#[inline]
fn mix64(mut x: u64) -> u64 {
    // splitmix64 finalizer.
    x ^= x >> 30;
    x = x.wrapping_mul(0xbf58476d1ce4e5b9);
    x ^= x >> 27;
    x = x.wrapping_mul(0x94d049bb133111eb);
    x ^= x >> 31;
    x
}

/// 64 uniform bits keyed by the full counter tuple.
#[inline]
pub fn bits(seed: u64, ctx: u64, particle: u64, step: u64, draw: u64) -> u64 {
    let mut h = mix64(seed.wrapping_add(GOLDEN));
    for w in [ctx, particle, step, draw] {
        h = mix64(h ^ w.wrapping_add(GOLDEN));
    }
    h
}

/// Uniform draw in the open interval (0, 1).
#[inline]
pub fn uniform(seed: u64, ctx: u64, particle: u64, step: u64, draw: u64) -> f64 {
    // 53 significant bits, centered in the bin so 0 and 1 are unreachable.
    ((bits(seed, ctx, particle, step, draw) >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}

/// Standard normal draw via the inverse CDF.
#[inline]
pub fn standard_normal(seed: u64, ctx: u64, particle: u64, step: u64, draw: u64) -> f64 {
    let u = uniform(seed, ctx, particle, step, draw);
    std::f64::consts::SQRT_2 * erf_inv(2.0 * u - 1.0)
}
