//! Target potentials f, their gradients, and smoothness metadata.

use crate::error::{GaulError, Result};
use crate::linalg::{sym_eigen, Mat};
use crate::rng;

/// A sampling target: energy f, gradient, and dimension.
///
/// Implementations are immutable after construction and safe to evaluate
/// from multiple threads.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;

    /// Energy f(x). Assumes `x.len() == self.dim()`.
    fn value(&self, x: &[f64]) -> f64;

    /// Gradient of f written into `g`. Assumes matching lengths.
    fn gradient(&self, x: &[f64], g: &mut [f64]) -> Result<()>;
}

/// Checked energy evaluation.
pub fn eval_potential(target: &dyn Potential, x: &[f64]) -> Result<f64> {
    if x.len() != target.dim() {
        return Err(GaulError::Argument(format!(
            "point has dimension {}, target expects {}",
            x.len(),
            target.dim()
        )));
    }
    Ok(target.value(x))
}

/// Checked gradient evaluation.
pub fn eval_gradient(target: &dyn Potential, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != target.dim() {
        return Err(GaulError::Argument(format!(
            "point has dimension {}, target expects {}",
            x.len(),
            target.dim()
        )));
    }
    let mut g = vec![0.0; x.len()];
    target.gradient(x, &mut g)?;
    Ok(g)
}

/// Quadratic potential f(x) = x' P Lambda P' x / 2 with precision spectrum
/// s_1 >= ... >= s_d > 0 and optional rotation P.
#[derive(Clone, Debug)]
pub struct QuadraticTarget {
    spectrum: Vec<f64>,
    rotation: Option<Mat>,
}

impl QuadraticTarget {
    pub fn new(spectrum: Vec<f64>) -> Result<Self> {
        Self::with_rotation(spectrum, None)
    }

    pub fn with_rotation(spectrum: Vec<f64>, rotation: Option<Mat>) -> Result<Self> {
        if spectrum.is_empty() {
            return Err(GaulError::Argument("empty spectrum".into()));
        }
        if spectrum.iter().any(|&s| !(s > 0.0)) {
            return Err(GaulError::Argument("spectrum entries must be positive".into()));
        }
        if spectrum.windows(2).any(|w| w[0] < w[1]) {
            return Err(GaulError::Argument(
                "spectrum must be sorted non-increasing".into(),
            ));
        }
        if let Some(p) = &rotation {
            let d = spectrum.len();
            if p.rows() != d || p.cols() != d {
                return Err(GaulError::Argument("rotation shape mismatch".into()));
            }
            let gram = p.transpose().matmul(p);
            let dev = gram.add_scaled(&Mat::identity(d), -1.0).max_abs();
            if dev > 1e-10 {
                return Err(GaulError::Argument(format!(
                    "rotation not orthogonal: |P'P - I| = {dev:.3e}"
                )));
            }
        }
        Ok(QuadraticTarget { spectrum, rotation })
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn rotation(&self) -> Option<&Mat> {
        self.rotation.as_ref()
    }

    /// Largest precision eigenvalue s_1.
    pub fn s1(&self) -> f64 {
        self.spectrum[0]
    }

    /// Smallest precision eigenvalue s_d.
    pub fn sd(&self) -> f64 {
        *self.spectrum.last().unwrap()
    }

    /// Condition number s_1 / s_d.
    pub fn kappa(&self) -> f64 {
        self.s1() / self.sd()
    }

    fn to_eigen_basis(&self, x: &[f64]) -> Vec<f64> {
        match &self.rotation {
            None => x.to_vec(),
            Some(p) => p.transpose().matvec(x),
        }
    }
}

impl Potential for QuadraticTarget {
    fn dim(&self) -> usize {
        self.spectrum.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let y = self.to_eigen_basis(x);
        0.5 * y
            .iter()
            .zip(&self.spectrum)
            .map(|(yi, si)| si * yi * yi)
            .sum::<f64>()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) -> Result<()> {
        let y = self.to_eigen_basis(x);
        let gy: Vec<f64> = y.iter().zip(&self.spectrum).map(|(yi, si)| si * yi).collect();
        match &self.rotation {
            None => g.copy_from_slice(&gy),
            Some(p) => g.copy_from_slice(&p.matvec(&gy)),
        }
        Ok(())
    }
}

/// Symmetric two-Gaussian mixture (N(alpha, I) + N(-alpha, I)) / 2.
///
/// f(x) = ||x - alpha||^2 / 2 - log(1 + exp(-2 x'alpha)).
#[derive(Clone, Debug)]
pub struct MixtureTarget {
    center: Vec<f64>,
}

impl MixtureTarget {
    pub fn new(center: Vec<f64>) -> Result<Self> {
        if center.is_empty() {
            return Err(GaulError::Argument("empty center".into()));
        }
        Ok(MixtureTarget { center })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Strong convexity constant; 1/2 for the paper's |alpha| <= 1/sqrt(2) setup.
    pub fn m(&self) -> f64 {
        0.5
    }

    /// Smoothness constant.
    pub fn l(&self) -> f64 {
        1.0
    }
}

/// log(1 + e^t) without overflow.
fn log1p_exp(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

impl Potential for MixtureTarget {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let diff_sq: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(xi, ai)| (xi - ai) * (xi - ai))
            .sum();
        let t: f64 = x.iter().zip(&self.center).map(|(xi, ai)| xi * ai).sum();
        0.5 * diff_sq - log1p_exp(-2.0 * t)
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) -> Result<()> {
        let t: f64 = x.iter().zip(&self.center).map(|(xi, ai)| xi * ai).sum();
        // 2 / (1 + e^{2t}) = 2 * sigmoid(-2t), overflow-safe.
        let w = 2.0 * logistic(-2.0 * t);
        for ((gi, xi), ai) in g.iter_mut().zip(x).zip(&self.center) {
            *gi = xi - ai + w * ai;
        }
        Ok(())
    }
}

/// 1 / (1 + e^{-t}) without overflow.
fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Quadratic-plus-cosine potential f(x) = x'B^{-1}x / 2 - cos(c'x).
#[derive(Clone, Debug)]
pub struct QuadCosTarget {
    precision: Mat,
    wave: Vec<f64>,
}

impl QuadCosTarget {
    /// `precision` is B^{-1}; must be symmetric positive definite.
    pub fn new(precision: Mat, wave: Vec<f64>) -> Result<Self> {
        let d = wave.len();
        if precision.rows() != d || precision.cols() != d {
            return Err(GaulError::Argument("precision shape mismatch".into()));
        }
        if !precision.is_symmetric(1e-12) {
            return Err(GaulError::Argument("precision not symmetric".into()));
        }
        let (vals, _) = sym_eigen(&precision);
        if vals.iter().any(|&v| v <= 0.0) {
            return Err(GaulError::Argument(format!(
                "precision not positive definite: eigenvalues {vals:?}"
            )));
        }
        Ok(QuadCosTarget { precision, wave })
    }

    pub fn precision(&self) -> &Mat {
        &self.precision
    }

    pub fn wave(&self) -> &[f64] {
        &self.wave
    }
}

impl Potential for QuadCosTarget {
    fn dim(&self) -> usize {
        self.wave.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let bx = self.precision.matvec(x);
        let quad: f64 = x.iter().zip(&bx).map(|(xi, bi)| xi * bi).sum();
        let phase: f64 = x.iter().zip(&self.wave).map(|(xi, ci)| xi * ci).sum();
        0.5 * quad - phase.cos()
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) -> Result<()> {
        let bx = self.precision.matvec(x);
        let phase: f64 = x.iter().zip(&self.wave).map(|(xi, ci)| xi * ci).sum();
        let s = phase.sin();
        for ((gi, bi), ci) in g.iter_mut().zip(&bx).zip(&self.wave) {
            *gi = bi + s * ci;
        }
        Ok(())
    }
}

/// Two-dimensional bimodal target with density
/// p(x) ~ exp(-2(||x||-3)^2) * (exp(-2(x1-3)^2) + exp(-2(x1+3)^2)).
#[derive(Clone, Debug, Default)]
pub struct BimodalTarget;

impl BimodalTarget {
    pub fn new() -> Self {
        BimodalTarget
    }

    /// Damping constant used by the experiments for this target.
    pub fn m(&self) -> f64 {
        0.5
    }
}

/// log(e^{u} + e^{v}) via the larger exponent.
fn log_sum_exp2(u: f64, v: f64) -> f64 {
    let m = u.max(v);
    m + ((u - m).exp() + (v - m).exp()).ln()
}

impl Potential for BimodalTarget {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let u = -2.0 * (x[0] - 3.0) * (x[0] - 3.0);
        let v = -2.0 * (x[0] + 3.0) * (x[0] + 3.0);
        2.0 * (r - 3.0) * (r - 3.0) - log_sum_exp2(u, v)
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) -> Result<()> {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r < 1e-12 {
            return Err(GaulError::Singularity(
                "bimodal gradient undefined at the origin".into(),
            ));
        }
        let u = -2.0 * (x[0] - 3.0) * (x[0] - 3.0);
        let v = -2.0 * (x[0] + 3.0) * (x[0] + 3.0);
        let m = u.max(v);
        let (eu, ev) = ((u - m).exp(), (v - m).exp());
        let mix = (4.0 * (x[0] - 3.0) * eu + 4.0 * (x[0] + 3.0) * ev) / (eu + ev);
        let radial = 4.0 * (r - 3.0) / r;
        g[0] = mix + radial * x[0];
        g[1] = radial * x[1];
        Ok(())
    }
}

/// Bayesian logistic regression posterior potential.
///
/// f(theta) = -Y'X theta + sum_i log(1 + exp(theta'x_i)) + alpha theta'Sigma_X theta / 2,
/// with Sigma_X = X'X / n.
#[derive(Clone, Debug)]
pub struct LogisticTarget {
    features: Mat,
    labels: Vec<f64>,
    regularizer: f64,
    sample_cov: Mat,
    bound_l: f64,
    bound_m: f64,
}

impl LogisticTarget {
    pub fn features(&self) -> &Mat {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn sample_cov(&self) -> &Mat {
        &self.sample_cov
    }

    /// Hessian upper bound L = (0.25 n + alpha) lambda_max(Sigma_X).
    pub fn bound_l(&self) -> f64 {
        self.bound_l
    }

    /// Hessian lower bound m = alpha lambda_min(Sigma_X).
    pub fn bound_m(&self) -> f64 {
        self.bound_m
    }
}

/// Build a logistic target from +-1 features and 0/1 labels.
pub fn make_logistic_target(features: Mat, labels: Vec<f64>, alpha: f64) -> Result<LogisticTarget> {
    let n = features.rows();
    let d = features.cols();
    if n < 1 {
        return Err(GaulError::Argument("need at least one observation".into()));
    }
    if labels.len() != n {
        return Err(GaulError::Argument("label count mismatch".into()));
    }
    if !(alpha > 0.0) {
        return Err(GaulError::Argument("regularizer must be positive".into()));
    }
    if features.data().iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(GaulError::Argument("features must be +-1".into()));
    }
    if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(GaulError::Argument("labels must be 0/1".into()));
    }
    let sample_cov = features.transpose().matmul(&features).scale(1.0 / n as f64);
    let (vals, _) = sym_eigen(&sample_cov);
    let lam_min = vals[0];
    let lam_max = vals[d - 1];
    if lam_min <= 1e-12 {
        return Err(GaulError::DegeneratePrior(format!(
            "sample covariance singular: lambda_min = {lam_min:.3e}"
        )));
    }
    Ok(LogisticTarget {
        features,
        labels,
        regularizer: alpha,
        sample_cov,
        bound_l: (0.25 * n as f64 + alpha) * lam_max,
        bound_m: alpha * lam_min,
    })
}

/// Draw Rademacher features and Bernoulli labels from the logistic model
/// at `theta_star`. Deterministic in the seed.
pub fn synthesize_logistic_data(n: usize, d: usize, theta_star: &[f64], seed: u64) -> (Mat, Vec<f64>) {
    assert!(n >= 1 && d >= 1);
    assert_eq!(theta_star.len(), d);
    let mut x = Mat::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            // One draw per entry in row-major order.
            let u = rng::uniform(seed, rng::CTX_DATA, i as u64, j as u64, 0);
            x[(i, j)] = if u < 0.5 { -1.0 } else { 1.0 };
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let t: f64 = (0..d).map(|j| theta_star[j] * x[(i, j)]).sum();
        let p = logistic(t);
        let u = rng::uniform(seed, rng::CTX_DATA, i as u64, 0, 1);
        y[i] = if u < p { 1.0 } else { 0.0 };
    }
    (x, y)
}

impl Potential for LogisticTarget {
    fn dim(&self) -> usize {
        self.features.cols()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let n = self.features.rows();
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            let t: f64 = (0..d).map(|j| theta[j] * self.features[(i, j)]).sum();
            acc += log1p_exp(t) - self.labels[i] * t;
        }
        let sx = self.sample_cov.matvec(theta);
        let quad: f64 = theta.iter().zip(&sx).map(|(ti, si)| ti * si).sum();
        acc + 0.5 * self.regularizer * quad
    }

    fn gradient(&self, theta: &[f64], g: &mut [f64]) -> Result<()> {
        let n = self.features.rows();
        let d = self.dim();
        let sx = self.sample_cov.matvec(theta);
        for j in 0..d {
            g[j] = self.regularizer * sx[j];
        }
        for i in 0..n {
            let t: f64 = (0..d).map(|j| theta[j] * self.features[(i, j)]).sum();
            let w = logistic(t) - self.labels[i];
            for j in 0..d {
                g[j] += w * self.features[(i, j)];
            }
        }
        Ok(())
    }
}
