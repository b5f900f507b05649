//! Closed-form theory for Gaussian targets.
//!
//! For a quadratic potential with precision spectrum s_1 >= ... >= s_d the
//! phase-space covariance obeys a linear ODE that decouples per mode. This
//! module carries that ODE (plus an RK4 integrator and the exact
//! matrix-exponential solution), the 3x3 per-mode generator with its
//! closed-form eigen-system, the discrete one-step covariance map with its
//! explicit fixed point, and the mixing-rate constants.

use crate::error::{GaulError, Result};
use crate::linalg::{eig2, expm, Mat};
use num_complex::Complex64;

/// Diagonal blocks (Sigma_11, Sigma_22, Sigma_12) of the phase-space
/// covariance, one scalar per mode.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCovariance {
    pub sig11: Vec<f64>,
    pub sig22: Vec<f64>,
    pub sig12: Vec<f64>,
}

impl BlockCovariance {
    pub fn new(sig11: Vec<f64>, sig22: Vec<f64>, sig12: Vec<f64>) -> Result<Self> {
        if sig11.len() != sig22.len() || sig11.len() != sig12.len() {
            return Err(GaulError::Argument("block length mismatch".into()));
        }
        Ok(BlockCovariance { sig11, sig22, sig12 })
    }

    /// Identity covariance in 2d phase space.
    pub fn identity(d: usize) -> Self {
        BlockCovariance {
            sig11: vec![1.0; d],
            sig22: vec![1.0; d],
            sig12: vec![0.0; d],
        }
    }

    /// Stationary covariance (1/s_i, 1, 0) for the given spectrum.
    pub fn stationary(spectrum: &[f64]) -> Self {
        BlockCovariance {
            sig11: spectrum.iter().map(|s| 1.0 / s).collect(),
            sig22: vec![1.0; spectrum.len()],
            sig12: vec![0.0; spectrum.len()],
        }
    }

    pub fn dim(&self) -> usize {
        self.sig11.len()
    }

    /// Smallest per-mode 2x2 eigenvalue; negative values signal a PSD violation.
    pub fn min_eigenvalue(&self) -> f64 {
        let mut min = f64::INFINITY;
        for i in 0..self.dim() {
            let (a, b, c) = (self.sig11[i], self.sig22[i], self.sig12[i]);
            let mean = 0.5 * (a + b);
            let disc = (0.25 * (a - b) * (a - b) + c * c).sqrt();
            min = min.min(mean - disc);
        }
        min
    }

    /// Frobenius distance treating each mode as a symmetric 2x2 block.
    pub fn distance(&self, other: &BlockCovariance) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim() {
            let d11 = self.sig11[i] - other.sig11[i];
            let d22 = self.sig22[i] - other.sig22[i];
            let d12 = self.sig12[i] - other.sig12[i];
            acc += d11 * d11 + d22 * d22 + 2.0 * d12 * d12;
        }
        acc.sqrt()
    }
}

/// Time derivative of the block covariance for diagonal C.
///
/// d/dt sig11 = -2 a c (s sig11 - 1) + 2 c sig12
/// d/dt sig22 = -2 s sig12 - 2 gamma (sig22 - 1)
/// d/dt sig12 = -a c s sig12 - c (1 - sig22) + (1 - s sig11) - gamma sig12
pub fn covariance_rhs(
    sigma: &BlockCovariance,
    a: f64,
    gamma: f64,
    precond: &[f64],
    spectrum: &[f64],
) -> Result<BlockCovariance> {
    let d = sigma.dim();
    if spectrum.len() != d || precond.len() != d {
        return Err(GaulError::Argument("spectrum/preconditioner length mismatch".into()));
    }
    let mut out = BlockCovariance::identity(d);
    for i in 0..d {
        let (s, c) = (spectrum[i], precond[i]);
        let (s11, s22, s12) = (sigma.sig11[i], sigma.sig22[i], sigma.sig12[i]);
        out.sig11[i] = -2.0 * a * c * (s * s11 - 1.0) + 2.0 * c * s12;
        out.sig22[i] = -2.0 * s * s12 - 2.0 * gamma * (s22 - 1.0);
        out.sig12[i] = -a * c * s * s12 - c * (1.0 - s22) + (1.0 - s * s11) - gamma * s12;
    }
    Ok(out)
}

/// RK4 integration of the covariance ODE from `sigma0` to `t_end`.
///
/// Returns the trajectory sampled at every accepted step, starting with
/// (0, sigma0).
pub fn integrate_covariance(
    sigma0: &BlockCovariance,
    a: f64,
    gamma: f64,
    precond: &[f64],
    spectrum: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<Vec<(f64, BlockCovariance)>> {
    if !(dt > 0.0) || t_end < 0.0 {
        return Err(GaulError::Argument("need dt > 0 and t_end >= 0".into()));
    }
    let mut out = vec![(0.0, sigma0.clone())];
    let mut sigma = sigma0.clone();
    let mut t = 0.0;
    let steps = (t_end / dt).ceil() as usize;
    for _ in 0..steps {
        let step = dt.min(t_end - t);
        if step <= 0.0 {
            break;
        }
        sigma = rk4_step(&sigma, a, gamma, precond, spectrum, step)?;
        t += step;
        if sigma.min_eigenvalue() < -1e-8 {
            return Err(GaulError::Instability(format!(
                "covariance left the PSD cone at t = {t} (min eigenvalue {})",
                sigma.min_eigenvalue()
            )));
        }
        out.push((t, sigma.clone()));
    }
    Ok(out)
}

fn rk4_step(
    sigma: &BlockCovariance,
    a: f64,
    gamma: f64,
    precond: &[f64],
    spectrum: &[f64],
    dt: f64,
) -> Result<BlockCovariance> {
    let add = |base: &BlockCovariance, k: &BlockCovariance, w: f64| -> BlockCovariance {
        let mut out = base.clone();
        for i in 0..base.dim() {
            out.sig11[i] += w * k.sig11[i];
            out.sig22[i] += w * k.sig22[i];
            out.sig12[i] += w * k.sig12[i];
        }
        out
    };
    let k1 = covariance_rhs(sigma, a, gamma, precond, spectrum)?;
    let k2 = covariance_rhs(&add(sigma, &k1, 0.5 * dt), a, gamma, precond, spectrum)?;
    let k3 = covariance_rhs(&add(sigma, &k2, 0.5 * dt), a, gamma, precond, spectrum)?;
    let k4 = covariance_rhs(&add(sigma, &k3, dt), a, gamma, precond, spectrum)?;
    let mut out = sigma.clone();
    for i in 0..sigma.dim() {
        out.sig11[i] += dt / 6.0 * (k1.sig11[i] + 2.0 * k2.sig11[i] + 2.0 * k3.sig11[i] + k4.sig11[i]);
        out.sig22[i] += dt / 6.0 * (k1.sig22[i] + 2.0 * k2.sig22[i] + 2.0 * k3.sig22[i] + k4.sig22[i]);
        out.sig12[i] += dt / 6.0 * (k1.sig12[i] + 2.0 * k2.sig12[i] + 2.0 * k3.sig12[i] + k4.sig12[i]);
    }
    Ok(out)
}

/// Exact solution of the covariance ODE at time `t` for C = I.
///
/// Works per mode through the 3x3 generator acting on
/// u = (sig11, sig22, d sig22/dt): u(t) = u* + exp(D t)(u(0) - u*) with
/// u* = (1/s, 1, 0), then recovers sig12 from the sig22 equation. Serves
/// as the independent oracle for the RK4 integrator.
pub fn closed_form_covariance(
    sigma0: &BlockCovariance,
    a: f64,
    gamma: f64,
    spectrum: &[f64],
    t: f64,
) -> Result<BlockCovariance> {
    let d = sigma0.dim();
    if spectrum.len() != d {
        return Err(GaulError::Argument("spectrum length mismatch".into()));
    }
    let mut out = BlockCovariance::identity(d);
    for i in 0..d {
        let s = spectrum[i];
        let dm = mode_matrix(a, gamma, s);
        let e = expm(&dm.scale(t));
        let u3_0 = -2.0 * s * sigma0.sig12[i] - 2.0 * gamma * (sigma0.sig22[i] - 1.0);
        let du = [sigma0.sig11[i] - 1.0 / s, sigma0.sig22[i] - 1.0, u3_0];
        let ut = e.matvec(&du);
        let (s11, s22, u3) = (ut[0] + 1.0 / s, ut[1] + 1.0, ut[2]);
        out.sig11[i] = s11;
        out.sig22[i] = s22;
        out.sig12[i] = -(u3 + 2.0 * gamma * (s22 - 1.0)) / (2.0 * s);
    }
    Ok(out)
}

/// The 3x3 per-mode generator of (sig11, sig22, d sig22/dt).
pub fn mode_matrix(a: f64, gamma: f64, s: f64) -> Mat {
    assert!(s > 0.0, "mode s must be positive");
    Mat::from_rows(
        3,
        3,
        &[
            -2.0 * a * s,
            -2.0 * gamma / s,
            -1.0 / s,
            0.0,
            0.0,
            1.0,
            2.0 * s * s,
            2.0 * (-1.0 - a * gamma) * s - 2.0 * gamma * gamma,
            -3.0 * gamma - a * s,
        ],
    )
}

/// Eigenvalues of one mode of the continuous dynamics.
#[derive(Clone, Copy, Debug)]
pub struct ModeSpectrum {
    pub lam0: Complex64,
    pub lam_minus: Complex64,
    pub lam_plus: Complex64,
    /// True when the discriminant vanishes and the mode is defective
    /// (triple eigenvalue with a deficient eigenspace).
    pub defective: bool,
}

/// Discriminant gamma^2 - 2 a gamma s + s (a^2 s - 4) of the mode cubic.
fn discriminant(a: f64, gamma: f64, s: f64) -> f64 {
    gamma * gamma - 2.0 * a * gamma * s + s * (a * a * s - 4.0)
}

/// Closed-form eigenvalues lambda_0 = -as - gamma, lambda_+- = lambda_0 +- sqrt(Delta).
pub fn continuous_eigenvalues(a: f64, gamma: f64, s: f64) -> ModeSpectrum {
    let base = -a * s - gamma;
    let delta = discriminant(a, gamma, s);
    let root = Complex64::new(delta, 0.0).sqrt();
    let lam0 = Complex64::new(base, 0.0);
    ModeSpectrum {
        lam0,
        lam_minus: lam0 - root,
        lam_plus: lam0 + root,
        defective: delta.abs() <= 1e-12 * base * base,
    }
}

/// Eigenvectors of one mode in local (sig11, sig22, d sig22/dt) coordinates.
#[derive(Clone, Debug)]
pub struct ModeVectors {
    pub spectrum: ModeSpectrum,
    pub v0: [Complex64; 3],
    pub v_minus: [Complex64; 3],
    pub v_plus: [Complex64; 3],
    /// Generalized eigenvectors, present only at a defective mode.
    pub eta: Option<[f64; 3]>,
    pub xi: Option<[f64; 3]>,
}

/// Closed-form eigen-system per mode. The third component of every
/// eigenvector is normalized to 1. At a defective mode the two
/// generalized eigenvectors eta, xi are attached.
///
/// Note: eta and xi complete the Jordan chain only up to eigenvalue
/// scalings; they satisfy (D - lam0) eta = lam0 v0 and
/// (D - lam0) xi = -lam0^2 v0 (see the tests).
pub fn eigen_system(a: f64, gamma: f64, spectrum: &[f64]) -> Result<Vec<ModeVectors>> {
    if !(gamma > 0.0) {
        return Err(GaulError::Argument("gamma must be positive".into()));
    }
    let mut out = Vec::with_capacity(spectrum.len());
    for &s in spectrum {
        let ms = continuous_eigenvalues(a, gamma, s);
        let delta = discriminant(a, gamma, s);
        let root = Complex64::new(delta, 0.0).sqrt();
        let gas = gamma + a * s;
        if gas.abs() < 1e-300 {
            return Err(GaulError::DegenerateEigenvector(format!(
                "gamma + a s vanishes for mode s = {s}"
            )));
        }
        let one = Complex64::new(1.0, 0.0);
        let v0 = [
            Complex64::new(-1.0 / (s * gas), 0.0),
            Complex64::new(-1.0 / gas, 0.0),
            one,
        ];
        let denom_minus = Complex64::new(gas, 0.0) + root;
        let denom_plus = Complex64::new(gas, 0.0) - root;
        if denom_minus.norm() < 1e-12 * gas.abs() || denom_plus.norm() < 1e-12 * gas.abs() {
            return Err(GaulError::DegenerateEigenvector(format!(
                "gamma + a s -+ sqrt(Delta) vanishes for mode s = {s}"
            )));
        }
        let top = Complex64::new(gamma * gamma + s + a * gamma * s, 0.0);
        let v_minus = [
            (Complex64::new(2.0 * gamma, 0.0) - root - 2.0 * top / denom_minus)
                / Complex64::new(2.0 * s * s, 0.0),
            -one / denom_minus,
            one,
        ];
        let v_plus = [
            (Complex64::new(2.0 * gamma, 0.0) + root - 2.0 * top / denom_plus)
                / Complex64::new(2.0 * s * s, 0.0),
            -one / denom_plus,
            one,
        ];
        let (eta, xi) = if ms.defective {
            (
                Some([(gamma - a * s) / (2.0 * s * s), 0.0, 1.0]),
                Some([(gamma * gamma - (1.0 + a * gamma) * s) / (s * s), 1.0, 0.0]),
            )
        } else {
            (None, None)
        };
        out.push(ModeVectors { spectrum: ms, v0, v_minus, v_plus, eta, xi });
    }
    Ok(out)
}

/// Per-mode one-step map of the Euler-Maruyama covariance recursion:
/// Y <- A Y A' + L L' with A_i = I - h [[a s_i, -1], [s_i, gamma]] and
/// L L' = diag(2 a h, 2 gamma h).
#[derive(Clone, Debug)]
pub struct DiscreteMap {
    pub a: f64,
    pub gamma: f64,
    pub h: f64,
    pub spectrum: Vec<f64>,
    /// Row-major A_i per mode.
    pub maps: Vec<[f64; 4]>,
    /// Diagonal of L L'.
    pub noise: [f64; 2],
}

/// Build the discrete covariance map.
pub fn discrete_map(a: f64, gamma: f64, h: f64, spectrum: &[f64]) -> Result<DiscreteMap> {
    if !(h > 0.0) {
        return Err(GaulError::Argument("step size must be positive".into()));
    }
    let maps = spectrum
        .iter()
        .map(|&s| [1.0 - h * a * s, h, -h * s, 1.0 - h * gamma])
        .collect();
    Ok(DiscreteMap {
        a,
        gamma,
        h,
        spectrum: spectrum.to_vec(),
        maps,
        noise: [2.0 * a * h, 2.0 * gamma * h],
    })
}

/// Eigenvalues lambda~_+- = h ((a s + gamma) +- sqrt((a s - gamma)^2 - 4s)) / 2
/// of h G, so the step matrix A has eigenvalues 1 - lambda~_+-.
pub fn discrete_eigenvalues(a: f64, gamma: f64, h: f64, s: f64) -> [Complex64; 2] {
    let disc = (a * s - gamma) * (a * s - gamma) - 4.0 * s;
    let root = Complex64::new(disc, 0.0).sqrt();
    let base = Complex64::new(a * s + gamma, 0.0);
    [
        Complex64::new(h / 2.0, 0.0) * (base + root),
        Complex64::new(h / 2.0, 0.0) * (base - root),
    ]
}

/// Result of the discrete spectral-radius bound check.
#[derive(Clone, Debug)]
pub struct SpectralBound {
    pub admissible: bool,
    /// 1 - (h/2)(a s_d + sqrt(s_d)), meaningful when admissible.
    pub bound: f64,
    /// Name of the violated precondition when not admissible.
    pub violation: Option<String>,
}

/// Check the step-size regime in which max |1 - lambda~| is bounded by
/// 1 - (h/2)(a s_d + sqrt(s_d)), assuming gamma = gamma*(a, s_d).
pub fn spectral_bound_check(a: f64, gamma: f64, h: f64, s1: f64, sd: f64) -> SpectralBound {
    let bound = 1.0 - 0.5 * h * (a * sd + sd.sqrt());
    let a_min = 2.0 / (s1.sqrt() - sd.sqrt());
    if s1 <= sd || sd <= 0.0 {
        return SpectralBound {
            admissible: false,
            bound,
            violation: Some("requires s1 > sd > 0".into()),
        };
    }
    if a < a_min {
        return SpectralBound {
            admissible: false,
            bound,
            violation: Some(format!("requires a >= 2/(sqrt(s1)-sqrt(sd)) = {a_min}")),
        };
    }
    if !(h > 0.0) || h > 1.0 / (a * s1 + gamma) {
        return SpectralBound {
            admissible: false,
            bound,
            violation: Some(format!("requires 0 < h <= 1/(a s1 + gamma) = {}", 1.0 / (a * s1 + gamma))),
        };
    }
    // Direct verification on the extreme modes.
    for s in [s1, sd] {
        for lam in discrete_eigenvalues(a, gamma, h, s) {
            let dist = (Complex64::new(1.0, 0.0) - lam).norm();
            if dist > bound + 1e-12 {
                return SpectralBound {
                    admissible: false,
                    bound,
                    violation: Some(format!("|1 - lambda~| = {dist} exceeds bound {bound} at s = {s}")),
                };
            }
        }
    }
    SpectralBound { admissible: true, bound, violation: None }
}

/// Underdamped stability limit 2 sqrt(s_d) / s_1 (with gamma = 2 sqrt(s_d)).
pub fn ul_step_limit(s1: f64, sd: f64) -> f64 {
    assert!(s1 >= sd && sd > 0.0, "need s1 >= sd > 0");
    2.0 * sd.sqrt() / s1
}

/// Stationary covariance of the discrete chain, in closed form.
#[derive(Clone, Debug)]
pub struct FixedPointCovariance {
    pub y11: Vec<f64>,
    pub y12: Vec<f64>,
    pub y22: Vec<f64>,
}

impl FixedPointCovariance {
    pub fn as_block(&self) -> BlockCovariance {
        BlockCovariance {
            sig11: self.y11.clone(),
            sig22: self.y22.clone(),
            sig12: self.y12.clone(),
        }
    }
}

/// Closed-form solution of Y = A Y A' + L L' per mode.
pub fn fixed_point_covariance(a: f64, gamma: f64, h: f64, spectrum: &[f64]) -> Result<FixedPointCovariance> {
    // Contraction check: every |1 - lambda~| must be < 1.
    for &s in spectrum {
        for lam in discrete_eigenvalues(a, gamma, h, s) {
            let dist = (Complex64::new(1.0, 0.0) - lam).norm();
            if dist >= 1.0 {
                return Err(GaulError::NoFixedPoint(format!(
                    "|1 - lambda~| = {dist} >= 1 at mode s = {s}"
                )));
            }
        }
    }
    let d = spectrum.len();
    let mut out = FixedPointCovariance {
        y11: vec![0.0; d],
        y12: vec![0.0; d],
        y22: vec![0.0; d],
    };
    for (i, &s) in spectrum.iter().enumerate() {
        let d1 = h * s - gamma + a * s * (h * gamma - 1.0);
        let d2 = 4.0 + h * (h * s - 2.0 * gamma + a * s * (h * gamma - 2.0));
        let denom = d1 * d2;
        if denom.abs() < 1e-300 {
            return Err(GaulError::NoFixedPoint(format!(
                "closed-form denominator vanishes at mode s = {s}"
            )));
        }
        out.y11[i] = (1.0 / s) * (1.0 - h * s * (4.0 + (h + a * (h * gamma - 2.0)) * d1) / denom);
        out.y12[i] = 2.0 * h * (gamma - a * s) / denom;
        out.y22[i] = (-4.0 * gamma - 2.0 * a * s * (2.0 + h * (h * s - 3.0 * gamma + a * s * (h * gamma - 1.0)))) / denom;
    }
    Ok(out)
}

/// Apply the discrete covariance recursion k times.
pub fn iterate_covariance(y0: &BlockCovariance, map: &DiscreteMap, k: usize) -> Result<BlockCovariance> {
    if y0.dim() != map.spectrum.len() {
        return Err(GaulError::Argument("dimension mismatch".into()));
    }
    let mut y = y0.clone();
    for step in 0..k {
        for i in 0..y.dim() {
            let [a11, a12, a21, a22] = map.maps[i];
            let (y11, y22, y12) = (y.sig11[i], y.sig22[i], y.sig12[i]);
            // A Y A' for symmetric 2x2 Y.
            let n11 = a11 * (a11 * y11 + a12 * y12) + a12 * (a11 * y12 + a12 * y22);
            let n12 = a21 * (a11 * y11 + a12 * y12) + a22 * (a11 * y12 + a12 * y22);
            let n22 = a21 * (a21 * y11 + a22 * y12) + a22 * (a21 * y12 + a22 * y22);
            y.sig11[i] = n11 + map.noise[0];
            y.sig12[i] = n12;
            y.sig22[i] = n22 + map.noise[1];
            if !y.sig11[i].is_finite() || y.sig11[i].abs() > 1e300 {
                return Err(GaulError::Divergence {
                    step,
                    detail: format!("covariance overflow at mode {i}"),
                });
            }
        }
    }
    Ok(y)
}

/// Rate constants of the mixing-time theorems.
#[derive(Clone, Debug)]
pub struct MixingRates {
    /// Continuous decay rate a s_d + 2 sqrt(s_d).
    pub cont_rate: f64,
    /// Discrete per-step decay rate (h/2)(a s_d + sqrt(s_d)).
    pub disc_rate: f64,
    /// Symbolic form of the continuous mixing-time bound.
    pub cont_bound_form: String,
    /// Symbolic form of the discrete mixing-time bound.
    pub disc_bound_form: String,
}

/// Rate constants only; the O(.) prefactors of the bounds are not computed.
pub fn mixing_rates(a: f64, _gamma: f64, h: f64, _s1: f64, sd: f64) -> MixingRates {
    MixingRates {
        cont_rate: a * sd + 2.0 * sd.sqrt(),
        disc_rate: 0.5 * h * (a * sd + sd.sqrt()),
        cont_bound_form: "(O(log d + log kappa) + log(1/delta)) / (a sd + 2 sqrt(sd))".into(),
        disc_bound_form: "(O(log d + log kappa) + log(1/delta)) / ((h/2)(a sd + sqrt(sd)))".into(),
    }
}

/// Numeric eigenvalues of the per-mode step matrix A (oracle helper).
pub fn discrete_map_eigenvalues(map: &DiscreteMap, mode: usize) -> [Complex64; 2] {
    let [a11, a12, a21, a22] = map.maps[mode];
    eig2(&Mat::from_rows(2, 2, &[a11, a12, a21, a22]))
}
