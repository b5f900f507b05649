//! GAUL drift/diffusion structure and parameter selection.
//!
//! The dynamics are driven by the block matrix
//! Q = [[aC, -C], [I, gammaI]] acting on grad H = (grad f(x), p), with
//! additive noise sqrt(2 sym(Q)) dB. With a = 0 this reduces to
//! underdamped Langevin dynamics; the overdamped baseline is plain ULA on
//! x alone.

use crate::error::{GaulError, Result};
use crate::linalg::Mat;
use crate::potentials::Potential;

/// Which dynamics the sampler integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Plain unadjusted Langevin on x only.
    Overdamped,
    /// Underdamped Langevin: a = 0.
    Underdamped,
    /// Gradient-adjusted underdamped Langevin: a > 0 allowed.
    Gaul,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Overdamped => "ol",
            Method::Underdamped => "ul",
            Method::Gaul => "gaul",
        }
    }
}

/// Parameters of the dynamics: gradient adjustment a, damping gamma,
/// diagonal preconditioner C, and step size h.
#[derive(Clone, Debug)]
pub struct DynamicsParams {
    pub a: f64,
    pub gamma: f64,
    /// Diagonal of C, one entry per coordinate.
    pub precond: Vec<f64>,
    pub h: f64,
    pub method: Method,
}

impl DynamicsParams {
    /// Validated constructor with C = I.
    pub fn new(a: f64, gamma: f64, d: usize, h: f64, method: Method) -> Result<Self> {
        Self::with_precond(a, gamma, vec![1.0; d], h, method)
    }

    pub fn with_precond(
        a: f64,
        gamma: f64,
        precond: Vec<f64>,
        h: f64,
        method: Method,
    ) -> Result<Self> {
        if !(a >= 0.0) || !(gamma >= 0.0) {
            return Err(GaulError::Argument("a and gamma must be nonnegative".into()));
        }
        if !(h > 0.0) {
            return Err(GaulError::Argument("step size must be positive".into()));
        }
        if precond.iter().any(|&c| !(c > 0.0)) {
            return Err(GaulError::Argument("preconditioner entries must be positive".into()));
        }
        if method == Method::Underdamped && a != 0.0 {
            return Err(GaulError::Argument("underdamped dynamics require a = 0".into()));
        }
        let params = DynamicsParams { a, gamma, precond, h, method };
        if method != Method::Overdamped {
            params.check_psd()?;
        }
        Ok(params)
    }

    /// Per-coordinate PSD condition 4 a c_i gamma >= (1 - c_i)^2 for the
    /// symmetrized diffusion block.
    fn check_psd(&self) -> Result<()> {
        for (i, &c) in self.precond.iter().enumerate() {
            let lhs = 4.0 * self.a * c * self.gamma;
            let rhs = (1.0 - c) * (1.0 - c);
            if lhs < rhs {
                return Err(GaulError::DiffusionIndefinite { coord: i, lhs, rhs });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.precond.len()
    }
}

/// The matrix Q = [[aC, -C], [I, gammaI]] stored as four diagonals.
#[derive(Clone, Debug)]
pub struct QBlocks {
    /// Diagonal of aC.
    pub top_left: Vec<f64>,
    /// Diagonal of -C.
    pub top_right: Vec<f64>,
    /// Diagonal of I.
    pub bottom_left: Vec<f64>,
    /// Diagonal of gammaI.
    pub bottom_right: Vec<f64>,
}

impl QBlocks {
    /// Assemble the dense 2d x 2d matrix (tests and small-d diagnostics).
    pub fn dense(&self) -> Mat {
        let d = self.top_left.len();
        let mut q = Mat::zeros(2 * d, 2 * d);
        for i in 0..d {
            q[(i, i)] = self.top_left[i];
            q[(i, i + d)] = self.top_right[i];
            q[(i + d, i)] = self.bottom_left[i];
            q[(i + d, i + d)] = self.bottom_right[i];
        }
        q
    }
}

/// Build Q for the given parameters.
pub fn build_q(params: &DynamicsParams) -> QBlocks {
    QBlocks {
        top_left: params.precond.iter().map(|c| params.a * c).collect(),
        top_right: params.precond.iter().map(|c| -c).collect(),
        bottom_left: vec![1.0; params.dim()],
        bottom_right: vec![params.gamma; params.dim()],
    }
}

/// Per-coordinate symmetric square roots F_i of the diffusion blocks
/// M_i = 2 sym(Q)_i = [[2 a c_i, 1 - c_i], [1 - c_i, 2 gamma]].
#[derive(Clone, Debug)]
pub struct DiffusionFactor {
    /// Row-major 2x2 factor per coordinate.
    pub factors: Vec<[f64; 4]>,
}

/// Closed-form symmetric square root of the per-coordinate diffusion block.
pub fn diffusion_factor(params: &DynamicsParams) -> Result<DiffusionFactor> {
    let mut factors = Vec::with_capacity(params.dim());
    for (i, &c) in params.precond.iter().enumerate() {
        let m11 = 2.0 * params.a * c;
        let m12 = 1.0 - c;
        let m22 = 2.0 * params.gamma;
        let det = m11 * m22 - m12 * m12;
        if det < -1e-12 {
            return Err(GaulError::DiffusionIndefinite {
                coord: i,
                lhs: 4.0 * params.a * c * params.gamma,
                rhs: m12 * m12,
            });
        }
        let tr = m11 + m22;
        if tr <= 0.0 {
            // Zero block (a = gamma = 0, c = 1).
            factors.push([0.0; 4]);
            continue;
        }
        // M^{1/2} = (M + sqrt(det) I) / sqrt(tr + 2 sqrt(det)) for SPD 2x2.
        let sd = det.max(0.0).sqrt();
        let denom = (tr + 2.0 * sd).sqrt();
        factors.push([
            (m11 + sd) / denom,
            m12 / denom,
            m12 / denom,
            (m22 + sd) / denom,
        ]);
    }
    Ok(DiffusionFactor { factors })
}

/// Optimal damping gamma* = a s_d + 2 sqrt(s_d).
pub fn gamma_star(a: f64, s_d: f64) -> Result<f64> {
    if !(s_d > 0.0) {
        return Err(GaulError::Argument(format!("s_d must be positive, got {s_d}")));
    }
    if !(a >= 0.0) {
        return Err(GaulError::Argument(format!("a must be nonnegative, got {a}")));
    }
    Ok(a * s_d + 2.0 * s_d.sqrt())
}

/// Optimal gradient adjustment a* = 2 / (sqrt(s_1) - sqrt(s_d)).
pub fn a_star(s1: f64, sd: f64) -> Result<f64> {
    if !(sd > 0.0) || s1 <= sd {
        return Err(GaulError::DegenerateSpectrum(format!(
            "need s1 > sd > 0, got s1 = {s1}, sd = {sd}"
        )));
    }
    Ok(2.0 / (s1.sqrt() - sd.sqrt()))
}

/// Named step-size rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepRule {
    /// h = 1 / (2 (a s_1 + gamma)).
    HalfInverse,
    /// h = 1 / (5 s_1).
    FifthInverse,
    /// h = sqrt(s_d) / s_1, half the underdamped stability limit.
    UlLimitFraction,
}

/// Evaluate a named step-size rule.
pub fn step_size(rule: StepRule, a: f64, gamma: f64, s1: f64, sd: f64) -> Result<f64> {
    match rule {
        StepRule::HalfInverse => {
            let denom = a * s1 + gamma;
            if !(denom > 0.0) {
                return Err(GaulError::Argument("a s1 + gamma must be positive".into()));
            }
            Ok(1.0 / (2.0 * denom))
        }
        StepRule::FifthInverse => {
            if !(s1 > 0.0) {
                return Err(GaulError::Argument("s1 must be positive".into()));
            }
            Ok(1.0 / (5.0 * s1))
        }
        StepRule::UlLimitFraction => {
            if !(s1 > 0.0) || !(sd > 0.0) {
                return Err(GaulError::Argument("spectrum must be positive".into()));
            }
            Ok(sd.sqrt() / s1)
        }
    }
}

/// The non-gradient field Gamma = (Q - Q')/2 grad H at phase point X = (x, p).
pub fn gamma_field(params: &DynamicsParams, target: &dyn Potential, x_phase: &[f64]) -> Result<Vec<f64>> {
    let d = params.dim();
    if x_phase.len() != 2 * d || target.dim() != d {
        return Err(GaulError::Argument("phase point dimension mismatch".into()));
    }
    let (x, p) = x_phase.split_at(d);
    let mut grad = vec![0.0; d];
    target.gradient(x, &mut grad)?;
    // (Q - Q')/2 = [[0, -(C+I)/2], [(C+I)/2, 0]].
    let mut out = vec![0.0; 2 * d];
    for i in 0..d {
        let w = 0.5 * (params.precond[i] + 1.0);
        out[i] = -w * p[i];
        out[i + d] = w * grad[i];
    }
    Ok(out)
}
