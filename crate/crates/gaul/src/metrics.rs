//! Divergences and distances between ensembles, covariances, and targets.

use crate::error::{GaulError, Result};
use crate::linalg::{cholesky, cholesky_solve, sym_eigen, Mat};

/// KL divergence between centered Gaussians: KL(N(0, sigma) || N(0, target))
/// = 1/2 (tr(sigma target^-1) - log det(sigma target^-1) - d).
pub fn gaussian_kl(sigma: &Mat, target: &Mat) -> Result<f64> {
    let d = check_spd(sigma, "sigma")?;
    if check_spd(target, "target")? != d {
        return Err(GaulError::Argument("covariance dimension mismatch".into()));
    }
    let l_sigma = cholesky(sigma)?;
    let l_target = cholesky(target)?;
    // tr(sigma target^-1) column by column.
    let mut trace = 0.0;
    let mut col = vec![0.0; d];
    for j in 0..d {
        for i in 0..d {
            col[i] = sigma[(i, j)];
        }
        let x = cholesky_solve(&l_target, &col);
        trace += x[j];
    }
    let logdet: f64 = (0..d)
        .map(|i| 2.0 * (l_sigma[(i, i)].ln() - l_target[(i, i)].ln()))
        .sum();
    Ok(0.5 * (trace - logdet - d as f64))
}

/// KL between diagonal Gaussians given by their variance vectors.
pub fn gaussian_kl_diag(var: &[f64], target_var: &[f64]) -> Result<f64> {
    if var.len() != target_var.len() {
        return Err(GaulError::Argument("variance length mismatch".into()));
    }
    let mut acc = 0.0;
    for (&v, &t) in var.iter().zip(target_var) {
        if v <= 1e-14 || t <= 1e-14 {
            return Err(GaulError::Domain("variances must be positive".into()));
        }
        let r = v / t;
        acc += 0.5 * (r - r.ln() - 1.0);
    }
    Ok(acc)
}

/// Total-variation upper bound (3/2) min{1, ||sigma1^-1 sigma2 - I||_F}.
pub fn tv_upper_bound(sigma1: &Mat, sigma2: &Mat) -> Result<f64> {
    let d = check_spd(sigma1, "sigma1")?;
    if sigma2.rows() != d || sigma2.cols() != d {
        return Err(GaulError::Argument("covariance dimension mismatch".into()));
    }
    let l1 = cholesky(sigma1)?;
    let mut fro = 0.0;
    let mut col = vec![0.0; d];
    for j in 0..d {
        for i in 0..d {
            col[i] = sigma2[(i, j)];
        }
        let x = cholesky_solve(&l1, &col);
        for i in 0..d {
            let e = x[i] - if i == j { 1.0 } else { 0.0 };
            fro += e * e;
        }
    }
    Ok(1.5 * fro.sqrt().min(1.0))
}

fn check_spd(m: &Mat, name: &str) -> Result<usize> {
    if m.rows() != m.cols() {
        return Err(GaulError::Argument(format!("{name} must be square")));
    }
    if !m.is_symmetric(1e-10) {
        return Err(GaulError::Domain(format!("{name} is not symmetric")));
    }
    let (vals, _) = sym_eigen(m);
    if vals[0] <= 1e-14 {
        return Err(GaulError::Domain(format!(
            "{name} is not positive definite (min eigenvalue {})",
            vals[0]
        )));
    }
    Ok(m.rows())
}

/// Unbiased sample covariance of `m` points of dimension `dim`, stored
/// row-major as a flat slice. The sample mean is subtracted.
pub fn empirical_covariance(data: &[f64], dim: usize) -> Result<Mat> {
    if dim == 0 || data.len() % dim != 0 {
        return Err(GaulError::Argument("data length not a multiple of dim".into()));
    }
    let m = data.len() / dim;
    if m < 2 {
        return Err(GaulError::Argument("need at least two samples".into()));
    }
    let mut mean = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        for (acc, &x) in mean.iter_mut().zip(row) {
            *acc += x;
        }
    }
    for acc in &mut mean {
        *acc /= m as f64;
    }
    let mut cov = Mat::zeros(dim, dim);
    for row in data.chunks_exact(dim) {
        for i in 0..dim {
            let di = row[i] - mean[i];
            for j in i..dim {
                let v = di * (row[j] - mean[j]);
                cov[(i, j)] += v;
            }
        }
    }
    let norm = 1.0 / (m as f64 - 1.0);
    for i in 0..dim {
        for j in i..dim {
            let v = cov[(i, j)] * norm;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(cov)
}

/// Per-coordinate unbiased sample variances.
pub fn empirical_variances(data: &[f64], dim: usize) -> Result<Vec<f64>> {
    if dim == 0 || data.len() % dim != 0 {
        return Err(GaulError::Argument("data length not a multiple of dim".into()));
    }
    let m = data.len() / dim;
    if m < 2 {
        return Err(GaulError::Argument("need at least two samples".into()));
    }
    let mut mean = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        for (acc, &x) in mean.iter_mut().zip(row) {
            *acc += x;
        }
    }
    for acc in &mut mean {
        *acc /= m as f64;
    }
    let mut var = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        for i in 0..dim {
            let d = row[i] - mean[i];
            var[i] += d * d;
        }
    }
    for v in &mut var {
        *v /= m as f64 - 1.0;
    }
    Ok(var)
}

/// Histogram over an axis-aligned box with `n` bins per dimension.
#[derive(Clone, Debug)]
pub struct HistogramGrid {
    pub bounds: Vec<(f64, f64)>,
    pub n: usize,
    /// Bin counts in row-major order over the dimensions.
    pub counts: Vec<u64>,
    /// Samples outside the box, dropped rather than clamped.
    pub dropped: usize,
}

impl HistogramGrid {
    /// Bin `m` samples of dimension `dim` (flat row-major) into the box.
    pub fn build(data: &[f64], dim: usize, bounds: &[(f64, f64)], n: usize) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(GaulError::Argument("data length not a multiple of dim".into()));
        }
        if bounds.len() != dim {
            return Err(GaulError::Argument("bounds length must equal dim".into()));
        }
        if n < 2 {
            return Err(GaulError::Argument("need at least 2 bins per dimension".into()));
        }
        for &(lo, hi) in bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GaulError::Argument("bounds must be finite with low < high".into()));
            }
        }
        let mut counts = vec![0u64; n.pow(dim as u32)];
        let mut dropped = 0usize;
        'rows: for row in data.chunks_exact(dim) {
            let mut idx = 0usize;
            for (k, &x) in row.iter().enumerate() {
                let (lo, hi) = bounds[k];
                if !(x >= lo && x <= hi) {
                    dropped += 1;
                    continue 'rows;
                }
                let b = (((x - lo) / (hi - lo) * n as f64) as usize).min(n - 1);
                idx = idx * n + b;
            }
            counts[idx] += 1;
        }
        Ok(HistogramGrid { bounds: bounds.to_vec(), n, counts, dropped })
    }

    /// Center of the bin with (row-major) multi-index encoded in `idx`.
    fn bin_center(&self, mut idx: usize, dim: usize) -> Vec<f64> {
        let mut center = vec![0.0; dim];
        for k in (0..dim).rev() {
            let b = idx % self.n;
            idx /= self.n;
            let (lo, hi) = self.bounds[k];
            center[k] = lo + (b as f64 + 0.5) * (hi - lo) / self.n as f64;
        }
        center
    }
}

/// Default histogram box: per-dimension sample mean +- 5 sample standard
/// deviations.
pub fn default_bounds(data: &[f64], dim: usize) -> Result<Vec<(f64, f64)>> {
    let var = empirical_variances(data, dim)?;
    let m = data.len() / dim;
    let mut mean = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        for (acc, &x) in mean.iter_mut().zip(row) {
            *acc += x;
        }
    }
    Ok(mean
        .iter()
        .zip(&var)
        .map(|(&s, &v)| {
            let mu = s / m as f64;
            let sd = v.sqrt();
            (mu - 5.0 * sd, mu + 5.0 * sd)
        })
        .collect())
}

/// KL divergence between the sample histogram and the target discretized at
/// bin centers (unnormalized density renormalized over the box).
///
/// Returns the divergence together with the number of out-of-box samples.
/// A bin with empirical mass but zero target mass yields +infinity.
pub fn histogram_kl<F>(
    data: &[f64],
    dim: usize,
    target_density: F,
    bounds: &[(f64, f64)],
    n: usize,
) -> Result<(f64, usize)>
where
    F: Fn(&[f64]) -> f64,
{
    if dim > 2 {
        return Err(GaulError::Argument("histogram_kl supports dim 1 or 2".into()));
    }
    let grid = HistogramGrid::build(data, dim, bounds, n)?;
    let kept: u64 = grid.counts.iter().sum();
    if kept == 0 {
        return Err(GaulError::EmptyHistogram(grid.dropped));
    }
    let nbins = grid.counts.len();
    let mut q = vec![0.0; nbins];
    let mut qsum = 0.0;
    for (i, qi) in q.iter_mut().enumerate() {
        let center = grid.bin_center(i, dim);
        let v = target_density(&center);
        if !(v >= 0.0) || !v.is_finite() {
            return Err(GaulError::Domain(format!(
                "target density returned {v} at {center:?}"
            )));
        }
        *qi = v;
        qsum += v;
    }
    if qsum <= 0.0 {
        return Err(GaulError::Domain("target density vanishes on the whole box".into()));
    }
    let mut kl = 0.0;
    for (count, qi) in grid.counts.iter().zip(&q) {
        if *count == 0 {
            continue;
        }
        let p = *count as f64 / kept as f64;
        let qn = qi / qsum;
        if qn <= 0.0 {
            return Ok((f64::INFINITY, grid.dropped));
        }
        kl += p * (p / qn).ln();
    }
    Ok((kl, grid.dropped))
}
