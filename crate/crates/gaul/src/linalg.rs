//! Small dense matrix helpers.
//!
//! Everything here is sized for the tiny matrices this crate needs
//! (2x2 mode maps, 3x3 covariance generators, d <= 20 targets), so the
//! implementations favour exactness and zero dependencies over speed.

use crate::error::{GaulError, Result};
use num_complex::Complex64;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from a flat row-major slice.
    pub fn from_rows(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "shape mismatch");
        Mat { rows, cols, data: data.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self[(i, j)] * x[j];
            }
            out[i] = acc;
        }
        out
    }

    /// self + scale * other.
    pub fn add_scaled(&self, other: &Mat, scale: f64) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (o, &v) in out.data.iter_mut().zip(other.data.iter()) {
            *o += scale * v;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= s;
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if (self[(i, j)] - self[(j, i)]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi sweeps.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns of an orthogonal matrix.
pub fn sym_eigen(a: &Mat) -> (Vec<f64>, Mat) {
    assert!(a.is_symmetric(1e-9), "sym_eigen needs a symmetric matrix");
    let n = a.rows;
    let mut m = a.clone();
    let mut v = Mat::identity(n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * (1.0 + m.frobenius_norm()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vecs = Mat::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vecs[(k, col)] = v[(k, src)];
        }
    }
    (vals, vecs)
}

/// Lower-triangular Cholesky factor of an SPD matrix.
pub fn cholesky(a: &Mat) -> Result<Mat> {
    if !a.is_symmetric(1e-9) {
        return Err(GaulError::Domain("cholesky needs a symmetric matrix".into()));
    }
    let n = a.rows;
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 1e-14 * (1.0 + a[(i, i)].abs()) {
                    return Err(GaulError::Domain(format!(
                        "matrix not positive definite at pivot {i} (value {sum})"
                    )));
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solve A x = b given the Cholesky factor L of A.
pub fn cholesky_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    assert_eq!(b.len(), n);
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[(i, k)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= l[(k, i)] * y[k];
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// Matrix exponential by scaling-and-squaring with a Taylor kernel.
///
/// Accurate to near machine precision for the small well-scaled matrices
/// used here (mode generators with norm up to a few hundred).
pub fn expm(a: &Mat) -> Mat {
    assert_eq!(a.rows, a.cols);
    let norm = a
        .data
        .chunks(a.cols)
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let s = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let b = a.scale(0.5f64.powi(s as i32));
    // Taylor series on the scaled matrix; 20 terms is overkill at ||B|| <= 1/4.
    let mut result = Mat::identity(a.rows);
    let mut term = Mat::identity(a.rows);
    for k in 1..=20 {
        term = term.matmul(&b).scale(1.0 / k as f64);
        result = result.add_scaled(&term, 1.0);
    }
    for _ in 0..s {
        result = result.matmul(&result);
    }
    result
}

/// Roots of x^3 + c2 x^2 + c1 x + c0 with complex output.
///
/// Cardano's formula followed by complex Newton polishing.
pub fn cubic_roots(c2: f64, c1: f64, c0: f64) -> [Complex64; 3] {
    // Depressed cubic t^3 + p t + q via x = t - c2/3.
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = 2.0 * c2.powi(3) / 27.0 - c2 * c1 / 3.0 + c0;
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0).powi(3);
    let roots: [Complex64; 3] = if disc >= 0.0 {
        // One real root; take the real cube roots carefully.
        let sq = disc.sqrt();
        let u = cbrt(-q / 2.0 + sq);
        let v = cbrt(-q / 2.0 - sq);
        let t0 = u + v;
        let re = -t0 / 2.0;
        let im = (u - v) * 3.0f64.sqrt() / 2.0;
        [
            Complex64::new(t0, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
        ]
    } else {
        // Three real roots, trigonometric form.
        let r = (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos();
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (k, slot) in out.iter_mut().enumerate() {
            *slot = Complex64::new(
                2.0 * r * ((phi - 2.0 * std::f64::consts::PI * k as f64) / 3.0).cos(),
                0.0,
            );
        }
        out
    };
    let mut polished = [Complex64::new(0.0, 0.0); 3];
    for (i, t) in roots.iter().enumerate() {
        let mut x = t - shift;
        // Newton steps on the original cubic to tighten Cardano round-off.
        for _ in 0..3 {
            let f = ((x + c2) * x + c1) * x + c0;
            let df = (3.0 * x + 2.0 * c2) * x + c1;
            if df.norm() > 0.0 {
                x -= f / df;
            }
        }
        polished[i] = x;
    }
    polished
}

fn cbrt(x: f64) -> f64 {
    x.signum() * x.abs().cbrt()
}

/// Coefficients (c2, c1, c0) of det(xI - A) = x^3 + c2 x^2 + c1 x + c0 for a 3x3 matrix.
pub fn char_poly_3(a: &Mat) -> (f64, f64, f64) {
    assert_eq!((a.rows, a.cols), (3, 3));
    let tr = a[(0, 0)] + a[(1, 1)] + a[(2, 2)];
    let m00 = a[(1, 1)] * a[(2, 2)] - a[(1, 2)] * a[(2, 1)];
    let m11 = a[(0, 0)] * a[(2, 2)] - a[(0, 2)] * a[(2, 0)];
    let m22 = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let det = a[(0, 0)] * m00 - a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] - a[(1, 2)] * a[(2, 0)])
        + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] - a[(1, 1)] * a[(2, 0)]);
    (-tr, m00 + m11 + m22, -det)
}

/// Eigenvalues of a 3x3 matrix via its characteristic polynomial.
pub fn eig3(a: &Mat) -> [Complex64; 3] {
    let (c2, c1, c0) = char_poly_3(a);
    cubic_roots(c2, c1, c0)
}

/// Eigenvalues of a 2x2 matrix in closed form.
pub fn eig2(a: &Mat) -> [Complex64; 2] {
    assert_eq!((a.rows, a.cols), (2, 2));
    let tr = a[(0, 0)] + a[(1, 1)];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        [
            Complex64::new(tr / 2.0 + s, 0.0),
            Complex64::new(tr / 2.0 - s, 0.0),
        ]
    } else {
        let s = (-disc).sqrt();
        [
            Complex64::new(tr / 2.0, s),
            Complex64::new(tr / 2.0, -s),
        ]
    }
}

/// Symmetric square root of a 2x2 SPD (or PSD) matrix via eigendecomposition.
///
/// Used as an independent oracle for the closed-form diffusion factor.
pub fn sqrt_spd_2(a: &Mat) -> Result<Mat> {
    assert_eq!((a.rows, a.cols), (2, 2));
    let (vals, vecs) = sym_eigen(a);
    if vals.iter().any(|&v| v < -1e-12) {
        return Err(GaulError::Domain(format!("matrix not PSD: eigenvalues {vals:?}")));
    }
    let mut d = Mat::zeros(2, 2);
    for i in 0..2 {
        d[(i, i)] = vals[i].max(0.0).sqrt();
    }
    Ok(vecs.matmul(&d).matmul(&vecs.transpose()))
}
