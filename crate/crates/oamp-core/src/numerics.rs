//! Dense real/complex matrices, the complex-to-real-equivalent transform and
//! the handful of factorizations the detectors need.
//!
//! Everything is double precision. The OAMP variance recursion subtracts
//! nearly equal quantities, so f32 is not enough headroom.

use alloc::{format, vec, vec::Vec};
use core::ops::{Index, IndexMut};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fmath;

/// Row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
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

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
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

    /// Dense product, ikj loop order.
    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// self * self^T without forming the transpose.
    pub fn gram_t(&self) -> Mat {
        let mut out = Mat::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in i..self.rows {
                let mut acc = 0.0;
                let ri = self.row(i);
                let rj = self.row(j);
                for k in 0..self.cols {
                    acc += ri[k] * rj[k];
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc;
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matvec {}x{} by vector of {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for (a, b) in self.row(i).iter().zip(v) {
                acc += a * b;
            }
            out[i] = acc;
        }
        Ok(out)
    }

    pub fn scale(&self, k: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * k).collect(),
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline(always)]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline(always)]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Row-major complex matrix; holds channel matrices H and stacked signals.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "complex matrix {rows}x{cols} needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline(always)]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline(always)]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "complex matvec {}x{} by vector of {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..self.cols {
                acc += self.data[i * self.cols + j] * v[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Real-equivalent form of y = Hx + noise: the complex system doubled into
/// blocks [[Re H, -Im H], [Im H, Re H]] with y_r = [Re y; Im y].
#[derive(Debug, Clone)]
pub struct RealSystem {
    /// 2M x 2N block matrix.
    pub h: Mat,
    /// 2M stacked received vector.
    pub y: Vec<f64>,
    /// Noise standard deviation per complex dimension.
    pub sigma: f64,
    /// Complex receive dimension M.
    pub m: usize,
    /// Complex transmit dimension N.
    pub n: usize,
}

/// Build the real-equivalent system for a complex channel and observation.
pub fn to_real_equivalent(h: &ComplexMatrix, y: &[Complex64], sigma: f64) -> Result<RealSystem> {
    if y.len() != h.rows() {
        return Err(Error::DimensionMismatch(format!(
            "received vector of {} for channel with {} rows",
            y.len(),
            h.rows()
        )));
    }
    let (m, n) = (h.rows(), h.cols());
    let mut hr = Mat::zeros(2 * m, 2 * n);
    for i in 0..m {
        for j in 0..n {
            let z = h.at(i, j);
            hr[(i, j)] = z.re;
            hr[(i, j + n)] = -z.im;
            hr[(i + m, j)] = z.im;
            hr[(i + m, j + n)] = z.re;
        }
    }
    let mut yr = vec![0.0; 2 * m];
    for (i, z) in y.iter().enumerate() {
        yr[i] = z.re;
        yr[i + m] = z.im;
    }
    Ok(RealSystem {
        h: hr,
        y: yr,
        sigma,
        m,
        n,
    })
}

/// Stack a complex vector as [Re; Im].
pub fn stack_complex(v: &[Complex64]) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; 2 * n];
    for (i, z) in v.iter().enumerate() {
        out[i] = z.re;
        out[i + n] = z.im;
    }
    out
}

/// Reassemble a [Re; Im] stacked vector into complex form.
pub fn unstack_complex(v: &[f64]) -> Vec<Complex64> {
    let n = v.len() / 2;
    (0..n).map(|i| Complex64::new(v[i], v[i + n])).collect()
}

const SYMMETRY_TOL: f64 = 1e-10;

/// Cholesky factorization, lower triangular. Fails on non-positive pivots.
fn cholesky(a: &Mat) -> Result<Mat> {
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if !(acc > 0.0) || !acc.is_finite() {
                    return Err(Error::SingularSystem);
                }
                l[(i, j)] = fmath::sqrt(acc);
            } else {
                l[(i, j)] = acc / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solve A X = B for symmetric positive-definite A via Cholesky.
pub fn solve_spd(a: &Mat, b: &Mat) -> Result<Mat> {
    if a.rows() != a.cols() {
        return Err(Error::DimensionMismatch(format!(
            "SPD solve needs square A, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "SPD solve A is {}x{} but B has {} rows",
            a.rows(),
            a.cols(),
            b.rows()
        )));
    }
    let scale = a.data().iter().fold(0.0f64, |m, x| m.max(fmath::abs(*x)));
    for i in 0..a.rows() {
        for j in (i + 1)..a.cols() {
            if fmath::abs(a[(i, j)] - a[(j, i)]) > SYMMETRY_TOL * (1.0 + scale) {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let l = cholesky(a)?;
    let n = a.rows();
    let mut x = b.clone();
    // Forward substitution L Z = B, column by column in place.
    for c in 0..x.cols() {
        for i in 0..n {
            let mut acc = x[(i, c)];
            for k in 0..i {
                acc -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = acc / l[(i, i)];
        }
        // Back substitution L^T X = Z.
        for i in (0..n).rev() {
            let mut acc = x[(i, c)];
            for k in (i + 1)..n {
                acc -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = acc / l[(i, i)];
        }
    }
    Ok(x)
}

/// tr(A B) without forming the product.
pub fn trace_product(a: &Mat, b: &Mat) -> Result<f64> {
    if a.cols() != b.rows() || b.cols() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "trace of {}x{} by {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut acc = 0.0;
    for i in 0..a.rows() {
        for k in 0..a.cols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    Ok(acc)
}

/// Symmetric PSD square root via cyclic Jacobi eigendecomposition.
/// Negative eigenvalues from roundoff are clamped to zero.
pub fn sym_sqrt(a: &Mat) -> Result<Mat> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "symmetric sqrt of {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let mut d = a.clone();
    let mut v = Mat::identity(n);
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(fmath::abs(d[(i, j)]));
            }
        }
        if off < 1e-13 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = d[(p, q)];
                if fmath::abs(apq) < 1e-300 {
                    continue;
                }
                let theta = (d[(q, q)] - d[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + fmath::sqrt(1.0 + theta * theta))
                } else {
                    -1.0 / (-theta + fmath::sqrt(1.0 + theta * theta))
                };
                let c = 1.0 / fmath::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let dkp = d[(k, p)];
                    let dkq = d[(k, q)];
                    d[(k, p)] = c * dkp - s * dkq;
                    d[(k, q)] = s * dkp + c * dkq;
                }
                for k in 0..n {
                    let dpk = d[(p, k)];
                    let dqk = d[(q, k)];
                    d[(p, k)] = c * dpk - s * dqk;
                    d[(q, k)] = s * dpk + c * dqk;
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
    // sqrt = V diag(sqrt(lambda)) V^T, symmetrized by construction.
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                let lam = d[(k, k)].max(0.0);
                acc += v[(i, k)] * fmath::sqrt(lam) * v[(j, k)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}
