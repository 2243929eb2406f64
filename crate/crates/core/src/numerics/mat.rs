//! Dense row-major `f64` matrices and the forward kernels used by every
//! layer in the engine.
//!
//! The kernel set is deliberately small and closed: matmul, row softmax,
//! layer norm, GeLU, plus elementwise helpers. Loops run in a fixed order so
//! results are bit-reproducible for a given build.

use crate::error::{Error, Result};

pub const LN_EPS: f64 = 1e-6;

/// Dense matrix, row-major, 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dim(format!(
                "data length {} != {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dim("ragged row lengths".into()));
        }
        Ok(Mat { rows: r, cols: c, data: rows.concat() })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Standard product. Fixed (i, k, j) loop order.
    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::Dim(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let a_row = self.row(i);
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in a_row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let b_row = other.row(k);
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Copy of the first `n` rows.
    pub fn top_rows(&self, n: usize) -> Result<Mat> {
        if n > self.rows {
            return Err(Error::Dim(format!("top_rows {n} > {}", self.rows)));
        }
        Ok(Mat { rows: n, cols: self.cols, data: self.data[..n * self.cols].to_vec() })
    }

    /// Copy of the first `n` columns.
    pub fn left_cols(&self, n: usize) -> Result<Mat> {
        if n > self.cols {
            return Err(Error::Dim(format!("left_cols {n} > {}", self.cols)));
        }
        let mut out = Mat::zeros(self.rows, n);
        for i in 0..self.rows {
            out.data[i * n..(i + 1) * n].copy_from_slice(&self.row(i)[..n]);
        }
        Ok(out)
    }

    /// Copy of columns `[lo, hi)`.
    pub fn col_range(&self, lo: usize, hi: usize) -> Result<Mat> {
        if lo > hi || hi > self.cols {
            return Err(Error::Dim(format!("col_range {lo}..{hi} of {}", self.cols)));
        }
        let w = hi - lo;
        let mut out = Mat::zeros(self.rows, w);
        for i in 0..self.rows {
            out.data[i * w..(i + 1) * w].copy_from_slice(&self.row(i)[lo..hi]);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Mat) -> Result<Mat> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn hadamard(&self, other: &Mat) -> Result<Mat> {
        self.zip_with(other, |a, b| a * b)
    }

    fn zip_with(&self, other: &Mat, f: impl Fn(f64, f64) -> f64) -> Result<Mat> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dim(format!(
                "elementwise {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Mat { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    pub fn add_assign(&mut self, other: &Mat) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dim("add_assign shape mismatch".into()));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Accumulate `other` into the top-left block of `self`.
    pub fn add_assign_block(&mut self, other: &Mat) -> Result<()> {
        if other.rows > self.rows || other.cols > self.cols {
            return Err(Error::Dim("add_assign_block too large".into()));
        }
        for i in 0..other.rows {
            let dst = &mut self.data[i * self.cols..i * self.cols + other.cols];
            for (d, s) in dst.iter_mut().zip(other.row(i)) {
                *d += s;
            }
        }
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Row-wise softmax with per-row max subtraction.
///
/// Rejects non-finite inputs rather than letting NaN propagate.
pub fn softmax_rows(a: &Mat) -> Result<Mat> {
    if !a.is_finite() {
        return Err(Error::Numeric("softmax_rows: non-finite input".into()));
    }
    let mut out = a.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        softmax_slice(row);
    }
    Ok(out)
}

/// In-place softmax of a slice with max-shift.
pub fn softmax_slice(row: &mut [f64]) {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - m).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Per-row layer normalization followed by a per-column affine map.
///
/// Uses population variance; `eps` sits under the square root.
pub fn layer_norm(x: &Mat, scale: &[f64], shift: &[f64], eps: f64) -> Result<Mat> {
    if scale.len() != x.cols() || shift.len() != x.cols() {
        return Err(Error::Dim(format!(
            "layer_norm affine length {}/{} vs {} cols",
            scale.len(),
            shift.len(),
            x.cols()
        )));
    }
    let (y, _) = layer_norm_cached(x, scale, shift, eps);
    Ok(y)
}

/// Per-row statistics saved by the layer-norm forward for its backward pass.
#[derive(Debug, Clone)]
pub struct LayerNormCache {
    /// Normalized pre-affine values.
    pub xhat: Mat,
    /// 1 / sqrt(var + eps) per row.
    pub inv_std: Vec<f64>,
}

pub fn layer_norm_cached(x: &Mat, scale: &[f64], shift: &[f64], eps: f64) -> (Mat, LayerNormCache) {
    let n = x.cols() as f64;
    let mut y = Mat::zeros(x.rows(), x.cols());
    let mut xhat = Mat::zeros(x.rows(), x.cols());
    let mut inv_std = Vec::with_capacity(x.rows());
    for i in 0..x.rows() {
        let row = x.row(i);
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let istd = 1.0 / (var + eps).sqrt();
        inv_std.push(istd);
        for j in 0..x.cols() {
            let h = (row[j] - mean) * istd;
            xhat.set(i, j, h);
            y.set(i, j, h * scale[j] + shift[j]);
        }
    }
    (y, LayerNormCache { xhat, inv_std })
}

/// Exact-erf GeLU: x * Phi(x) with Phi the standard normal CDF.
pub fn gelu(x: &Mat) -> Mat {
    let mut out = x.clone();
    for v in out.data_mut() {
        *v = gelu_scalar(*v);
    }
    out
}

#[inline]
pub fn gelu_scalar(x: f64) -> f64 {
    x * normal_cdf(x)
}

#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
