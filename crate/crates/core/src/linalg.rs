//! Small dense matrix and vector helpers.
//!
//! Dimensions in this crate are tiny (a handful of states and inputs), so a
//! row-major `Vec<f64>` is all that is needed.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// 1×1 matrix.
    pub fn scalar(v: f64) -> Self {
        Matrix { rows: 1, cols: 1, data: vec![v] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "matrix data",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch { what: "matrix row", expected: cols, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn frobenius(&self) -> f64 {
        norm(&self.data)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// `self · v`, without dimension checks (callers validate shapes).
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(v, &mut out);
        out
    }

    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(r), v);
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Matrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// Spectral radius from Gelfand's formula, evaluated by repeated squaring
    /// with renormalization. With `L_k = log ||A^k||`, the estimate
    /// `exp((L_{2k} − L_k)/k)` cancels the constant offset of `L_k`.
    ///
    /// Unlike vector power iteration this converges when the dominant
    /// eigenvalues form a complex pair. Stops once successive estimates agree
    /// to `tol` (relative) or after `max_iter` squarings.
    pub fn spectral_radius(&self, tol: f64, max_iter: usize) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        let n0 = self.frobenius();
        if n0 == 0.0 {
            return 0.0;
        }
        let mut m = self.scaled(1.0 / n0);
        let mut log_norm = libm::log(n0);
        let mut k = 1.0_f64;
        let mut prev = n0;
        // beyond ~60 squarings k overflows the useful range of f64 exponents
        for _ in 0..max_iter.min(60) {
            m = m.matmul(&m);
            let nm = m.frobenius();
            if nm == 0.0 {
                return 0.0;
            }
            m = m.scaled(1.0 / nm);
            let next = 2.0 * log_norm + libm::log(nm);
            let est = libm::exp((next - log_norm) / k);
            log_norm = next;
            k *= 2.0;
            if (est - prev).abs() <= tol * est {
                return est;
            }
            prev = est;
        }
        prev
    }

    /// Largest singular value by power iteration on AᵀA.
    pub fn operator_norm(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let mut v = vec![1.0; self.cols];
        let mut sigma = 0.0;
        for _ in 0..10_000 {
            let av = self.mul_vec(&v);
            let mut atav = vec![0.0; self.cols];
            for r in 0..self.rows {
                axpy(av[r], self.row(r), &mut atav);
            }
            let n = norm(&atav);
            if n == 0.0 {
                return 0.0;
            }
            for (vi, a) in v.iter_mut().zip(&atav) {
                *vi = a / n;
            }
            let s = libm::sqrt(n);
            if (s - sigma).abs() <= 1e-13 * s {
                return s;
            }
            sigma = s;
        }
        sigma
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(a.iter().map(|v| v * v).sum())
}

/// `y += s·x`
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn check_len(what: &'static str, v: &[f64], expected: usize) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, found: v.len() })
    }
}
