//! Dense complex-matrix helpers shared by every module.
//!
//! All operators in this crate are finite dimensional and dense; the carrier
//! type is [`CMat`], an `ndarray` matrix of `Complex64`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{CoreError, Result};

pub type CMat = Array2<Complex64>;
pub type CVec = Array1<Complex64>;

pub use ndarray::linalg::kron;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    Array2::eye(n)
}

/// Largest entry magnitude (max norm).
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Conjugate transpose.
pub fn adjoint(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

pub fn conj_entries(m: &CMat) -> CMat {
    m.mapv(|z| z.conj())
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn all_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn hermiticity_residual(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut r: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            r = r.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    r
}

pub fn ensure_square(m: &CMat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(CoreError::DimensionMismatch {
            left: m.nrows(),
            right: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn ensure_finite(m: &CMat) -> Result<()> {
    if all_finite(m) {
        Ok(())
    } else {
        Err(CoreError::NonFinite)
    }
}

/// `n` equally spaced points covering `[a, b]`, both endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + h * i as f64 })
        .collect()
}

/// New matrix made of the selected columns of `m`, in the given order.
pub fn select_columns(m: &CMat, idx: &[usize]) -> CMat {
    let mut out = Array2::zeros((m.nrows(), idx.len()));
    for (k, &j) in idx.iter().enumerate() {
        out.column_mut(k).assign(&m.column(j));
    }
    out
}
