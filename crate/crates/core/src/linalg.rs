//! Thin wrappers over `faer` for the dense kernels used by the propagators.
//!
//! Dense kernels always run sequentially; concurrency lives one level up
//! (grid points, time blocks), which keeps every result independent of the
//! worker count.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par, Side};
use ndarray::Array2;
use num_complex::Complex64 as C64;
use std::sync::Once;

use crate::error::{Result, VaetError};

static SEQUENTIAL: Once = Once::new();

fn sequential_kernels() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Clear the upper halves of the vector registers after a faer kernel.
///
/// Some kernels return with dirty 256-bit state, and every SSE libm call
/// afterwards (`sin`, `cos`, `exp` in the propagators) pays a transition
/// penalty of an order of magnitude.
#[inline]
fn settle() {
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx") {
            // SAFETY: the instruction exists when AVX is available, checked above.
            unsafe { zero_upper() }
        }
    }
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx")]
unsafe fn zero_upper() {
    std::arch::x86_64::_mm256_zeroupper();
}

pub fn real_from_array(a: &Array2<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn complex_from_array(a: &Array2<C64>) -> Mat<C64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn real_to_array(a: MatRef<'_, f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

pub fn complex_to_array(a: MatRef<'_, C64>) -> Array2<C64> {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
pub fn symmetric_eigen(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    sequential_kernels();
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| VaetError::Eigensolver { residual: f64::NAN })?;
    let values: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    let vectors = evd.U().to_owned();
    settle();
    Ok(sort_real(values, vectors))
}

fn sort_real(values: Vec<f64>, vectors: Mat<f64>) -> (Vec<f64>, Mat<f64>) {
    if values.windows(2).all(|w| w[0] <= w[1]) {
        return (values, vectors);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let sorted = order.iter().map(|&k| values[k]).collect();
    let perm = Mat::from_fn(vectors.nrows(), vectors.ncols(), |i, j| vectors[(i, order[j])]);
    (sorted, perm)
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &Mat<f64>) -> Result<Vec<f64>> {
    sequential_kernels();
    let mut values = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| VaetError::Eigensolver { residual: f64::NAN })?;
    settle();
    values.sort_by(|x, y| x.total_cmp(y));
    Ok(values)
}

/// Right eigenvectors and eigenvalues of a general complex matrix.
pub fn general_eigen(a: &Mat<C64>) -> Result<(Vec<C64>, Mat<C64>)> {
    sequential_kernels();
    let evd = a
        .eigen()
        .map_err(|_| VaetError::Eigensolver { residual: f64::NAN })?;
    let values = evd.S().column_vector().iter().copied().collect();
    let vectors = evd.U().to_owned();
    settle();
    Ok((values, vectors))
}

pub fn inverse(a: &Mat<C64>) -> Mat<C64> {
    use faer::linalg::solvers::DenseSolveCore;
    sequential_kernels();
    let inv = a.partial_piv_lu().inverse();
    settle();
    inv
}

pub fn mul_real(lhs: MatRef<'_, f64>, rhs: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::zeros(lhs.nrows(), rhs.ncols());
    matmul(out.as_mut(), Accum::Replace, lhs, rhs, 1.0, Par::Seq);
    settle();
    out
}

pub fn mul_complex(lhs: MatRef<'_, C64>, rhs: MatRef<'_, C64>) -> Mat<C64> {
    let mut out = Mat::zeros(lhs.nrows(), rhs.ncols());
    matmul(out.as_mut(), Accum::Replace, lhs, rhs, C64::new(1.0, 0.0), Par::Seq);
    settle();
    out
}

/// Induced 1-norm (max column sum) of a complex matrix.
pub fn norm_one(a: MatRef<'_, C64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
