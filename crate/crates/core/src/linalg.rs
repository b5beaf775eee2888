//! Floating-point spectral helpers backed by nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub type CMat = DMatrix<Complex64>;

pub fn to_cmat<S: Scalar>(m: &Matrix<S>) -> CMat {
    CMat::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].to_complex())
}

pub fn from_cmat(m: &CMat) -> Matrix<Complex64> {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_apply(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (vals, vecs) = hermitian_eigen(m);
    let n = m.nrows();
    let d = CMat::from_fn(n, n, |i, j| if i == j { Complex64::new(f(vals[i]), 0.0) } else { Complex64::new(0.0, 0.0) });
    &vecs * d * vecs.adjoint()
}

/// Square root of a positive semidefinite matrix; eigenvalues below
/// `clip` are set to zero.
pub fn psd_sqrt(m: &CMat, clip: f64) -> CMat {
    hermitian_apply(m, |x| if x <= clip { 0.0 } else { x.sqrt() })
}

/// Inverse square root on the support; eigenvalues below `clip` give zero.
pub fn psd_inv_sqrt(m: &CMat, clip: f64) -> CMat {
    hermitian_apply(m, |x| if x <= clip { 0.0 } else { 1.0 / x.sqrt() })
}

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Smallest eigenvalue together with a unit eigenvector.
pub fn min_eigen(m: &CMat) -> (f64, Vec<Complex64>) {
    let (vals, vecs) = hermitian_eigen(m);
    match vals.first() {
        Some(&v) => (v, vecs.column(0).iter().cloned().collect()),
        None => (0.0, Vec::new()),
    }
}

pub fn max_abs_eigen(m: &CMat) -> f64 {
    hermitian_eigen(m).0.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// PSD test with tolerance relative to the largest eigenvalue magnitude.
pub fn is_psd(m: &CMat, rel_tol: f64) -> bool {
    let (vals, _) = hermitian_eigen(m);
    let scale = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    vals.first().is_none_or(|&v| v >= -rel_tol * scale.max(1e-300))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn format_vec(v: &[Complex64]) -> String {
    let parts: Vec<String> = v.iter().map(|z| format!("[{:.6e},{:.6e}]", z.re, z.im)).collect();
    format!("[{}]", parts.join(","))
}
