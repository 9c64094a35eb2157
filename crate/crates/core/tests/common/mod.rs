#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Dim, Matrix, Matrix3, RawStorage, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rigidkit::numcheck::{numeric_jacobian, DEFAULT_STEP};
use rigidkit::Result;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_d<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

pub fn to_dv<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.iter().copied())
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn fd<F>(f: F, x0: &DVector<f64>) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    numeric_jacobian(f, x0, DEFAULT_STEP).unwrap()
}

/// Truncated power series Σ Aᵏ/k!, the independent oracle for exp maps.
pub fn series_exp(a: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let mut sum = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..terms {
        term = &term * a / k as f64;
        sum += &term;
    }
    sum
}

pub fn hat(w: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -w.z, w.y, w.z, 0.0, -w.x, -w.y, w.x, 0.0)
}

/// Sample covariance with the 1/(N−1) normalization.
pub fn sample_cov(samples: &[DVector<f64>]) -> DMatrix<f64> {
    let n = samples.len() as f64;
    let dim = samples[0].len();
    let mean = samples.iter().fold(DVector::zeros(dim), |acc, s| acc + s) / n;
    let mut c = DMatrix::zeros(dim, dim);
    for s in samples {
        let d = s - &mean;
        c += &d * d.transpose();
    }
    c / (n - 1.0)
}

pub fn rel_frob(a: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    (a - reference).norm() / reference.norm()
}

/// Five-point central stencil, O(h⁴). Used where Jacobian entries are large enough
/// that the plain central difference is dominated by truncation error.
pub fn fd5<F>(f: F, x0: &DVector<f64>, h: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let y0 = f(x0).unwrap();
    let mut j = DMatrix::zeros(y0.len(), x0.len());
    for i in 0..x0.len() {
        let at = |k: f64| {
            let mut x = x0.clone();
            x[i] += k * h;
            f(&x).unwrap()
        };
        let col = (at(-2.0) - at(2.0) + (at(1.0) - at(-1.0)) * 8.0) / (12.0 * h);
        j.set_column(i, &col);
    }
    j
}
