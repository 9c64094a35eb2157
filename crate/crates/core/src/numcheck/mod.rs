//! Central-difference oracles, plain and on-manifold, and the catalog that
//! runs every analytic Jacobian in the crate against them.

mod catalog;
pub mod sampling;

pub use catalog::{catalog_names, check_catalog};

use crate::error::{Error, Result};
use crate::lie::{se2_pseudo_exp, se3_pseudo_exp, TangentSE3};
use crate::pose::{HomPose, HomPose2};
use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use serde::Serialize;

pub const DEFAULT_STEP: f64 = 1e-6;

/// Column i is (f(x0 + h eᵢ) − f(x0 − h eᵢ)) / 2h, where 2h is the step
/// actually representable at x0ᵢ.
pub fn numeric_jacobian<F>(f: F, x0: &DVector<f64>, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = x0.len();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        let (xp, xm) = (x0[i] + h, x0[i] - h);
        let eval = |xi: f64| {
            let mut x = x0.clone();
            x[i] = xi;
            f(&x).map_err(|e| Error::Differencing {
                column: i,
                source: Box::new(e),
            })
        };
        let hi = eval(xp)?;
        let lo = eval(xm)?;
        if hi.len() != lo.len() || cols.first().is_some_and(|c| c.len() != hi.len()) {
            return Err(Error::Differencing {
                column: i,
                source: Box::new(Error::Domain("function output length changed".into())),
            });
        }
        cols.push((hi - lo) / (xp - xm));
    }
    if cols.is_empty() {
        let m = f(x0)?.len();
        return Ok(DMatrix::zeros(m, 0));
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Which side the perturbation e^ε multiplies the base pose on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Poses that can be perturbed by the pseudo-exponential of a tangent vector.
pub trait Perturbable: Sized {
    const DOF: usize;
    fn perturb(&self, eps: &DVector<f64>, side: Side) -> Self;
}

impl Perturbable for HomPose {
    const DOF: usize = 6;
    fn perturb(&self, eps: &DVector<f64>, side: Side) -> Self {
        let v = Vector6::from_iterator(eps.iter().copied());
        let e = se3_pseudo_exp(&TangentSE3::from_vector(&v));
        match side {
            Side::Left => e.compose(self),
            Side::Right => self.compose(&e),
        }
    }
}

impl Perturbable for HomPose2 {
    const DOF: usize = 3;
    fn perturb(&self, eps: &DVector<f64>, side: Side) -> Self {
        let e = se2_pseudo_exp(&Vector3::new(eps[0], eps[1], eps[2]));
        match side {
            Side::Left => e.compose(self),
            Side::Right => self.compose(&e),
        }
    }
}

/// Central differences of f over the tangent coordinates (translation first)
/// of `base`, perturbed on `side`.
pub fn manifold_numeric_jacobian<P, F>(f: F, base: &P, side: Side, h: f64) -> Result<DMatrix<f64>>
where
    P: Perturbable,
    F: Fn(&P) -> Result<DVector<f64>>,
{
    numeric_jacobian(|eps| f(&base.perturb(eps, side)), &DVector::zeros(P::DOF), h)
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct JacobianReport {
    pub op: String,
    pub max_abs_error: f64,
    pub worst_row: usize,
    pub worst_col: usize,
    #[serde(skip)]
    pub analytic: DMatrix<f64>,
    #[serde(skip)]
    pub numeric: DMatrix<f64>,
    pub pass: bool,
}

impl JacobianReport {
    /// Elementwise comparison. A shape mismatch or non-finite entry counts as
    /// an infinite error.
    pub fn compare(op: &str, analytic: DMatrix<f64>, numeric: DMatrix<f64>, tol: f64) -> Self {
        let mut worst = (0.0_f64, 0, 0);
        if analytic.shape() != numeric.shape() {
            worst.0 = f64::INFINITY;
        } else {
            for c in 0..analytic.ncols() {
                for r in 0..analytic.nrows() {
                    let d = (analytic[(r, c)] - numeric[(r, c)]).abs();
                    let d = if d.is_nan() { f64::INFINITY } else { d };
                    if d > worst.0 {
                        worst = (d, r, c);
                    }
                }
            }
        }
        Self {
            op: op.to_string(),
            max_abs_error: worst.0,
            worst_row: worst.1,
            worst_col: worst.2,
            analytic,
            numeric,
            pass: worst.0 <= tol,
        }
    }
}
