//! Exponential and logarithm maps for SO(3), SE(3) and SE(2), plus the
//! pseudo-exponential variants that keep the translation verbatim.

use crate::error::{Error, Result};
use crate::matderiv::{hat3, vee3_unchecked};
use crate::pose::{HomPose, HomPose2, Quaternion};
use nalgebra::{Matrix2, Matrix3, Vector2, Vector3, Vector6};
use std::f64::consts::PI;

/// Below this angle the trigonometric coefficients switch to Taylor series.
pub const SMALL_ANGLE: f64 = 1e-4;
/// Rotations with θ > π − NEAR_PI take the symmetric-matrix axis route in `so3_log`.
pub const NEAR_PI: f64 = 1e-6;
/// Within this of π, `so3_log` takes θ from atan2(‖vee(R − Rᵀ)‖/2, cos θ).
/// Below it the trace-only form is used, whose extrinsic derivative is `dlog_so3`.
pub const LOG_ATAN2_MARGIN: f64 = 0.05;

/// Tangent coordinates of SE(3), translation first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentSE3 {
    pub t: Vector3<f64>,
    pub w: Vector3<f64>,
}

impl TangentSE3 {
    pub fn new(t: Vector3<f64>, w: Vector3<f64>) -> Self {
        Self { t, w }
    }

    pub fn zero() -> Self {
        Self::new(Vector3::zeros(), Vector3::zeros())
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(v.fixed_rows::<3>(0).into_owned(), v.fixed_rows::<3>(3).into_owned())
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.t.x, self.t.y, self.t.z, self.w.x, self.w.y, self.w.z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentSE2 {
    pub t: Vector2<f64>,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub n: Vector3<f64>,
    pub theta: f64,
}

/// sin θ / θ
pub(crate) fn coeff_a(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        theta.sin() / theta
    }
}

/// (1 − cos θ) / θ²
pub(crate) fn coeff_b(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        0.5 - t2 / 24.0 + t2 * t2 / 720.0
    } else {
        (1.0 - theta.cos()) / (theta * theta)
    }
}

/// (θ − sin θ) / θ³
pub(crate) fn coeff_c(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    } else {
        (theta - theta.sin()) / (theta * theta * theta)
    }
}

/// (1 − θ cos(θ/2) / (2 sin(θ/2))) / θ², the ŵ² coefficient of V⁻¹.
pub(crate) fn coeff_vinv(theta: f64) -> f64 {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        let h = 0.5 * theta;
        (1.0 - h * h.cos() / h.sin()) / (theta * theta)
    }
}

/// Rodrigues: I + (sin θ/θ) ŵ + ((1 − cos θ)/θ²) ŵ².
pub fn so3_exp(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = hat3(w);
    Matrix3::identity() + k * coeff_a(theta) + k * k * coeff_b(theta)
}

/// The same rotation written entry by entry in terms of the unit axis.
pub fn so3_exp_coordinate(a: &AxisAngle) -> Matrix3<f64> {
    let (s, c) = a.theta.sin_cos();
    let v = 1.0 - c;
    let (n1, n2, n3) = (a.n.x, a.n.y, a.n.z);
    Matrix3::new(
        c + n1 * n1 * v,
        n1 * n2 * v - n3 * s,
        n1 * n3 * v + n2 * s,
        n1 * n2 * v + n3 * s,
        c + n2 * n2 * v,
        n2 * n3 * v - n1 * s,
        n1 * n3 * v - n2 * s,
        n2 * n3 * v + n1 * s,
        c + n3 * n3 * v,
    )
}

pub fn rot_z(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// R(n, θ) = P · Rz(θ) · Pᵀ with P orthogonal and third column n.
pub fn axis_angle_factorization(a: &AxisAngle) -> Result<(Matrix3<f64>, Matrix3<f64>)> {
    let (n1, n2, n3) = (a.n.x, a.n.y, a.n.z);
    let s2 = n1 * n1 + n2 * n2;
    if !(s2 > 1e-12) {
        return Err(Error::Domain("axis is parallel to z; the factorization is undefined".into()));
    }
    let s = s2.sqrt();
    let p = Matrix3::new(
        n3 * n1 / s,
        -n2 / s,
        n1,
        n3 * n2 / s,
        n1 / s,
        n2,
        -s,
        0.0,
        n3,
    );
    Ok((p, rot_z(a.theta)))
}

/// Unit quaternion (cos(θ/2), sin(θ/2)/θ · ω).
pub fn so3_exp_quat(w: &Vector3<f64>) -> Quaternion {
    let theta = w.norm();
    let k = if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        0.5 * (1.0 - t2 / 24.0 + t2 * t2 / 1920.0)
    } else {
        (0.5 * theta).sin() / theta
    };
    Quaternion::new((0.5 * theta).cos(), k * w.x, k * w.y, k * w.z)
}

/// Rotation vector of R with θ ∈ [0, π]. At θ = π the overall sign of the axis
/// is free; the largest-magnitude component is made positive.
pub fn so3_log(r: &Matrix3<f64>) -> Vector3<f64> {
    let tr = r.trace();
    let cos_t = ((tr - 1.0) * 0.5).clamp(-1.0, 1.0);
    let v = vee3_unchecked(&(r - r.transpose()));
    let mut theta = cos_t.acos();
    let mut sin_t = theta.sin();
    if theta > PI - LOG_ATAN2_MARGIN {
        // Here acos amplifies the rounding of tr R by 1/sin θ and θ/(2 sin θ)
        // inherits it. ‖v‖ = 2 sin θ carries the angle at full precision.
        sin_t = 0.5 * v.norm();
        theta = sin_t.atan2(cos_t);
    }
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        return v * (0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0));
    }
    if theta > PI - NEAR_PI {
        return axis_near_pi(r, tr, &v) * theta;
    }
    v * (theta / (2.0 * sin_t))
}

// S = R + Rᵀ + (1 − tr R) I = 2(1 − cos θ) n nᵀ.
fn axis_near_pi(r: &Matrix3<f64>, tr: f64, v: &Vector3<f64>) -> Vector3<f64> {
    let s = r + r.transpose() + Matrix3::identity() * (1.0 - tr);
    let denom = 3.0 - tr;
    let j = (0..3).max_by(|&a, &b| s[(a, a)].total_cmp(&s[(b, b)])).unwrap_or(0);
    let nj = (s[(j, j)] / denom).max(0.0).sqrt();
    let mut n = Vector3::zeros();
    for k in 0..3 {
        n[k] = if k == j { nj } else { s[(j, k)] / (denom * nj) };
    }
    n /= n.norm();
    let d = n.dot(v);
    if d.abs() > 1e-12 && d < 0.0 {
        -n
    } else {
        n
    }
}

/// ω = 2 acos(qr)/‖q_v‖ · q_v, evaluated as 2 atan2(‖q_v‖, qr)/‖q_v‖ on the qr ≥ 0 sign.
pub fn so3_log_quat(q: &Quaternion) -> Vector3<f64> {
    let q = q.canonical();
    let qv = q.vector_part();
    let s = qv.norm();
    let k = if s < 1e-8 {
        2.0 / q.qr * (1.0 - s * s / (3.0 * q.qr * q.qr))
    } else {
        2.0 * s.atan2(q.qr) / s
    };
    qv * k
}

/// V = I + ((1 − cos θ)/θ²) ŵ + ((θ − sin θ)/θ³) ŵ².
pub fn se3_v(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = hat3(w);
    Matrix3::identity() + k * coeff_b(theta) + k * k * coeff_c(theta)
}

/// V⁻¹ = I − ½ ŵ + ((1 − θ cos(θ/2)/(2 sin(θ/2)))/θ²) ŵ².
pub fn se3_v_inv(w: &Vector3<f64>) -> Matrix3<f64> {
    let theta = w.norm();
    let k = hat3(w);
    Matrix3::identity() - k * 0.5 + k * k * coeff_vinv(theta)
}

pub fn se3_exp(v: &TangentSE3) -> HomPose {
    HomPose::from_parts(&so3_exp(&v.w), &(se3_v(&v.w) * v.t))
}

/// Fails with a range error when the rotation angle is within `NEAR_PI` of π,
/// where V⁻¹ degrades. `se3_pseudo_log` stays usable there.
pub fn se3_log(m: &HomPose) -> Result<TangentSE3> {
    let w = so3_log(&m.rotation());
    let theta = w.norm();
    if theta > PI - NEAR_PI {
        return Err(Error::Range(format!(
            "SE(3) log is not supported for rotation angles within {NEAR_PI:e} of π (θ = {theta})"
        )));
    }
    Ok(TangentSE3::new(se3_v_inv(&w) * m.translation(), w))
}

pub fn se3_pseudo_exp(v: &TangentSE3) -> HomPose {
    HomPose::from_parts(&so3_exp(&v.w), &v.t)
}

pub fn se3_pseudo_log(m: &HomPose) -> TangentSE3 {
    TangentSE3::new(m.translation(), so3_log(&m.rotation()))
}

fn j2() -> Matrix2<f64> {
    Matrix2::new(0.0, -1.0, 1.0, 0.0)
}

pub fn se2_v(phi: f64) -> Matrix2<f64> {
    let t = phi.abs();
    Matrix2::identity() * coeff_a(t) + j2() * (phi * coeff_b(t))
}

pub fn se2_v_inv(phi: f64) -> Matrix2<f64> {
    let t = phi.abs();
    Matrix2::identity() * (1.0 - phi * phi * coeff_vinv(t)) - j2() * (0.5 * phi)
}

pub fn se2_exp(v: &TangentSE2) -> HomPose2 {
    let t = se2_v(v.phi) * v.t;
    HomPose2::new(t.x, t.y, v.phi)
}

pub fn se2_log(m: &HomPose2) -> TangentSE2 {
    let phi = m.phi();
    TangentSE2 {
        t: se2_v_inv(phi) * Vector2::new(m.x(), m.y()),
        phi,
    }
}

/// (x, y, φ) ↦ [rot(φ) | (x, y)].
pub fn se2_pseudo_exp(v: &Vector3<f64>) -> HomPose2 {
    HomPose2::new(v.x, v.y, v.z)
}

pub fn se2_pseudo_log(m: &HomPose2) -> Vector3<f64> {
    Vector3::new(m.x(), m.y(), m.phi())
}
