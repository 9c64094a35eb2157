//! Jacobians with respect to a tangent perturbation ε = (d, ω) applied through
//! the pseudo-exponential, all evaluated at ε = 0, plus the graph-SLAM edge
//! Jacobians built from them.

use crate::error::{Error, Result};
use crate::lie::{se2_pseudo_log, se3_pseudo_log};
use crate::matderiv::{d_compose_wrt_A, d_invapply_wrt_pose, hat3, vee3_unchecked};
use crate::pose::{wrap_angle, HomPose, HomPose2, Point3};
use nalgebra::{Matrix3, Matrix6, SMatrix, Vector3, Vector6};
use std::f64::consts::PI;

/// Above this cos θ, `dlog_so3` switches to its series form around the identity.
pub const DLOG_COS_THRESHOLD: f64 = 0.999999;
/// Edge errors whose rotation is within this angle of π are rejected: dlog
/// grows like 1/sin³θ there.
pub const EDGE_NEAR_PI: f64 = 1e-3;

fn e(i: usize) -> Vector3<f64> {
    let mut v = Vector3::zeros();
    v[i] = 1.0;
    v
}

/// ∂vec(e^ω)/∂ω at ω = 0: three stacked blocks −hat(eᵢ).
pub fn dexp_so3_at_zero() -> SMatrix<f64, 9, 3> {
    let mut j = SMatrix::<f64, 9, 3>::zeros();
    for k in 0..3 {
        j.fixed_view_mut::<3, 3>(3 * k, 0).copy_from(&(-hat3(&e(k))));
    }
    j
}

/// ∂q/∂ω of the quaternion exponential, factored as A(4×4) · B(4×3) with
/// B = [I₃; ωᵀ/θ]. Valid for any ω; the limit at ω = 0 is [0; ½ I₃].
pub fn dexp_so3_quat(w: &Vector3<f64>) -> SMatrix<f64, 4, 3> {
    let theta = w.norm();
    if theta < crate::lie::SMALL_ANGLE {
        // q = (cos(θ/2), f(θ) ω), f = sin(θ/2)/θ ≈ ½ − θ²/48, f'(θ)/θ ≈ −1/24 + θ²/960.
        let t2 = theta * theta;
        let f = 0.5 - t2 / 48.0 + t2 * t2 / 3840.0;
        let g = -1.0 / 24.0 + t2 / 960.0;
        let mut j = SMatrix::<f64, 4, 3>::zeros();
        j.set_row(0, &(w.transpose() * (-0.5 * f)));
        j.fixed_view_mut::<3, 3>(1, 0)
            .copy_from(&(Matrix3::identity() * f + w * w.transpose() * g));
        return j;
    }
    let (s, c) = (0.5 * theta).sin_cos();
    let k = c / (2.0 * theta) - s / (theta * theta);
    let mut a = SMatrix::<f64, 4, 4>::zeros();
    a[(0, 3)] = -0.5 * s;
    for i in 0..3 {
        a[(i + 1, i)] = s / theta;
        a[(i + 1, 3)] = w[i] * k;
    }
    let mut b = SMatrix::<f64, 4, 3>::zeros();
    b.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    b.set_row(3, &(w.transpose() / theta));
    a * b
}

/// ∂vec₁₂(e^ε)/∂ε at ε = 0, ε = (d, ω).
pub fn dexp_se3_at_zero() -> SMatrix<f64, 12, 6> {
    let mut j = SMatrix::<f64, 12, 6>::zeros();
    j.fixed_view_mut::<9, 3>(0, 3).copy_from(&dexp_so3_at_zero());
    j.fixed_view_mut::<3, 3>(9, 0).copy_from(&Matrix3::identity());
    j
}

/// ∂ log(R)/∂vec(R) (3×9). Near the identity the coefficients are evaluated
/// by their series, whose leading term is the constant ±½ pattern.
pub fn dlog_so3(r: &Matrix3<f64>) -> SMatrix<f64, 3, 9> {
    let cos_t = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos_t.acos();
    let v = vee3_unchecked(&(r - r.transpose()));
    let (ka, b) = if cos_t > DLOG_COS_THRESHOLD {
        let t2 = theta * theta;
        (
            -1.0 / 12.0 - t2 / 30.0,
            0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0),
        )
    } else {
        let s = theta.sin();
        ((theta * cos_t - s) / (4.0 * s * s * s), theta / (2.0 * s))
    };
    let a = v * ka;
    #[rustfmt::skip]
    let j = SMatrix::<f64, 3, 9>::from_row_slice(&[
        a[0], 0.0, 0.0,  0.0, a[0], b,    0.0, -b,  a[0],
        a[1], 0.0, -b,   0.0, a[1], 0.0,  b,   0.0, a[1],
        a[2], b,   0.0,  -b,  a[2], 0.0,  0.0, 0.0, a[2],
    ]);
    j
}

/// ∂vec₁₂(e^ε · D)/∂ε.
#[allow(non_snake_case)]
pub fn jacob_expeD_de(d: &HomPose) -> SMatrix<f64, 12, 6> {
    let r = d.rotation();
    let mut j = SMatrix::<f64, 12, 6>::zeros();
    for k in 0..3 {
        let col: Vector3<f64> = r.column(k).into_owned();
        j.fixed_view_mut::<3, 3>(3 * k, 3).copy_from(&(-hat3(&col)));
    }
    j.fixed_view_mut::<3, 3>(9, 0).copy_from(&Matrix3::identity());
    j.fixed_view_mut::<3, 3>(9, 3).copy_from(&(-hat3(&d.translation())));
    j
}

/// ∂vec₁₂(D · e^ε)/∂ε.
#[allow(non_snake_case)]
pub fn jacob_Dexpe_de(d: &HomPose) -> SMatrix<f64, 12, 6> {
    let r = d.rotation();
    let (c1, c2, c3) = (r.column(0), r.column(1), r.column(2));
    let mut j = SMatrix::<f64, 12, 6>::zeros();
    for i in 0..3 {
        // Column triples (0, −d_c3, d_c2), (d_c3, 0, −d_c1), (−d_c2, d_c1, 0).
        j[(i, 4)] = -c3[i];
        j[(i, 5)] = c2[i];
        j[(3 + i, 3)] = c3[i];
        j[(3 + i, 5)] = -c1[i];
        j[(6 + i, 3)] = -c2[i];
        j[(6 + i, 4)] = c1[i];
    }
    j.fixed_view_mut::<3, 3>(9, 0).copy_from(&r);
    j
}

/// ∂((e^ε · D) ⊕ p)/∂ε = [I₃ | −hat(D ⊕ p)].
#[allow(non_snake_case)]
pub fn jacob_expeDp_de(d: &HomPose, p: &Point3) -> SMatrix<f64, 3, 6> {
    let g = d.transform_point(p);
    let mut j = SMatrix::<f64, 3, 6>::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&(-hat3(&g)));
    j
}

/// ∂(p ⊖ (e^ε · D))/∂ε = [−R_Dᵀ | R_Dᵀ hat(p)].
#[allow(non_snake_case)]
pub fn jacob_p_ominus_expeD_de(d: &HomPose, p: &Point3) -> SMatrix<f64, 3, 6> {
    let rt = d.rotation().transpose();
    let mut j = SMatrix::<f64, 3, 6>::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-rt));
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&(rt * hat3(p)));
    j
}

/// ∂vec₁₂(A · e^ε · D)/∂ε.
#[allow(non_snake_case)]
pub fn jacob_AexpeD_de(a: &HomPose, d: &HomPose) -> SMatrix<f64, 12, 6> {
    let ra = a.rotation();
    let r = d.rotation();
    let mut j = SMatrix::<f64, 12, 6>::zeros();
    for k in 0..3 {
        let col: Vector3<f64> = r.column(k).into_owned();
        j.fixed_view_mut::<3, 3>(3 * k, 3).copy_from(&(-ra * hat3(&col)));
    }
    j.fixed_view_mut::<3, 3>(9, 0).copy_from(&ra);
    j.fixed_view_mut::<3, 3>(9, 3).copy_from(&(-ra * hat3(&d.translation())));
    j
}

/// ∂(A · e^ε · D ⊕ p)/∂ε. Exact: R_A [I₃ | −hat(D ⊕ p)]. With `approx`, the
/// near-identity form [I₃ | −hat(p + d_t)].
#[allow(non_snake_case)]
pub fn jacob_AexpeDp_de(a: &HomPose, d: &HomPose, p: &Point3, approx: bool) -> SMatrix<f64, 3, 6> {
    let mut j = SMatrix::<f64, 3, 6>::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    if approx {
        j.fixed_view_mut::<3, 3>(0, 3)
            .copy_from(&(-hat3(&(p + d.translation()))));
        return j;
    }
    j.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(-hat3(&d.transform_point(p))));
    a.rotation() * j
}

/// ∂(p ⊖ (A · e^ε · D))/∂ε = [I₃ ⊗ (p − t_AD)ᵀ | −R_ADᵀ] · ∂vec₁₂(A e^ε D)/∂ε.
#[allow(non_snake_case)]
pub fn jacob_p_ominus_AexpeD_de(a: &HomPose, d: &HomPose, p: &Point3) -> SMatrix<f64, 3, 6> {
    d_invapply_wrt_pose(&a.compose(d), p) * jacob_AexpeD_de(a, d)
}

/// ∂ pseudo_log(T)/∂vec₁₂(T) = [[0₃ₓ₉, I₃], [dlog_so3(R), 0₃ₓ₃]].
pub fn dpseudolog_se3(t: &HomPose) -> SMatrix<f64, 6, 12> {
    let mut j = SMatrix::<f64, 6, 12>::zeros();
    j.fixed_view_mut::<3, 3>(0, 9).copy_from(&Matrix3::identity());
    j.fixed_view_mut::<3, 9>(3, 0)
        .copy_from(&dlog_so3(&t.rotation()));
    j
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeErrorSE3 {
    pub e: Vector6<f64>,
    pub j1: Matrix6<f64>,
    pub j2: Matrix6<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeErrorSE2 {
    pub e: Vector3<f64>,
    pub j1: Matrix3<f64>,
    pub j2: Matrix3<f64>,
}

/// e = pseudo_log(D⁻¹ P₁⁻¹ P₂) with Jacobians for P₁ ← P₁ e^ε₁ and P₂ ← P₂ e^ε₂.
pub fn edge_error_se3(d: &HomPose, p1: &HomPose, p2: &HomPose) -> Result<EdgeErrorSE3> {
    let d_inv = d.inverse();
    let rel = p1.inverse().compose(p2);
    let t = d_inv.compose(&rel);
    let e = se3_pseudo_log(&t).to_vector();
    let theta = e.fixed_rows::<3>(3).norm();
    if theta > PI - EDGE_NEAR_PI {
        return Err(Error::Range(format!(
            "edge error rotation θ = {theta} is too close to π"
        )));
    }
    let dlog = dpseudolog_se3(&t);
    let j1 = dlog * d_compose_wrt_A(&rel) * (-jacob_Dexpe_de(&d_inv));
    let j2 = dlog * jacob_Dexpe_de(&t);
    Ok(EdgeErrorSE3 { e, j1, j2 })
}

/// [[cos φ, −sin φ, 0], [sin φ, cos φ, 0], [0, 0, 1]].
pub fn rot3(phi: f64) -> Matrix3<f64> {
    crate::lie::rot_z(phi)
}

/// ∂ pseudo_log₂(D · e^ε)/∂ε.
#[allow(non_snake_case)]
pub fn jacob_Dexpe_de_se2(d: &HomPose2) -> Matrix3<f64> {
    rot3(d.phi())
}

/// ∂(A ⊕ B)/∂A in (x, y, φ) coordinates.
#[allow(non_snake_case)]
pub fn d_compose_se2_wrt_A(a: &HomPose2, b: &HomPose2) -> Matrix3<f64> {
    let (s, c) = a.phi().sin_cos();
    let (xb, yb) = (b.x(), b.y());
    Matrix3::new(
        1.0,
        0.0,
        -xb * s - yb * c,
        0.0,
        1.0,
        xb * c - yb * s,
        0.0,
        0.0,
        1.0,
    )
}

/// ∂(A ⊕ B)/∂B in (x, y, φ) coordinates.
#[allow(non_snake_case)]
pub fn d_compose_se2_wrt_B(a: &HomPose2) -> Matrix3<f64> {
    rot3(a.phi())
}

/// e = pseudo_log₂(D⁻¹ P₁⁻¹ P₂), angle wrapped to (−π, π].
pub fn edge_error_se2(d: &HomPose2, p1: &HomPose2, p2: &HomPose2) -> EdgeErrorSE2 {
    let d_inv = d.inverse();
    let rel = p1.inverse().compose(p2);
    let t = d_inv.compose(&rel);
    let mut e = se2_pseudo_log(&t);
    e.z = wrap_angle(e.z);
    let j1 = d_compose_se2_wrt_A(&d_inv, &rel) * (-rot3(d_inv.phi()));
    let j2 = rot3(t.phi());
    EdgeErrorSE2 { e, j1, j2 }
}
