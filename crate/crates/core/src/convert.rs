//! The twelve conversions between 3D+YPR, 3D+quaternion and matrix poses,
//! with the Jacobians used to carry covariances across them.

use crate::error::{Error, Result};
use crate::pose::{
    symmetrize, wrap_angle, EulerPose, GaussianPose, HomPose, Parameterization, Pose, QuatPose,
    Quaternion,
};
use nalgebra::{DMatrix, Matrix3, Matrix4, SMatrix, Vector4};
use std::f64::consts::FRAC_PI_2;

/// |Δ| above this selects the gimbal-lock branch of `quat_to_ypr`.
pub const GIMBAL_THRESHOLD: f64 = 0.5 - 1e-7;
/// √(p11² + p21²) below this selects the χ = ±90° branch of `matrix_to_ypr`.
pub const MATRIX_GIMBAL_EPS: f64 = 1e-10;

/// q/‖q‖ and its 4×4 Jacobian (‖q‖² I − q qᵀ)/‖q‖³.
pub fn quat_normalize(q: &Quaternion) -> Result<(Quaternion, Matrix4<f64>)> {
    let v = q.to_vector();
    let n2 = v.norm_squared();
    let n = n2.sqrt();
    if !(n > 1e-12) {
        return Err(Error::Domain(format!("cannot normalize quaternion of norm {n:e}")));
    }
    let j = (Matrix4::identity() * n2 - v * v.transpose()) / (n2 * n);
    Ok((Quaternion::from_vector(&(v / n)), j))
}

// Internal normalization for formulas that assume a unit quaternion.
pub(crate) fn unit(q: &Quaternion) -> Quaternion {
    Quaternion::from_vector(&(q.to_vector() / q.norm()))
}

pub(crate) fn norm_jacobian(q: &Quaternion) -> Matrix4<f64> {
    let v = q.to_vector();
    let n2 = v.norm_squared();
    (Matrix4::identity() * n2 - v * v.transpose()) / (n2 * n2.sqrt())
}

/// Rotation matrix of q/‖q‖.
pub fn quat_rotation(q: &Quaternion) -> Matrix3<f64> {
    let Quaternion { qr, qx, qy, qz } = unit(q);
    Matrix3::new(
        qr * qr + qx * qx - qy * qy - qz * qz,
        2.0 * (qx * qy - qr * qz),
        2.0 * (qz * qx + qr * qy),
        2.0 * (qx * qy + qr * qz),
        qr * qr - qx * qx + qy * qy - qz * qz,
        2.0 * (qy * qz - qr * qx),
        2.0 * (qz * qx - qr * qy),
        2.0 * (qy * qz + qr * qx),
        qr * qr - qx * qx - qy * qy + qz * qz,
    )
}

/// R = Rz(yaw) · Ry(pitch) · Rx(roll), expanded.
pub fn ypr_rotation(yaw: f64, pitch: f64, roll: f64) -> Matrix3<f64> {
    let (sf, cf) = yaw.sin_cos();
    let (sc, cc) = pitch.sin_cos();
    let (sp, cp) = roll.sin_cos();
    Matrix3::new(
        cf * cc,
        cf * sc * sp - sf * cp,
        cf * sc * cp + sf * sp,
        sf * cc,
        sf * sc * sp + cf * cp,
        sf * sc * cp - cf * sp,
        -sc,
        cc * sp,
        cc * cp,
    )
}

// Half-angle products. The letters follow (roll, pitch, yaw): `csc` is
// cos(ψ/2) sin(χ/2) cos(φ/2).
struct HalfProducts {
    ccc: f64,
    ccs: f64,
    csc: f64,
    css: f64,
    scc: f64,
    scs: f64,
    ssc: f64,
    sss: f64,
}

impl HalfProducts {
    fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        let (sp, cp) = (0.5 * roll).sin_cos();
        let (sc, cc) = (0.5 * pitch).sin_cos();
        let (sf, cf) = (0.5 * yaw).sin_cos();
        Self {
            ccc: cp * cc * cf,
            ccs: cp * cc * sf,
            csc: cp * sc * cf,
            css: cp * sc * sf,
            scc: sp * cc * cf,
            scs: sp * cc * sf,
            ssc: sp * sc * cf,
            sss: sp * sc * sf,
        }
    }
}

fn ypr_quaternion_raw(yaw: f64, pitch: f64, roll: f64) -> Quaternion {
    let h = HalfProducts::new(yaw, pitch, roll);
    Quaternion::new(
        h.ccc + h.sss,
        h.scc - h.css,
        h.csc + h.scs,
        h.ccs - h.ssc,
    )
}

/// Translation copied; rotation from the half-angle product formulas, sign
/// flipped if needed so that qr ≥ 0.
pub fn ypr_to_quat(p: &EulerPose) -> QuatPose {
    let q = ypr_quaternion_raw(p.yaw, p.pitch, p.roll);
    QuatPose::from_raw(p.translation(), q.canonical())
}

/// 7×6 Jacobian [I₃ 0; 0 ∂q/∂(φ,χ,ψ)] of `ypr_to_quat`.
pub fn jacobian_ypr_to_quat(p: &EulerPose) -> SMatrix<f64, 7, 6> {
    let h = HalfProducts::new(p.yaw, p.pitch, p.roll);
    #[rustfmt::skip]
    let mut dq = SMatrix::<f64, 4, 3>::new(
        h.ssc - h.ccs,    h.scs - h.csc,    h.css - h.scc,
        -(h.csc + h.scs), -(h.ssc + h.ccs), h.ccc + h.sss,
        h.scc - h.css,    h.ccc - h.sss,    h.ccs - h.ssc,
        h.ccc + h.sss,    -(h.css + h.scc), -(h.csc + h.scs),
    ) * 0.5;
    if h.ccc + h.sss < 0.0 {
        dq = -dq;
    }
    let mut j = SMatrix::<f64, 7, 6>::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    j.fixed_view_mut::<4, 3>(3, 3).copy_from(&dq);
    j
}

fn gimbal_delta(q: &Quaternion) -> f64 {
    q.qr * q.qy - q.qx * q.qz
}

/// Normalizes q, then recovers (yaw, pitch, roll). Near gimbal lock
/// (|Δ| > `GIMBAL_THRESHOLD`) roll is set to zero and yaw absorbs the rest.
pub fn quat_to_ypr(p: &QuatPose) -> EulerPose {
    let q = unit(&p.q);
    let Quaternion { qr, qx, qy, qz } = q;
    let delta = gimbal_delta(&q);
    let (yaw, pitch, roll) = if delta.abs() > GIMBAL_THRESHOLD {
        if delta < 0.0 {
            (wrap_angle(2.0 * qx.atan2(qr)), -FRAC_PI_2, 0.0)
        } else {
            (wrap_angle(-2.0 * qx.atan2(qr)), FRAC_PI_2, 0.0)
        }
    } else {
        (
            (2.0 * (qr * qz + qx * qy)).atan2(1.0 - 2.0 * (qy * qy + qz * qz)),
            (2.0 * delta).asin(),
            (2.0 * (qr * qx + qy * qz)).atan2(1.0 - 2.0 * (qx * qx + qy * qy)),
        )
    };
    EulerPose {
        x: p.t.x,
        y: p.t.y,
        z: p.t.z,
        yaw,
        pitch,
        roll,
    }
}

/// 6×7 Jacobian of `quat_to_ypr`: derivatives of the atan2/asin formulas at the
/// normalized quaternion, chained with the normalization Jacobian. No formula
/// exists for the gimbal-lock branches, so those inputs are rejected.
pub fn jacobian_quat_to_ypr(p: &QuatPose) -> Result<SMatrix<f64, 6, 7>> {
    let q = unit(&p.q);
    let Quaternion { qr, qx, qy, qz } = q;
    let delta = gimbal_delta(&q);
    if delta.abs() > GIMBAL_THRESHOLD {
        return Err(Error::SingularConfiguration(format!(
            "quaternion is in gimbal lock (Δ = {delta})"
        )));
    }
    let atan2_grad = |n: f64, d: f64, dn: Vector4<f64>, dd: Vector4<f64>| {
        (dn * d - dd * n) / (n * n + d * d)
    };
    let yaw = atan2_grad(
        2.0 * (qr * qz + qx * qy),
        1.0 - 2.0 * (qy * qy + qz * qz),
        Vector4::new(qz, qy, qx, qr) * 2.0,
        Vector4::new(0.0, 0.0, -4.0 * qy, -4.0 * qz),
    );
    let pitch = Vector4::new(qy, -qz, qr, -qx) * (2.0 / (1.0 - 4.0 * delta * delta).sqrt());
    let roll = atan2_grad(
        2.0 * (qr * qx + qy * qz),
        1.0 - 2.0 * (qx * qx + qy * qy),
        Vector4::new(qx, qr, qz, qy) * 2.0,
        Vector4::new(0.0, -4.0 * qx, -4.0 * qy, 0.0),
    );
    let mut da = SMatrix::<f64, 3, 4>::zeros();
    da.set_row(0, &yaw.transpose());
    da.set_row(1, &pitch.transpose());
    da.set_row(2, &roll.transpose());
    let mut j = SMatrix::<f64, 6, 7>::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    j.fixed_view_mut::<3, 4>(3, 3).copy_from(&(da * norm_jacobian(&p.q)));
    Ok(j)
}

pub fn ypr_to_matrix(p: &EulerPose) -> HomPose {
    HomPose::from_parts(&ypr_rotation(p.yaw, p.pitch, p.roll), &p.translation())
}

/// 12×6 Jacobian of vec₁₂(`ypr_to_matrix`).
pub fn jacobian_ypr_to_matrix(p: &EulerPose) -> SMatrix<f64, 12, 6> {
    let (sf, cf) = p.yaw.sin_cos();
    let (sc, cc) = p.pitch.sin_cos();
    let (sp, cp) = p.roll.sin_cos();
    let rz = Matrix3::new(cf, -sf, 0.0, sf, cf, 0.0, 0.0, 0.0, 1.0);
    let ry = Matrix3::new(cc, 0.0, sc, 0.0, 1.0, 0.0, -sc, 0.0, cc);
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cp, -sp, 0.0, sp, cp);
    let drz = Matrix3::new(-sf, -cf, 0.0, cf, -sf, 0.0, 0.0, 0.0, 0.0);
    let dry = Matrix3::new(-sc, 0.0, cc, 0.0, 0.0, 0.0, -cc, 0.0, -sc);
    let drx = Matrix3::new(0.0, 0.0, 0.0, 0.0, -sp, -cp, 0.0, cp, -sp);
    let mut j = SMatrix::<f64, 12, 6>::zeros();
    j.fixed_view_mut::<3, 3>(9, 0).copy_from(&Matrix3::identity());
    for (col, d) in [drz * ry * rx, rz * dry * rx, rz * ry * drx].iter().enumerate() {
        j.fixed_view_mut::<9, 1>(0, 3 + col)
            .copy_from_slice(d.as_slice());
    }
    j
}

pub fn quat_to_matrix(p: &QuatPose) -> HomPose {
    HomPose::from_parts(&quat_rotation(&p.q), &p.t)
}

/// 12×7 Jacobian of vec₁₂(`quat_to_matrix`), normalization included.
pub fn jacobian_quat_to_matrix(p: &QuatPose) -> SMatrix<f64, 12, 7> {
    let Quaternion { qr, qx, qy, qz } = unit(&p.q);
    // Rows follow vec(R): R11 R21 R31 R12 R22 R32 R13 R23 R33; columns (qr, qx, qy, qz).
    #[rustfmt::skip]
    let dr = SMatrix::<f64, 9, 4>::from_row_slice(&[
         qr,  qx, -qy, -qz,
         qz,  qy,  qx,  qr,
        -qy,  qz, -qr,  qx,
        -qz,  qy,  qx, -qr,
         qr, -qx,  qy, -qz,
         qx,  qr,  qz,  qy,
         qy,  qz,  qr,  qx,
        -qx, -qr,  qz,  qy,
         qr, -qx, -qy,  qz,
    ]) * 2.0;
    let mut j = SMatrix::<f64, 12, 7>::zeros();
    j.fixed_view_mut::<9, 4>(0, 3).copy_from(&(dr * norm_jacobian(&p.q)));
    j.fixed_view_mut::<3, 3>(9, 0).copy_from(&Matrix3::identity());
    j
}

/// Pitch from atan2(−p31, √(p11² + p21²)), then one of the three branch cases.
pub fn matrix_to_ypr(m: &HomPose) -> EulerPose {
    let p = m.matrix();
    let k = (p[(0, 0)] * p[(0, 0)] + p[(1, 0)] * p[(1, 0)]).sqrt();
    let t = m.translation();
    let (yaw, pitch, roll) = if k < MATRIX_GIMBAL_EPS {
        if p[(2, 0)] > 0.0 {
            ((-p[(1, 2)]).atan2(-p[(0, 2)]), -FRAC_PI_2, 0.0)
        } else {
            (p[(1, 2)].atan2(p[(0, 2)]), FRAC_PI_2, 0.0)
        }
    } else {
        (
            p[(1, 0)].atan2(p[(0, 0)]),
            (-p[(2, 0)]).atan2(k),
            p[(2, 1)].atan2(p[(2, 2)]),
        )
    };
    EulerPose {
        x: t.x,
        y: t.y,
        z: t.z,
        yaw,
        pitch,
        roll,
    }
}

/// Via 3D+YPR, which stays well conditioned for every rotation.
pub fn matrix_to_quat(m: &HomPose) -> QuatPose {
    ypr_to_quat(&matrix_to_ypr(m))
}

/// 6×12 Jacobian [0 I₃; ∂(φ,χ,ψ)/∂vec(R) 0] of `matrix_to_ypr`.
pub fn jacobian_ypr_wrt_matrix(m: &HomPose) -> Result<SMatrix<f64, 6, 12>> {
    let p = m.matrix();
    let (p11, p21, p31) = (p[(0, 0)], p[(1, 0)], p[(2, 0)]);
    let (p32, p33) = (p[(2, 1)], p[(2, 2)]);
    let k = p11 * p11 + p21 * p21;
    let r2 = p32 * p32 + p33 * p33;
    if !(k > 1e-12) || !(r2 > 1e-12) {
        return Err(Error::SingularConfiguration(format!(
            "pitch is degenerate (p11² + p21² = {k:e}, p32² + p33² = {r2:e})"
        )));
    }
    let sk = k.sqrt();
    let dp = k + p31 * p31;
    let mut j = SMatrix::<f64, 6, 12>::zeros();
    j.fixed_view_mut::<3, 3>(0, 9).copy_from(&Matrix3::identity());
    // vec(R) column-major: p11→0, p21→1, p31→2, p32→5, p33→8.
    j[(3, 0)] = -p21 / k;
    j[(3, 1)] = p11 / k;
    j[(4, 0)] = p11 * p31 / (sk * dp);
    j[(4, 1)] = p21 * p31 / (sk * dp);
    j[(4, 2)] = -sk / dp;
    j[(5, 5)] = p33 / r2;
    j[(5, 8)] = -p32 / r2;
    Ok(j)
}

/// 7×12 Jacobian of `matrix_to_quat`, chained through the YPR route.
pub fn jacobian_matrix_to_quat(m: &HomPose) -> Result<SMatrix<f64, 7, 12>> {
    let ypr = matrix_to_ypr(m);
    Ok(jacobian_ypr_to_quat(&ypr) * jacobian_ypr_wrt_matrix(m)?)
}

pub fn convert(pose: &Pose, target: Parameterization) -> Pose {
    match (pose, target) {
        (Pose::Ypr(p), Parameterization::Quat) => Pose::Quat(ypr_to_quat(p)),
        (Pose::Ypr(p), Parameterization::Matrix) => Pose::Matrix(ypr_to_matrix(p)),
        (Pose::Quat(p), Parameterization::Ypr) => Pose::Ypr(quat_to_ypr(p)),
        (Pose::Quat(p), Parameterization::Matrix) => Pose::Matrix(quat_to_matrix(p)),
        (Pose::Matrix(m), Parameterization::Ypr) => Pose::Ypr(matrix_to_ypr(m)),
        (Pose::Matrix(m), Parameterization::Quat) => Pose::Quat(matrix_to_quat(m)),
        _ => *pose,
    }
}

/// Jacobian of `convert(pose, target)` with respect to the source coordinates.
pub fn conversion_jacobian(pose: &Pose, target: Parameterization) -> Result<DMatrix<f64>> {
    fn dm<const R: usize, const C: usize>(m: SMatrix<f64, R, C>) -> DMatrix<f64> {
        DMatrix::from_column_slice(R, C, m.as_slice())
    }
    Ok(match (pose, target) {
        (Pose::Ypr(p), Parameterization::Quat) => dm(jacobian_ypr_to_quat(p)),
        (Pose::Ypr(p), Parameterization::Matrix) => dm(jacobian_ypr_to_matrix(p)),
        (Pose::Quat(p), Parameterization::Ypr) => dm(jacobian_quat_to_ypr(p)?),
        (Pose::Quat(p), Parameterization::Matrix) => dm(jacobian_quat_to_matrix(p)),
        (Pose::Matrix(m), Parameterization::Ypr) => dm(jacobian_ypr_wrt_matrix(m)?),
        (Pose::Matrix(m), Parameterization::Quat) => dm(jacobian_matrix_to_quat(m)?),
        _ => DMatrix::identity(target.dim(), target.dim()),
    })
}

/// Converts the mean and maps the covariance as J Σ Jᵀ (first order).
pub fn convert_gaussian(src: &GaussianPose, target: Parameterization) -> Result<GaussianPose> {
    let j = conversion_jacobian(&src.mean, target)?;
    Ok(GaussianPose {
        mean: convert(&src.mean, target),
        cov: symmetrize(&(&j * &src.cov * j.transpose())),
    })
}
