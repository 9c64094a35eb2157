//! Pose⊕point, point⊖pose, pose⊕pose and pose inversion in the three
//! parameterizations, with analytic Jacobians and first-order propagation.

use crate::convert::{
    jacobian_quat_to_ypr, jacobian_ypr_to_quat, matrix_to_ypr, norm_jacobian, quat_rotation,
    quat_to_ypr, unit, ypr_to_matrix, ypr_to_quat,
};
use crate::error::{Error, Result};
use crate::matderiv::{
    d_apply_wrt_point, d_apply_wrt_pose, d_compose_wrt_A, d_compose_wrt_B, d_inverse_wrt_pose,
    d_invapply_wrt_point, d_invapply_wrt_pose,
};
use crate::pose::{
    symmetrize, EulerPose, GaussianPoint3, GaussianPose, HomPose, Matrix7, Point3, Pose,
    QuatPose, Quaternion,
};
use nalgebra::{DMatrix, Matrix3, Matrix4, Matrix6, SMatrix};

// Sign that makes qr non-negative, applied to both value and Jacobian rows.
fn canonical_sign(q: &Quaternion) -> f64 {
    if q.qr < 0.0 {
        -1.0
    } else {
        1.0
    }
}

// ∂f_qr/∂q at the unit quaternion, before the normalization Jacobian.
fn dfqr_dq(q: &Quaternion, a: &Point3) -> SMatrix<f64, 3, 4> {
    let Quaternion { qr, qx, qy, qz } = *q;
    let (ax, ay, az) = (a.x, a.y, a.z);
    #[rustfmt::skip]
    let m = SMatrix::<f64, 3, 4>::new(
        -qz * ay + qy * az, qy * ay + qz * az,                 -2.0 * qy * ax + qx * ay + qr * az, -2.0 * qz * ax - qr * ay + qx * az,
        qz * ax - qx * az,  qy * ax - 2.0 * qx * ay - qr * az, qx * ax + qz * az,                  qr * ax - 2.0 * qz * ay + qy * az,
        -qy * ax + qx * ay, qz * ax + qr * ay - 2.0 * qx * az, -qr * ax + qz * ay - 2.0 * qy * az,  qx * ax + qy * ay,
    );
    m * 2.0
}

/// a' = p ⊕ a for a quaternion pose, with J_pose (3×7, normalization chained)
/// and J_point (3×3).
pub fn compose_point_quat(p: &QuatPose, a: &Point3) -> (Point3, SMatrix<f64, 3, 7>, Matrix3<f64>) {
    let q = unit(&p.q);
    let Quaternion { qr, qx, qy, qz } = q;
    let (ax, ay, az) = (a.x, a.y, a.z);
    let value = Point3::new(
        p.t.x + ax + 2.0 * (-(qy * qy + qz * qz) * ax + (qx * qy - qr * qz) * ay + (qr * qy + qx * qz) * az),
        p.t.y + ay + 2.0 * ((qr * qz + qx * qy) * ax - (qx * qx + qz * qz) * ay + (qy * qz - qr * qx) * az),
        p.t.z + az + 2.0 * ((qx * qz - qr * qy) * ax + (qr * qx + qy * qz) * ay - (qx * qx + qy * qy) * az),
    );
    #[rustfmt::skip]
    let j_point = Matrix3::new(
        0.5 - qy * qy - qz * qz, qx * qy - qr * qz,       qr * qy + qx * qz,
        qr * qz + qx * qy,       0.5 - qx * qx - qz * qz, qy * qz - qr * qx,
        qx * qz - qr * qy,       qr * qx + qy * qz,       0.5 - qx * qx - qy * qy,
    ) * 2.0;
    let mut j_pose = SMatrix::<f64, 3, 7>::zeros();
    j_pose.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    j_pose
        .fixed_view_mut::<3, 4>(0, 3)
        .copy_from(&(dfqr_dq(&q, a) * norm_jacobian(&p.q)));
    (value, j_pose, j_point)
}

/// p ⊕ a for a YPR pose. The value goes through the 4×4 matrix; J_point = R.
pub fn compose_point_ypr(p: &EulerPose, a: &Point3) -> (Point3, SMatrix<f64, 3, 6>, Matrix3<f64>) {
    let m = ypr_to_matrix(p);
    let value = m.transform_point(a);
    let (sf, cf) = p.yaw.sin_cos();
    let (sc, cc) = p.pitch.sin_cos();
    let (sp, cp) = p.roll.sin_cos();
    let (ax, ay, az) = (a.x, a.y, a.z);
    let mut j_pose = SMatrix::<f64, 3, 6>::zeros();
    j_pose.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    j_pose[(0, 3)] = -ax * sf * cc + ay * (-sf * sc * sp - cf * cp) + az * (-sf * sc * cp + cf * sp);
    j_pose[(0, 4)] = -ax * cf * sc + ay * cf * cc * sp + az * cf * cc * cp;
    j_pose[(0, 5)] = ay * (cf * sc * cp + sf * sp) + az * (-cf * sc * sp + sf * cp);
    j_pose[(1, 3)] = ax * cf * cc + ay * (cf * sc * sp - sf * cp) + az * (cf * sc * cp + sf * sp);
    j_pose[(1, 4)] = -ax * sf * sc + ay * sf * cc * sp + az * sf * cc * cp;
    j_pose[(1, 5)] = ay * (sf * sc * cp - cf * sp) + az * (-sf * sc * sp - cf * cp);
    j_pose[(2, 3)] = 0.0;
    j_pose[(2, 4)] = -ax * cc - ay * sc * sp - az * sc * cp;
    j_pose[(2, 5)] = ay * cc * cp - az * cc * sp;
    (value, j_pose, m.rotation())
}

/// The pose Jacobian of `compose_point_ypr` linearized at zero angles.
/// Only meaningful for very small rotations.
pub fn compose_point_ypr_small_rot_jacobian(a: &Point3) -> SMatrix<f64, 3, 6> {
    let mut j = SMatrix::<f64, 3, 6>::zeros();
    j.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    #[rustfmt::skip]
    let r = Matrix3::new(
        -a.y, a.z,  0.0,
        a.x,  0.0,  -a.z,
        0.0,  -a.x, a.y,
    );
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&r);
    j
}

pub fn compose_point_matrix(m: &HomPose, a: &Point3) -> Point3 {
    m.transform_point(a)
}

/// a ⊖ p = Rᵀ(a − t), with J_pose (3×7) and J_point = Rᵀ.
pub fn inv_compose_point_quat(a: &Point3, p: &QuatPose) -> (Point3, SMatrix<f64, 3, 7>, Matrix3<f64>) {
    let q = unit(&p.q);
    let Quaternion { qr, qx, qy, qz } = q;
    let rt = quat_rotation(&q).transpose();
    let d = a - p.t;
    let (dx, dy, dz) = (d.x, d.y, d.z);
    #[rustfmt::skip]
    let dq = SMatrix::<f64, 3, 4>::new(
        -qy * dz + qz * dy, qy * dy + qz * dz,                 qx * dy - 2.0 * qy * dx - qr * dz, qx * dz + qr * dy - 2.0 * qz * dx,
        qx * dz - qz * dx,  qy * dx - 2.0 * qx * dy + qr * dz, qx * dx + qz * dz,                 -qr * dx - 2.0 * qz * dy + qy * dz,
        qy * dx - qx * dy,  qz * dx - qr * dy - 2.0 * qx * dz, qz * dy + qr * dx - 2.0 * qy * dz, qx * dx + qy * dy,
    ) * 2.0;
    let mut j_pose = SMatrix::<f64, 3, 7>::zeros();
    j_pose.fixed_view_mut::<3, 3>(0, 0).copy_from(&(-rt));
    j_pose
        .fixed_view_mut::<3, 4>(0, 3)
        .copy_from(&(dq * norm_jacobian(&p.q)));
    (rt * d, j_pose, rt)
}

pub fn inv_compose_point_matrix(a: &Point3, m: &HomPose) -> Point3 {
    inverse_pose_matrix(m).transform_point(a)
}

fn quat_right_mult(q: &Quaternion) -> Matrix4<f64> {
    let Quaternion { qr, qx, qy, qz } = *q;
    #[rustfmt::skip]
    let m = Matrix4::new(
        qr, -qx, -qy, -qz,
        qx,  qr,  qz, -qy,
        qy, -qz,  qr,  qx,
        qz,  qy, -qx,  qr,
    );
    m
}

fn quat_left_mult(q: &Quaternion) -> Matrix4<f64> {
    let Quaternion { qr, qx, qy, qz } = *q;
    #[rustfmt::skip]
    let m = Matrix4::new(
        qr, -qx, -qy, -qz,
        qx,  qr, -qz,  qy,
        qy,  qz,  qr, -qx,
        qz, -qy,  qx,  qr,
    );
    m
}

/// p1 ⊕ p2 for quaternion poses. The Hamilton product of the stored
/// quaternions is normalized (and its Jacobian chained) on every call.
pub fn compose_pose_quat(p1: &QuatPose, p2: &QuatPose) -> (QuatPose, Matrix7, Matrix7) {
    let (t, jt_pose, _) = compose_point_quat(p1, &p2.t);
    let prod = p1.q.hamilton(&p2.q);
    let sign = canonical_sign(&prod);
    let n = norm_jacobian(&prod) * sign;
    let q = Quaternion::from_vector(&(prod.to_vector() * (sign / prod.norm())));

    let mut j1 = Matrix7::zeros();
    j1.fixed_view_mut::<3, 7>(0, 0).copy_from(&jt_pose);
    j1.fixed_view_mut::<4, 4>(3, 3)
        .copy_from(&(n * quat_right_mult(&p2.q)));

    let mut j2 = Matrix7::zeros();
    j2.fixed_view_mut::<3, 3>(0, 0).copy_from(&quat_rotation(&p1.q));
    j2.fixed_view_mut::<4, 4>(3, 3)
        .copy_from(&(n * quat_left_mult(&p1.q)));

    (QuatPose::from_raw(t, q), j1, j2)
}

/// p1 ⊕ p2 for YPR poses: value through matrices, Jacobians through the
/// chain ∂p₆/∂p₇ · ∂f_qc/∂p · ∂p₇/∂p₆.
pub fn compose_pose_ypr(p1: &EulerPose, p2: &EulerPose) -> Result<(EulerPose, Matrix6<f64>, Matrix6<f64>)> {
    let value = matrix_to_ypr(&ypr_to_matrix(p1).compose(&ypr_to_matrix(p2)));
    let (qc, jq1, jq2) = compose_pose_quat(&ypr_to_quat(p1), &ypr_to_quat(p2));
    let back = jacobian_quat_to_ypr(&qc)?;
    let j1 = back * jq1 * jacobian_ypr_to_quat(p1);
    let j2 = back * jq2 * jacobian_ypr_to_quat(p2);
    Ok((value, j1, j2))
}

pub fn compose_pose_matrix(m1: &HomPose, m2: &HomPose) -> Result<HomPose> {
    HomPose::try_from_matrix(*m1.compose(m2).matrix())
}

/// p⁻¹: translation f_qri(0, p), rotation the conjugate quaternion.
pub fn inverse_pose_quat(p: &QuatPose) -> (QuatPose, Matrix7) {
    let (t, jt, _) = inv_compose_point_quat(&Point3::zeros(), p);
    let qn = unit(&p.q);
    let sign = canonical_sign(&qn);
    let conj = Quaternion::from_vector(&(qn.conjugate().to_vector() * sign));
    let mut j = Matrix7::zeros();
    j.fixed_view_mut::<3, 7>(0, 0).copy_from(&jt);
    let flip = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, -1.0, -1.0)) * sign;
    j.fixed_view_mut::<4, 4>(3, 3)
        .copy_from(&(flip * norm_jacobian(&p.q)));
    (QuatPose::from_raw(t, conj), j)
}

/// [Rᵀ | −Rᵀ t], no general matrix inversion.
pub fn inverse_pose_matrix(m: &HomPose) -> HomPose {
    m.inverse()
}

pub fn inverse_pose_ypr(p: &EulerPose) -> EulerPose {
    matrix_to_ypr(&ypr_to_matrix(p).inverse())
}

/// Operations with two independent Gaussian operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    /// pose ⊕ pose
    ComposePoses,
    /// pose ⊕ point
    ComposePoint,
    /// point ⊖ pose
    InvComposePoint,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Gaussian {
    Pose(GaussianPose),
    Point(GaussianPoint3),
}

fn dyn_mat<const R: usize, const C: usize>(m: &SMatrix<f64, R, C>) -> DMatrix<f64> {
    DMatrix::from_column_slice(R, C, m.as_slice())
}

fn sandwich(j1: &DMatrix<f64>, c1: &DMatrix<f64>, j2: &DMatrix<f64>, c2: &DMatrix<f64>) -> DMatrix<f64> {
    symmetrize(&(j1 * c1 * j1.transpose() + j2 * c2 * j2.transpose()))
}

// Value and Jacobians of pose ⊕ point in the pose's own coordinates.
fn point_compose(pose: &Pose, a: &Point3) -> (Point3, DMatrix<f64>, DMatrix<f64>) {
    match pose {
        Pose::Quat(p) => {
            let (v, jp, ja) = compose_point_quat(p, a);
            (v, dyn_mat(&jp), dyn_mat(&ja))
        }
        Pose::Ypr(p) => {
            let (v, jp, ja) = compose_point_ypr(p, a);
            (v, dyn_mat(&jp), dyn_mat(&ja))
        }
        Pose::Matrix(m) => (
            compose_point_matrix(m, a),
            dyn_mat(&d_apply_wrt_pose(a)),
            dyn_mat(&d_apply_wrt_point(m)),
        ),
    }
}

fn point_inv_compose(a: &Point3, pose: &Pose) -> (Point3, DMatrix<f64>, DMatrix<f64>) {
    match pose {
        Pose::Quat(p) => {
            let (v, jp, ja) = inv_compose_point_quat(a, p);
            (v, dyn_mat(&jp), dyn_mat(&ja))
        }
        Pose::Ypr(p) => {
            let (v, jp, ja) = inv_compose_point_quat(a, &ypr_to_quat(p));
            (v, dyn_mat(&(jp * jacobian_ypr_to_quat(p))), dyn_mat(&ja))
        }
        Pose::Matrix(m) => (
            inv_compose_point_matrix(a, m),
            dyn_mat(&d_invapply_wrt_pose(m, a)),
            dyn_mat(&d_invapply_wrt_point(m)),
        ),
    }
}

fn pose_compose(p1: &Pose, p2: &Pose) -> Result<(Pose, DMatrix<f64>, DMatrix<f64>)> {
    match (p1, p2) {
        (Pose::Quat(a), Pose::Quat(b)) => {
            let (v, j1, j2) = compose_pose_quat(a, b);
            Ok((Pose::Quat(v), dyn_mat(&j1), dyn_mat(&j2)))
        }
        (Pose::Ypr(a), Pose::Ypr(b)) => {
            let (v, j1, j2) = compose_pose_ypr(a, b)?;
            Ok((Pose::Ypr(v), dyn_mat(&j1), dyn_mat(&j2)))
        }
        (Pose::Matrix(a), Pose::Matrix(b)) => Ok((
            Pose::Matrix(a.compose(b)),
            dyn_mat(&d_compose_wrt_A(b)),
            dyn_mat(&d_compose_wrt_B(a)),
        )),
        _ => Err(Error::Domain(
            "both poses must use the same parameterization".into(),
        )),
    }
}

fn point_cov(c: &Matrix3<f64>) -> DMatrix<f64> {
    dyn_mat(c)
}

/// mean = f(means), cov = J₁Σ₁J₁ᵀ + J₂Σ₂J₂ᵀ. The operands are assumed
/// independent; no cross-covariance is modelled.
pub fn propagate_binary(op: BinaryOp, g1: &Gaussian, g2: &Gaussian) -> Result<Gaussian> {
    match (op, g1, g2) {
        (BinaryOp::ComposePoses, Gaussian::Pose(a), Gaussian::Pose(b)) => {
            let (mean, j1, j2) = pose_compose(&a.mean, &b.mean)?;
            Ok(Gaussian::Pose(GaussianPose {
                mean,
                cov: sandwich(&j1, &a.cov, &j2, &b.cov),
            }))
        }
        (BinaryOp::ComposePoint, Gaussian::Pose(p), Gaussian::Point(a)) => {
            let (mean, jp, ja) = point_compose(&p.mean, &a.mean);
            let cov = sandwich(&jp, &p.cov, &ja, &point_cov(&a.cov));
            Ok(Gaussian::Point(GaussianPoint3 {
                mean,
                cov: Matrix3::from_column_slice(cov.as_slice()),
            }))
        }
        (BinaryOp::InvComposePoint, Gaussian::Point(a), Gaussian::Pose(p)) => {
            let (mean, jp, ja) = point_inv_compose(&a.mean, &p.mean);
            let cov = sandwich(&jp, &p.cov, &ja, &point_cov(&a.cov));
            Ok(Gaussian::Point(GaussianPoint3 {
                mean,
                cov: Matrix3::from_column_slice(cov.as_slice()),
            }))
        }
        _ => Err(Error::Domain(format!("operand kinds do not match {op:?}"))),
    }
}

/// First-order propagation through pose inversion.
pub fn propagate_inverse(g: &GaussianPose) -> Result<GaussianPose> {
    let (mean, j) = match &g.mean {
        Pose::Quat(p) => {
            let (v, j) = inverse_pose_quat(p);
            (Pose::Quat(v), dyn_mat(&j))
        }
        Pose::Matrix(m) => (Pose::Matrix(m.inverse()), dyn_mat(&d_inverse_wrt_pose(m))),
        Pose::Ypr(p) => {
            let (qi, j) = inverse_pose_quat(&ypr_to_quat(p));
            let back = jacobian_quat_to_ypr(&qi)?;
            (
                Pose::Ypr(quat_to_ypr(&qi)),
                dyn_mat(&(back * j * jacobian_ypr_to_quat(p))),
            )
        }
    };
    Ok(GaussianPose {
        mean,
        cov: symmetrize(&(&j * &g.cov * j.transpose())),
    })
}
