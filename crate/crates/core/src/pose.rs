//! Pose parameterizations: 3D+YPR, 3D+quaternion, homogeneous matrices, and
//! their Gaussian counterparts.

use crate::error::{Error, Result};
use nalgebra::{
    DMatrix, DVector, Matrix3, Matrix4, SMatrix, SVector, Vector3, Vector4, Vector6,
};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

pub type Point3 = Vector3<f64>;
/// Column-major vec of the top 3×4 block of a pose: R columns first, then t.
pub type Vec12 = SVector<f64, 12>;
pub type Vector7 = SVector<f64, 7>;
pub type Matrix7 = SMatrix<f64, 7, 7>;
pub type Matrix12 = SMatrix<f64, 12, 12>;

/// Wraps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// (Σ + Σᵀ)/2.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub qr: f64,
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
}

impl Quaternion {
    pub const fn new(qr: f64, qx: f64, qy: f64, qz: f64) -> Self {
        Self { qr, qx, qy, qz }
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    /// Components in (qr, qx, qy, qz) order.
    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.qr, self.qx, self.qy, self.qz)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }

    pub fn vector_part(&self) -> Vector3<f64> {
        Vector3::new(self.qx, self.qy, self.qz)
    }

    /// Flips the overall sign so that qr ≥ 0. Exact.
    pub fn canonical(&self) -> Self {
        if self.qr < 0.0 {
            Self::new(-self.qr, -self.qx, -self.qy, -self.qz)
        } else {
            *self
        }
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.qr, -self.qx, -self.qy, -self.qz)
    }

    /// Hamilton product `self ⊗ rhs`, not normalized.
    pub fn hamilton(&self, rhs: &Quaternion) -> Self {
        let (a, b) = (self, rhs);
        Self::new(
            a.qr * b.qr - a.qx * b.qx - a.qy * b.qy - a.qz * b.qz,
            a.qr * b.qx + b.qr * a.qx + a.qy * b.qz - b.qy * a.qz,
            a.qr * b.qy + b.qr * a.qy + a.qz * b.qx - b.qz * a.qx,
            a.qr * b.qz + b.qr * a.qz + a.qx * b.qy - b.qx * a.qy,
        )
    }
}

/// 3D translation plus yaw (φ, about Z), pitch (χ, about Y) and roll (ψ, about X).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerPose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EulerPose {
    /// Normalizing constructor: yaw and roll end in (−π, π], pitch in [−π/2, π/2],
    /// describing the same rotation as the raw angles.
    pub fn new(x: f64, y: f64, z: f64, yaw: f64, pitch: f64, roll: f64) -> Self {
        let mut p = wrap_angle(pitch);
        let (mut yw, mut rl) = (yaw, roll);
        if p > FRAC_PI_2 {
            p = PI - p;
            yw += PI;
            rl += PI;
        } else if p < -FRAC_PI_2 {
            p = -PI - p;
            yw += PI;
            rl += PI;
        }
        Self {
            x,
            y,
            z,
            yaw: wrap_angle(yw),
            pitch: p,
            roll: wrap_angle(rl),
        }
    }

    pub const fn identity() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            z: 0.0,
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
        }
    }

    /// Raw (x, y, z, yaw, pitch, roll), no normalization.
    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            x: v[0],
            y: v[1],
            z: v[2],
            yaw: v[3],
            pitch: v[4],
            roll: v[5],
        }
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(self.x, self.y, self.z, self.yaw, self.pitch, self.roll)
    }

    pub fn translation(&self) -> Point3 {
        Vector3::new(self.x, self.y, self.z)
    }
}

/// 3D translation plus quaternion. `new` enforces unit norm and qr ≥ 0;
/// `from_raw` stores whatever it is given, which the Jacobian code relies on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuatPose {
    pub t: Point3,
    pub q: Quaternion,
}

impl QuatPose {
    pub fn new(t: Point3, q: Quaternion) -> Result<Self> {
        let n = q.norm();
        if !(n > 1e-12) {
            return Err(Error::Domain(format!("quaternion norm {n:e} is too small")));
        }
        let v = q.to_vector() / n;
        Ok(Self {
            t,
            q: Quaternion::from_vector(&v).canonical(),
        })
    }

    pub const fn from_raw(t: Point3, q: Quaternion) -> Self {
        Self { t, q }
    }

    pub fn identity() -> Self {
        Self::from_raw(Point3::zeros(), Quaternion::identity())
    }

    /// (x, y, z, qr, qx, qy, qz).
    pub fn to_vector(&self) -> Vector7 {
        Vector7::from_column_slice(&[
            self.t.x, self.t.y, self.t.z, self.q.qr, self.q.qx, self.q.qy, self.q.qz,
        ])
    }

    pub fn from_vector(v: &Vector7) -> Self {
        Self::from_raw(
            Vector3::new(v[0], v[1], v[2]),
            Quaternion::new(v[3], v[4], v[5], v[6]),
        )
    }
}

/// 4×4 homogeneous transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomPose {
    m: Matrix4<f64>,
}

impl HomPose {
    /// Checks the bottom row and orthonormality of the rotation block.
    pub fn try_from_matrix(m: Matrix4<f64>) -> Result<Self> {
        let bottom = m.fixed_view::<1, 4>(3, 0);
        if bottom[(0, 0)] != 0.0 || bottom[(0, 1)] != 0.0 || bottom[(0, 2)] != 0.0 || bottom[(0, 3)] != 1.0 {
            return Err(Error::Domain("bottom row must be exactly (0, 0, 0, 1)".into()));
        }
        let r: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
        let orth = (r.transpose() * r - Matrix3::identity()).norm();
        let det = r.determinant();
        if !(orth < 1e-9) || !((det - 1.0).abs() <= 1e-9) {
            return Err(Error::Domain(format!(
                "rotation block is not a proper rotation (|RᵀR − I| = {orth:e}, det = {det})"
            )));
        }
        Ok(Self { m })
    }

    /// No validation. Used by extrinsic finite differences, where perturbed
    /// 12-vectors deliberately leave SE(3).
    pub const fn from_matrix_unchecked(m: Matrix4<f64>) -> Self {
        Self { m }
    }

    pub fn from_parts(r: &Matrix3<f64>, t: &Point3) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(t);
        Self { m }
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix4::identity(),
        }
    }

    pub fn from_translation(t: &Point3) -> Self {
        Self::from_parts(&Matrix3::identity(), t)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.m
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.m.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Point3 {
        self.m.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn vec12(&self) -> Vec12 {
        Vec12::from_fn(|i, _| self.m[(i % 3, i / 3)])
    }

    /// Rebuilds a pose from its 12-vector without validation.
    pub fn from_vec12(v: &Vec12) -> Self {
        let mut m = Matrix4::identity();
        for i in 0..12 {
            m[(i % 3, i / 3)] = v[i];
        }
        Self { m }
    }

    pub fn compose(&self, rhs: &HomPose) -> HomPose {
        Self { m: self.m * rhs.m }
    }

    /// Closed-form inverse [Rᵀ | −Rᵀt].
    pub fn inverse(&self) -> HomPose {
        let rt = self.rotation().transpose();
        Self::from_parts(&rt, &(-(rt * self.translation())))
    }

    pub fn transform_point(&self, p: &Point3) -> Point3 {
        self.rotation() * p + self.translation()
    }
}

/// 3×3 homogeneous transform of the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomPose2 {
    m: Matrix3<f64>,
}

impl HomPose2 {
    pub fn new(x: f64, y: f64, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Self {
            m: Matrix3::new(c, -s, x, s, c, y, 0.0, 0.0, 1.0),
        }
    }

    pub const fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn x(&self) -> f64 {
        self.m[(0, 2)]
    }

    pub fn y(&self) -> f64 {
        self.m[(1, 2)]
    }

    pub fn phi(&self) -> f64 {
        self.m[(1, 0)].atan2(self.m[(0, 0)])
    }

    pub fn compose(&self, rhs: &HomPose2) -> HomPose2 {
        Self { m: self.m * rhs.m }
    }

    pub fn inverse(&self) -> HomPose2 {
        let (c, s) = (self.m[(0, 0)], self.m[(1, 0)]);
        let (x, y) = (self.x(), self.y());
        Self {
            m: Matrix3::new(c, s, -c * x - s * y, -s, c, s * x - c * y, 0.0, 0.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parameterization {
    Ypr,
    Quat,
    Matrix,
}

impl Parameterization {
    pub fn dim(self) -> usize {
        match self {
            Parameterization::Ypr => 6,
            Parameterization::Quat => 7,
            Parameterization::Matrix => 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pose {
    Ypr(EulerPose),
    Quat(QuatPose),
    Matrix(HomPose),
}

impl Pose {
    pub fn parameterization(&self) -> Parameterization {
        match self {
            Pose::Ypr(_) => Parameterization::Ypr,
            Pose::Quat(_) => Parameterization::Quat,
            Pose::Matrix(_) => Parameterization::Matrix,
        }
    }

    /// Coordinates in the pose's own parameterization (6, 7 or 12 entries).
    pub fn to_dvector(&self) -> DVector<f64> {
        match self {
            Pose::Ypr(p) => DVector::from_column_slice(p.to_vector().as_slice()),
            Pose::Quat(p) => DVector::from_column_slice(p.to_vector().as_slice()),
            Pose::Matrix(p) => DVector::from_column_slice(p.vec12().as_slice()),
        }
    }

    pub fn from_dvector(kind: Parameterization, v: &DVector<f64>) -> Self {
        match kind {
            Parameterization::Ypr => Pose::Ypr(EulerPose::from_vector(&Vector6::from_column_slice(v.as_slice()))),
            Parameterization::Quat => Pose::Quat(QuatPose::from_vector(&Vector7::from_column_slice(v.as_slice()))),
            Parameterization::Matrix => Pose::Matrix(HomPose::from_vec12(&Vec12::from_column_slice(v.as_slice()))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPose {
    pub mean: Pose,
    pub cov: DMatrix<f64>,
}

impl GaussianPose {
    pub fn new(mean: Pose, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.parameterization().dim();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::Domain(format!(
                "covariance is {}×{}, expected {n}×{n}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if (&cov - cov.transpose()).amax() > 1e-12 {
            return Err(Error::Domain("covariance is not symmetric".into()));
        }
        Ok(Self { mean, cov })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPoint3 {
    pub mean: Point3,
    pub cov: Matrix3<f64>,
}
