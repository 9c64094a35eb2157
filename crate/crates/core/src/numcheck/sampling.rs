//! Random inputs for the check catalog and the acceptance suite.
//!
//! Translations are uniform in [−2, 2]³. Rotations are rotation vectors with a
//! uniform direction and angle uniform in [0, 2.8], which keeps clear of π.
//! Pitch for YPR inputs stays within ±85°.

use crate::lie::{so3_exp, so3_exp_quat};
use crate::pose::{EulerPose, HomPose, HomPose2, Point3, QuatPose, Quaternion};
use crate::vision::CameraIntrinsics;
use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};
use std::f64::consts::PI;

pub const MAX_ANGLE: f64 = 2.8;
pub const MAX_PITCH: f64 = 85.0 * PI / 180.0;

pub fn point<R: Rng + ?Sized>(rng: &mut R) -> Point3 {
    Vector3::new(
        rng.random_range(-2.0..=2.0),
        rng.random_range(-2.0..=2.0),
        rng.random_range(-2.0..=2.0),
    )
}

pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    Vector3::from(UnitSphere.sample(rng))
}

/// Rotation vector with angle uniform in [lo, hi].
pub fn rotvec_in<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> Vector3<f64> {
    unit_vector(rng) * rng.random_range(lo..=hi)
}

pub fn rotvec<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    rotvec_in(rng, 0.0, MAX_ANGLE)
}

pub fn hom_pose<R: Rng + ?Sized>(rng: &mut R) -> HomPose {
    HomPose::from_parts(&so3_exp(&rotvec(rng)), &point(rng))
}

/// Unit quaternion pose with qr ≥ 0.
pub fn quat_pose<R: Rng + ?Sized>(rng: &mut R) -> QuatPose {
    QuatPose::from_raw(point(rng), so3_exp_quat(&rotvec(rng)).canonical())
}

/// Quaternion pose whose quaternion is scaled by a factor in [0.5, 2], so
/// Jacobians that include normalization get exercised off the unit sphere.
pub fn scaled_quat_pose<R: Rng + ?Sized>(rng: &mut R) -> QuatPose {
    let p = quat_pose(rng);
    let s = rng.random_range(0.5..=2.0);
    QuatPose::from_raw(p.t, Quaternion::from_vector(&(p.q.to_vector() * s)))
}

pub fn quaternion<R: Rng + ?Sized>(rng: &mut R) -> Quaternion {
    loop {
        let v = nalgebra::Vector4::from_fn(|_, _| StandardNormal.sample(rng));
        if v.norm() > 0.1 {
            return Quaternion::from_vector(&v);
        }
    }
}

pub fn euler_pose<R: Rng + ?Sized>(rng: &mut R) -> EulerPose {
    let t = point(rng);
    EulerPose::from_vector(&nalgebra::Vector6::new(
        t.x,
        t.y,
        t.z,
        rng.random_range(-PI..PI),
        rng.random_range(-MAX_PITCH..=MAX_PITCH),
        rng.random_range(-PI..PI),
    ))
}

pub fn hom_pose2<R: Rng + ?Sized>(rng: &mut R) -> HomPose2 {
    HomPose2::new(
        rng.random_range(-2.0..=2.0),
        rng.random_range(-2.0..=2.0),
        rng.random_range(-MAX_ANGLE..=MAX_ANGLE),
    )
}

pub fn intrinsics<R: Rng + ?Sized>(rng: &mut R) -> CameraIntrinsics {
    CameraIntrinsics {
        fx: rng.random_range(100.0..=600.0),
        fy: rng.random_range(100.0..=600.0),
        cx: rng.random_range(200.0..=400.0),
        cy: rng.random_range(150.0..=300.0),
    }
}

/// A point in the camera frame with depth in [0.5, 3] inside a ±45° cone.
pub fn visible_point<R: Rng + ?Sized>(rng: &mut R) -> Point3 {
    let z = rng.random_range(0.5..=3.0);
    Vector3::new(
        rng.random_range(-z..=z),
        rng.random_range(-z..=z),
        z,
    )
}
