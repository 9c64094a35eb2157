//! Rigid-body pose toolkit: 3D+YPR, 3D+quaternion and matrix parameterizations,
//! SO(3)/SE(3)/SE(2) exponential and logarithm maps, analytic Jacobians checked
//! against finite differences, and an on-manifold pose-graph optimizer.

pub mod convert;
pub mod error;
pub mod geometry;
pub mod graphslam;
pub mod lie;
pub mod manifold_jac;
pub mod matderiv;
pub mod numcheck;
pub mod pose;
pub mod vision;

pub use error::{Error, Result};
pub use pose::{
    wrap_angle, EulerPose, GaussianPoint3, GaussianPose, HomPose, HomPose2, Parameterization,
    Point3, Pose, QuatPose, Quaternion, Vec12,
};
