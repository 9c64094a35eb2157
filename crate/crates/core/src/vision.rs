//! Ideal pinhole projection (no distortion) and its Jacobians with respect to
//! the point and to a tangent perturbation of the camera pose.

use crate::error::{Error, Result};
use crate::manifold_jac::jacob_p_ominus_expeD_de;
use crate::pose::{HomPose, Point3};
use serde::{Deserialize, Serialize};
use nalgebra::SMatrix;

/// Points with depth at or below this (metres) are rejected as behind the camera.
pub const DEPTH_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(Error::Domain(format!("focal lengths must be positive (fx = {fx}, fy = {fy})")));
        }
        Ok(Self { fx, fy, cx, cy })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

fn check_depth(p: &Point3) -> Result<()> {
    if p.z > DEPTH_EPS {
        Ok(())
    } else {
        Err(Error::BehindCamera { depth: p.z })
    }
}

/// h(p) = (cx + fx px/pz, cy + fy py/pz).
pub fn project(k: &CameraIntrinsics, p: &Point3) -> Result<Pixel> {
    check_depth(p)?;
    Ok(Pixel {
        u: k.cx + k.fx * p.x / p.z,
        v: k.cy + k.fy * p.y / p.z,
    })
}

pub fn dproject_dp(k: &CameraIntrinsics, p: &Point3) -> Result<SMatrix<f64, 2, 3>> {
    check_depth(p)?;
    let iz = 1.0 / p.z;
    let iz2 = iz * iz;
    Ok(SMatrix::<f64, 2, 3>::new(
        k.fx * iz,
        0.0,
        -k.fx * p.x * iz2,
        0.0,
        k.fy * iz,
        -k.fy * p.y * iz2,
    ))
}

/// Projects g = A ⊕ p. J_eps is taken for A ← e^ε A and J_p = ∂h/∂g · R_A.
pub fn project_pose_point(
    k: &CameraIntrinsics,
    a: &HomPose,
    p: &Point3,
) -> Result<(Pixel, SMatrix<f64, 2, 6>, SMatrix<f64, 2, 3>)> {
    let g = a.transform_point(p);
    let px = project(k, &g)?;
    let dh = dproject_dp(k, &g)?;
    let (gx, gy, gz) = (g.x, g.y, g.z);
    let (fx, fy) = (k.fx, k.fy);
    let gz2 = gz * gz;
    #[rustfmt::skip]
    let j_eps = SMatrix::<f64, 2, 6>::from_row_slice(&[
        fx / gz, 0.0,     -fx * gx / gz2, -fx * gx * gy / gz2,      fx * (1.0 + gx * gx / gz2), -fx * gy / gz,
        0.0,     fy / gz, -fy * gy / gz2, -fy * (1.0 + gy * gy / gz2), fy * gx * gy / gz2,      fy * gx / gz,
    ]);
    Ok((px, j_eps, dh * a.rotation()))
}

/// Projects l = p ⊖ A, i.e. A is the camera pose in the world. J_eps is taken
/// for A ← e^ε A and J_p = ∂h/∂l · R_Aᵀ.
pub fn project_inv_pose_point(
    k: &CameraIntrinsics,
    a: &HomPose,
    p: &Point3,
) -> Result<(Pixel, SMatrix<f64, 2, 6>, SMatrix<f64, 2, 3>)> {
    let l = a.inverse().transform_point(p);
    let px = project(k, &l)?;
    let dh = dproject_dp(k, &l)?;
    Ok((
        px,
        dh * jacob_p_ominus_expeD_de(a, p),
        dh * a.rotation().transpose(),
    ))
}
