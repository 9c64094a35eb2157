//! Fixtures shared by the criterion benches.

use nalgebra::Vector3;
use rigidkit::lie::{se3_exp, TangentSE3};
use rigidkit::HomPose;

/// A fixed, well-conditioned pose; `k` varies it deterministically.
pub fn sample_pose(k: usize) -> HomPose {
    let s = k as f64;
    se3_exp(&TangentSE3::new(
        Vector3::new(0.3 + 0.1 * s, -1.2, 0.7 * s.sin()),
        Vector3::new(0.4, -0.25 + 0.05 * s, 0.9),
    ))
}
