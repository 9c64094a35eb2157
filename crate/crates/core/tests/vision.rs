mod common;

use common::*;
use nalgebra::{DVector, Matrix3, SMatrix, Vector3};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rigidkit::numcheck::{sampling as smp, Perturbable, Side};
use rigidkit::vision::*;
use rigidkit::{Error, HomPose, Point3};

// Close, off-axis points give Jacobian entries near 1e5, so the oracle uses the
// higher-order stencil with a step that shrinks with depth.
fn fd5_step(depth: f64) -> f64 {
    1e-4 * depth.min(1.0)
}

fn unit_k() -> CameraIntrinsics {
    CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0).unwrap()
}

fn px_vec(p: Pixel) -> DVector<f64> {
    DVector::from_vec(vec![p.u, p.v])
}

/// Pose and world point whose camera-frame depth exceeds 0.1 under `frame`.
fn visible(rng: &mut ChaCha8Rng, frame: impl Fn(&HomPose, &Point3) -> Point3) -> (HomPose, Point3) {
    loop {
        let a = smp::hom_pose(rng);
        let p = smp::point(rng);
        if frame(&a, &p).z > 0.1 {
            return (a, p);
        }
    }
}

#[test]
fn project_examples() {
    let k = CameraIntrinsics::new(500.0, 480.0, 320.0, 240.0).unwrap();
    assert_eq!(project(&k, &Vector3::new(0.0, 0.0, 1.0)).unwrap(), Pixel { u: 320.0, v: 240.0 });
    assert_eq!(project(&unit_k(), &Vector3::new(2.0, 3.0, 2.0)).unwrap(), Pixel { u: 1.0, v: 1.5 });
    assert!(matches!(project(&k, &Vector3::new(1.0, 1.0, 0.0)), Err(Error::BehindCamera { .. })));
    assert!(matches!(project(&k, &Vector3::new(1.0, 1.0, -2.0)), Err(Error::BehindCamera { .. })));
    assert!(matches!(dproject_dp(&k, &Vector3::new(1.0, 1.0, DEPTH_EPS)), Err(Error::BehindCamera { .. })));
    assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0).is_err());
    assert!(CameraIntrinsics::new(1.0, -1.0, 0.0, 0.0).is_err());
}

#[test]
fn dproject_examples() {
    let k = CameraIntrinsics::new(500.0, 480.0, 320.0, 240.0).unwrap();
    let j = dproject_dp(&k, &Vector3::new(0.0, 0.0, 2.0)).unwrap();
    assert_eq!(j, SMatrix::<f64, 2, 3>::new(250.0, 0.0, 0.0, 0.0, 240.0, 0.0));
    let mut r = rng(11);
    for _ in 0..100 {
        let k = smp::intrinsics(&mut r);
        let p = smp::visible_point(&mut r);
        let num = fd(|x| project(&k, &Vector3::new(x[0], x[1], x[2])).map(px_vec), &to_dv(&p));
        assert!(max_abs_diff(&to_d(&dproject_dp(&k, &p).unwrap()), &num) < 1e-6);
        let lam = 3.5;
        let scaled = dproject_dp(&k, &(p * lam)).unwrap();
        assert!((scaled * lam - dproject_dp(&k, &p).unwrap()).amax() < 1e-9);
    }
}

#[test]
fn project_pose_point_examples() {
    let (px, j_eps, j_p) = project_pose_point(&unit_k(), &HomPose::identity(), &Vector3::new(0.0, 0.0, 1.0)).unwrap();
    assert_eq!(px, Pixel { u: 0.0, v: 0.0 });
    assert_eq!(j_eps.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    assert_eq!(j_eps.row(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0, -1.0, 0.0, 0.0]);
    assert_eq!(j_p, dproject_dp(&unit_k(), &Vector3::new(0.0, 0.0, 1.0)).unwrap());

    let mut r = rng(12);
    for _ in 0..100 {
        let k = smp::intrinsics(&mut r);
        let (a, p) = visible(&mut r, |a, p| a.transform_point(p));
        let (_, j_eps, j_p) = project_pose_point(&k, &a, &p).unwrap();
        let g = a.transform_point(&p);
        let h = fd5_step(g.z);
        assert_eq!(j_p, dproject_dp(&k, &g).unwrap() * a.rotation());
        let n_eps = fd5(
            |e| {
                let x = a.perturb(e, Side::Left);
                project(&k, &x.transform_point(&p)).map(px_vec)
            },
            &DVector::zeros(6),
            h,
        );
        let n_p = fd5(|x| project(&k, &a.transform_point(&Vector3::new(x[0], x[1], x[2]))).map(px_vec), &to_dv(&p), h);
        assert!(max_abs_diff(&to_d(&j_eps), &n_eps) < 1e-5);
        assert!(max_abs_diff(&to_d(&j_p), &n_p) < 1e-5);
    }
}

#[test]
fn project_inv_pose_point_examples() {
    let k = CameraIntrinsics::new(400.0, 410.0, 300.0, 200.0).unwrap();
    let p = Vector3::new(0.3, -0.2, 2.0);
    let (px, _, j_p) = project_inv_pose_point(&k, &HomPose::identity(), &p).unwrap();
    assert_eq!(px, project(&k, &p).unwrap());
    assert_eq!(j_p, dproject_dp(&k, &p).unwrap());

    let mut r = rng(13);
    for _ in 0..100 {
        let k = smp::intrinsics(&mut r);
        let (a, p) = visible(&mut r, |a, p| a.inverse().transform_point(p));
        let (px, j_eps, j_p) = project_inv_pose_point(&k, &a, &p).unwrap();
        let h = fd5_step(a.inverse().transform_point(&p).z);
        let n_eps = fd5(
            |e| {
                let x = a.perturb(e, Side::Left);
                project(&k, &x.inverse().transform_point(&p)).map(px_vec)
            },
            &DVector::zeros(6),
            h,
        );
        let n_p = fd5(|x| project(&k, &a.inverse().transform_point(&Vector3::new(x[0], x[1], x[2]))).map(px_vec), &to_dv(&p), h);
        assert!(max_abs_diff(&to_d(&j_eps), &n_eps) < 1e-5);
        assert!(max_abs_diff(&to_d(&j_p), &n_p) < 1e-5);

        let (px2, _, j_p2) = project_pose_point(&k, &a.inverse(), &p).unwrap();
        assert!((px.u - px2.u).abs() < 1e-10 && (px.v - px2.v).abs() < 1e-10);
        assert!((j_p - j_p2).amax() < 1e-10);
    }
}

#[test]
fn behind_camera_reports_depth() {
    let flip = HomPose::from_parts(&Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0)), &Vector3::zeros());
    match project_pose_point(&unit_k(), &flip, &Vector3::new(0.0, 0.0, 2.0)) {
        Err(Error::BehindCamera { depth }) => assert_eq!(depth, -2.0),
        other => panic!("expected behind-camera error, got {other:?}"),
    }
    assert!(project_inv_pose_point(&unit_k(), &flip, &Vector3::new(0.0, 0.0, 2.0)).is_err());
}

proptest! {
    #[test]
    fn prop_projection_is_scale_invariant(x in -5.0f64..5.0, y in -5.0f64..5.0, z in 0.1f64..10.0, s in 0.1f64..10.0) {
        let k = CameraIntrinsics::new(525.0, 525.0, 319.5, 239.5).unwrap();
        let a = project(&k, &Vector3::new(x, y, z)).unwrap();
        let b = project(&k, &Vector3::new(x * s, y * s, z * s)).unwrap();
        prop_assert!((a.u - b.u).abs() < 1e-9 && (a.v - b.v).abs() < 1e-9);
    }
}
