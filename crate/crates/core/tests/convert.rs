mod common;

use common::*;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};
use rigidkit::pose::Vector7;
use proptest::prelude::*;
use rand_distr::{Distribution, Normal};
use rigidkit::convert::*;
use rigidkit::numcheck::sampling as smp;
use rigidkit::{EulerPose, GaussianPose, HomPose, Parameterization, Pose, QuatPose, Quaternion};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

fn quat_close(a: &Quaternion, b: &Quaternion, tol: f64) -> bool {
    (a.to_vector() - b.to_vector()).amax() <= tol
}

fn rz(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}
fn ry(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}
fn rx(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

#[test]
fn normalize_examples() {
    let (q, j) = quat_normalize(&Quaternion::new(1.0, 0.0, 0.0, 0.0)).unwrap();
    assert_eq!(q, Quaternion::identity());
    assert!((j - nalgebra::Matrix4::from_diagonal(&nalgebra::Vector4::new(0.0, 1.0, 1.0, 1.0))).amax() < 1e-15);

    let (q, _) = quat_normalize(&Quaternion::new(2.0, 0.0, 0.0, 0.0)).unwrap();
    assert_eq!(q, Quaternion::identity());

    let h = Quaternion::new(0.5, 0.5, 0.5, 0.5);
    let (q, j) = quat_normalize(&h).unwrap();
    assert!(quat_close(&q, &h, 1e-15));
    let num = fd(
        |x| Ok(x / x.norm()),
        &to_dv(&h.to_vector()),
    );
    assert!(max_abs_diff(&to_d(&j), &num) < 1e-7);

    assert!(quat_normalize(&Quaternion::new(0.0, 1e-13, 0.0, 0.0)).is_err());
}

#[test]
fn normalize_is_idempotent() {
    let mut r = rng(3);
    for _ in 0..200 {
        let q = smp::quaternion(&mut r);
        let (a, _) = quat_normalize(&q).unwrap();
        let (b, _) = quat_normalize(&a).unwrap();
        assert!(quat_close(&a, &b, 1e-15));
    }
}

#[test]
fn ypr_to_quat_examples() {
    let q = ypr_to_quat(&EulerPose::identity());
    assert_eq!(q.q, Quaternion::identity());
    assert_eq!(q.t, Vector3::zeros());

    let q = ypr_to_quat(&EulerPose::new(0.0, 0.0, 0.0, FRAC_PI_2, 0.0, 0.0));
    assert!(quat_close(&q.q, &Quaternion::new(FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2), 1e-15));

    // Independent route: product of the three single-axis half-angle quaternions.
    let (y, p, r) = (30f64.to_radians(), 20f64.to_radians(), 90f64.to_radians());
    let qz = Quaternion::new((y / 2.0).cos(), 0.0, 0.0, (y / 2.0).sin());
    let qy = Quaternion::new((p / 2.0).cos(), 0.0, (p / 2.0).sin(), 0.0);
    let qx = Quaternion::new((r / 2.0).cos(), (r / 2.0).sin(), 0.0, 0.0);
    let expect = qz.hamilton(&qy).hamilton(&qx);
    let got = ypr_to_quat(&EulerPose::new(1.0, 2.0, 3.0, y, p, r));
    assert!(quat_close(&got.q, &expect, 1e-15));
    assert_eq!(got.t, Vector3::new(1.0, 2.0, 3.0));
}

#[test]
fn ypr_to_quat_jacobian_structure_and_fd() {
    let j = jacobian_ypr_to_quat(&EulerPose::identity());
    assert_eq!(j.fixed_view::<3, 3>(0, 0).into_owned(), Matrix3::identity());
    assert!(j.fixed_view::<3, 3>(0, 3).iter().all(|&v| v == 0.0));
    assert!(j.fixed_view::<4, 3>(3, 0).iter().all(|&v| v == 0.0));
    let num = fd(|x| Ok(to_dv(&ypr_to_quat(&EulerPose::from_vector(&Vector6::from_iterator(x.iter().copied()))).to_vector())), &DVector::zeros(6));
    assert!(max_abs_diff(&to_d(&j), &num) < 1e-6);
}

#[test]
fn quat_to_ypr_examples() {
    let e = quat_to_ypr(&QuatPose::identity());
    assert_eq!((e.yaw, e.pitch, e.roll), (0.0, 0.0, 0.0));

    let q = QuatPose::from_raw(Vector3::zeros(), Quaternion::new(FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0));
    let e = quat_to_ypr(&q);
    assert_eq!(e.pitch, FRAC_PI_2);
    assert_eq!(e.roll, 0.0);
    assert!(e.yaw.abs() < 1e-15);
}

#[test]
fn quat_ypr_round_trip_thousand() {
    let mut r = rng(11);
    let mut n = 0;
    while n < 1000 {
        let p = smp::quat_pose(&mut r);
        let d = p.q.qr * p.q.qy - p.q.qx * p.q.qz;
        if d.abs() >= 0.49 {
            continue;
        }
        n += 1;
        let back = ypr_to_quat(&quat_to_ypr(&p));
        assert!(quat_close(&back.q, &p.q, 1e-10), "{p:?}");
        assert!((back.t - p.t).amax() < 1e-15);
    }
}

#[test]
fn degenerate_branches_round_trip_through_matrices() {
    let mut r = rng(5);
    for sign in [1.0, -1.0] {
        for _ in 0..100 {
            // Δ = ±1/2 exactly: q = (a, b, ±a, ∓b)·… with a² + b² = 1/2.
            let phi: f64 = rand::Rng::random_range(&mut r, -PI..PI);
            let (a, b) = (FRAC_1_SQRT_2 * phi.cos(), FRAC_1_SQRT_2 * phi.sin());
            let q = Quaternion::new(a, b, sign * a, -sign * b).canonical();
            let d = q.qr * q.qy - q.qx * q.qz;
            assert!((d.abs() - 0.5).abs() < 1e-15);
            let p = QuatPose::from_raw(Vector3::new(1.0, -2.0, 0.5), q);
            let e = quat_to_ypr(&p);
            assert_eq!(e.pitch, sign * FRAC_PI_2);
            assert_eq!(e.roll, 0.0);
            let m1 = ypr_to_matrix(&e);
            let m2 = quat_to_matrix(&p);
            assert!((m1.matrix() - m2.matrix()).amax() < 1e-9);
            assert!(jacobian_quat_to_ypr(&p).is_err());
        }
    }
}

/// Rotation about y by χ has Δ = sin(χ)/2, so just inside the threshold the
/// main branch reports pitch asin(2Δ) while the degenerate branch would report
/// π/2. Their gap acos(2Δ) ≥ √(1 − 4Δ²) is far above 1e-6 anywhere in
/// 0.499995 ≤ |Δ| < threshold.
#[test]
fn gimbal_branch_gap_matches_analytic_bound() {
    for delta in [0.499995, 0.499999, GIMBAL_THRESHOLD - 1e-12] {
        let chi = (2.0 * delta).asin();
        let q = Quaternion::new((chi / 2.0).cos(), 0.0, (chi / 2.0).sin(), 0.0);
        assert!((q.qr * q.qy - delta).abs() < 1e-12);
        let main = quat_to_ypr(&QuatPose::from_raw(Vector3::zeros(), q));
        assert!((main.pitch - chi).abs() < 1e-9);
        let gap = FRAC_PI_2 - main.pitch;
        let bound = (1.0 - 4.0 * delta * delta).sqrt();
        assert!(gap >= bound * (1.0 - 1e-6), "Δ {delta}: gap {gap} bound {bound}");
        assert!(gap > 1e-6);
    }
}

#[test]
fn gimbal_threshold_selects_branch() {
    let at = |d: f64| {
        let chi = (2.0 * d).asin();
        let q = Quaternion::new((chi / 2.0).cos(), 0.0, (chi / 2.0).sin(), 0.0);
        QuatPose::from_raw(Vector3::zeros(), q)
    };
    assert_eq!(quat_to_ypr(&at(0.5)).pitch, FRAC_PI_2);
    assert_eq!(quat_to_ypr(&at(-0.5)).pitch, -FRAC_PI_2);
    assert!(quat_to_ypr(&at(0.49)).pitch < FRAC_PI_2);
    assert!(jacobian_quat_to_ypr(&at(0.49)).is_ok());
    assert!(jacobian_quat_to_ypr(&at(0.5)).is_err());
}

#[test]
fn quat_to_ypr_jacobian_fd_at_identity() {
    let p = QuatPose::identity();
    let j = jacobian_quat_to_ypr(&p).unwrap();
    let num = fd(|x| Ok(to_dv(&quat_to_ypr(&QuatPose::from_vector(&Vector7::from_iterator(x.iter().copied()))).to_vector())), &to_dv(&p.to_vector()));
    assert!(max_abs_diff(&to_d(&j), &num) < 1e-6);
    assert_eq!(j.fixed_view::<3, 3>(0, 0).into_owned(), Matrix3::identity());
}

#[test]
fn ypr_to_matrix_examples() {
    assert_eq!(*ypr_to_matrix(&EulerPose::identity()).matrix(), nalgebra::Matrix4::identity());
    let m = ypr_to_matrix(&EulerPose::new(0.0, 0.0, 0.0, FRAC_PI_2, 0.0, 0.0));
    assert!((m.rotation() - Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0)).amax() < 1e-15);
    let mut r = rng(8);
    for _ in 0..100 {
        let e = smp::euler_pose(&mut r);
        let m = ypr_to_matrix(&e);
        assert!((m.rotation() - rz(e.yaw) * ry(e.pitch) * rx(e.roll)).amax() < 1e-14);
        assert_eq!(m.translation(), e.translation());
    }
}

#[test]
fn quat_to_matrix_examples() {
    assert_eq!(*quat_to_matrix(&QuatPose::identity()).matrix(), nalgebra::Matrix4::identity());
    let p = QuatPose::from_raw(Vector3::zeros(), Quaternion::new(FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2));
    assert!((quat_to_matrix(&p).rotation() - rz(FRAC_PI_2)).amax() < 1e-15);
    let mut r = rng(9);
    for _ in 0..200 {
        let p = smp::quat_pose(&mut r);
        let a = quat_to_matrix(&p);
        let b = ypr_to_matrix(&quat_to_ypr(&p));
        assert!((a.matrix() - b.matrix()).amax() < 1e-9);
    }
}

#[test]
fn matrix_to_ypr_examples() {
    let e = matrix_to_ypr(&HomPose::identity());
    assert_eq!(e.to_vector(), Vector6::zeros());
    let m = HomPose::from_parts(&ry(-FRAC_PI_2), &Vector3::new(1.0, 2.0, 3.0));
    let e = matrix_to_ypr(&m);
    let p = m.matrix();
    assert_eq!(e.pitch, -FRAC_PI_2);
    assert_eq!(e.roll, 0.0);
    assert_eq!(e.yaw, (-p[(1, 2)]).atan2(-p[(0, 2)]));
    assert!((ypr_to_matrix(&e).matrix() - p).amax() < 1e-15);
    let m = HomPose::from_parts(&(rz(0.3) * ry(FRAC_PI_2)), &Vector3::zeros());
    let e = matrix_to_ypr(&m);
    assert_eq!(e.pitch, FRAC_PI_2);
    assert!((ypr_to_matrix(&e).matrix() - m.matrix()).amax() < 1e-12);
}

#[test]
fn matrix_quat_examples() {
    let q = matrix_to_quat(&HomPose::identity());
    assert!(quat_close(&q.q, &Quaternion::identity(), 1e-15));
    let q = matrix_to_quat(&HomPose::from_parts(&rz(FRAC_PI_2), &Vector3::zeros()));
    assert!(quat_close(&q.q, &Quaternion::new(FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2), 1e-15));
}

#[test]
fn round_trips_thousand() {
    let mut r = rng(21);
    for _ in 0..1000 {
        let m = smp::hom_pose(&mut r);
        let back = quat_to_matrix(&matrix_to_quat(&m));
        assert!((back.matrix() - m.matrix()).amax() < 1e-9);
        let back = ypr_to_matrix(&matrix_to_ypr(&m));
        assert!((back.matrix() - m.matrix()).norm() < 1e-10);
    }
}

#[test]
fn produced_rotations_are_orthonormal() {
    let mut r = rng(22);
    for _ in 0..300 {
        let e = smp::euler_pose(&mut r);
        let q = smp::scaled_quat_pose(&mut r);
        for m in [ypr_to_matrix(&e), quat_to_matrix(&q)] {
            let rr = m.rotation();
            assert!((rr.transpose() * rr - Matrix3::identity()).amax() < 1e-9);
            assert!((rr.determinant() - 1.0).abs() < 1e-9);
            assert!(HomPose::try_from_matrix(*m.matrix()).is_ok());
        }
    }
}

#[test]
fn ypr_wrt_matrix_identity_and_structure() {
    let j = jacobian_ypr_wrt_matrix(&HomPose::identity()).unwrap();
    let num = fd(|x| Ok(to_dv(&matrix_to_ypr(&HomPose::from_vec12(&nalgebra::SVector::<f64, 12>::from_iterator(x.iter().copied()))).to_vector())), &to_dv(&HomPose::identity().vec12()));
    assert!(max_abs_diff(&to_d(&j), &num) < 1e-6);
    assert_eq!(j[(3, 1)], 1.0);
    assert_eq!(j[(4, 2)], -1.0);
    assert!(j.fixed_view::<3, 9>(0, 0).iter().all(|&v| v == 0.0));
    assert_eq!(j.fixed_view::<3, 3>(0, 9).into_owned(), Matrix3::identity());
    assert!(j.fixed_view::<3, 3>(3, 9).iter().all(|&v| v == 0.0));
    let deg = HomPose::from_parts(&ry(FRAC_PI_2), &Vector3::zeros());
    assert!(matches!(jacobian_ypr_wrt_matrix(&deg), Err(rigidkit::Error::SingularConfiguration(_))));
}

#[test]
fn gaussian_zero_cov_maps_to_zero() {
    let g = GaussianPose::new(Pose::Ypr(EulerPose::new(1.0, 2.0, 3.0, 0.3, 0.2, 0.1)), DMatrix::zeros(6, 6)).unwrap();
    for target in [Parameterization::Quat, Parameterization::Matrix, Parameterization::Ypr] {
        let out = convert_gaussian(&g, target).unwrap();
        assert_eq!(out.cov, DMatrix::zeros(target.dim(), target.dim()));
    }
}

#[test]
fn gaussian_ypr_quat_ypr_recovers_cov() {
    let mean = EulerPose::new(0.5, -1.0, 2.0, 0.7, -0.4, 1.2);
    let cov = DMatrix::from_fn(6, 6, |r, c| if r == c { 1e-6 * (1.0 + r as f64) } else { 2e-7 / (1.0 + (r + c) as f64) });
    let g = GaussianPose::new(Pose::Ypr(mean), cov.clone()).unwrap();
    let q = convert_gaussian(&g, Parameterization::Quat).unwrap();
    let back = convert_gaussian(&q, Parameterization::Ypr).unwrap();
    assert!(rel_frob(&back.cov, &cov) < 0.01);
}

#[test]
fn gaussian_ypr_to_quat_matches_monte_carlo() {
    let mean = EulerPose::new(0.5, -1.0, 2.0, 0.7, -0.4, 1.2);
    let sigma = 1e-3;
    let g = GaussianPose::new(Pose::Ypr(mean), DMatrix::identity(6, 6) * sigma * sigma).unwrap();
    let lin = convert_gaussian(&g, Parameterization::Quat).unwrap();
    let mut r = rng(2024);
    let n = Normal::new(0.0, sigma).unwrap();
    let samples: Vec<DVector<f64>> = (0..100_000)
        .map(|_| {
            let d = Vector6::from_fn(|_, _| n.sample(&mut r));
            to_dv(&ypr_to_quat(&EulerPose::from_vector(&(mean.to_vector() + d))).to_vector())
        })
        .collect();
    assert!(rel_frob(&lin.cov, &sample_cov(&samples)) < 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn prop_ypr_matrix_round_trip(yaw in -3.1f64..3.1, pitch in -1.55f64..1.55, roll in -3.1f64..3.1, x in -5.0f64..5.0) {
        let e = EulerPose::new(x, -x, 2.0 * x, yaw, pitch, roll);
        let back = matrix_to_ypr(&ypr_to_matrix(&e));
        prop_assert!((back.to_vector() - e.to_vector()).amax() < 1e-9);
    }

    #[test]
    fn prop_ypr_quat_round_trip(yaw in -3.1f64..3.1, pitch in -1.55f64..1.55, roll in -3.1f64..3.1) {
        let e = EulerPose::new(0.0, 0.0, 0.0, yaw, pitch, roll);
        let back = quat_to_ypr(&ypr_to_quat(&e));
        prop_assert!((back.to_vector() - e.to_vector()).amax() < 1e-9);
    }

    #[test]
    fn prop_canonical_sign(yaw in -3.2f64..3.2, pitch in -1.6f64..1.6, roll in -3.2f64..3.2) {
        let q = ypr_to_quat(&EulerPose::new(0.0, 0.0, 0.0, yaw, pitch, roll)).q;
        prop_assert!(q.qr >= 0.0);
        prop_assert!((q.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn prop_euler_new_normalizes(yaw in -20.0f64..20.0, pitch in -20.0f64..20.0, roll in -20.0f64..20.0) {
        let e = EulerPose::new(0.0, 0.0, 0.0, yaw, pitch, roll);
        prop_assert!(e.yaw > -PI && e.yaw <= PI);
        prop_assert!(e.roll > -PI && e.roll <= PI);
        prop_assert!(e.pitch.abs() <= FRAC_PI_2);
        let a = ypr_to_matrix(&e).rotation();
        let b = rz(yaw) * ry(pitch) * rx(roll);
        prop_assert!((a - b).amax() < 1e-9);
    }
}

#[test]
fn all_six_conversions_agree_with_fd() {
    let mut r = rng(31);
    for _ in 0..50 {
        let e = smp::euler_pose(&mut r);
        for (src, target) in [
            (Pose::Ypr(e), Parameterization::Matrix),
            (Pose::Quat(ypr_to_quat(&e)), Parameterization::Matrix),
            (Pose::Matrix(ypr_to_matrix(&e)), Parameterization::Quat),
        ] {
            let j = conversion_jacobian(&src, target).unwrap();
            let kind = src.parameterization();
            let num = fd(|x| Ok(convert(&Pose::from_dvector(kind, x), target).to_dvector()), &src.to_dvector());
            assert!(max_abs_diff(&j, &num) < 1e-5);
        }
        let same = conversion_jacobian(&Pose::Ypr(e), Parameterization::Ypr).unwrap();
        assert_eq!(same, DMatrix::identity(6, 6));
    }
}
