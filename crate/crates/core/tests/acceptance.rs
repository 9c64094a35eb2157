//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//!     cargo test -p rigidkit --test acceptance

mod common;

use common::*;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};
use rand_distr::{Distribution, Normal};
use rigidkit::convert::*;
use rigidkit::geometry::*;
use rigidkit::graphslam::*;
use rigidkit::lie::*;
use rigidkit::numcheck::{check_catalog, sampling as smp};
use rigidkit::pose::Vector7;
use rigidkit::{EulerPose, GaussianPoint3, GaussianPose, Parameterization, Pose, QuatPose, Quaternion};
use std::collections::BTreeSet;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn jacobian_catalog() -> Outcome {
    let t0 = Instant::now();
    let reports = check_catalog(1, 100, 1e-5);
    let secs = t0.elapsed().as_secs_f64();
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.op.as_str()).collect();
    let worst = reports.iter().map(|r| r.max_abs_error).fold(0.0, f64::max);
    ensure(
        failed.is_empty() && secs < 30.0,
        format!("{} checks x 100 samples, worst error {worst:.2e}, {secs:.1} s, failed {failed:?}", reports.len()),
    )
}

fn quat_gap(a: &Quaternion, b: &Quaternion) -> f64 {
    let (a, b) = (a.canonical().to_vector(), b.canonical().to_vector());
    (a - b).amax()
}

fn ypr_gap(a: &EulerPose, b: &EulerPose) -> f64 {
    let ang = [a.yaw - b.yaw, a.pitch - b.pitch, a.roll - b.roll]
        .iter()
        .map(|d| rigidkit::wrap_angle(*d).abs())
        .fold(0.0, f64::max);
    ang.max((a.translation() - b.translation()).amax())
}

fn conversion_round_trips() -> Outcome {
    let mut r = rng(2);
    let mut worst = [0.0f64; 6];
    let mut n = 0;
    while n < 1000 {
        // Non-degenerate: pitch at most 85°, away from gimbal lock.
        let e = smp::euler_pose(&mut r);
        let q = smp::quat_pose(&mut r);
        let d = q.q.qr * q.q.qy - q.q.qx * q.q.qz;
        if d.abs() > 0.498 {
            continue;
        }
        let m = smp::hom_pose(&mut r);
        if matrix_to_ypr(&m).pitch.abs() > 85f64.to_radians() {
            continue;
        }
        n += 1;
        worst[0] = worst[0].max(ypr_gap(&quat_to_ypr(&ypr_to_quat(&e)), &e));
        let back = ypr_to_quat(&quat_to_ypr(&q));
        worst[1] = worst[1].max(quat_gap(&back.q, &q.q).max((back.t - q.t).amax()));
        worst[2] = worst[2].max(ypr_gap(&matrix_to_ypr(&ypr_to_matrix(&e)), &e));
        worst[3] = worst[3].max((ypr_to_matrix(&matrix_to_ypr(&m)).matrix() - m.matrix()).amax());
        let back = matrix_to_quat(&quat_to_matrix(&q));
        worst[4] = worst[4].max(quat_gap(&back.q, &q.q).max((back.t - q.t).amax()));
        worst[5] = worst[5].max((quat_to_matrix(&matrix_to_quat(&m)).matrix() - m.matrix()).amax());
    }
    let max = worst.iter().copied().fold(0.0, f64::max);
    ensure(
        max < 1e-9,
        format!("ypr->quat->ypr {:.1e}, quat->ypr->quat {:.1e}, ypr->mat->ypr {:.1e}, mat->ypr->mat {:.1e}, quat->mat->quat {:.1e}, mat->quat->mat {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5]),
    )
}

fn lie_round_trips() -> Outcome {
    let mut r = rng(3);
    let (mut so3, mut se3, mut pseudo, mut series) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..1000 {
        let theta = if i % 2 == 0 {
            10f64.powf(rand::Rng::random_range(&mut r, -8.0..0.0))
        } else {
            rand::Rng::random_range(&mut r, 1e-8..PI - 1e-4)
        };
        let w = smp::unit_vector(&mut r) * theta;
        so3 = so3.max((so3_log(&so3_exp(&w)) - w).amax());

        let v = TangentSE3::new(smp::point(&mut r), smp::rotvec_in(&mut r, 0.0, 3.0 - 1e-9));
        let back = se3_log(&se3_exp(&v)).map_err(|e| e.to_string())?;
        se3 = se3.max((back.to_vector() - v.to_vector()).amax());

        let v = TangentSE3::new(smp::point(&mut r), smp::rotvec_in(&mut r, 0.0, PI - 1e-4));
        pseudo = pseudo.max((se3_pseudo_log(&se3_pseudo_exp(&v)).to_vector() - v.to_vector()).amax());
        let m = smp::hom_pose(&mut r);
        pseudo = pseudo.max((se3_pseudo_exp(&se3_pseudo_log(&m)).matrix() - m.matrix()).amax());

        let w = smp::rotvec_in(&mut r, 0.0, PI);
        let s = series_exp(&to_d(&hat(&w)), 30);
        series = series.max((to_d(&so3_exp(&w)) - s).amax());
    }
    ensure(
        so3 < 1e-9 && se3 < 1e-9 && pseudo < 1e-12 && series < 1e-11,
        format!("so3 {so3:.1e}, se3 {se3:.1e}, pseudo {pseudo:.1e}, series {series:.1e}"),
    )
}

fn degenerate_cases() -> Outcome {
    let mut axis_err = 0.0f64;
    for axis in [Vector3::x(), Vector3::y(), Vector3::z()] {
        let w = so3_log(&so3_exp(&(axis * PI)));
        axis_err = axis_err.max((w.abs() - axis * PI).amax());
    }
    let mut r = rng(4);
    let mut branch_ok = true;
    let mut mat_err = 0.0f64;
    for sign in [1.0, -1.0] {
        for _ in 0..100 {
            let phi: f64 = rand::Rng::random_range(&mut r, -PI..PI);
            let (a, b) = (FRAC_1_SQRT_2 * phi.cos(), FRAC_1_SQRT_2 * phi.sin());
            let q = Quaternion::new(a, b, sign * a, -sign * b).canonical();
            let p = QuatPose::from_raw(Vector3::new(1.0, -2.0, 0.5), q);
            let e = quat_to_ypr(&p);
            branch_ok &= e.pitch == sign * FRAC_PI_2 && e.roll == 0.0;
            mat_err = mat_err.max((ypr_to_matrix(&e).matrix() - quat_to_matrix(&p).matrix()).amax());
            let back = matrix_to_quat(&ypr_to_matrix(&e));
            mat_err = mat_err.max(quat_gap(&back.q, &q));
        }
    }
    ensure(
        axis_err < 1e-8 && branch_ok && mat_err < 1e-9,
        format!("axis error at pi {axis_err:.1e}, degenerate branch taken {branch_ok}, matrix round trip {mat_err:.1e}"),
    )
}

fn covariance_propagation() -> Outcome {
    const N: usize = 100_000;
    let sigma = 1e-3;
    let normal = Normal::new(0.0, sigma).unwrap();

    let mean = EulerPose::new(0.5, -1.0, 2.0, 0.7, -0.4, 1.2);
    let g = GaussianPose::new(Pose::Ypr(mean), DMatrix::identity(6, 6) * sigma * sigma).map_err(|e| e.to_string())?;
    let lin = convert_gaussian(&g, Parameterization::Quat).map_err(|e| e.to_string())?;
    let mut r = rng(501);
    let samples: Vec<DVector<f64>> = (0..N)
        .map(|_| {
            let d = Vector6::from_fn(|_, _| normal.sample(&mut r));
            to_dv(&ypr_to_quat(&EulerPose::from_vector(&(mean.to_vector() + d))).to_vector())
        })
        .collect();
    let e1 = rel_frob(&lin.cov, &sample_cov(&samples));

    let perturb = |p: &QuatPose, d: &DVector<f64>| QuatPose::from_vector(&(p.to_vector() + Vector7::from_iterator(d.iter().copied())));
    let iso = |n: usize| DMatrix::identity(n, n) * sigma * sigma;
    let p1 = QuatPose::new(Vector3::new(1.0, -0.5, 2.0), Quaternion::new(0.8, 0.3, -0.4, 0.33)).unwrap();
    let p2 = QuatPose::new(Vector3::new(-0.3, 0.9, 0.1), Quaternion::new(0.5, -0.2, 0.6, 0.1)).unwrap();
    let a = Vector3::new(0.7, 1.5, -1.0);
    let gp1 = GaussianPose::new(Pose::Quat(p1), iso(7)).unwrap();
    let gp2 = GaussianPose::new(Pose::Quat(p2), iso(7)).unwrap();
    let ga = GaussianPoint3 {
        mean: a,
        cov: Matrix3::identity() * sigma * sigma,
    };
    let Ok(Gaussian::Point(lin)) = propagate_binary(BinaryOp::ComposePoint, &Gaussian::Pose(gp1.clone()), &Gaussian::Point(ga)) else {
        return Err("pose+point propagation failed".into());
    };
    let mut r = rng(502);
    let samples: Vec<DVector<f64>> = (0..N)
        .map(|_| {
            let dp = DVector::from_fn(7, |_, _| normal.sample(&mut r));
            let da = Vector3::from_fn(|_, _| normal.sample(&mut r));
            to_dv(&compose_point_quat(&perturb(&p1, &dp), &(a + da)).0)
        })
        .collect();
    let e2 = rel_frob(&to_d(&lin.cov), &sample_cov(&samples));

    let Ok(Gaussian::Pose(lin)) = propagate_binary(BinaryOp::ComposePoses, &Gaussian::Pose(gp1), &Gaussian::Pose(gp2)) else {
        return Err("pose+pose propagation failed".into());
    };
    let mut r = rng(503);
    let samples: Vec<DVector<f64>> = (0..N)
        .map(|_| {
            let d1 = DVector::from_fn(7, |_, _| normal.sample(&mut r));
            let d2 = DVector::from_fn(7, |_, _| normal.sample(&mut r));
            to_dv(&compose_pose_quat(&perturb(&p1, &d1), &perturb(&p2, &d2)).0.to_vector())
        })
        .collect();
    let e3 = rel_frob(&lin.cov, &sample_cov(&samples));
    ensure(
        e1 < 0.05 && e2 < 0.05 && e3 < 0.05,
        format!("relative Frobenius error: ypr->quat {:.2}%, pose+point {:.2}%, pose+pose {:.2}%", e1 * 100.0, e2 * 100.0, e3 * 100.0),
    )
}

fn inverse_composition() -> Outcome {
    let mut r = rng(6);
    let (mut e1, mut e2) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (p, a) = (smp::quat_pose(&mut r), smp::point(&mut r));
        let rel = inv_compose_point_quat(&a, &p).0;
        e1 = e1.max((compose_point_quat(&p, &rel).0 - a).amax());
        let (pinv, _) = inverse_pose_quat(&p);
        e2 = e2.max((compose_point_quat(&pinv, &a).0 - rel).amax());
    }
    ensure(e1 < 1e-12 && e2 < 1e-12, format!("p+(a-p) vs a {e1:.1e}, (-p)+a vs a-p {e2:.1e}"))
}

fn slam_se2() -> Outcome {
    let (_, noisy) = synth_circle2d(50, Noise::new(0.05, 0.01), 1).map_err(|e| e.to_string())?;
    let t0 = Instant::now();
    let cfg = SolverConfig {
        max_iterations: 50,
        ..SolverConfig::default()
    };
    let (_, stats) = optimize(&noisy, &cfg).map_err(|e| e.to_string())?;
    let secs = t0.elapsed().as_secs_f64();
    let monotone = stats.windows(2).all(|w| w[1].chi2 <= w[0].chi2);
    let (c0, c1) = (stats[0].chi2, stats.last().unwrap().chi2);
    ensure(
        monotone && c1 < 0.05 * c0 && secs < 5.0 && stats.len() <= 51,
        format!("chi2 {c0:.4e} -> {c1:.4e} (ratio {:.2e}) in {} iterations, non-increasing {monotone}, {secs:.2} s", c1 / c0, stats.len() - 1),
    )
}

fn slam_se3() -> Outcome {
    let (truth, noisy) = synth_sphere3d(30, Noise::new(0.03, 0.01), 1).map_err(|e| e.to_string())?;
    let (_, stats) = optimize(&noisy, &SolverConfig::default()).map_err(|e| e.to_string())?;
    let (c0, c1) = (stats[0].chi2, stats.last().unwrap().chi2);

    let keep: BTreeSet<usize> = (0..10).collect();
    let mut sub = noisy.subgraph(&keep);
    sub.vertices = truth.subgraph(&keep).vertices;
    let ne = build_normal_equations(&sub).map_err(|e| e.to_string())?;
    let n = ne.b.len();
    let num = fd(|x| Ok(DVector::from_element(1, chi2(&sub.retract_free(x))?)), &DVector::zeros(n)).row(0).transpose();
    let rel = (&ne.b * 2.0 - &num).norm() / num.norm();
    ensure(
        c1 < 0.1 * c0 && rel < 1e-4,
        format!("chi2 {c0:.4e} -> {c1:.4e} (ratio {:.2e}), gradient FD relative error {rel:.1e} over {n} coordinates", c1 / c0),
    )
}

fn small_rotation_approximation() -> Outcome {
    let a = Vector3::new(1.0, 2.0, 3.0);
    let approx = compose_point_ypr_small_rot_jacobian(&a);
    let mut r = rng(9);
    let mut small = 0.0f64;
    for _ in 0..1000 {
        let ang = Vector3::from_fn(|_, _| rand::Rng::random_range(&mut r, -1e-5..=1e-5));
        let e = EulerPose::new(0.3, -0.2, 0.1, ang.x, ang.y, ang.z);
        small = small.max((compose_point_ypr(&e, &a).1 - approx).amax());
    }
    let e = EulerPose::new(0.0, 0.0, 0.0, 0.5, 0.5, 0.5);
    let large = (compose_point_ypr(&e, &a).1 - approx).amax();
    ensure(small < 1e-4 && large > 0.05, format!("max difference {small:.1e} at <=1e-5 rad, {large:.3} at 0.5 rad"))
}

fn g2o_fidelity() -> Outcome {
    let mut files: Vec<PathBuf> = std::fs::read_dir(data_dir())
        .map_err(|e| format!("cannot list data directory: {e}"))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "g2o"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err("no bundled .g2o files".into());
    }
    let mut bad = Vec::new();
    for f in &files {
        let text = std::fs::read_to_string(f).map_err(|e| e.to_string())?;
        let ok = read_g2o(&text).and_then(|g| {
            let w1 = write_g2o(&g);
            let g2 = read_g2o(&w1)?;
            Ok(g2 == g && write_g2o(&g2) == w1)
        });
        if !matches!(ok, Ok(true)) {
            bad.push(f.file_name().unwrap().to_string_lossy().into_owned());
        }
    }
    ensure(bad.is_empty(), format!("{} files, not idempotent: {bad:?}", files.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Jacobian catalog (seed 1, 100 samples, tol 1e-5)", jacobian_catalog),
        ("Conversion round trips", conversion_round_trips),
        ("Lie round trips and series oracle", lie_round_trips),
        ("Degenerate cases", degenerate_cases),
        ("Covariance propagation vs Monte Carlo", covariance_propagation),
        ("Inverse-composition identities", inverse_composition),
        ("Graph SLAM SE(2) circle", slam_se2),
        ("Graph SLAM SE(3) sphere", slam_se3),
        ("Small-rotation approximation", small_rotation_approximation),
        ("g2o fidelity on bundled samples", g2o_fidelity),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2}. {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {:>2}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
