use super::sampling as smp;
use super::{manifold_numeric_jacobian, numeric_jacobian, JacobianReport, Perturbable, Side, DEFAULT_STEP};
use crate::convert::*;
use crate::error::Result;
use crate::geometry::*;
use crate::lie::{se2_pseudo_log, se3_pseudo_exp, se3_pseudo_log, so3_exp, so3_exp_quat, so3_log, TangentSE3};
use crate::manifold_jac::*;
use crate::matderiv::*;
use crate::pose::{wrap_angle, EulerPose, HomPose, HomPose2, QuatPose, Quaternion, Vec12, Vector7};
use crate::vision::{dproject_dp, project, project_inv_pose_point, project_pose_point};
use nalgebra::{DMatrix, DVector, Dim, Matrix, RawStorage, Vector3, Vector4, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Pair = (DMatrix<f64>, DMatrix<f64>);
type CheckFn = fn(&mut ChaCha8Rng, f64) -> Result<Pair>;

struct Check {
    name: &'static str,
    run: CheckFn,
}

fn dm<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)])
}

fn dv<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> DVector<f64> {
    DVector::from_iterator(m.len(), m.iter().copied())
}

fn v3(x: &DVector<f64>) -> Vector3<f64> {
    Vector3::new(x[0], x[1], x[2])
}

fn v12(x: &DVector<f64>) -> Vec12 {
    Vec12::from_iterator(x.iter().copied())
}

fn hp(x: &DVector<f64>) -> HomPose {
    HomPose::from_vec12(&v12(x))
}

fn qp(x: &DVector<f64>) -> QuatPose {
    QuatPose::from_vector(&Vector7::from_iterator(x.iter().copied()))
}

fn ep(x: &DVector<f64>) -> EulerPose {
    EulerPose::from_vector(&Vector6::from_iterator(x.iter().copied()))
}

fn coords2(p: &HomPose2) -> DVector<f64> {
    DVector::from_vec(vec![p.x(), p.y(), p.phi()])
}

/// Which output entries live on a circle or a double cover; differences are
/// taken on the branch of the unperturbed value.
#[derive(Clone, Copy, Default)]
struct Branch {
    angles: &'static [usize],
    quat_at: Option<usize>,
}

const PLAIN: Branch = Branch { angles: &[], quat_at: None };
const YPR_OUT: Branch = Branch { angles: &[3, 4, 5], quat_at: None };
const QUAT_OUT: Branch = Branch { angles: &[], quat_at: Some(3) };
const SE2_OUT: Branch = Branch { angles: &[2], quat_at: None };

impl Branch {
    fn align(&self, y: &mut DVector<f64>, base: &DVector<f64>) {
        for &i in self.angles {
            y[i] = base[i] + wrap_angle(y[i] - base[i]);
        }
        if let Some(s) = self.quat_at {
            let dot: f64 = (s..s + 4).map(|i| y[i] * base[i]).sum();
            if dot < 0.0 {
                for i in s..s + 4 {
                    y[i] = -y[i];
                }
            }
        }
    }
}

fn fd<F>(f: F, x0: &DVector<f64>, h: f64, br: Branch) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let base = f(x0)?;
    numeric_jacobian(
        |x| {
            let mut y = f(x)?;
            br.align(&mut y, &base);
            Ok(y)
        },
        x0,
        h,
    )
}

fn mfd<P, F>(f: F, base: &P, side: Side, h: f64, br: Branch) -> Result<DMatrix<f64>>
where
    P: Perturbable,
    F: Fn(&P) -> Result<DVector<f64>>,
{
    let y0 = f(base)?;
    manifold_numeric_jacobian(
        |p| {
            let mut y = f(p)?;
            br.align(&mut y, &y0);
            Ok(y)
        },
        base,
        side,
        h,
    )
}

// ---- core conversions ----

fn quat_normalize_check(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let q = smp::quaternion(rng);
    let (_, j) = quat_normalize(&q)?;
    let num = fd(
        |x| Ok(dv(&quat_normalize(&Quaternion::from_vector(&Vector4::from_iterator(x.iter().copied())))?.0.to_vector())),
        &dv(&q.to_vector()),
        h,
        PLAIN,
    )?;
    Ok((dm(&j), num))
}

fn ypr_to_quat_check(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let p = smp::euler_pose(rng);
    let num = fd(|x| Ok(dv(&ypr_to_quat(&ep(x)).to_vector())), &dv(&p.to_vector()), h, QUAT_OUT)?;
    Ok((dm(&jacobian_ypr_to_quat(&p)), num))
}

fn quat_to_ypr_check(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let p = loop {
        let p = smp::scaled_quat_pose(rng);
        if quat_to_ypr(&p).pitch.abs() <= smp::MAX_PITCH {
            break p;
        }
    };
    let num = fd(|x| Ok(dv(&quat_to_ypr(&qp(x)).to_vector())), &dv(&p.to_vector()), h, YPR_OUT)?;
    Ok((dm(&jacobian_quat_to_ypr(&p)?), num))
}

fn ypr_to_matrix_check(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let p = smp::euler_pose(rng);
    let num = fd(|x| Ok(dv(&ypr_to_matrix(&ep(x)).vec12())), &dv(&p.to_vector()), h, PLAIN)?;
    Ok((dm(&jacobian_ypr_to_matrix(&p)), num))
}

fn quat_to_matrix_check(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let p = smp::scaled_quat_pose(rng);
    let num = fd(|x| Ok(dv(&quat_to_matrix(&qp(x)).vec12())), &dv(&p.to_vector()), h, PLAIN)?;
    Ok((dm(&jacobian_quat_to_matrix(&p)), num))
}

fn matrix_pose_ypr_domain(rng: &mut ChaCha8Rng) -> HomPose {
    ypr_to_matrix(&smp::euler_pose(rng))
}

fn ypr_wrt_matrix_check(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let m = matrix_pose_ypr_domain(rng);
    let num = fd(|x| Ok(dv(&matrix_to_ypr(&hp(x)).to_vector())), &dv(&m.vec12()), h, YPR_OUT)?;
    Ok((dm(&jacobian_ypr_wrt_matrix(&m)?), num))
}

fn matrix_to_quat_check(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let m = matrix_pose_ypr_domain(rng);
    let num = fd(|x| Ok(dv(&matrix_to_quat(&hp(x)).to_vector())), &dv(&m.vec12()), h, QUAT_OUT)?;
    Ok((dm(&jacobian_matrix_to_quat(&m)?), num))
}

// ---- geometry ----

fn compose_point_quat_pose(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (p, a) = (smp::scaled_quat_pose(rng), smp::point(rng));
    let num = fd(|x| Ok(dv(&compose_point_quat(&qp(x), &a).0)), &dv(&p.to_vector()), h, PLAIN)?;
    Ok((dm(&compose_point_quat(&p, &a).1), num))
}

fn compose_point_quat_point(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (p, a) = (smp::scaled_quat_pose(rng), smp::point(rng));
    let num = fd(|x| Ok(dv(&compose_point_quat(&p, &v3(x)).0)), &dv(&a), h, PLAIN)?;
    Ok((dm(&compose_point_quat(&p, &a).2), num))
}

fn compose_point_ypr_pose(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (p, a) = (smp::euler_pose(rng), smp::point(rng));
    let num = fd(|x| Ok(dv(&compose_point_ypr(&ep(x), &a).0)), &dv(&p.to_vector()), h, PLAIN)?;
    Ok((dm(&compose_point_ypr(&p, &a).1), num))
}

fn compose_point_ypr_point(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (p, a) = (smp::euler_pose(rng), smp::point(rng));
    let num = fd(|x| Ok(dv(&compose_point_ypr(&p, &v3(x)).0)), &dv(&a), h, PLAIN)?;
    Ok((dm(&compose_point_ypr(&p, &a).2), num))
}

fn inv_compose_point_quat_pose(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (p, a) = (smp::scaled_quat_pose(rng), smp::point(rng));
    let num = fd(|x| Ok(dv(&inv_compose_point_quat(&a, &qp(x)).0)), &dv(&p.to_vector()), h, PLAIN)?;
    Ok((dm(&inv_compose_point_quat(&a, &p).1), num))
}

fn inv_compose_point_quat_point(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (p, a) = (smp::scaled_quat_pose(rng), smp::point(rng));
    let num = fd(|x| Ok(dv(&inv_compose_point_quat(&v3(x), &p).0)), &dv(&a), h, PLAIN)?;
    Ok((dm(&inv_compose_point_quat(&a, &p).2), num))
}

fn compose_pose_quat_j1(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (p1, p2) = (smp::scaled_quat_pose(rng), smp::scaled_quat_pose(rng));
    let num = fd(|x| Ok(dv(&compose_pose_quat(&qp(x), &p2).0.to_vector())), &dv(&p1.to_vector()), h, QUAT_OUT)?;
    Ok((dm(&compose_pose_quat(&p1, &p2).1), num))
}

fn compose_pose_quat_j2(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (p1, p2) = (smp::scaled_quat_pose(rng), smp::scaled_quat_pose(rng));
    let num = fd(|x| Ok(dv(&compose_pose_quat(&p1, &qp(x)).0.to_vector())), &dv(&p2.to_vector()), h, QUAT_OUT)?;
    Ok((dm(&compose_pose_quat(&p1, &p2).2), num))
}

fn ypr_pair(rng: &mut ChaCha8Rng) -> (EulerPose, EulerPose) {
    loop {
        let (p1, p2) = (smp::euler_pose(rng), smp::euler_pose(rng));
        let c = matrix_to_ypr(&ypr_to_matrix(&p1).compose(&ypr_to_matrix(&p2)));
        if c.pitch.abs() <= smp::MAX_PITCH {
            return (p1, p2);
        }
    }
}

fn compose_pose_ypr_j1(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (p1, p2) = ypr_pair(rng);
    let num = fd(|x| Ok(dv(&compose_pose_ypr(&ep(x), &p2)?.0.to_vector())), &dv(&p1.to_vector()), h, YPR_OUT)?;
    Ok((dm(&compose_pose_ypr(&p1, &p2)?.1), num))
}

fn compose_pose_ypr_j2(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (p1, p2) = ypr_pair(rng);
    let num = fd(|x| Ok(dv(&compose_pose_ypr(&p1, &ep(x))?.0.to_vector())), &dv(&p2.to_vector()), h, YPR_OUT)?;
    Ok((dm(&compose_pose_ypr(&p1, &p2)?.2), num))
}

fn inverse_pose_quat_check(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let p = smp::scaled_quat_pose(rng);
    let num = fd(|x| Ok(dv(&inverse_pose_quat(&qp(x)).0.to_vector())), &dv(&p.to_vector()), h, QUAT_OUT)?;
    Ok((dm(&inverse_pose_quat(&p).1), num))
}

// ---- matderiv (extrinsic, over the 12 entries) ----

fn d_compose_a(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (a, b) = (smp::hom_pose(rng), smp::hom_pose(rng));
    let num = fd(|x| Ok(dv(&hp(x).compose(&b).vec12())), &dv(&a.vec12()), h, PLAIN)?;
    Ok((dm(&d_compose_wrt_A(&b)), num))
}

fn d_compose_b(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (a, b) = (smp::hom_pose(rng), smp::hom_pose(rng));
    let num = fd(|x| Ok(dv(&a.compose(&hp(x)).vec12())), &dv(&b.vec12()), h, PLAIN)?;
    Ok((dm(&d_compose_wrt_B(&a)), num))
}

fn d_apply_point(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (a, p) = (smp::hom_pose(rng), smp::point(rng));
    let num = fd(|x| Ok(dv(&a.transform_point(&v3(x)))), &dv(&p), h, PLAIN)?;
    Ok((dm(&d_apply_wrt_point(&a)), num))
}

fn d_apply_pose(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (a, p) = (smp::hom_pose(rng), smp::point(rng));
    let num = fd(|x| Ok(dv(&hp(x).transform_point(&p))), &dv(&a.vec12()), h, PLAIN)?;
    Ok((dm(&d_apply_wrt_pose(&p)), num))
}

fn d_inverse(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let a = smp::hom_pose(rng);
    let num = fd(|x| Ok(dv(&hp(x).inverse().vec12())), &dv(&a.vec12()), h, PLAIN)?;
    Ok((dm(&d_inverse_wrt_pose(&a)), num))
}

fn d_invapply_point(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (a, p) = (smp::hom_pose(rng), smp::point(rng));
    let num = fd(|x| Ok(dv(&inv_compose_point_matrix(&v3(x), &a))), &dv(&p), h, PLAIN)?;
    Ok((dm(&d_invapply_wrt_point(&a)), num))
}

fn d_invapply_pose(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (a, p) = (smp::hom_pose(rng), smp::point(rng));
    let num = fd(|x| Ok(dv(&inv_compose_point_matrix(&p, &hp(x)))), &dv(&a.vec12()), h, PLAIN)?;
    Ok((dm(&d_invapply_wrt_pose(&a, &p)), num))
}

// ---- manifold_jac ----

fn dexp_so3_zero(_: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let num = fd(|x| Ok(dv(&so3_exp(&v3(x)))), &DVector::zeros(3), h, PLAIN)?;
    Ok((dm(&dexp_so3_at_zero()), num))
}

fn dexp_quat(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let w = smp::rotvec(rng);
    let num = fd(|x| Ok(dv(&so3_exp_quat(&v3(x)).to_vector())), &dv(&w), h, PLAIN)?;
    Ok((dm(&dexp_so3_quat(&w)), num))
}

fn dexp_se3_zero(_: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let num = fd(
        |x| Ok(dv(&se3_pseudo_exp(&TangentSE3::from_vector(&Vector6::from_iterator(x.iter().copied()))).vec12())),
        &DVector::zeros(6),
        h,
        PLAIN,
    )?;
    Ok((dm(&dexp_se3_at_zero()), num))
}

fn dlog_so3_check(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let r = so3_exp(&smp::rotvec_in(rng, 1e-3, std::f64::consts::PI - 0.1));
    let num = fd(
        |x| Ok(dv(&so3_log(&nalgebra::Matrix3::from_iterator(x.iter().copied())))),
        &dv(&r),
        h,
        PLAIN,
    )?;
    Ok((dm(&dlog_so3(&r)), num))
}

fn expe_d(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let d = smp::hom_pose(rng);
    let num = mfd(|p: &HomPose| Ok(dv(&p.vec12())), &d, Side::Left, h, PLAIN)?;
    Ok((dm(&jacob_expeD_de(&d)), num))
}

fn d_expe(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let d = smp::hom_pose(rng);
    let num = mfd(|p: &HomPose| Ok(dv(&p.vec12())), &d, Side::Right, h, PLAIN)?;
    Ok((dm(&jacob_Dexpe_de(&d)), num))
}

fn expe_dp(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (d, p) = (smp::hom_pose(rng), smp::point(rng));
    let num = mfd(|x: &HomPose| Ok(dv(&x.transform_point(&p))), &d, Side::Left, h, PLAIN)?;
    Ok((dm(&jacob_expeDp_de(&d, &p)), num))
}

fn p_ominus_expe_d(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (d, p) = (smp::hom_pose(rng), smp::point(rng));
    let num = mfd(|x: &HomPose| Ok(dv(&inv_compose_point_matrix(&p, x))), &d, Side::Left, h, PLAIN)?;
    Ok((dm(&jacob_p_ominus_expeD_de(&d, &p)), num))
}

fn a_expe_d(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (a, d) = (smp::hom_pose(rng), smp::hom_pose(rng));
    let num = mfd(|x: &HomPose| Ok(dv(&a.compose(x).vec12())), &d, Side::Left, h, PLAIN)?;
    Ok((dm(&jacob_AexpeD_de(&a, &d)), num))
}

fn a_expe_dp(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (a, d, p) = (smp::hom_pose(rng), smp::hom_pose(rng), smp::point(rng));
    let num = mfd(|x: &HomPose| Ok(dv(&a.compose(x).transform_point(&p))), &d, Side::Left, h, PLAIN)?;
    Ok((dm(&jacob_AexpeDp_de(&a, &d, &p, false)), num))
}

fn p_ominus_a_expe_d(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (a, d, p) = (smp::hom_pose(rng), smp::hom_pose(rng), smp::point(rng));
    let num = mfd(|x: &HomPose| Ok(dv(&inv_compose_point_matrix(&p, &a.compose(x)))), &d, Side::Left, h, PLAIN)?;
    Ok((dm(&jacob_p_ominus_AexpeD_de(&a, &d, &p)), num))
}

fn dpseudolog(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let t = smp::hom_pose(rng);
    let num = fd(|x| Ok(dv(&se3_pseudo_log(&hp(x)).to_vector())), &dv(&t.vec12()), h, PLAIN)?;
    Ok((dm(&dpseudolog_se3(&t)), num))
}

/// P₂ = P₁ D N with N a moderate disturbance, so the edge error is nonzero.
fn edge3(rng: &mut ChaCha8Rng) -> (HomPose, HomPose, HomPose) {
    let (p1, d) = (smp::hom_pose(rng), smp::hom_pose(rng));
    let noise = HomPose::from_parts(&so3_exp(&smp::rotvec_in(rng, 0.0, 0.5)), &(smp::point(rng) * 0.25));
    (d, p1, p1.compose(&d).compose(&noise))
}

fn edge_se3_j1(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (d, p1, p2) = edge3(rng);
    let num = mfd(|x: &HomPose| Ok(dv(&edge_error_se3(&d, x, &p2)?.e)), &p1, Side::Right, h, PLAIN)?;
    Ok((dm(&edge_error_se3(&d, &p1, &p2)?.j1), num))
}

fn edge_se3_j2(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (d, p1, p2) = edge3(rng);
    let num = mfd(|x: &HomPose| Ok(dv(&edge_error_se3(&d, &p1, x)?.e)), &p2, Side::Right, h, PLAIN)?;
    Ok((dm(&edge_error_se3(&d, &p1, &p2)?.j2), num))
}

fn d_expe_se2(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let d = smp::hom_pose2(rng);
    let num = mfd(|x: &HomPose2| Ok(dv(&se2_pseudo_log(x))), &d, Side::Right, h, SE2_OUT)?;
    Ok((dm(&jacob_Dexpe_de_se2(&d)), num))
}

fn se2_from(x: &DVector<f64>) -> HomPose2 {
    HomPose2::new(x[0], x[1], x[2])
}

fn compose_se2_a(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (a, b) = (smp::hom_pose2(rng), smp::hom_pose2(rng));
    let num = fd(|x| Ok(coords2(&se2_from(x).compose(&b))), &coords2(&a), h, SE2_OUT)?;
    Ok((dm(&d_compose_se2_wrt_A(&a, &b)), num))
}

fn compose_se2_b(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (a, b) = (smp::hom_pose2(rng), smp::hom_pose2(rng));
    let num = fd(|x| Ok(coords2(&a.compose(&se2_from(x)))), &coords2(&b), h, SE2_OUT)?;
    Ok((dm(&d_compose_se2_wrt_B(&a)), num))
}

fn edge2(rng: &mut ChaCha8Rng) -> (HomPose2, HomPose2, HomPose2) {
    let (p1, d) = (smp::hom_pose2(rng), smp::hom_pose2(rng));
    let noise = HomPose2::new(
        rand::Rng::random_range(rng, -0.3..=0.3),
        rand::Rng::random_range(rng, -0.3..=0.3),
        rand::Rng::random_range(rng, -0.5..=0.5),
    );
    (d, p1, p1.compose(&d).compose(&noise))
}

fn edge_se2_j1(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (d, p1, p2) = edge2(rng);
    let num = mfd(|x: &HomPose2| Ok(dv(&edge_error_se2(&d, x, &p2).e)), &p1, Side::Right, h, SE2_OUT)?;
    Ok((dm(&edge_error_se2(&d, &p1, &p2).j1), num))
}

fn edge_se2_j2(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (d, p1, p2) = edge2(rng);
    let num = mfd(|x: &HomPose2| Ok(dv(&edge_error_se2(&d, &p1, x).e)), &p2, Side::Right, h, SE2_OUT)?;
    Ok((dm(&edge_error_se2(&d, &p1, &p2).j2), num))
}

// ---- vision ----

fn pixel_vec(k: &crate::vision::CameraIntrinsics, p: &Vector3<f64>) -> Result<DVector<f64>> {
    let px = project(k, p)?;
    Ok(DVector::from_vec(vec![px.u, px.v]))
}

fn dproject(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (k, p) = (smp::intrinsics(rng), smp::visible_point(rng));
    let num = fd(|x| pixel_vec(&k, &v3(x)), &dv(&p), h, PLAIN)?;
    Ok((dm(&dproject_dp(&k, &p)?), num))
}

/// Camera pose A and world point p with A ⊕ p in front of the camera.
fn direct_setup(rng: &mut ChaCha8Rng) -> (crate::vision::CameraIntrinsics, HomPose, Vector3<f64>) {
    let k = smp::intrinsics(rng);
    let a = smp::hom_pose(rng);
    let g = smp::visible_point(rng);
    (k, a, a.inverse().transform_point(&g))
}

fn project_pose_eps(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (k, a, p) = direct_setup(rng);
    let num = mfd(|x: &HomPose| pixel_vec(&k, &x.transform_point(&p)), &a, Side::Left, h, PLAIN)?;
    Ok((dm(&project_pose_point(&k, &a, &p)?.1), num))
}

fn project_pose_p(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (k, a, p) = direct_setup(rng);
    let num = fd(|x| pixel_vec(&k, &a.transform_point(&v3(x))), &dv(&p), h, PLAIN)?;
    Ok((dm(&project_pose_point(&k, &a, &p)?.2), num))
}

fn inverse_setup(rng: &mut ChaCha8Rng) -> (crate::vision::CameraIntrinsics, HomPose, Vector3<f64>) {
    let k = smp::intrinsics(rng);
    let a = smp::hom_pose(rng);
    let l = smp::visible_point(rng);
    (k, a, a.transform_point(&l))
}

fn project_inv_eps(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (k, a, p) = inverse_setup(rng);
    let num = mfd(|x: &HomPose| pixel_vec(&k, &inv_compose_point_matrix(&p, x)), &a, Side::Left, h, PLAIN)?;
    Ok((dm(&project_inv_pose_point(&k, &a, &p)?.1), num))
}

fn project_inv_p(rng: &mut ChaCha8Rng, h: f64) -> Result<Pair> {
    let (k, a, p) = inverse_setup(rng);
    let num = fd(|x| pixel_vec(&k, &inv_compose_point_matrix(&v3(x), &a)), &dv(&p), h, PLAIN)?;
    Ok((dm(&project_inv_pose_point(&k, &a, &p)?.2), num))
}

const CHECKS: &[Check] = &[
    Check { name: "core::jacobian_matrix_to_quat", run: matrix_to_quat_check },
    Check { name: "core::jacobian_quat_to_matrix", run: quat_to_matrix_check },
    Check { name: "core::jacobian_quat_to_ypr", run: quat_to_ypr_check },
    Check { name: "core::jacobian_ypr_to_matrix", run: ypr_to_matrix_check },
    Check { name: "core::jacobian_ypr_to_quat", run: ypr_to_quat_check },
    Check { name: "core::jacobian_ypr_wrt_matrix", run: ypr_wrt_matrix_check },
    Check { name: "core::quat_normalize", run: quat_normalize_check },
    Check { name: "geometry::compose_point_quat/pose", run: compose_point_quat_pose },
    Check { name: "geometry::compose_point_quat/point", run: compose_point_quat_point },
    Check { name: "geometry::compose_point_ypr/pose", run: compose_point_ypr_pose },
    Check { name: "geometry::compose_point_ypr/point", run: compose_point_ypr_point },
    Check { name: "geometry::compose_pose_quat/p1", run: compose_pose_quat_j1 },
    Check { name: "geometry::compose_pose_quat/p2", run: compose_pose_quat_j2 },
    Check { name: "geometry::compose_pose_ypr/p1", run: compose_pose_ypr_j1 },
    Check { name: "geometry::compose_pose_ypr/p2", run: compose_pose_ypr_j2 },
    Check { name: "geometry::inv_compose_point_quat/pose", run: inv_compose_point_quat_pose },
    Check { name: "geometry::inv_compose_point_quat/point", run: inv_compose_point_quat_point },
    Check { name: "geometry::inverse_pose_quat", run: inverse_pose_quat_check },
    Check { name: "manifold_jac::d_compose_se2_wrt_A", run: compose_se2_a },
    Check { name: "manifold_jac::d_compose_se2_wrt_B", run: compose_se2_b },
    Check { name: "manifold_jac::dexp_se3_at_zero", run: dexp_se3_zero },
    Check { name: "manifold_jac::dexp_so3_at_zero", run: dexp_so3_zero },
    Check { name: "manifold_jac::dexp_so3_quat", run: dexp_quat },
    Check { name: "manifold_jac::dlog_so3", run: dlog_so3_check },
    Check { name: "manifold_jac::dpseudolog_se3", run: dpseudolog },
    Check { name: "manifold_jac::edge_error_se2/p1", run: edge_se2_j1 },
    Check { name: "manifold_jac::edge_error_se2/p2", run: edge_se2_j2 },
    Check { name: "manifold_jac::edge_error_se3/p1", run: edge_se3_j1 },
    Check { name: "manifold_jac::edge_error_se3/p2", run: edge_se3_j2 },
    Check { name: "manifold_jac::jacob_AexpeDp_de", run: a_expe_dp },
    Check { name: "manifold_jac::jacob_AexpeD_de", run: a_expe_d },
    Check { name: "manifold_jac::jacob_Dexpe_de", run: d_expe },
    Check { name: "manifold_jac::jacob_Dexpe_de_se2", run: d_expe_se2 },
    Check { name: "manifold_jac::jacob_expeD_de", run: expe_d },
    Check { name: "manifold_jac::jacob_expeDp_de", run: expe_dp },
    Check { name: "manifold_jac::jacob_p_ominus_AexpeD_de", run: p_ominus_a_expe_d },
    Check { name: "manifold_jac::jacob_p_ominus_expeD_de", run: p_ominus_expe_d },
    Check { name: "matderiv::d_apply_wrt_point", run: d_apply_point },
    Check { name: "matderiv::d_apply_wrt_pose", run: d_apply_pose },
    Check { name: "matderiv::d_compose_wrt_A", run: d_compose_a },
    Check { name: "matderiv::d_compose_wrt_B", run: d_compose_b },
    Check { name: "matderiv::d_invapply_wrt_point", run: d_invapply_point },
    Check { name: "matderiv::d_invapply_wrt_pose", run: d_invapply_pose },
    Check { name: "matderiv::d_inverse_wrt_pose", run: d_inverse },
    Check { name: "vision::dproject_dp", run: dproject },
    Check { name: "vision::project_inv_pose_point/eps", run: project_inv_eps },
    Check { name: "vision::project_inv_pose_point/point", run: project_inv_p },
    Check { name: "vision::project_pose_point/eps", run: project_pose_eps },
    Check { name: "vision::project_pose_point/point", run: project_pose_p },
];

/// Names of every catalog entry, sorted.
pub fn catalog_names() -> Vec<&'static str> {
    let mut v: Vec<_> = CHECKS.iter().map(|c| c.name).collect();
    v.sort_unstable();
    v
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn sample_rng(seed: u64, name: &str, i: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(splitmix(seed ^ fnv1a(name)) ^ i as u64))
}

/// Runs every catalog entry on `n` seeded samples and reports, per entry, the
/// sample with the largest elementwise discrepancy. A sample whose evaluation
/// fails counts as an infinite error. Each sample draws from its
/// own generator, so results do not depend on thread scheduling.
pub fn check_catalog(seed: u64, n: usize, tol: f64) -> Vec<JacobianReport> {
    if n == 0 {
        return Vec::new();
    }
    let mut checks: Vec<&Check> = CHECKS.iter().collect();
    checks.sort_by_key(|c| c.name);
    let jobs: Vec<(usize, usize)> = (0..checks.len()).flat_map(|c| (0..n).map(move |i| (c, i))).collect();
    let results: Vec<JacobianReport> = jobs
        .par_iter()
        .map(|&(c, i)| {
            let check = checks[c];
            let mut rng = sample_rng(seed, check.name, i);
            match (check.run)(&mut rng, DEFAULT_STEP) {
                Ok((a, num)) => JacobianReport::compare(check.name, a, num, tol),
                Err(_) => JacobianReport {
                    op: check.name.to_string(),
                    max_abs_error: f64::INFINITY,
                    worst_row: 0,
                    worst_col: 0,
                    analytic: DMatrix::zeros(0, 0),
                    numeric: DMatrix::zeros(0, 0),
                    pass: false,
                },
            }
        })
        .collect();
    results
        .chunks(n)
        .map(|chunk| {
            let mut worst = &chunk[0];
            for r in &chunk[1..] {
                if r.max_abs_error > worst.max_abs_error {
                    worst = r;
                }
            }
            worst.clone()
        })
        .collect()
}
