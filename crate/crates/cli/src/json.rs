//! JSON encoding of poses, points and Gaussians.
//!
//! A pose is `{"type": "ypr"|"quat"|"matrix", "data": [...], "cov": [[...]]}`
//! with `cov` optional:
//!   ypr    (x, y, z, yaw, pitch, roll)
//!   quat   (x, y, z, qr, qx, qy, qz)
//!   matrix 16 entries of the 4×4 transform, row-major; its covariance is 12×12
//!          over the column-major top 3×4 block.
//! A point is `{"type": "point", "data": [x, y, z], "cov": [[...]]}`.

use crate::CliError;
use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3};
use rigidkit::{EulerPose, GaussianPoint3, GaussianPose, HomPose, Parameterization, Pose, QuatPose, Quaternion};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Entity {
    #[serde(rename = "type")]
    pub kind: String,
    pub data: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cov: Option<Vec<Vec<f64>>>,
}

pub fn parameterization(name: &str) -> Result<Parameterization, CliError> {
    match name {
        "ypr" => Ok(Parameterization::Ypr),
        "quat" => Ok(Parameterization::Quat),
        "matrix" => Ok(Parameterization::Matrix),
        other => Err(CliError::Parse(format!("unknown pose type {other:?} (expected ypr, quat or matrix)"))),
    }
}

fn name(p: Parameterization) -> &'static str {
    match p {
        Parameterization::Ypr => "ypr",
        Parameterization::Quat => "quat",
        Parameterization::Matrix => "matrix",
    }
}

fn expect_len(what: &str, data: &[f64], n: usize) -> Result<(), CliError> {
    if data.len() != n {
        return Err(CliError::Parse(format!("{what} data needs {n} numbers, found {}", data.len())));
    }
    Ok(())
}

fn matrix_from_rows(rows: &[Vec<f64>], n: usize) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Parse(format!("cov must be a {n}x{n} array of rows")));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Scale from the JSON angle unit to radians, per coordinate of a parameterization.
fn angle_scale(p: Parameterization, degrees: bool) -> Vec<f64> {
    let k = if degrees { std::f64::consts::PI / 180.0 } else { 1.0 };
    (0..p.dim())
        .map(|i| if p == Parameterization::Ypr && i >= 3 { k } else { 1.0 })
        .collect()
}

pub fn decode_pose(e: &Entity, degrees: bool) -> Result<(Pose, Option<DMatrix<f64>>), CliError> {
    let kind = parameterization(&e.kind)?;
    let d = &e.data;
    let pose = match kind {
        Parameterization::Ypr => {
            expect_len("ypr", d, 6)?;
            let k = angle_scale(kind, degrees)[3];
            Pose::Ypr(EulerPose::new(d[0], d[1], d[2], d[3] * k, d[4] * k, d[5] * k))
        }
        Parameterization::Quat => {
            expect_len("quat", d, 7)?;
            Pose::Quat(QuatPose::new(Vector3::new(d[0], d[1], d[2]), Quaternion::new(d[3], d[4], d[5], d[6]))?)
        }
        Parameterization::Matrix => {
            expect_len("matrix", d, 16)?;
            Pose::Matrix(HomPose::try_from_matrix(Matrix4::from_row_slice(d))?)
        }
    };
    let cov = match &e.cov {
        None => None,
        Some(r) => {
            let s = angle_scale(kind, degrees);
            let c = matrix_from_rows(r, kind.dim())?;
            Some(DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| c[(i, j)] * s[i] * s[j]))
        }
    };
    Ok((pose, cov))
}

pub fn decode_gaussian(e: &Entity, degrees: bool) -> Result<GaussianPose, CliError> {
    let (mean, cov) = decode_pose(e, degrees)?;
    let n = mean.parameterization().dim();
    Ok(GaussianPose::new(mean, cov.unwrap_or_else(|| DMatrix::zeros(n, n)))?)
}

pub fn encode_pose(pose: &Pose, cov: Option<&DMatrix<f64>>, degrees: bool) -> Entity {
    let kind = pose.parameterization();
    let s = angle_scale(kind, degrees);
    let data = match pose {
        Pose::Ypr(p) => {
            let v = p.to_vector();
            (0..6).map(|i| v[i] / s[i]).collect()
        }
        Pose::Quat(p) => p.to_vector().iter().copied().collect(),
        Pose::Matrix(m) => m.matrix().transpose().iter().copied().collect(),
    };
    Entity {
        kind: name(kind).into(),
        data,
        cov: cov.map(|c| rows(&DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| c[(i, j)] / (s[i] * s[j])))),
    }
}

pub fn decode_point(e: &Entity) -> Result<GaussianPoint3, CliError> {
    if e.kind != "point" {
        return Err(CliError::Parse(format!("expected a point, found type {:?}", e.kind)));
    }
    expect_len("point", &e.data, 3)?;
    let cov = match &e.cov {
        None => Matrix3::zeros(),
        Some(r) => {
            let c = matrix_from_rows(r, 3)?;
            Matrix3::from_fn(|i, j| c[(i, j)])
        }
    };
    Ok(GaussianPoint3 {
        mean: Vector3::new(e.data[0], e.data[1], e.data[2]),
        cov,
    })
}

pub fn encode_point(p: &GaussianPoint3, with_cov: bool) -> Entity {
    Entity {
        kind: "point".into(),
        data: p.mean.iter().copied().collect(),
        cov: with_cov.then(|| rows(&DMatrix::from_fn(3, 3, |i, j| p.cov[(i, j)]))),
    }
}

pub fn to_rows<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::RawStorage<f64, R, C>>(
    m: &nalgebra::Matrix<f64, R, C, S>,
) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
}
