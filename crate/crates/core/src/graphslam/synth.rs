//! Synthetic pose graphs with known ground truth.

use super::{G2oGraph, GraphPose, Pose2, Pose3, PoseGraph};
use crate::error::{Error, Result};
use crate::pose::HomPose;
use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    /// Poses around a circle, heading along the tangent; loop closure last → first.
    Circle2d,
    /// Serpentine sweep over a square grid with closures between adjacent rows.
    Grid2d,
    /// Closed wavy loop on a sphere of radius 5 m, z axis along the outward normal.
    Sphere3d,
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle2d" => Ok(Self::Circle2d),
            "grid2d" => Ok(Self::Grid2d),
            "sphere3d" => Ok(Self::Sphere3d),
            other => Err(Error::Domain(format!("unknown graph kind {other:?}"))),
        }
    }
}

/// Odometry and loop-closure noise: σ_t in metres, σ_r in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Noise {
    pub sigma_t: f64,
    pub sigma_r: f64,
}

impl Noise {
    pub const ZERO: Self = Self {
        sigma_t: 0.0,
        sigma_r: 0.0,
    };

    pub const fn new(sigma_t: f64, sigma_r: f64) -> Self {
        Self { sigma_t, sigma_r }
    }
}

// A zero sigma leaves that component unweighted rather than infinitely weighted.
fn weight(s: f64) -> f64 {
    if s > 0.0 {
        1.0 / (s * s)
    } else {
        1.0
    }
}

/// Builds (truth, noisy). Edge (i, i+1) pairs form the odometry chain used for
/// dead-reckoning initialization; vertex 0 is fixed at its true pose in both.
fn build<P: GraphPose>(truth: &[P], edges: &[(usize, usize)], noise: Noise, seed: u64) -> (PoseGraph<P>, PoseGraph<P>) {
    let rot = P::DOF / 2;
    let sigmas: Vec<f64> = (0..P::DOF)
        .map(|k| if k < P::DOF - rot { noise.sigma_t } else { noise.sigma_r })
        .collect();
    let info = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(P::DOF, sigmas.iter().map(|&s| weight(s))));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exact = PoseGraph::new();
    let mut noisy = PoseGraph::new();
    for (i, p) in truth.iter().enumerate() {
        exact.add_vertex(i, *p);
    }
    for &(i, j) in edges {
        let d = truth[i].inverse().compose(&truth[j]);
        let eps: Vec<f64> = sigmas.iter().map(|s| s * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
        exact.add_edge(i, j, d, info.clone());
        noisy.add_edge(i, j, d.retract(&eps), info.clone());
    }
    let mut cur = truth[0];
    noisy.add_vertex(0, cur);
    for i in 1..truth.len() {
        let odo = noisy
            .edges
            .iter()
            .find(|e| e.from == i - 1 && e.to == i)
            .expect("odometry chain covers every vertex");
        cur = cur.compose(&odo.measurement);
        noisy.add_vertex(i, cur);
    }
    exact.fix(0);
    noisy.fix(0);
    (exact, noisy)
}

fn chain_with_loop(n: usize) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    e.push((n - 1, 0));
    e
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::Domain(format!("a synthetic graph needs at least 3 poses, got {n}")));
    }
    Ok(())
}

pub fn synth_circle2d(n: usize, noise: Noise, seed: u64) -> Result<(PoseGraph<Pose2>, PoseGraph<Pose2>)> {
    check_n(n)?;
    let r = n as f64 / TAU;
    let truth: Vec<Pose2> = (0..n)
        .map(|i| {
            let a = TAU * i as f64 / n as f64;
            Pose2::new(r * a.cos(), r * a.sin(), crate::pose::wrap_angle(a + FRAC_PI_2))
        })
        .collect();
    Ok(build(&truth, &chain_with_loop(n), noise, seed))
}

pub fn synth_grid2d(n: usize, noise: Noise, seed: u64) -> Result<(PoseGraph<Pose2>, PoseGraph<Pose2>)> {
    check_n(n)?;
    let w = (n as f64).sqrt().ceil() as usize;
    let cell = |i: usize| {
        let (row, c) = (i / w, i % w);
        let col = if row % 2 == 0 { c } else { w - 1 - c };
        (row, col)
    };
    let truth: Vec<Pose2> = (0..n)
        .map(|i| {
            let (row, col) = cell(i);
            let heading = if row % 2 == 0 { 0.0 } else { PI };
            Pose2::new(col as f64, row as f64, heading)
        })
        .collect();
    let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    for i in 0..n {
        for j in i + 2..n {
            let (a, b) = (cell(i), cell(j));
            if b.0 == a.0 + 1 && b.1 == a.1 {
                edges.push((i, j));
            }
        }
    }
    Ok(build(&truth, &edges, noise, seed))
}

pub fn synth_sphere3d(n: usize, noise: Noise, seed: u64) -> Result<(PoseGraph<Pose3>, PoseGraph<Pose3>)> {
    check_n(n)?;
    const RADIUS: f64 = 5.0;
    const WAVE: f64 = 0.35;
    let point = |lon: f64| {
        let lat = WAVE * (2.0 * lon).sin();
        RADIUS * Vector3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin())
    };
    let truth: Vec<Pose3> = (0..n)
        .map(|i| {
            let lon = TAU * i as f64 / n as f64;
            let p = point(lon);
            let h = 1e-4;
            let x = (point(lon + h) - point(lon - h)).normalize();
            let z = (p - x * x.dot(&p)).normalize();
            let y = z.cross(&x);
            let r = Matrix3::from_columns(&[x, y, z]);
            Pose3::from_hom(&HomPose::from_parts(&r, &p))
        })
        .collect();
    Ok(build(&truth, &chain_with_loop(n), noise, seed))
}

/// Returns (truth, noisy) for `kind`.
pub fn synth_graph(kind: GraphKind, n: usize, noise: Noise, seed: u64) -> Result<(G2oGraph, G2oGraph)> {
    Ok(match kind {
        GraphKind::Circle2d => {
            let (a, b) = synth_circle2d(n, noise, seed)?;
            (G2oGraph::Se2(a), G2oGraph::Se2(b))
        }
        GraphKind::Grid2d => {
            let (a, b) = synth_grid2d(n, noise, seed)?;
            (G2oGraph::Se2(a), G2oGraph::Se2(b))
        }
        GraphKind::Sphere3d => {
            let (a, b) = synth_sphere3d(n, noise, seed)?;
            (G2oGraph::Se3(a), G2oGraph::Se3(b))
        }
    })
}

/// RMS position difference over vertices present in both graphs.
pub fn absolute_trajectory_error<P: GraphPose>(a: &PoseGraph<P>, b: &PoseGraph<P>) -> f64 {
    let (sum, count) = a
        .vertices
        .iter()
        .filter_map(|(id, p)| b.vertices.get(id).map(|q| (p.position() - q.position()).norm_squared()))
        .fold((0.0, 0usize), |(s, c), d| (s + d, c + 1));
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

