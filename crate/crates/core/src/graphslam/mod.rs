//! Pose-graph optimization on SE(2) and SE(3).
//!
//! Vertices are updated with the right retraction P ← P·pseudo_exp(ε), which is
//! the perturbation the edge Jacobians in [`crate::manifold_jac`] are taken for.

mod g2o;
mod sparse;
mod synth;

pub use g2o::{read_g2o, write_g2o, G2oGraph};
pub use sparse::{cholesky_solve, BlockSymmetric, SparseCholesky};
pub use synth::{absolute_trajectory_error, synth_circle2d, synth_graph, synth_grid2d, synth_sphere3d, GraphKind, Noise};

use crate::convert::{matrix_to_quat, quat_rotation, unit};
use crate::error::{Error, Result};
use crate::lie::so3_exp_quat;
use crate::manifold_jac::{edge_error_se2, edge_error_se3};
use crate::pose::{wrap_angle, HomPose, HomPose2, Point3, Quaternion};
use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::ops::AddAssign;

/// Systems with at most this many free coordinates are solved densely.
pub const DENSE_LIMIT: usize = 1500;

const MAX_LM_RETRIES: usize = 10;

/// Planar vertex stored as (x, y, θ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub const fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn to_hom(&self) -> HomPose2 {
        HomPose2::new(self.x, self.y, self.theta)
    }

    pub fn from_hom(h: &HomPose2) -> Self {
        Self::new(h.x(), h.y(), h.phi())
    }
}

/// Spatial vertex. The quaternion is kept exactly as given (so files round-trip)
/// and normalized whenever the rotation is needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose3 {
    pub t: Point3,
    pub q: Quaternion,
}

impl Pose3 {
    pub fn new(t: Point3, q: Quaternion) -> Result<Self> {
        let n = q.norm();
        if !(n > 1e-12) || !t.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(format!("invalid pose (|q| = {n:e})")));
        }
        Ok(Self { t, q })
    }

    pub fn identity() -> Self {
        Self {
            t: Point3::zeros(),
            q: Quaternion::identity(),
        }
    }

    pub fn to_hom(&self) -> HomPose {
        HomPose::from_parts(&quat_rotation(&self.q), &self.t)
    }

    pub fn from_hom(h: &HomPose) -> Self {
        Self {
            t: h.translation(),
            q: matrix_to_quat(h).q,
        }
    }
}

/// Residual of one edge and its Jacobians for right perturbations of both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTerm {
    pub e: DVector<f64>,
    pub j1: DMatrix<f64>,
    pub j2: DMatrix<f64>,
}

pub trait GraphPose: Copy + PartialEq + Send + Sync + std::fmt::Debug {
    const DOF: usize;
    fn edge_term(d: &Self, p1: &Self, p2: &Self) -> Result<EdgeTerm>;
    /// self · pseudo_exp(eps), eps ordered translation first.
    fn retract(&self, eps: &[f64]) -> Self;
    fn compose(&self, rhs: &Self) -> Self;
    fn inverse(&self) -> Self;
    fn position(&self) -> Point3;
}

impl GraphPose for Pose2 {
    const DOF: usize = 3;

    fn edge_term(d: &Self, p1: &Self, p2: &Self) -> Result<EdgeTerm> {
        let t = edge_error_se2(&d.to_hom(), &p1.to_hom(), &p2.to_hom());
        Ok(EdgeTerm {
            e: DVector::from_column_slice(t.e.as_slice()),
            j1: DMatrix::from_column_slice(3, 3, t.j1.as_slice()),
            j2: DMatrix::from_column_slice(3, 3, t.j2.as_slice()),
        })
    }

    fn retract(&self, eps: &[f64]) -> Self {
        let (s, c) = self.theta.sin_cos();
        Self::new(
            self.x + c * eps[0] - s * eps[1],
            self.y + s * eps[0] + c * eps[1],
            wrap_angle(self.theta + eps[2]),
        )
    }

    fn compose(&self, rhs: &Self) -> Self {
        Self::from_hom(&self.to_hom().compose(&rhs.to_hom()))
    }

    fn inverse(&self) -> Self {
        Self::from_hom(&self.to_hom().inverse())
    }

    fn position(&self) -> Point3 {
        Point3::new(self.x, self.y, 0.0)
    }
}

impl GraphPose for Pose3 {
    const DOF: usize = 6;

    fn edge_term(d: &Self, p1: &Self, p2: &Self) -> Result<EdgeTerm> {
        let t = edge_error_se3(&d.to_hom(), &p1.to_hom(), &p2.to_hom())?;
        Ok(EdgeTerm {
            e: DVector::from_column_slice(t.e.as_slice()),
            j1: DMatrix::from_column_slice(6, 6, t.j1.as_slice()),
            j2: DMatrix::from_column_slice(6, 6, t.j2.as_slice()),
        })
    }

    fn retract(&self, eps: &[f64]) -> Self {
        let d = Vector3::new(eps[0], eps[1], eps[2]);
        let w = Vector3::new(eps[3], eps[4], eps[5]);
        let q = unit(&self.q);
        Self {
            t: self.t + quat_rotation(&q) * d,
            q: unit(&q.hamilton(&so3_exp_quat(&w))).canonical(),
        }
    }

    fn compose(&self, rhs: &Self) -> Self {
        Self::from_hom(&self.to_hom().compose(&rhs.to_hom()))
    }

    fn inverse(&self) -> Self {
        Self::from_hom(&self.to_hom().inverse())
    }

    fn position(&self) -> Point3 {
        self.t
    }
}

/// Relative-pose constraint `to ≈ from · measurement`. The information matrix
/// weights the error in tangent order (translation, rotation).
#[derive(Debug, Clone, PartialEq)]
pub struct Edge<P> {
    pub from: usize,
    pub to: usize,
    pub measurement: P,
    pub information: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseGraph<P> {
    pub vertices: BTreeMap<usize, P>,
    pub edges: Vec<Edge<P>>,
    pub fixed: BTreeSet<usize>,
}

impl<P> Default for PoseGraph<P> {
    fn default() -> Self {
        Self {
            vertices: BTreeMap::new(),
            edges: Vec::new(),
            fixed: BTreeSet::new(),
        }
    }
}

impl<P: GraphPose> PoseGraph<P> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, id: usize, pose: P) {
        self.vertices.insert(id, pose);
    }

    pub fn add_edge(&mut self, from: usize, to: usize, measurement: P, information: DMatrix<f64>) {
        self.edges.push(Edge {
            from,
            to,
            measurement,
            information,
        });
    }

    pub fn fix(&mut self, id: usize) {
        self.fixed.insert(id);
    }

    /// Free vertex ids in the order their blocks appear in the normal equations.
    pub fn free_ids(&self) -> Vec<usize> {
        self.vertices.keys().copied().filter(|id| !self.fixed.contains(id)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for (k, e) in self.edges.iter().enumerate() {
            for id in [e.from, e.to] {
                if !self.vertices.contains_key(&id) {
                    return Err(Error::Domain(format!("edge {k} references missing vertex {id}")));
                }
            }
            if e.from == e.to {
                return Err(Error::Domain(format!("edge {k} connects vertex {} to itself", e.from)));
            }
            let info = &e.information;
            if info.shape() != (P::DOF, P::DOF) {
                return Err(Error::Domain(format!(
                    "edge {k}: information matrix is {}x{}, expected {d}x{d}",
                    info.nrows(),
                    info.ncols(),
                    d = P::DOF
                )));
            }
            if (info - info.transpose()).amax() > 1e-9 || !info.iter().all(|v| v.is_finite()) {
                return Err(Error::Domain(format!("edge {k}: information matrix is not symmetric")));
            }
        }
        for id in &self.fixed {
            if !self.vertices.contains_key(id) {
                return Err(Error::Domain(format!("fixed vertex {id} does not exist")));
            }
        }
        Ok(())
    }

    /// Every connected component needs a fixed vertex, otherwise the gauge is free.
    pub fn check_gauge(&self) -> Result<()> {
        let ids: Vec<usize> = self.vertices.keys().copied().collect();
        let pos: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut parent: Vec<usize> = (0..ids.len()).collect();
        fn root(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for e in &self.edges {
            let (a, b) = (root(&mut parent, pos[&e.from]), root(&mut parent, pos[&e.to]));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut anchored = vec![false; ids.len()];
        for id in &self.fixed {
            let r = root(&mut parent, pos[id]);
            anchored[r] = true;
        }
        let mut floating: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &id) in ids.iter().enumerate() {
            let r = root(&mut parent, i);
            if !anchored[r] {
                floating.entry(r).or_default().push(id);
            }
        }
        match floating.into_values().next() {
            Some(component) => Err(Error::RankDeficient { component }),
            None => Ok(()),
        }
    }

    /// Vertices in `keep` and the edges and fixed flags among them.
    pub fn subgraph(&self, keep: &BTreeSet<usize>) -> Self {
        Self {
            vertices: self.vertices.iter().filter(|(id, _)| keep.contains(id)).map(|(&id, &p)| (id, p)).collect(),
            edges: self.edges.iter().filter(|e| keep.contains(&e.from) && keep.contains(&e.to)).cloned().collect(),
            fixed: self.fixed.intersection(keep).copied().collect(),
        }
    }

    /// Applies P ← P·pseudo_exp(εᵢ) to every free vertex; ε is stacked in `free_ids` order.
    pub fn retract_free(&self, eps: &DVector<f64>) -> Self {
        let mut out = self.clone();
        for (k, id) in self.free_ids().into_iter().enumerate() {
            let p = out.vertices.get_mut(&id).expect("free id comes from the vertex map");
            *p = p.retract(&eps.as_slice()[k * P::DOF..(k + 1) * P::DOF]);
        }
        out
    }

    fn edge_terms(&self) -> Result<Vec<EdgeTerm>> {
        self.edges
            .par_iter()
            .map(|e| P::edge_term(&e.measurement, &self.vertices[&e.from], &self.vertices[&e.to]))
            .collect()
    }
}

/// Σ eᵀ Λ e over all edges.
pub fn chi2<P: GraphPose>(g: &PoseGraph<P>) -> Result<f64> {
    g.validate()?;
    let terms = g.edge_terms()?;
    Ok(g.edges.iter().zip(&terms).map(|(e, t)| t.e.dot(&(&e.information * &t.e))).sum())
}

#[derive(Debug, Clone)]
pub struct NormalEquations {
    /// Free vertex ids; block k of H and b belongs to `ids[k]`.
    pub ids: Vec<usize>,
    pub h: BlockSymmetric,
    pub b: DVector<f64>,
    pub chi2: f64,
}

/// H = Σ JᵀΛJ and b = Σ JᵀΛe over the free vertices, so ∇chi2 = 2b.
pub fn build_normal_equations<P: GraphPose>(g: &PoseGraph<P>) -> Result<NormalEquations> {
    g.validate()?;
    g.check_gauge()?;
    let ids = g.free_ids();
    let block: BTreeMap<usize, usize> = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
    let dof = P::DOF;
    let mut h = BlockSymmetric::new(dof, ids.len());
    let mut b = DVector::zeros(dof * ids.len());
    let mut total = 0.0;
    let terms = g.edge_terms()?;
    // Accumulated in edge order so results do not depend on thread scheduling.
    for (edge, t) in g.edges.iter().zip(&terms) {
        let le = &edge.information * &t.e;
        total += t.e.dot(&le);
        let bi = block.get(&edge.from).copied();
        let bj = block.get(&edge.to).copied();
        let a1 = t.j1.transpose() * &edge.information;
        let a2 = t.j2.transpose() * &edge.information;
        if let Some(i) = bi {
            h.add(i, i, &(&a1 * &t.j1));
            b.rows_mut(i * dof, dof).add_assign(&(&t.j1.transpose() * &le));
        }
        if let Some(j) = bj {
            h.add(j, j, &(&a2 * &t.j2));
            b.rows_mut(j * dof, dof).add_assign(&(&t.j2.transpose() * &le));
        }
        if let (Some(i), Some(j)) = (bi, bj) {
            if i < j {
                h.add(i, j, &(&a1 * &t.j2));
            } else {
                h.add(j, i, &(&a2 * &t.j1));
            }
        }
    }
    Ok(NormalEquations { ids, h, b, chi2: total })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    GaussNewton,
    LevenbergMarquardt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearSolver {
    /// Dense up to [`DENSE_LIMIT`] free coordinates, sparse above.
    Auto,
    Dense,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolverConfig {
    pub method: Method,
    pub max_iterations: usize,
    pub epsilon_gradient: f64,
    pub epsilon_update: f64,
    pub lm_initial_lambda: f64,
    pub lm_factor: f64,
    pub linear_solver: LinearSolver,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::LevenbergMarquardt,
            max_iterations: 50,
            epsilon_gradient: 1e-9,
            epsilon_update: 1e-10,
            lm_initial_lambda: 1e-4,
            lm_factor: 10.0,
            linear_solver: LinearSolver::Auto,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.epsilon_gradient > 0.0
            && self.epsilon_update > 0.0
            && self.lm_initial_lambda > 0.0
            && self.lm_factor > 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(
                "tolerances and the initial lambda must be positive and the lambda factor above 1".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IterationStats {
    pub iteration: usize,
    pub chi2: f64,
    pub update_norm: f64,
    /// Damping used for the accepted step; zero under Gauss-Newton.
    pub lambda: f64,
}

fn solve(h: &BlockSymmetric, rhs: &DVector<f64>, kind: LinearSolver) -> Result<DVector<f64>> {
    let dense = match kind {
        LinearSolver::Auto => h.dim() <= DENSE_LIMIT,
        LinearSolver::Dense => true,
        LinearSolver::Sparse => false,
    };
    if dense {
        cholesky_solve(h.to_dense(), rhs)
    } else {
        SparseCholesky::factor(h)?.solve(rhs)
    }
}

struct Outcome<P> {
    graph: PoseGraph<P>,
    chi2: f64,
    update_norm: f64,
    lambda: f64,
}

fn iterate<P: GraphPose>(
    g: &PoseGraph<P>,
    ne: &NormalEquations,
    cfg: &SolverConfig,
    lambda: &mut f64,
) -> Result<Outcome<P>> {
    let rhs = -&ne.b;
    match cfg.method {
        Method::GaussNewton => {
            let eps = solve(&ne.h, &rhs, cfg.linear_solver).map_err(|e| match e {
                Error::SolverFailure(m) => {
                    Error::SolverFailure(format!("{m}; Gauss-Newton needs a nonsingular H, try levenberg-marquardt"))
                }
                other => other,
            })?;
            let graph = g.retract_free(&eps);
            let c = chi2(&graph)?;
            Ok(Outcome {
                graph,
                chi2: c,
                update_norm: eps.norm(),
                lambda: 0.0,
            })
        }
        Method::LevenbergMarquardt => {
            for _ in 0..MAX_LM_RETRIES {
                let mut damped = ne.h.clone();
                damped.add_diagonal(*lambda);
                let used = *lambda;
                let candidate = solve(&damped, &rhs, cfg.linear_solver)
                    .ok()
                    .map(|eps| {
                        let graph = g.retract_free(&eps);
                        let c = chi2(&graph).unwrap_or(f64::INFINITY);
                        (graph, c, eps.norm())
                    });
                match candidate {
                    Some((graph, c, norm)) if c <= ne.chi2 => {
                        *lambda = (*lambda / cfg.lm_factor).max(f64::MIN_POSITIVE);
                        return Ok(Outcome {
                            graph,
                            chi2: c,
                            update_norm: norm,
                            lambda: used,
                        });
                    }
                    _ => *lambda *= cfg.lm_factor,
                }
            }
            // No acceptable step: report a zero update so the caller stops.
            Ok(Outcome {
                graph: g.clone(),
                chi2: ne.chi2,
                update_norm: 0.0,
                lambda: *lambda,
            })
        }
    }
}

/// One solver iteration starting from `cfg.lm_initial_lambda`.
pub fn step<P: GraphPose>(g: &PoseGraph<P>, cfg: &SolverConfig) -> Result<(PoseGraph<P>, IterationStats)> {
    cfg.validate()?;
    let ne = build_normal_equations(g)?;
    let mut lambda = cfg.lm_initial_lambda;
    let out = iterate(g, &ne, cfg, &mut lambda)?;
    let stats = IterationStats {
        iteration: 1,
        chi2: out.chi2,
        update_norm: out.update_norm,
        lambda: out.lambda,
    };
    Ok((out.graph, stats))
}

/// Iterates until `max_iterations`, ‖b‖∞ < `epsilon_gradient` or an update
/// shorter than `epsilon_update`. Entry 0 of the returned stats is the initial state.
pub fn optimize<P: GraphPose>(g: &PoseGraph<P>, cfg: &SolverConfig) -> Result<(PoseGraph<P>, Vec<IterationStats>)> {
    cfg.validate()?;
    g.validate()?;
    g.check_gauge()?;
    let lm = cfg.method == Method::LevenbergMarquardt;
    let mut lambda = cfg.lm_initial_lambda;
    let mut cur = g.clone();
    let mut stats = vec![IterationStats {
        iteration: 0,
        chi2: chi2(&cur)?,
        update_norm: 0.0,
        lambda: if lm { lambda } else { 0.0 },
    }];
    for iteration in 1..=cfg.max_iterations {
        let ne = build_normal_equations(&cur)?;
        let grad = ne.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if grad < cfg.epsilon_gradient {
            stats.push(IterationStats {
                iteration,
                chi2: ne.chi2,
                update_norm: 0.0,
                lambda: if lm { lambda } else { 0.0 },
            });
            break;
        }
        let out = iterate(&cur, &ne, cfg, &mut lambda)?;
        cur = out.graph;
        stats.push(IterationStats {
            iteration,
            chi2: out.chi2,
            update_norm: out.update_norm,
            lambda: out.lambda,
        });
        if out.update_norm < cfg.epsilon_update {
            break;
        }
    }
    Ok((cur, stats))
}
