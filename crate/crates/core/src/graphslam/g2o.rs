//! g2o text format for SE(2) and SE(3) pose graphs.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so
//! read → write → read reproduces every value bit for bit. SE(3) quaternions
//! are stored in the file as (qx, qy, qz, qw).

use super::{Edge, GraphPose, Pose2, Pose3, PoseGraph};
use crate::error::{Error, Result};
use crate::pose::{Point3, Quaternion};
use nalgebra::DMatrix;
use std::collections::BTreeMap;
use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub enum G2oGraph {
    Se2(PoseGraph<Pose2>),
    Se3(PoseGraph<Pose3>),
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Se2,
    Se3,
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn numbers(line: usize, fields: &[&str], want: usize, tag: &str) -> Result<Vec<f64>> {
    if fields.len() != want {
        return Err(err(line, format!("{tag} expects {want} values, found {}", fields.len())));
    }
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line, format!("invalid number {f:?}")))
        })
        .collect()
}

fn id(line: usize, f: &str) -> Result<usize> {
    f.parse().map_err(|_| err(line, format!("invalid vertex id {f:?}")))
}

/// Symmetric matrix from its upper triangle listed row by row.
fn upper_to_info(dof: usize, v: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dof, dof);
    let mut k = 0;
    for r in 0..dof {
        for c in r..dof {
            m[(r, c)] = v[k];
            m[(c, r)] = v[k];
            k += 1;
        }
    }
    m
}

fn pose3(line: usize, v: &[f64]) -> Result<Pose3> {
    Pose3::new(Point3::new(v[0], v[1], v[2]), Quaternion::new(v[6], v[3], v[4], v[5]))
        .map_err(|e| err(line, e.to_string()))
}

struct Pending<P> {
    line: usize,
    edge: Edge<P>,
}

fn finish<P: GraphPose>(
    vertices: BTreeMap<usize, P>,
    edges: Vec<Pending<P>>,
    fixed: Vec<(usize, usize)>,
) -> Result<PoseGraph<P>> {
    let mut g = PoseGraph::new();
    g.vertices = vertices;
    for p in edges {
        for v in [p.edge.from, p.edge.to] {
            if !g.vertices.contains_key(&v) {
                return Err(err(p.line, format!("edge references unknown vertex {v}")));
            }
        }
        if p.edge.from == p.edge.to {
            return Err(err(p.line, "edge connects a vertex to itself"));
        }
        g.edges.push(p.edge);
    }
    for (line, v) in fixed {
        if !g.vertices.contains_key(&v) {
            return Err(err(line, format!("FIX references unknown vertex {v}")));
        }
        g.fix(v);
    }
    Ok(g)
}

pub fn read_g2o(text: &str) -> Result<G2oGraph> {
    let mut kind = None;
    let mut v2 = BTreeMap::new();
    let mut v3 = BTreeMap::new();
    let mut e2 = Vec::new();
    let mut e3 = Vec::new();
    let mut fixed = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let Some((&tag, rest)) = fields.split_first() else { continue };
        if tag.starts_with('#') {
            continue;
        }
        let this = match tag {
            "VERTEX_SE2" | "EDGE_SE2" => Some(Kind::Se2),
            "VERTEX_SE3:QUAT" | "EDGE_SE3:QUAT" => Some(Kind::Se3),
            "FIX" => None,
            other => return Err(err(line, format!("unsupported record {other:?}"))),
        };
        if let Some(k) = this {
            if kind.is_some_and(|prev| prev != k) {
                return Err(err(line, "file mixes SE(2) and SE(3) records"));
            }
            kind = Some(k);
        }
        match tag {
            "VERTEX_SE2" => {
                let v = numbers(line, &rest[1.min(rest.len())..], 3, tag)?;
                if v2.insert(id(line, rest[0])?, Pose2::new(v[0], v[1], v[2])).is_some() {
                    return Err(err(line, format!("duplicate vertex {}", rest[0])));
                }
            }
            "VERTEX_SE3:QUAT" => {
                let v = numbers(line, &rest[1.min(rest.len())..], 7, tag)?;
                if v3.insert(id(line, rest[0])?, pose3(line, &v)?).is_some() {
                    return Err(err(line, format!("duplicate vertex {}", rest[0])));
                }
            }
            "EDGE_SE2" => {
                if rest.len() < 2 {
                    return Err(err(line, "EDGE_SE2 needs two vertex ids"));
                }
                let v = numbers(line, &rest[2..], 9, tag)?;
                e2.push(Pending {
                    line,
                    edge: Edge {
                        from: id(line, rest[0])?,
                        to: id(line, rest[1])?,
                        measurement: Pose2::new(v[0], v[1], v[2]),
                        information: upper_to_info(3, &v[3..]),
                    },
                });
            }
            "EDGE_SE3:QUAT" => {
                if rest.len() < 2 {
                    return Err(err(line, "EDGE_SE3:QUAT needs two vertex ids"));
                }
                let v = numbers(line, &rest[2..], 28, tag)?;
                e3.push(Pending {
                    line,
                    edge: Edge {
                        from: id(line, rest[0])?,
                        to: id(line, rest[1])?,
                        measurement: pose3(line, &v[..7])?,
                        information: upper_to_info(6, &v[7..]),
                    },
                });
            }
            _ => {
                if rest.is_empty() {
                    return Err(err(line, "FIX needs at least one vertex id"));
                }
                for f in rest {
                    fixed.push((line, id(line, f)?));
                }
            }
        }
    }
    match kind {
        Some(Kind::Se2) => finish(v2, e2, fixed).map(G2oGraph::Se2),
        Some(Kind::Se3) => finish(v3, e3, fixed).map(G2oGraph::Se3),
        None => Err(err(0, "no vertices or edges found")),
    }
}

fn push_upper(out: &mut String, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        for c in r..m.ncols() {
            write!(out, " {}", m[(r, c)]).unwrap();
        }
    }
}

pub fn write_g2o(g: &G2oGraph) -> String {
    let mut out = String::new();
    match g {
        G2oGraph::Se2(g) => {
            for (id, p) in &g.vertices {
                writeln!(out, "VERTEX_SE2 {id} {} {} {}", p.x, p.y, p.theta).unwrap();
            }
            for e in &g.edges {
                let m = &e.measurement;
                write!(out, "EDGE_SE2 {} {} {} {} {}", e.from, e.to, m.x, m.y, m.theta).unwrap();
                push_upper(&mut out, &e.information);
                out.push('\n');
            }
            for id in &g.fixed {
                writeln!(out, "FIX {id}").unwrap();
            }
        }
        G2oGraph::Se3(g) => {
            let quat = |p: &Pose3| {
                format!("{} {} {} {} {} {} {}", p.t.x, p.t.y, p.t.z, p.q.qx, p.q.qy, p.q.qz, p.q.qr)
            };
            for (id, p) in &g.vertices {
                writeln!(out, "VERTEX_SE3:QUAT {id} {}", quat(p)).unwrap();
            }
            for e in &g.edges {
                write!(out, "EDGE_SE3:QUAT {} {} {}", e.from, e.to, quat(&e.measurement)).unwrap();
                push_upper(&mut out, &e.information);
                out.push('\n');
            }
            for id in &g.fixed {
                writeln!(out, "FIX {id}").unwrap();
            }
        }
    }
    out
}
