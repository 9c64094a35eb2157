mod json;

use clap::{Args, Parser, Subcommand, ValueEnum};
use json::Entity;
use nalgebra::{Vector3, Vector6};
use rigidkit::geometry::{propagate_binary, propagate_inverse, BinaryOp, Gaussian};
use rigidkit::graphslam::{self, G2oGraph, GraphPose, LinearSolver, Method, PoseGraph, SolverConfig};
use rigidkit::lie::{se3_exp, se3_log, se3_pseudo_exp, se3_pseudo_log, TangentSE3};
use rigidkit::vision::{project_inv_pose_point, project_pose_point, CameraIntrinsics};
use rigidkit::{convert, GaussianPose, HomPose, Parameterization, Pose};
use serde::Deserialize;
use serde_json::json;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Malformed input or bad flags.
    Parse(String),
    Io(String),
    /// The input was understood but the operation is undefined there.
    Math(rigidkit::Error),
    /// jacobian-check found mismatches.
    CheckFailed(String),
}

impl From<rigidkit::Error> for CliError {
    fn from(e: rigidkit::Error) -> Self {
        match e {
            rigidkit::Error::Parse { .. } => CliError::Parse(e.to_string()),
            e => CliError::Math(e),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => 1,
            CliError::Math(_) => 2,
            CliError::CheckFailed(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "invalid input: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Math(e) => write!(f, "{e}"),
            CliError::CheckFailed(m) => write!(f, "{m}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "rigidkit", version, about = "Rigid-body pose algebra, covariance propagation and pose-graph SLAM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// Read JSON from this file instead of stdin
    #[arg(long = "in", value_name = "FILE")]
    input: Option<PathBuf>,
    /// Write JSON to this file instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Angles in the JSON are degrees (yaw/pitch/roll and rotation vectors)
    #[arg(long)]
    degrees: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PoseKind {
    Ypr,
    Quat,
    Matrix,
}

impl From<PoseKind> for Parameterization {
    fn from(k: PoseKind) -> Self {
        match k {
            PoseKind::Ypr => Parameterization::Ypr,
            PoseKind::Quat => Parameterization::Quat,
            PoseKind::Matrix => Parameterization::Matrix,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Gn,
    Lm,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Auto,
    Dense,
    Sparse,
}

#[derive(Subcommand)]
enum Command {
    /// Change a pose's parameterization, carrying its covariance along
    Convert {
        #[arg(long, value_enum)]
        to: PoseKind,
        #[command(flatten)]
        io: Io,
    },
    /// a ⊕ b for {"a": pose, "b": pose}
    Compose {
        #[command(flatten)]
        io: Io,
    },
    /// ⊖ p
    Invert {
        #[command(flatten)]
        io: Io,
    },
    /// pose ⊕ point for {"pose": pose, "point": point}
    ApplyPoint {
        /// Compute point ⊖ pose instead
        #[arg(long)]
        inverse: bool,
        #[command(flatten)]
        io: Io,
    },
    /// Gaussian propagation through {"op": ..., "a": ..., "b": ...}; a missing cov counts as zero
    Propagate {
        #[command(flatten)]
        io: Io,
    },
    /// SE(3) exponential of [tx, ty, tz, wx, wy, wz]
    Expmap {
        #[arg(long)]
        pseudo: bool,
        #[arg(long, value_enum, default_value = "matrix")]
        to: PoseKind,
        #[command(flatten)]
        io: Io,
    },
    /// SE(3) logarithm of a pose, as [tx, ty, tz, wx, wy, wz]
    Logmap {
        #[arg(long)]
        pseudo: bool,
        #[command(flatten)]
        io: Io,
    },
    /// Pinhole projection of {"intrinsics": {...}, "pose": pose, "points": [[x, y, z], ...]}
    Project {
        /// Treat the pose as the camera's pose in the world
        #[arg(long)]
        camera_pose: bool,
        /// Include the 2×6 pose and 2×3 point Jacobians
        #[arg(long)]
        jacobians: bool,
        #[command(flatten)]
        io: Io,
    },
    /// Compare every closed-form Jacobian against finite differences
    JacobianCheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Optimize a g2o pose graph
    Slam {
        input: PathBuf,
        /// Optimized graph; stdout when omitted
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Per-iteration statistics
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "lm")]
        method: MethodArg,
        #[arg(long, default_value_t = 50)]
        max_iters: usize,
        #[arg(long, value_enum, default_value = "auto")]
        solver: SolverArg,
    },
}

fn read_input(path: &Option<PathBuf>) -> CliResult<String> {
    match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("cannot read {}: {e}", p.display()))),
        None => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| CliError::Io(format!("cannot read stdin: {e}")))?;
            Ok(s)
        }
    }
}

fn write_output(path: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(format!("cannot write stdout: {e}")))
        }
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
}

fn emit<T: serde::Serialize>(io: &Io, v: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    write_output(&io.out, &s)
}

fn encode_gaussian(g: &GaussianPose, with_cov: bool, degrees: bool) -> Entity {
    json::encode_pose(&g.mean, with_cov.then_some(&g.cov), degrees)
}

fn run_convert(io: &Io, to: Parameterization) -> CliResult<()> {
    let e: Entity = parse_json(&read_input(&io.input)?)?;
    let (pose, cov) = json::decode_pose(&e, io.degrees)?;
    let out = match cov {
        None => json::encode_pose(&convert::convert(&pose, to), None, io.degrees),
        Some(c) => {
            let g = convert::convert_gaussian(&GaussianPose::new(pose, c)?, to)?;
            encode_gaussian(&g, true, io.degrees)
        }
    };
    emit(io, &out)
}

#[derive(Deserialize)]
struct Pair {
    a: Entity,
    b: Entity,
}

fn run_compose(io: &Io) -> CliResult<()> {
    let p: Pair = parse_json(&read_input(&io.input)?)?;
    let with_cov = p.a.cov.is_some() || p.b.cov.is_some();
    let a = json::decode_gaussian(&p.a, io.degrees)?;
    let b = json::decode_gaussian(&p.b, io.degrees)?;
    match propagate_binary(BinaryOp::ComposePoses, &Gaussian::Pose(a), &Gaussian::Pose(b))? {
        Gaussian::Pose(g) => emit(io, &encode_gaussian(&g, with_cov, io.degrees)),
        Gaussian::Point(_) => unreachable!("pose composition yields a pose"),
    }
}

fn run_invert(io: &Io) -> CliResult<()> {
    let e: Entity = parse_json(&read_input(&io.input)?)?;
    let g = propagate_inverse(&json::decode_gaussian(&e, io.degrees)?)?;
    emit(io, &encode_gaussian(&g, e.cov.is_some(), io.degrees))
}

#[derive(Deserialize)]
struct PosePoint {
    pose: Entity,
    point: Entity,
}

fn apply_point(pose: &Entity, point: &Entity, inverse: bool, degrees: bool) -> CliResult<(Gaussian, bool)> {
    let with_cov = pose.cov.is_some() || point.cov.is_some();
    let gp = Gaussian::Pose(json::decode_gaussian(pose, degrees)?);
    let pt = Gaussian::Point(json::decode_point(point)?);
    let g = if inverse {
        propagate_binary(BinaryOp::InvComposePoint, &pt, &gp)?
    } else {
        propagate_binary(BinaryOp::ComposePoint, &gp, &pt)?
    };
    Ok((g, with_cov))
}

fn encode(g: &Gaussian, with_cov: bool, degrees: bool) -> Entity {
    match g {
        Gaussian::Pose(p) => encode_gaussian(p, with_cov, degrees),
        Gaussian::Point(p) => json::encode_point(p, with_cov),
    }
}

fn run_apply_point(io: &Io, inverse: bool) -> CliResult<()> {
    let p: PosePoint = parse_json(&read_input(&io.input)?)?;
    let (g, with_cov) = apply_point(&p.pose, &p.point, inverse, io.degrees)?;
    emit(io, &encode(&g, with_cov, io.degrees))
}

#[derive(Deserialize)]
struct PropagateInput {
    op: String,
    a: Entity,
    #[serde(default)]
    b: Option<Entity>,
}

fn run_propagate(io: &Io) -> CliResult<()> {
    let p: PropagateInput = parse_json(&read_input(&io.input)?)?;
    let need_b = || p.b.as_ref().ok_or_else(|| CliError::Parse(format!("op {:?} needs operand \"b\"", p.op)));
    let g = match p.op.as_str() {
        "compose" => {
            let a = json::decode_gaussian(&p.a, io.degrees)?;
            let b = json::decode_gaussian(need_b()?, io.degrees)?;
            propagate_binary(BinaryOp::ComposePoses, &Gaussian::Pose(a), &Gaussian::Pose(b))?
        }
        "invert" => Gaussian::Pose(propagate_inverse(&json::decode_gaussian(&p.a, io.degrees)?)?),
        "apply-point" => apply_point(&p.a, need_b()?, false, io.degrees)?.0,
        // a is the point, b the pose: a ⊖ b
        "inv-apply-point" => apply_point(need_b()?, &p.a, true, io.degrees)?.0,
        other => {
            return Err(CliError::Parse(format!(
                "unknown op {other:?} (expected compose, invert, apply-point or inv-apply-point)"
            )))
        }
    };
    emit(io, &encode(&g, true, io.degrees))
}

fn deg_scale(degrees: bool) -> f64 {
    if degrees {
        std::f64::consts::PI / 180.0
    } else {
        1.0
    }
}

fn run_expmap(io: &Io, pseudo: bool, to: Parameterization) -> CliResult<()> {
    let v: Vec<f64> = parse_json(&read_input(&io.input)?)?;
    if v.len() != 6 {
        return Err(CliError::Parse(format!("expected 6 tangent coordinates, found {}", v.len())));
    }
    let k = deg_scale(io.degrees);
    let tau = TangentSE3::new(Vector3::new(v[0], v[1], v[2]), Vector3::new(v[3], v[4], v[5]) * k);
    let m = if pseudo { se3_pseudo_exp(&tau) } else { se3_exp(&tau) };
    emit(io, &json::encode_pose(&convert::convert(&Pose::Matrix(m), to), None, io.degrees))
}

fn run_logmap(io: &Io, pseudo: bool) -> CliResult<()> {
    let e: Entity = parse_json(&read_input(&io.input)?)?;
    let (pose, _) = json::decode_pose(&e, io.degrees)?;
    let m = match convert::convert(&pose, Parameterization::Matrix) {
        Pose::Matrix(m) => m,
        _ => unreachable!("converted to matrix"),
    };
    let tau = if pseudo { se3_pseudo_log(&m) } else { se3_log(&m)? };
    let mut v: Vector6<f64> = tau.to_vector();
    let k = deg_scale(io.degrees);
    for i in 3..6 {
        v[i] /= k;
    }
    emit(io, &v.iter().copied().collect::<Vec<_>>())
}

#[derive(Deserialize)]
struct Intrinsics {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
}

#[derive(Deserialize)]
struct ProjectInput {
    intrinsics: Intrinsics,
    #[serde(default)]
    pose: Option<Entity>,
    points: Vec<[f64; 3]>,
}

fn run_project(io: &Io, camera_pose: bool, jacobians: bool) -> CliResult<()> {
    let p: ProjectInput = parse_json(&read_input(&io.input)?)?;
    let k = CameraIntrinsics::new(p.intrinsics.fx, p.intrinsics.fy, p.intrinsics.cx, p.intrinsics.cy)?;
    let a = match &p.pose {
        None => HomPose::identity(),
        Some(e) => match convert::convert(&json::decode_pose(e, io.degrees)?.0, Parameterization::Matrix) {
            Pose::Matrix(m) => m,
            _ => unreachable!("converted to matrix"),
        },
    };
    let mut out = Vec::with_capacity(p.points.len());
    for q in &p.points {
        let q = Vector3::new(q[0], q[1], q[2]);
        let (px, j_eps, j_p) = if camera_pose {
            project_inv_pose_point(&k, &a, &q)?
        } else {
            project_pose_point(&k, &a, &q)?
        };
        let mut item = json!({ "u": px.u, "v": px.v });
        if jacobians {
            item["jPose"] = json!(json::to_rows(&j_eps));
            item["jPoint"] = json!(json::to_rows(&j_p));
        }
        out.push(item);
    }
    emit(io, &json!({ "pixels": out }))
}

fn run_jacobian_check(seed: u64, samples: usize, tol: f64, out: &Option<PathBuf>) -> CliResult<()> {
    if samples == 0 || !(tol > 0.0) {
        return Err(CliError::Parse("--samples must be positive and --tol must be > 0".into()));
    }
    let reports = rigidkit::numcheck::check_catalog(seed, samples, tol);
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.op.as_str()).collect();
    let doc = json!({
        "seed": seed,
        "samples": samples,
        "tol": tol,
        "pass": failed.is_empty(),
        "reports": reports,
    });
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    write_output(out, &s)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "{} of {} Jacobian checks failed: {}",
            failed.len(),
            reports.len(),
            failed.join(", ")
        )))
    }
}

struct SlamArgs {
    input: PathBuf,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    config: SolverConfig,
}

fn optimize_graph<P: GraphPose>(mut g: PoseGraph<P>, cfg: &SolverConfig) -> CliResult<(PoseGraph<P>, Vec<graphslam::IterationStats>)> {
    if g.fixed.is_empty() {
        if let Some(&id) = g.vertices.keys().next() {
            eprintln!("note: no FIX record; holding vertex {id} fixed");
            g.fix(id);
        }
    }
    Ok(graphslam::optimize(&g, cfg)?)
}

fn run_slam(a: &SlamArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&a.input)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", a.input.display())))?;
    let graph = graphslam::read_g2o(&text)?;
    let (graph, stats) = match graph {
        G2oGraph::Se2(g) => {
            let (g, s) = optimize_graph(g, &a.config)?;
            (G2oGraph::Se2(g), s)
        }
        G2oGraph::Se3(g) => {
            let (g, s) = optimize_graph(g, &a.config)?;
            (G2oGraph::Se3(g), s)
        }
    };
    if let Some(path) = &a.csv {
        let mut csv = String::from("iter,chi2,update_norm,lambda\n");
        for s in &stats {
            csv.push_str(&format!("{},{:?},{:?},{:?}\n", s.iteration, s.chi2, s.update_norm, s.lambda));
        }
        write_output(&Some(path.clone()), &csv)?;
    }
    if let (Some(first), Some(last)) = (stats.first(), stats.last()) {
        eprintln!("chi2 {:?} -> {:?} after {} iterations", first.chi2, last.chi2, stats.len() - 1);
    }
    write_output(&a.out, &graphslam::write_g2o(&graph))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Convert { to, io } => run_convert(&io, to.into()),
        Command::Compose { io } => run_compose(&io),
        Command::Invert { io } => run_invert(&io),
        Command::ApplyPoint { inverse, io } => run_apply_point(&io, inverse),
        Command::Propagate { io } => run_propagate(&io),
        Command::Expmap { pseudo, to, io } => run_expmap(&io, pseudo, to.into()),
        Command::Logmap { pseudo, io } => run_logmap(&io, pseudo),
        Command::Project { camera_pose, jacobians, io } => run_project(&io, camera_pose, jacobians),
        Command::JacobianCheck { seed, samples, tol, out } => run_jacobian_check(seed, samples, tol, &out),
        Command::Slam { input, out, csv, method, max_iters, solver } => {
            let config = SolverConfig {
                method: match method {
                    MethodArg::Gn => Method::GaussNewton,
                    MethodArg::Lm => Method::LevenbergMarquardt,
                },
                max_iterations: max_iters,
                linear_solver: match solver {
                    SolverArg::Auto => LinearSolver::Auto,
                    SolverArg::Dense => LinearSolver::Dense,
                    SolverArg::Sparse => LinearSolver::Sparse,
                },
                ..SolverConfig::default()
            };
            config.validate()?;
            run_slam(&SlamArgs { input, out, csv, config })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

