//! Command-line front end.
//!
//! Exit codes: 0 success, 1 domain error (or a failed audit), 2 usage error.
//! Diagnostics go to stderr; artifacts go to `-o` paths or stdout.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DVector, Vector3};
use serde_json::json;

use crate::analysis::analyze;
use crate::deform::{deform, load_handles, DeformParams, Energy};
use crate::dual::{dual_edit, polar_dual_with, primal_from_dual, DualEdit, DualMesh};
use crate::error::{PmError, Result};
use crate::mesh::{halfedge_subdivide, load_mesh, planarity_report, tutte_flatten, write_obj, BoundaryShape, Mesh};
use crate::shapes::{
    bandpass_apply, eigenshapes, fundamental_shape_dir, laplacian, sparse_pursuit, support_of, LaplacianKind,
    DEFAULT_LAMBDA,
};
use crate::subspace::{closest_pm, export_basis, nullspace_basis, assemble, write_matrix, CaseAssignment, DEFAULT_TOL};
use crate::verify::{run_suite, Suite};

#[derive(Parser, Debug)]
#[command(name = "pmspace", version, about = "Linear subspaces of planar-faced meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CaseArgs {
    /// Case keyword (affine|parallel|vertical) or path to an assignment JSON.
    #[arg(long, default_value = "affine")]
    cases: String,
    /// Singular value cutoff for the nullspace, relative to the largest.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum LaplacianArg {
    Uniform,
    InverseEdgeLength,
}

impl From<LaplacianArg> for LaplacianKind {
    fn from(l: LaplacianArg) -> Self {
        match l {
            LaplacianArg::Uniform => LaplacianKind::Uniform,
            LaplacianArg::InverseEdgeLength => LaplacianKind::InverseEdgeLength,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum EnergyArg {
    Arap,
    Asap,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum BoundaryArg {
    Circle,
    Square,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SuiteArg {
    All,
    Theorem1,
    Stencil,
    Regular3,
    Table1,
    Maximality,
}

#[derive(Copy, Clone, Debug, PartialEq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Counts, dimension, bounds and reassignment hints as JSON.
    Analyze {
        mesh: PathBuf,
        #[command(flatten)]
        cases: CaseArgs,
        /// Also compare the three non-mixed subspaces.
        #[arg(long)]
        containments: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Orthonormal basis dump (JSON header line, then rows).
    Basis {
        mesh: PathBuf,
        #[command(flatten)]
        cases: CaseArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Laplacian spectrum restricted to the subspace.
    Eigenshapes {
        mesh: PathBuf,
        #[command(flatten)]
        cases: CaseArgs,
        /// Number of lowest shapes (all when omitted).
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, value_enum, default_value = "uniform")]
        laplacian: LaplacianArg,
        /// Spectrum JSON; the shape matrix goes to `<output>.shapes.txt`.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Apply shape `k` (0-based) scaled by `--amplitude` and write an OBJ.
        #[arg(long, requires = "obj")]
        apply: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long)]
        obj: Option<PathBuf>,
    },
    /// Source plus the in-band eigenshapes, scaled by gain.
    Bandpass {
        mesh: PathBuf,
        #[command(flatten)]
        cases: CaseArgs,
        #[arg(long, default_value_t = 0.0)]
        low: f64,
        #[arg(long, default_value_t = f64::INFINITY)]
        high: f64,
        #[arg(long)]
        gain: f64,
        #[arg(long, value_enum, default_value = "uniform")]
        laplacian: LaplacianArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Greedy vertex-sparse shape.
    Sparse {
        mesh: PathBuf,
        #[command(flatten)]
        cases: CaseArgs,
        /// Starting vertex (the best single vertex when omitted).
        #[arg(long)]
        start: Option<usize>,
        /// Maximum number of vertices in the support.
        #[arg(long, default_value_t = 16)]
        support: usize,
        #[arg(long, default_value_t = 1e-10)]
        residual_tol: f64,
        /// Write the best shape even when the residual target is missed.
        #[arg(long)]
        approximate: bool,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        /// OBJ of source plus amplitude times the shape.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Pursuit report (support, residual trace).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Smoothed projection of a single-vertex impulse.
    Fundamental {
        mesh: PathBuf,
        #[command(flatten)]
        cases: CaseArgs,
        #[arg(long)]
        vertex: usize,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        /// Impulse direction `x,y,z`.
        #[arg(long, default_value = "0,0,1")]
        dir: String,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Handle-driven ARAP/ASAP deformation inside the subspace.
    Deform {
        mesh: PathBuf,
        #[command(flatten)]
        cases: CaseArgs,
        /// Handles JSON: `[{"vertex":5,"target":[x,y,z],"mode":"hard"}]`.
        #[arg(long)]
        handles: PathBuf,
        #[arg(long, value_enum, default_value = "arap")]
        energy: EnergyArg,
        #[arg(long, default_value_t = 50)]
        iterations: usize,
        #[arg(long, default_value_t = 1e-7)]
        convergence_tol: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Energy trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Polar dual (writes OBJ plus a `.json` sidecar), or the inverse with `--primal`.
    Dual {
        mesh: PathBuf,
        /// Polarity center `x,y,z` (vertex centroid when omitted).
        #[arg(long)]
        center: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Treat MESH as a dual (with sidecar) and rebuild this primal topology.
        #[arg(long)]
        primal: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Edit the dual inside its own subspace and rebuild the primal.
    DualEdit {
        mesh: PathBuf,
        /// Case assignment for the dual mesh.
        #[arg(long, default_value = "affine")]
        dual_cases: String,
        /// Add dual eigenshape `k` scaled by `--amplitude`.
        #[arg(long, conflicts_with_all = ["gain", "displacement"])]
        shape: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 0.0)]
        low: f64,
        #[arg(long, default_value_t = f64::INFINITY)]
        high: f64,
        /// Band-pass the dual spectrum with this gain.
        #[arg(long)]
        gain: Option<f64>,
        /// JSON array of dual displacements (axis-major), projected first.
        #[arg(long)]
        displacement: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the edited dual (with sidecar).
        #[arg(long)]
        dual_output: Option<PathBuf>,
    },
    /// Closest mesh in the subspace to a target with the same topology.
    Closest {
        mesh: PathBuf,
        #[command(flatten)]
        cases: CaseArgs,
        #[arg(long)]
        target: PathBuf,
        /// Comma-separated vertices pinned to their target positions.
        #[arg(long, value_delimiter = ',')]
        pin: Vec<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Insert a vertex at every edge midpoint.
    Subdivide {
        mesh: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Tutte embedding into the plane with a convex boundary.
    Flatten {
        mesh: PathBuf,
        #[arg(long, value_enum, default_value = "circle")]
        boundary: BoundaryArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Numerical audits; exits 1 when any audit fails.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// What goes to stdout.
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
        /// Also write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Serve the session API over HTTP.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| PmError::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| PmError::Io {
                    path: "<stdout>".into(),
                    source: e,
                })
        }
    }
}

fn emit_mesh(path: Option<&Path>, mesh: &Mesh) -> Result<()> {
    emit(path, &write_obj(mesh))
}

fn parse_vec3(s: &str) -> Result<Vector3<f64>> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| PmError::InvalidArgument(format!("expected x,y,z, got '{s}'")))?;
    match parts.as_slice() {
        [x, y, z] => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(PmError::InvalidArgument(format!("expected x,y,z, got '{s}'"))),
    }
}

fn load_with_basis(path: &Path, cases: &CaseArgs) -> Result<(Mesh, CaseAssignment, crate::subspace::SubspaceBasis)> {
    let mesh = load_mesh(path)?;
    let assignment = CaseAssignment::from_arg(&cases.cases)?;
    if !(cases.tol > 0.0) {
        return Err(PmError::InvalidArgument("tol must be positive".into()));
    }
    let basis = nullspace_basis(assemble(&mesh, &assignment)?, cases.tol);
    Ok((mesh, assignment, basis))
}

fn warn_planarity(mesh: &Mesh) -> Result<()> {
    let p = planarity_report(mesh)?.max;
    if p > 1e-8 {
        eprintln!("warning: output planarity error {p:e}");
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Analyze {
            mesh,
            cases,
            containments,
            output,
        } => {
            let (m, a, basis) = load_with_basis(&mesh, &cases)?;
            let report = analyze(&m, &a, &basis, containments)?;
            emit(output.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
        }
        Command::Basis { mesh, cases, output } => {
            let (_, _, basis) = load_with_basis(&mesh, &cases)?;
            emit(output.as_deref(), &export_basis(&basis))?;
        }
        Command::Eigenshapes {
            mesh,
            cases,
            count,
            laplacian: lk,
            output,
            apply,
            amplitude,
            obj,
        } => {
            let (m, _, basis) = load_with_basis(&mesh, &cases)?;
            let spectrum = eigenshapes(&basis, &laplacian(&m, lk.into()), count);
            let shapes_ref = match &output {
                Some(p) => {
                    let mut s = p.as_os_str().to_owned();
                    s.push(".shapes.txt");
                    let sp = PathBuf::from(s);
                    let header = json!({ "rows": 3 * m.num_vertices(), "cols": spectrum.len() }).to_string();
                    emit(Some(&sp), &write_matrix(&header, &spectrum.shape_matrix()))?;
                    sp.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
                }
                None => String::new(),
            };
            emit(output.as_deref(), &(spectrum.to_json(&shapes_ref) + "\n"))?;
            if let Some(k) = apply {
                let shape = spectrum.shapes.get(k).ok_or_else(|| {
                    PmError::InvalidArgument(format!("only {} eigenshapes available", spectrum.len()))
                })?;
                let out = m.displaced(&(&shape.displacement * amplitude))?;
                warn_planarity(&out)?;
                emit_mesh(obj.as_deref(), &out)?;
            }
        }
        Command::Bandpass {
            mesh,
            cases,
            low,
            high,
            gain,
            laplacian: lk,
            output,
        } => {
            let (m, _, basis) = load_with_basis(&mesh, &cases)?;
            let spectrum = eigenshapes(&basis, &laplacian(&m, lk.into()), None);
            let out = bandpass_apply(&m, &spectrum, low, high, gain)?;
            warn_planarity(&out)?;
            emit_mesh(output.as_deref(), &out)?;
        }
        Command::Sparse {
            mesh,
            cases,
            start,
            support,
            residual_tol,
            approximate,
            amplitude,
            output,
            report,
        } => {
            let (m, _, basis) = load_with_basis(&mesh, &cases)?;
            let p = sparse_pursuit(&basis, start, support, residual_tol)?;
            let best = &p.best;
            if let Some(r) = report {
                let v = json!({
                    "converged": p.converged,
                    "support": support_of(&best.displacement),
                    "residual": best.residual,
                    "trace": p.trace,
                    "supports": p.supports,
                });
                emit(Some(&r), &(serde_json::to_string_pretty(&v)? + "\n"))?;
            }
            if !p.converged && !approximate {
                return Err(PmError::SparseInfeasible {
                    best_residual: best.residual,
                    support: support_of(&best.displacement).len(),
                });
            }
            if !p.converged {
                eprintln!("warning: approximate sparse shape, residual {:e}", best.residual);
            }
            emit_mesh(output.as_deref(), &m.displaced(&(&best.displacement * amplitude))?)?;
        }
        Command::Fundamental {
            mesh,
            cases,
            vertex,
            lambda,
            dir,
            amplitude,
            output,
        } => {
            let (m, _, basis) = load_with_basis(&mesh, &cases)?;
            let l = laplacian(&m, LaplacianKind::Uniform);
            let shape = fundamental_shape_dir(&basis, &l, vertex, lambda, parse_vec3(&dir)?)?;
            let out = m.displaced(&(&shape.displacement * amplitude))?;
            warn_planarity(&out)?;
            emit_mesh(output.as_deref(), &out)?;
        }
        Command::Deform {
            mesh,
            cases,
            handles,
            energy,
            iterations,
            convergence_tol,
            output,
            trace,
        } => {
            let (m, _, basis) = load_with_basis(&mesh, &cases)?;
            let handles = load_handles(&handles)?;
            let params = DeformParams {
                energy: match energy {
                    EnergyArg::Arap => Energy::Arap,
                    EnergyArg::Asap => Energy::Asap,
                },
                iterations,
                convergence_tol,
            };
            let r = deform(&basis, &m, &handles, &params)?;
            warn_planarity(&r.mesh)?;
            emit_mesh(output.as_deref(), &r.mesh)?;
            if let Some(t) = trace {
                emit(Some(&t), &r.trace_csv())?;
            }
        }
        Command::Dual {
            mesh,
            center,
            scale,
            primal,
            output,
        } => match primal {
            Some(p) => {
                let dual = DualMesh::load(&mesh)?;
                let out = primal_from_dual(&dual, &load_mesh(&p)?)?;
                emit_mesh(Some(&output), &out)?;
            }
            None => {
                let m = load_mesh(&mesh)?;
                let c = center.as_deref().map(parse_vec3).transpose()?;
                polar_dual_with(&m, c, scale)?.save(&output)?;
            }
        },
        Command::DualEdit {
            mesh,
            dual_cases,
            shape,
            amplitude,
            low,
            high,
            gain,
            displacement,
            output,
            dual_output,
        } => {
            let m = load_mesh(&mesh)?;
            let a = CaseAssignment::from_arg(&dual_cases)?;
            let edit = match (shape, gain, displacement) {
                (Some(index), None, None) => DualEdit::Eigenshape { index, amplitude },
                (None, Some(gain), None) => DualEdit::Bandpass { low, high, gain },
                (None, None, Some(path)) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| PmError::Io { path, source: e })?;
                    DualEdit::Displacement(DVector::from_vec(serde_json::from_str(&text)?))
                }
                _ => {
                    return Err(PmError::InvalidArgument(
                        "give exactly one of --shape, --gain or --displacement".into(),
                    ))
                }
            };
            let r = dual_edit(&m, &a, &edit)?;
            if let Some(d) = dual_output {
                r.edited_dual.save(&d)?;
            }
            emit_mesh(output.as_deref(), &r.mesh)?;
        }
        Command::Closest {
            mesh,
            cases,
            target,
            pin,
            output,
        } => {
            let (_, _, basis) = load_with_basis(&mesh, &cases)?;
            let t = load_mesh(&target)?;
            if !basis.source().same_topology(&t) {
                return Err(PmError::InvalidArgument("target topology differs from the source".into()));
            }
            let hard: Vec<_> = pin
                .iter()
                .map(|&v| {
                    if v < t.num_vertices() {
                        Ok((v, t.vertex(v)))
                    } else {
                        Err(PmError::InvalidArgument(format!("vertex {v} out of range")))
                    }
                })
                .collect::<Result<_>>()?;
            emit_mesh(output.as_deref(), &closest_pm(&basis, &t, &hard)?)?;
        }
        Command::Subdivide { mesh, output } => {
            emit_mesh(output.as_deref(), &halfedge_subdivide(&load_mesh(&mesh)?))?;
        }
        Command::Flatten { mesh, boundary, output } => {
            let shape = match boundary {
                BoundaryArg::Circle => BoundaryShape::Circle,
                BoundaryArg::Square => BoundaryShape::Square,
            };
            emit_mesh(output.as_deref(), &tutte_flatten(&load_mesh(&mesh)?, &shape)?)?;
        }
        Command::Verify {
            suite,
            seed,
            format,
            json,
        } => {
            let suite = match suite {
                SuiteArg::All => Suite::All,
                SuiteArg::Theorem1 => Suite::Theorem1,
                SuiteArg::Stencil => Suite::Stencil,
                SuiteArg::Regular3 => Suite::Regular3,
                SuiteArg::Table1 => Suite::Table1,
                SuiteArg::Maximality => Suite::Maximality,
            };
            let report = run_suite(suite, seed)?;
            let text = serde_json::to_string_pretty(&report.to_json())? + "\n";
            if let Some(p) = json {
                emit(Some(&p), &text)?;
            }
            match format {
                ReportFormat::Text => emit(None, &report.to_text())?,
                ReportFormat::Json => emit(None, &text)?,
            }
            if !report.passed {
                return Ok(1);
            }
        }
        Command::Serve { addr } => crate::service::serve(&addr)?,
    }
    Ok(0)
}

/// Runs the command line `args` (including the program name) and returns
/// the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            1
        }
    }
}
