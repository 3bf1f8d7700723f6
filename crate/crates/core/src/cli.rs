//! Batch front end.
//!
//! Exit codes: 0 on success, 1 when a run fails or a verdict is FAIL, 2 on
//! usage, config or I/O errors.

pub mod config;
pub mod oracle;
pub mod verify;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::mesh::{generate_structured, save_mesh, Shape, TagRule, TriMesh};
use crate::parabolic::{solve_mild_with, strong_positivity_check};
use crate::plot::{heatmap_svg, strip_svg};
use crate::semigroup::{evolve, kernel, kernel_positivity_report};
use crate::spectral::{certify_positivity, principal_eig_with, spectral_gap_with};
use config::Problem;

#[derive(Debug, Parser)]
#[command(name = "poslab", version, about = "Positivity certificates for elliptic and parabolic operators on triangulated polygons")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a structured triangulation and write it in the text mesh format.
    Mesh {
        /// unit_square, l_shape or rectangle:W,H
        #[arg(long)]
        shape: Shape,
        #[arg(long)]
        n: usize,
        /// Boundary tags: `N`, `D`, `bottom=D,rest=N`, or one letter per segment.
        #[arg(long, default_value = "all=N")]
        tags: TagRule,
        #[arg(long)]
        out: PathBuf,
    },
    /// Principal eigenpair, leading spectrum and positivity certificate.
    Eig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Time stepping of the heat semigroup from `u0`.
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Heat kernel at time `t` as a binary dump.
    Kernel {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        t: f64,
    },
    /// Parabolic problem with prescribed boundary values.
    Parabolic {
        #[arg(long)]
        config: PathBuf,
    },
    /// Finite-dimensional oracle for a Metzner generator given as a JSON matrix.
    Oracle {
        #[arg(long)]
        matrix: PathBuf,
        /// Also write the verdict JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification registry on the configured problem.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Run only this registry label.
        #[arg(long)]
        only: Option<String>,
    },
}

enum Failure {
    Usage(Error),
    Run(Error),
    Verdict,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(Failure::Verdict) => 1,
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn load(path: &Path) -> std::result::Result<Problem, Failure> {
    Problem::load(path).map_err(Failure::Usage)
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn json_text(value: &impl serde::Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// One row per vertex: index, coordinates, then each named column.
fn nodal_csv(mesh: &TriMesh, columns: &[(&str, &[f64])]) -> String {
    let mut s = String::from("vertex,x,y");
    for (name, _) in columns {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for (v, p) in mesh.vertices().iter().enumerate() {
        let _ = write!(s, "{v},{},{}", p[0], p[1]);
        for (_, col) in columns {
            let _ = write!(s, ",{}", col[v]);
        }
        s.push('\n');
    }
    s
}

fn trajectory_csv(times: &[f64], states: &[Vec<f64>]) -> String {
    let n = states.first().map_or(0, Vec::len);
    let mut s = String::from("t");
    for v in 0..n {
        let _ = write!(s, ",u{v}");
    }
    s.push('\n');
    for (t, u) in times.iter().zip(states) {
        let _ = write!(s, "{t}");
        for x in u {
            let _ = write!(s, ",{x}");
        }
        s.push('\n');
    }
    s
}

fn execute(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Mesh { shape, n, tags, out } => {
            let mesh = generate_structured(shape, n, &tags).map_err(Failure::Usage)?;
            write(&out, save_mesh(&mesh)).map_err(Failure::Usage)?;
            let summary = json!({
                "label": mesh.label(),
                "n_vertices": mesh.n_vertices(),
                "n_triangles": mesh.n_triangles(),
                "quality": mesh.quality(),
            });
            print!("{}", json_text(&summary)?);
            Ok(())
        }
        Command::Eig { config } => eig(&load(&config)?),
        Command::Evolve { config } => evolve_cmd(&load(&config)?),
        Command::Kernel { config, t } => kernel_cmd(&load(&config)?, t),
        Command::Parabolic { config } => parabolic_cmd(&load(&config)?),
        Command::Oracle { matrix, out } => {
            let text = std::fs::read_to_string(&matrix)
                .map_err(|e| Failure::Usage(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", matrix.display())))))?;
            let input = oracle::OracleInput::parse(&text).map_err(Failure::Usage)?;
            let report = oracle::run_oracle(&input)?;
            let text = json_text(&report)?;
            if let Some(out) = out {
                write(&out, &text).map_err(Failure::Usage)?;
            }
            print!("{text}");
            if report.has_unexpected_failures() {
                Err(Failure::Verdict)
            } else {
                Ok(())
            }
        }
        Command::Verify { config, only } => {
            let problem = load(&config)?;
            let (report, timings) = verify::run_suite(&problem, only.as_deref()).map_err(Failure::Usage)?;
            let dir = problem.output_dir().map_err(Failure::Usage)?;
            write(&dir.join("verify.json"), report.to_json()?)?;
            let text = report.to_text();
            write(&dir.join("verify.txt"), &text)?;
            print!("{text}");
            for (label, d) in timings {
                eprintln!("{label}: {:.3} s", d.as_secs_f64());
            }
            if report.has_failures() {
                Err(Failure::Verdict)
            } else {
                Ok(())
            }
        }
    }
}

fn eig(p: &Problem) -> std::result::Result<(), Failure> {
    let start = Instant::now();
    let op = p.operator()?;
    let opts = &p.config.eigen;
    let rep = principal_eig_with(&op, opts)?;
    let k = p.config.eigenvalues.min(op.n_dof());
    let spectrum = if k >= 2 { Some(spectral_gap_with(&op, k, opts)?) } else { None };
    let certificate = match rep.vector_imag {
        None => Some(certify_positivity(&rep, &op)?),
        Some(_) => None,
    };
    let dir = p.output_dir().map_err(Failure::Usage)?;
    let re = op.expand(&rep.vector);
    let im = rep.vector_imag.as_ref().map(|v| op.expand(v));
    let out = json!({
        "mode": op.mode,
        "n_dof": op.n_dof(),
        "report": rep,
        "eigenvalues": spectrum.as_ref().map(|s| &s.eigenvalues),
        "residuals": spectrum.as_ref().map(|s| &s.residuals),
        "positivity": certificate,
        "warnings": op.warnings,
    });
    write(&dir.join("eig.json"), json_text(&out)?)?;
    if p.config.csv {
        let mut cols: Vec<(&str, &[f64])> = vec![("value", &re)];
        if let Some(im) = &im {
            cols.push(("imag", im));
        }
        write(&dir.join("eigenvector.csv"), nodal_csv(&p.mesh, &cols))?;
    }
    if p.config.svg {
        write(&dir.join("eigenvector.svg"), heatmap_svg(&p.mesh, &re, "principal eigenvector")?)?;
    }
    println!(
        "lambda1 = {} {:+}i, residual {:.3e}, positivity {}",
        rep.lambda1.re,
        rep.lambda1.im,
        rep.residual,
        certificate.map_or("n/a".into(), |c| if c.pass { "PASS".to_string() } else { "FAIL".to_string() })
    );
    eprintln!("eig: {:.3} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn require_u0(p: &Problem) -> std::result::Result<Vec<f64>, Failure> {
    p.u0()
        .map_err(Failure::Usage)?
        .ok_or_else(|| Failure::Usage(Error::Invalid("config needs u0".into())))
}

fn evolve_cmd(p: &Problem) -> std::result::Result<(), Failure> {
    let op = p.operator()?;
    let cfg = p.evolution();
    let u0 = require_u0(p)?;
    let traj = evolve(&op, &op.restrict(&u0), &cfg)?;
    let states: Vec<Vec<f64>> = traj.states.iter().map(|u| op.expand(u)).collect();
    let dir = p.output_dir().map_err(Failure::Usage)?;
    let last = states.last().expect("trajectory holds u0");
    let min = states.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let summary = json!({
        "config": cfg,
        "steps": traj.times.len() - 1,
        "t_end": traj.times.last(),
        "min_value": min,
        "final_min": last.iter().copied().fold(f64::INFINITY, f64::min),
        "final_max": last.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    });
    write(&dir.join("evolve.json"), json_text(&summary)?)?;
    if p.config.csv {
        write(&dir.join("trajectory.csv"), trajectory_csv(&traj.times, &states))?;
    }
    if p.config.svg {
        write(&dir.join("evolve_final.svg"), heatmap_svg(&p.mesh, last, "final state")?)?;
        write(&dir.join("evolve_strip.svg"), strip_svg(&states, "trajectory")?)?;
    }
    println!("{} steps to t = {}, min value {min:e}", traj.times.len() - 1, cfg.t_end);
    Ok(())
}

fn kernel_cmd(p: &Problem, t: f64) -> std::result::Result<(), Failure> {
    let op = p.operator()?;
    let k = kernel(&op, t, &p.evolution())?;
    let rep = kernel_positivity_report(&k, op.mode);
    let dir = p.output_dir().map_err(Failure::Usage)?;
    let mut bin = Vec::with_capacity(24 + 8 * k.entries.len());
    k.write_binary(&mut bin)?;
    write(&dir.join("kernel.bin"), bin)?;
    write(
        &dir.join("kernel.json"),
        json_text(&json!({ "t": k.t, "n": k.n, "asymmetry": k.asymmetry(), "positivity": rep }))?,
    )?;
    if p.config.svg {
        let c = centre_vertex(&p.mesh);
        let column: Vec<f64> = (0..k.n).map(|i| k.get(i, c)).collect();
        write(&dir.join("kernel_column.svg"), heatmap_svg(&p.mesh, &column, &format!("kernel column at vertex {c}"))?)?;
    }
    println!("kernel n = {}, t = {}, min entry {:e}, verdict {:?}", k.n, k.t, rep.min_entry, rep.verdict);
    Ok(())
}

/// Vertex nearest the vertex centroid.
fn centre_vertex(mesh: &TriMesh) -> usize {
    let v = mesh.vertices();
    let n = v.len() as f64;
    let cx = v.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = v.iter().map(|p| p[1]).sum::<f64>() / n;
    (0..v.len())
        .min_by(|&a, &b| {
            let da = (v[a][0] - cx).hypot(v[a][1] - cy);
            let db = (v[b][0] - cx).hypot(v[b][1] - cy);
            da.total_cmp(&db)
        })
        .unwrap_or(0)
}

fn parabolic_cmd(p: &Problem) -> std::result::Result<(), Failure> {
    let cfg = p.evolution();
    let u0 = require_u0(p)?;
    let phi = p.phi(&u0, cfg.t_end).map_err(Failure::Usage)?;
    let sol = solve_mild_with(&p.mesh, &p.coeffs, &u0, &phi, &cfg, &p.config.assembly)?;
    let rep = strong_positivity_check(&sol);
    let dir = p.output_dir().map_err(Failure::Usage)?;
    let out = json!({
        "config": cfg,
        "threshold_step": sol.threshold_step,
        "step_matrix": sol.step_matrix,
        "annihilates_constants": sol.annihilates_constants,
        "strong_positivity": rep,
        "warnings": sol.warnings,
    });
    write(&dir.join("parabolic.json"), json_text(&out)?)?;
    if p.config.csv {
        write(&dir.join("parabolic.csv"), trajectory_csv(&sol.times, &sol.states))?;
    }
    if p.config.svg {
        write(&dir.join("parabolic_strip.svg"), strip_svg(&sol.states, "space-time strip")?)?;
        let last = sol.states.last().expect("solution holds u0");
        write(&dir.join("parabolic_final.svg"), heatmap_svg(&p.mesh, last, "final state")?)?;
    }
    println!("strong positivity {:?}, threshold step {}", rep.verdict, sol.threshold_step);
    match rep.verdict {
        crate::semigroup::Verdict::Fail => Err(Failure::Verdict),
        _ => Ok(()),
    }
}
