//! Verification suite: a fixed registry of positivity claims, each bound to
//! a certificate routine, the modes it covers, a region and a tolerance.

use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Problem, DEFAULT_KERNEL_T};
use crate::assembly::{mmatrix_report, BoundaryMode, DiscreteOperator};
use crate::error::{Error, Result};
use crate::mesh::check_corkscrew;
use crate::parabolic::{solve_mild_with, strong_positivity_check};
use crate::semigroup::{kernel, kernel_positivity_report, positivity_improving_check, EvolutionConfig, Verdict};
use crate::spectral::{certify_positivity, complex_robin_bound, principal_eig_with, region_for_mode, spectral_gap_with, Region, POSITIVITY_TOL};

use BoundaryMode::{ComplexRobin, Dirichlet, Mixed, Neumann, Robin};

const REAL_MODES: &[BoundaryMode] = &[Dirichlet, Robin, Neumann, Mixed];
const ALL_MODES: &[BoundaryMode] = &[Dirichlet, Robin, ComplexRobin, Mixed, Neumann];

/// Absolute bound on `‖K_{2t} − K_t M_L K_t‖_max`.
pub const CHAPMAN_KOLMOGOROV_TOL: f64 = 1e-6;
/// Relative bound below which two real parts count as equal.
pub const EQUALITY_TOL: f64 = 1e-10;

pub struct Claim {
    pub label: &'static str,
    pub statement: &'static str,
    pub modes: &'static [BoundaryMode],
    /// `None` when the region follows the boundary mode.
    pub region: Option<Region>,
    pub tolerance: f64,
    run: fn(&Context, &Claim) -> Result<Outcome>,
}

struct Outcome {
    verdict: Verdict,
    certificate: Value,
    diagnostics: Option<String>,
}

impl Outcome {
    fn new(pass: bool, certificate: impl Serialize, diagnostics: Option<String>) -> Result<Self> {
        Ok(Outcome {
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            certificate: serde_json::to_value(certificate)?,
            diagnostics,
        })
    }

    fn with_verdict(verdict: Verdict, certificate: impl Serialize, diagnostics: Option<String>) -> Result<Self> {
        Ok(Outcome {
            verdict,
            certificate: serde_json::to_value(certificate)?,
            diagnostics,
        })
    }
}

struct Context<'a> {
    problem: &'a Problem,
    op: &'a DiscreteOperator,
}

pub static REGISTRY: &[Claim] = &[
    Claim {
        label: "dirichlet-interior-positivity",
        statement: "principal eigenfunction strictly positive at every interior node",
        modes: &[Dirichlet],
        region: Some(Region::Interior),
        tolerance: POSITIVITY_TOL,
        run: principal_positivity,
    },
    Claim {
        label: "robin-strict-positivity",
        statement: "principal eigenfunction strictly positive on the closed domain, boundary nodes included",
        modes: &[Robin, Neumann],
        region: Some(Region::Closure),
        tolerance: POSITIVITY_TOL,
        run: principal_positivity,
    },
    Claim {
        label: "mixed-positivity",
        statement: "principal eigenfunction positive on the interior and the flux part, zero on the Dirichlet part",
        modes: &[Mixed],
        region: Some(Region::OmegaUnionN),
        tolerance: POSITIVITY_TOL,
        run: mixed_positivity,
    },
    Claim {
        label: "complex-robin-strict-bound",
        statement: "smallest real part under complex beta exceeds the bottom of the spectrum under Re beta",
        modes: &[ComplexRobin],
        region: None,
        tolerance: 1e-6,
        run: complex_bound,
    },
    Claim {
        label: "spectral-gap",
        statement: "principal eigenvalue is simple with a positive gap to the next real part",
        modes: ALL_MODES,
        region: None,
        tolerance: 1e-8,
        run: gap,
    },
    Claim {
        label: "positivity-improving",
        statement: "every nodal indicator evolves to a strictly positive state by the graph-diameter step",
        modes: REAL_MODES,
        region: None,
        tolerance: POSITIVITY_TOL,
        run: improving,
    },
    Claim {
        label: "kernel-positivity",
        statement: "heat kernel entries strictly positive on region pairs",
        modes: REAL_MODES,
        region: None,
        tolerance: POSITIVITY_TOL,
        run: kernel_positive,
    },
    Claim {
        label: "kernel-chapman-kolmogorov",
        statement: "K at 2t equals K at t composed with itself through the lumped mass",
        modes: REAL_MODES,
        region: None,
        tolerance: CHAPMAN_KOLMOGOROV_TOL,
        run: chapman_kolmogorov,
    },
    Claim {
        label: "parabolic-strong-positivity",
        statement: "nonnegative initial and boundary data give interior positivity past the threshold step",
        modes: REAL_MODES,
        region: Some(Region::Interior),
        tolerance: 0.0,
        run: parabolic_positive,
    },
];

fn mode_name(mode: BoundaryMode) -> String {
    serde_json::to_value(mode).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

pub fn labels() -> Vec<&'static str> {
    REGISTRY.iter().map(|c| c.label).collect()
}

fn principal_positivity(ctx: &Context, _: &Claim) -> Result<Outcome> {
    let rep = principal_eig_with(ctx.op, &ctx.problem.config.eigen)?;
    let cert = certify_positivity(&rep, ctx.op)?;
    let pass = cert.pass && cert.delta_claim > 0.0;
    Outcome::new(
        pass,
        json!({ "lambda1": rep.lambda1, "residual": rep.residual, "positivity": cert }),
        None,
    )
}

fn mixed_positivity(ctx: &Context, _: &Claim) -> Result<Outcome> {
    let delta = ctx.problem.config.assembly.corkscrew_delta.unwrap_or(0.1);
    let cork = check_corkscrew(&ctx.problem.mesh, delta)?;
    let rep = principal_eig_with(ctx.op, &ctx.problem.config.eigen)?;
    let cert = certify_positivity(&rep, ctx.op)?;
    let pass = cork.pass && cert.pass && cert.delta_claim > 0.0;
    let diag = (!cork.pass).then(|| "corkscrew condition fails".to_string());
    Outcome::new(
        pass,
        json!({
            "lambda1": rep.lambda1,
            "corkscrew": { "pass": cork.pass, "delta": cork.delta, "failure": cork.failure },
            "positivity": cert,
        }),
        diag,
    )
}

fn complex_bound(ctx: &Context, claim: &Claim) -> Result<Outcome> {
    let p = ctx.problem;
    let b = complex_robin_bound(&p.mesh, &p.coeffs, &p.config.assembly, &p.config.eigen)?;
    if p.coeffs.has_complex_beta() {
        let pass = b.margin > claim.tolerance;
        Outcome::new(pass, b, None)
    } else {
        let scale = b.min_real_part_problem.abs().max(1.0);
        let pass = b.margin.abs() <= EQUALITY_TOL * scale;
        Outcome::new(pass, b, Some("Im beta vanishes; the bound must hold with equality".into()))
    }
}

fn gap(ctx: &Context, claim: &Claim) -> Result<Outcome> {
    let n = ctx.op.n_dof();
    if n < 2 {
        return Outcome::with_verdict(Verdict::NotApplicable, Value::Null, Some("fewer than two dofs".into()));
    }
    let spec = spectral_gap_with(ctx.op, n.min(4), &ctx.problem.config.eigen)?;
    let scale = spec.eigenvalues[1].norm().max(1.0);
    let pass = spec.gap > claim.tolerance * scale;
    Outcome::new(
        pass,
        json!({
            "eigenvalues": spec.eigenvalues,
            "residuals": spec.residuals,
            "gap": spec.gap,
            "method": spec.method,
        }),
        None,
    )
}

fn positivity_evolution(ctx: &Context) -> EvolutionConfig {
    let cfg = ctx.problem.evolution();
    EvolutionConfig::implicit_euler(cfg.dt, cfg.t_end)
}

fn improving(ctx: &Context, _: &Claim) -> Result<Outcome> {
    let cfg = positivity_evolution(ctx);
    let trials = ctx.problem.config.trials.unwrap_or(ctx.op.n_dof());
    let region = region_for_mode(ctx.op.mode);
    let mut rep = positivity_improving_check(ctx.op, &cfg, trials, region)?;
    let diag = rep.reason.clone();
    let verdict = rep.verdict;
    let failures: Vec<_> = rep
        .trials
        .iter()
        .filter(|t| !t.positive_after_threshold)
        .map(|t| t.vertex)
        .collect();
    rep.trials.clear();
    Outcome::with_verdict(
        verdict,
        json!({ "report": rep, "trials": trials, "failing_vertices": failures }),
        diag,
    )
}

fn kernel_t(ctx: &Context) -> f64 {
    ctx.problem.config.kernel_t.unwrap_or(DEFAULT_KERNEL_T)
}

fn kernel_positive(ctx: &Context, _: &Claim) -> Result<Outcome> {
    let cfg = positivity_evolution(ctx);
    let mm = mmatrix_report(ctx.op)?;
    let k = kernel(ctx.op, kernel_t(ctx), &cfg)?;
    let rep = kernel_positivity_report(&k, ctx.op.mode);
    Outcome::with_verdict(
        rep.verdict,
        json!({ "t": k.t, "asymmetry": k.asymmetry(), "m_matrix": mm, "positivity": rep }),
        None,
    )
}

fn chapman_kolmogorov(ctx: &Context, claim: &Claim) -> Result<Outcome> {
    let t = kernel_t(ctx);
    let base = positivity_evolution(ctx);
    // dt must divide t so that two runs to t compose to one run to 2t.
    let cfg = EvolutionConfig {
        dt: t / (t / base.dt).ceil(),
        ..base
    };
    let k1 = kernel(ctx.op, t, &cfg)?;
    let k2 = kernel(ctx.op, 2.0 * t, &cfg)?;
    let composed = k1.compose(&k1);
    let defect = k2.entries.iter().zip(&composed).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Outcome::new(defect <= claim.tolerance, json!({ "t": t, "dt": cfg.dt, "defect": defect }), None)
}

fn parabolic_positive(ctx: &Context, _: &Claim) -> Result<Outcome> {
    let p = ctx.problem;
    if p.coeffs.has_complex_beta() {
        return Outcome::with_verdict(Verdict::NotApplicable, Value::Null, Some("complex coefficients".into()));
    }
    let cfg = positivity_evolution(ctx);
    let boundary = p.mesh.boundary_mask();
    let u0 = match p.u0()? {
        Some(u) => u,
        None => boundary.iter().map(|&b| if b { 0.0 } else { 1.0 }).collect(),
    };
    let phi = p.phi(&u0, cfg.t_end)?;
    let sol = solve_mild_with(&p.mesh, &p.coeffs, &u0, &phi, &cfg, &p.config.assembly)?;
    let rep = strong_positivity_check(&sol);
    Outcome::with_verdict(
        rep.verdict,
        json!({ "report": rep, "warnings": sol.warnings }),
        rep.reason.clone(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryReport {
    pub label: String,
    pub statement: String,
    pub region: Option<Region>,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub certificate: Value,
    pub diagnostics: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSummary {
    pub mesh: String,
    pub n_vertices: usize,
    pub n_triangles: usize,
    pub mode: BoundaryMode,
    pub n_dof: Option<usize>,
    pub seed: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub pass: usize,
    pub fail: usize,
    pub not_applicable: usize,
}

/// Deterministic for a fixed config; timings are returned separately.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub problem: ProblemSummary,
    pub entries: Vec<EntryReport>,
    pub summary: SuiteSummary,
}

impl SuiteReport {
    pub fn has_failures(&self) -> bool {
        self.summary.fail > 0
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let p = &self.problem;
        let _ = writeln!(
            s,
            "problem: {} ({} vertices, {} triangles), mode {}, seed {}",
            p.mesh,
            p.n_vertices,
            p.n_triangles,
            mode_name(p.mode),
            p.seed
        );
        for e in &self.entries {
            let v = match e.verdict {
                Verdict::Pass => "PASS",
                Verdict::Fail => "FAIL",
                Verdict::NotApplicable => "N/A ",
            };
            let _ = writeln!(s, "{v}  {:<30} {}", e.label, e.statement);
            if let Some(d) = &e.diagnostics {
                let _ = writeln!(s, "      {d}");
            }
        }
        let _ = writeln!(
            s,
            "{} passed, {} failed, {} not applicable",
            self.summary.pass, self.summary.fail, self.summary.not_applicable
        );
        s
    }
}

fn run_claim(claim: &Claim, problem: &Problem, op: &std::result::Result<DiscreteOperator, String>) -> EntryReport {
    let mut entry = EntryReport {
        label: claim.label.to_string(),
        statement: claim.statement.to_string(),
        region: claim.region,
        tolerance: claim.tolerance,
        verdict: Verdict::NotApplicable,
        certificate: Value::Null,
        diagnostics: None,
    };
    if !claim.modes.contains(&problem.mode) {
        entry.diagnostics = Some(format!("claim does not cover mode {}", mode_name(problem.mode)));
        return entry;
    }
    let op = match op {
        Ok(op) => op,
        Err(msg) => {
            entry.verdict = Verdict::Fail;
            entry.diagnostics = Some(format!("assembly failed: {msg}"));
            return entry;
        }
    };
    let ctx = Context { problem, op };
    match catch_unwind(AssertUnwindSafe(|| (claim.run)(&ctx, claim))) {
        Ok(Ok(out)) => {
            entry.verdict = out.verdict;
            entry.certificate = out.certificate;
            entry.diagnostics = out.diagnostics;
        }
        Ok(Err(e)) => {
            entry.verdict = Verdict::Fail;
            entry.diagnostics = Some(e.to_string());
        }
        Err(_) => {
            entry.verdict = Verdict::Fail;
            entry.diagnostics = Some("internal error while computing the certificate".into());
        }
    }
    entry
}

/// Runs the registry (or the single entry `only`) concurrently and
/// assembles the report in registry order.
pub fn run_suite(problem: &Problem, only: Option<&str>) -> Result<(SuiteReport, Vec<(&'static str, Duration)>)> {
    let claims: Vec<&Claim> = match only {
        None => REGISTRY.iter().collect(),
        Some(label) => {
            let c = REGISTRY.iter().find(|c| c.label == label).ok_or_else(|| {
                Error::invalid(format!("unknown label '{label}'; known labels: {}", labels().join(", ")))
            })?;
            vec![c]
        }
    };
    let op = problem.operator().map_err(|e| e.to_string());
    let results: Vec<(EntryReport, Duration)> = std::thread::scope(|s| {
        let handles: Vec<_> = claims
            .iter()
            .map(|&c| {
                let op = &op;
                s.spawn(move || {
                    let start = Instant::now();
                    let e = run_claim(c, problem, op);
                    (e, start.elapsed())
                })
            })
            .collect();
        handles
            .into_iter()
            .zip(&claims)
            .map(|(h, c)| {
                h.join().unwrap_or_else(|_| {
                    let e = EntryReport {
                        label: c.label.to_string(),
                        statement: c.statement.to_string(),
                        region: c.region,
                        tolerance: c.tolerance,
                        verdict: Verdict::Fail,
                        certificate: Value::Null,
                        diagnostics: Some("internal error while computing the certificate".into()),
                    };
                    (e, Duration::ZERO)
                })
            })
            .collect()
    });
    let timings = claims.iter().zip(&results).map(|(c, r)| (c.label, r.1)).collect();
    let entries: Vec<EntryReport> = results.into_iter().map(|r| r.0).collect();
    let count = |v: Verdict| entries.iter().filter(|e| e.verdict == v).count();
    let summary = SuiteSummary {
        pass: count(Verdict::Pass),
        fail: count(Verdict::Fail),
        not_applicable: count(Verdict::NotApplicable),
    };
    let report = SuiteReport {
        problem: ProblemSummary {
            mesh: problem.mesh.label().to_string(),
            n_vertices: problem.mesh.n_vertices(),
            n_triangles: problem.mesh.n_triangles(),
            mode: problem.mode,
            n_dof: op.as_ref().ok().map(DiscreteOperator::n_dof),
            seed: problem.config.seed,
            warnings: op.as_ref().map(|o| o.warnings.clone()).unwrap_or_default(),
        },
        entries,
        summary,
    };
    Ok((report, timings))
}
