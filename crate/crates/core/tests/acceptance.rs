//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Reference values come from oracles written here, independent of the
//! library code paths they check.

use std::f64::consts::PI;
use std::panic::catch_unwind;
use std::time::Instant;

use poslab::assembly::{assemble, BoundaryMode, CoefficientSet, DiscreteOperator, MassKind};
use poslab::cli::config::Problem;
use poslab::cli::verify::run_suite;
use poslab::lattice::{invariant_ideals, is_irreducible, perron_report, random_metzner, semigroup, MetznerGenerator};
use poslab::mesh::{check_corkscrew, generate_structured, BoundaryTag, Shape, TagRule, TriMesh};
use poslab::parabolic::{solve_mild, strong_positivity_check, very_weak_residual, BoundaryData, TestBank};
use poslab::semigroup::{
    kernel, kernel_positivity_report, positivity_improving_check, step_matrix_report, EvolutionConfig, Scheme, Stepper,
    Verdict,
};
use poslab::spectral::{certify_positivity, complex_robin_bound, principal_eig_with, spectral_gap_with, EigenOptions, Region};
use poslab::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn square(n: usize, tags: &TagRule) -> TriMesh {
    generate_structured(Shape::UnitSquare, n, tags).expect("mesh")
}

fn flux_square(n: usize) -> TriMesh {
    square(n, &TagRule::all(BoundaryTag::Flux))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Root of `μ sin(μ/2) = β cos(μ/2)` on `(0, π)` by Newton's method.
fn robin_mu(beta: f64) -> f64 {
    let g = |m: f64| m * (m / 2.0).sin() - beta * (m / 2.0).cos();
    let dg = |m: f64| (m / 2.0).sin() + m / 2.0 * (m / 2.0).cos() + beta / 2.0 * (m / 2.0).sin();
    let mut m = 1.0;
    for _ in 0..50 {
        m -= g(m) / dg(m);
    }
    assert!(g(m).abs() < 1e-14 && m > 0.0 && m < PI);
    m
}

fn robin_op(n: usize, beta: f64) -> DiscreteOperator {
    let m = flux_square(n);
    let c = CoefficientSet::laplacian(&m).with_beta(Complex64::new(beta, 0.0));
    assemble(&m, &c, BoundaryMode::Robin).expect("assembly")
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let m = square(32, &TagRule::all(BoundaryTag::Dirichlet));
    let op = assemble(&m, &CoefficientSet::laplacian(&m), BoundaryMode::Dirichlet).unwrap();
    let spec = spectral_gap_with(&op, 4, &EigenOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let exact = [2.0, 5.0, 5.0, 8.0].map(|k| k * PI * PI);
    let errs: Vec<f64> = spec.eigenvalues.iter().zip(exact).map(|(l, e)| rel(l.re, e)).collect();
    let pass = errs.iter().all(|&e| e <= 0.02) && secs < 10.0;
    let shown: Vec<String> = spec.eigenvalues.iter().map(|l| format!("{:.4}", l.re)).collect();
    outcome(
        pass,
        format!(
            "Dirichlet n=32 eigenvalues [{}], max rel err {:.3}% (limit 2%), {secs:.2} s (limit 10 s)",
            shown.join(", "),
            100.0 * errs.iter().fold(0.0f64, |a, &b| a.max(b))
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let op = robin_op(32, 1.0);
    let rep = principal_eig_with(&op, &EigenOptions::default()).unwrap();
    let cert = certify_positivity(&rep, &op).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mu = robin_mu(1.0);
    let exact = 2.0 * mu * mu;
    let err = rel(rep.lambda1.re, exact);
    let values = op.expand(&rep.vector);
    let boundary = op.mesh.boundary_mask();
    let all_positive = values.iter().all(|&v| v > 0.0);
    let boundary_min = values.iter().zip(&boundary).filter(|p| *p.1).map(|p| *p.0).fold(f64::INFINITY, f64::min);
    let pass = err <= 0.02
        && cert.pass
        && cert.region == Region::Closure
        && cert.delta_claim > 0.0
        && cert.nodes_checked == op.mesh.n_vertices()
        && all_positive
        && secs < 10.0;
    outcome(
        pass,
        format!(
            "Robin beta=1 n=32 lambda1 {:.6} vs 2 mu0^2 = {exact:.6} (rel err {:.4}%), CLOSURE delta_claim {:.3e} over {} nodes, boundary min {:.3e}, {secs:.2} s",
            rep.lambda1.re,
            100.0 * err,
            cert.delta_claim,
            cert.nodes_checked,
            boundary_min
        ),
    )
}

fn criterion_3() -> Outcome {
    let m = square(32, &TagRule::all(BoundaryTag::Flux).with("bottom", BoundaryTag::Dirichlet));
    let cork = check_corkscrew(&m, 0.1).unwrap();
    let op = assemble(&m, &CoefficientSet::laplacian(&m), BoundaryMode::Mixed).unwrap();
    let rep = principal_eig_with(&op, &EigenOptions::default()).unwrap();
    let cert = certify_positivity(&rep, &op).unwrap();
    let values = op.expand(&rep.vector);
    let on_d = m.dirichlet_mask();
    let zero_on_d = values.iter().zip(&on_d).all(|(&v, &d)| !d || v == 0.0);
    let positive_elsewhere = values.iter().zip(&on_d).all(|(&v, &d)| d || v > 0.0);
    let d_count = on_d.iter().filter(|&&d| d).count();
    let pass = cork.pass && cert.pass && cert.region == Region::OmegaUnionN && zero_on_d && positive_elsewhere;
    outcome(
        pass,
        format!(
            "mixed D=bottom n=32 corkscrew(0.1) {}, min on Omega u N {:.3e}, {d_count} Dirichlet nodes exactly zero: {zero_on_d}",
            cork.pass, cert.min_value
        ),
    )
}

fn criterion_4() -> Outcome {
    let m = flux_square(16);
    let opts = EigenOptions::default();
    let complex = CoefficientSet::laplacian(&m).with_beta(Complex64::new(1.0, 1.0));
    let real = CoefficientSet::laplacian(&m).with_beta(Complex64::new(1.0, 0.0));
    let asm = Default::default();
    let b = complex_robin_bound(&m, &complex, &asm, &opts).unwrap();
    let e = complex_robin_bound(&m, &real, &asm, &opts).unwrap();
    let pass = b.margin > 1e-6 && e.margin.abs() <= 1e-10;
    outcome(
        pass,
        format!(
            "complex Robin n=16 beta=1+i margin {:.6} (> 1e-6), beta=1 margin {:.1e} (|.| <= 1e-10)",
            b.margin, e.margin
        ),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let op = robin_op(8, 1.0);
    let cfg = EvolutionConfig::implicit_euler(1e-3, 0.1);
    let stepper = Stepper::new(&op, Scheme::ImplicitEuler, cfg.dt, MassKind::Lumped).unwrap();
    let sm = step_matrix_report(stepper.step_matrix());
    let n = op.n_dof();
    let rep = positivity_improving_check(&op, &cfg, n, Region::Closure).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let distinct: std::collections::BTreeSet<usize> = rep.trials.iter().map(|t| t.dof).collect();
    let pass = sm.is_m_matrix
        && n == 81
        && distinct.len() == 81
        && rep.verdict == Verdict::Pass
        && rep.trials.iter().all(|t| t.positive_after_threshold && t.first_positive_step.is_some_and(|s| s <= rep.threshold_step))
        && secs < 30.0;
    outcome(
        pass,
        format!(
            "IE lumped n=8 Robin, M-matrix {}, {} indicators, diameter step {}, latest first-positive step {:?}, min relative value at t_end {:.3e}, {secs:.2} s (limit 30 s)",
            sm.is_m_matrix,
            distinct.len(),
            rep.threshold_step,
            rep.latest_first_positive_step,
            rep.min_value
        ),
    )
}

fn criterion_6() -> Outcome {
    let op = robin_op(8, 1.0);
    let cfg = EvolutionConfig::implicit_euler(1e-3, 0.1);
    let t = 0.05;
    let k1 = kernel(&op, t, &cfg).unwrap();
    let k2 = kernel(&op, 2.0 * t, &cfg).unwrap();
    let asym = k1.asymmetry();
    let min = k1.entries.iter().copied().fold(f64::INFINITY, f64::min);
    let positivity = kernel_positivity_report(&k1, op.mode);
    let composed = k1.compose(&k1);
    let ck = k2.entries.iter().zip(&composed).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

    let m = flux_square(8);
    let neumann = assemble(&m, &CoefficientSet::laplacian(&m), BoundaryMode::Neumann).unwrap();
    let k50 = kernel(&neumann, 50.0, &EvolutionConfig::implicit_euler(0.05, 50.0)).unwrap();
    let target = 1.0 / m.area();
    let worst = k50.entries.iter().fold(0.0f64, |w, &v| w.max(rel(v, target)));

    let pass = asym <= 1e-8 && min > 0.0 && positivity.verdict == Verdict::Pass && ck <= 1e-6 && worst <= 0.01;
    outcome(
        pass,
        format!(
            "kernel n=8 Robin t={t}: asymmetry {asym:.1e}, min entry {min:.3e}, Chapman-Kolmogorov defect {ck:.1e}; Neumann t=50 max rel dev from 1/|Omega| {:.2e}",
            worst
        ),
    )
}

fn criterion_7() -> Outcome {
    let sine = |m: &TriMesh| -> Vec<f64> { m.vertices().iter().map(|p| (PI * p[0]).sin().max(0.0) * (PI * p[1]).sin().max(0.0)).collect() };

    // Nonnegative data, implicit Euler with lumped mass.
    let m = square(16, &TagRule::all(BoundaryTag::Dirichlet));
    let c = CoefficientSet::laplacian(&m);
    let cfg = EvolutionConfig::implicit_euler(1e-3, 0.1);
    let a = solve_mild(&m, &c, &sine(&m), &BoundaryData::constant(&m, 0.0, 0.1), &cfg).unwrap();
    let ramp = BoundaryData::from_fn(&m, vec![0.0, 0.1], |t, p| t * (1.0 + p[0] * p[1]));
    let b = solve_mild(&m, &c, &vec![0.0; m.n_vertices()], &ramp, &cfg).unwrap();
    let nonneg = |s: &poslab::parabolic::MildSolution| s.states.iter().flatten().all(|&v| v >= 0.0);
    let (ra, rb) = (strong_positivity_check(&a), strong_positivity_check(&b));
    let positivity = nonneg(&a) && nonneg(&b) && ra.verdict == Verdict::Pass && rb.verdict == Verdict::Pass;

    // Very weak residual under simultaneous dt and h halving.
    let coarse = square(4, &TagRule::all(BoundaryTag::Dirichlet));
    let t_end = 0.2;
    let mut residuals = Vec::new();
    for (n, dt) in [(8, 0.02), (16, 0.01), (32, 0.005)] {
        let m = square(n, &TagRule::all(BoundaryTag::Dirichlet));
        let c = CoefficientSet::laplacian(&m);
        let cfg = EvolutionConfig::crank_nicolson(dt, t_end);
        let sol = solve_mild(&m, &c, &sine(&m), &BoundaryData::constant(&m, 0.0, t_end), &cfg).unwrap();
        let bank = TestBank::from_coarse(&coarse, &m, t_end, 20, 0).unwrap();
        residuals.push(very_weak_residual(&sol, &bank).unwrap().max_residual);
    }
    let ratios: Vec<f64> = residuals.windows(2).map(|w| w[0] / w[1]).collect();
    let converging = ratios.iter().all(|&r| r >= 2.0);
    outcome(
        positivity && converging,
        format!(
            "u >= 0 at every step {}, strict interior positivity past step {} (u0 != 0) and {} (boundary ramp) {}; very weak residuals {:?}, ratios [{}] (>= 2)",
            nonneg(&a) && nonneg(&b),
            ra.threshold_step,
            rb.start_step + rb.threshold_step,
            ra.verdict == Verdict::Pass && rb.verdict == Verdict::Pass,
            residuals.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>(),
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

/// Transitive closure by Floyd-Warshall on the off-diagonal pattern.
fn strongly_connected(q: &MetznerGenerator) -> bool {
    let n = q.n();
    let a = q.matrix();
    let mut r: Vec<Vec<bool>> = (0..n).map(|i| (0..n).map(|j| i == j || a[(i, j)] > 0.0).collect()).collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                r[i][j] = r[i][j] || (r[i][k] && r[k][j]);
            }
        }
    }
    r.iter().flatten().all(|&x| x)
}

/// Pattern of `exp(Q)` from the uniformized series `Σ (Q + cI)^k / k!`,
/// whose terms are entrywise nonnegative.
fn exp_pattern_positive(q: &MetznerGenerator) -> bool {
    let n = q.n();
    let c = (0..n).map(|i| -q.matrix()[(i, i)]).fold(0.0f64, f64::max);
    let p = q.matrix() + nalgebra::DMatrix::identity(n, n) * c;
    let mut term = nalgebra::DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=n + 2 {
        term = &term * &p / k as f64;
        sum += &term;
    }
    sum.iter().all(|&v| v > 0.0)
}

/// Spectral bound `s(Q)` by power iteration on `Q + cI`.
fn spectral_bound(q: &MetznerGenerator) -> f64 {
    let n = q.n();
    let c = (0..n).map(|i| -q.matrix()[(i, i)]).fold(0.0f64, f64::max) + 1.0;
    let p = q.matrix() + nalgebra::DMatrix::identity(n, n) * c;
    let mut x = nalgebra::DVector::from_element(n, 1.0);
    let mut rho = 0.0;
    for _ in 0..200_000 {
        let y = &p * &x;
        let next = y.norm() / x.norm();
        x = y.normalize();
        if (next - rho).abs() <= 1e-15 * next {
            rho = next;
            break;
        }
        rho = next;
    }
    rho - c
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let sparsities = [0.15, 0.35, 0.55, 0.75];
    let (mut mismatches, mut irreducible_count, mut perron_failures) = (0, 0, 0);
    for i in 0..200 {
        let n = 2 + i % 5;
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        let q = random_metzner(n, sparsities[i % 4], &mut rng);
        let connected = strongly_connected(&q);
        let ideals_empty = invariant_ideals(&q).unwrap().is_empty();
        let irr = is_irreducible(&q);
        let exp_positive = semigroup(&q, 1.0).iter().all(|&v| v > 0.0);
        if ideals_empty != connected || irr != connected || exp_positive != irr || exp_pattern_positive(&q) != irr {
            mismatches += 1;
        }
        if irr {
            irreducible_count += 1;
            let p = perron_report(&q);
            let bound = spectral_bound(&q);
            if !(p.simple && p.vector_positive && (-p.lambda1 - bound).abs() <= 1e-6 * bound.abs().max(1.0)) {
                perron_failures += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && perron_failures == 0 && secs < 60.0,
        format!(
            "200 seeded Metzler generators (2 <= n <= 6): {mismatches} disagreements among ideal enumeration, strong connectivity and exp(Q) > 0; {irreducible_count} irreducible, {perron_failures} Perron failures; {secs:.2} s (limit 60 s)"
        ),
    )
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"mesh": {"generate": {"shape": "unit_square", "n": 8, "tags": "all=N"}},
            "coefficients": {"a": [[1, 0], [0, 1]], "beta": 1, "mu": 1, "mode": "robin"},
            "seed": 7}"#,
    )
    .unwrap();
    let run = || run_suite(&Problem::load(&cfg).unwrap(), None).unwrap().0.to_json().unwrap();
    let (a, b) = (run(), run());
    let passing = !run_suite(&Problem::load(&cfg).unwrap(), None).unwrap().0.has_failures();
    outcome(
        a == b && passing,
        format!("two verify runs with seed 7: {} bytes each, identical {}", a.len(), a == b),
    )
}

fn main() {
    let criteria: [fn() -> Outcome; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    let mut failed = 0;
    for (i, f) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = catch_unwind(f).unwrap_or_else(|_| outcome(false, "panicked".into()));
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {verdict} [{:.2} s] {}", i + 1, start.elapsed().as_secs_f64(), o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("acceptance: {failed} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all 9 criteria passed");
}
