//! Heat flow with time-dependent Dirichlet data on the whole boundary, strong
//! minimum/maximum principle checks and the very weak residual.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_volume, AssemblyOptions, CoefficientSet, MassKind};
use crate::error::{Error, Result};
use crate::linalg::{BandedLu, CsrMatrix};
use crate::mesh::{point_segment_distance, Point, TriMesh};
use crate::semigroup::{graph_diameter, step_matrix_report, EvolutionConfig, Scheme, StepMatrixReport, Verdict};
use crate::spectral::POSITIVITY_TOL;

/// Boundary values sampled in time, linear in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryData {
    pub times: Vec<f64>,
    /// `values[k][v]` at time `times[k]`; only boundary vertices are read.
    pub values: Vec<Vec<f64>>,
}

impl BoundaryData {
    pub fn constant(mesh: &TriMesh, value: f64, t_end: f64) -> Self {
        BoundaryData {
            times: vec![0.0, t_end],
            values: vec![vec![value; mesh.n_vertices()]; 2],
        }
    }

    pub fn from_fn(mesh: &TriMesh, times: Vec<f64>, f: impl Fn(f64, Point) -> f64) -> Self {
        let values = times
            .iter()
            .map(|&t| mesh.vertices().iter().map(|&p| f(t, p)).collect())
            .collect();
        BoundaryData { times, values }
    }

    pub fn validate(&self, n_vertices: usize) -> Result<()> {
        if self.times.is_empty() || self.times.len() != self.values.len() {
            return Err(Error::invalid("boundary data needs one value row per sample time"));
        }
        if self.times[0] != 0.0 {
            return Err(Error::invalid("boundary data must start at t = 0"));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("boundary sample times must be strictly increasing"));
        }
        for row in &self.values {
            if row.len() != n_vertices {
                return Err(Error::Dimension {
                    expected: n_vertices,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) || self.times.iter().any(|t| !t.is_finite()) {
                return Err(Error::invalid("boundary data must be finite"));
            }
        }
        Ok(())
    }

    /// Interpolated values at `t`, held constant past the last sample.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.values[0].clone();
        }
        if k == self.times.len() {
            return self.values[k - 1].clone();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        self.values[k - 1]
            .iter()
            .zip(&self.values[k])
            .map(|(a, b)| if w == 0.0 { *a } else { (1.0 - w) * a + w * b })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct MildSolution {
    pub times: Vec<f64>,
    /// Values on all vertices per time.
    pub states: Vec<Vec<f64>>,
    pub cfg: EvolutionConfig,
    pub phi: BoundaryData,
    pub mesh: Arc<TriMesh>,
    pub coeffs: CoefficientSet,
    pub options: AssemblyOptions,
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
    /// Interior step matrix structure.
    pub step_matrix: StepMatrixReport,
    pub threshold_step: usize,
    /// `A_h 𝟙 = 0` on interior rows.
    pub annihilates_constants: bool,
    pub warnings: Vec<String>,
}

fn split(matrix: &CsrMatrix<f64>, rows: &[usize], interior: &[usize], boundary: &[usize]) -> (CsrMatrix<f64>, CsrMatrix<f64>) {
    (matrix.submatrix(rows, interior), matrix.submatrix(rows, boundary))
}

fn annihilates_constants(a: &CsrMatrix<f64>, interior: &[usize]) -> bool {
    let sums = a.row_sums();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    interior.iter().all(|&i| sums[i].abs() <= 1e-12 * scale)
}

/// Pinned-boundary time stepping of `M u' + A_h u = 0` with `u|_Γ = φ`.
pub fn solve_mild(
    mesh: &TriMesh,
    coeffs: &CoefficientSet,
    u0: &[f64],
    phi: &BoundaryData,
    cfg: &EvolutionConfig,
) -> Result<MildSolution> {
    solve_mild_with(mesh, coeffs, u0, phi, cfg, &AssemblyOptions::default())
}

pub fn solve_mild_with(
    mesh: &TriMesh,
    coeffs: &CoefficientSet,
    u0: &[f64],
    phi: &BoundaryData,
    cfg: &EvolutionConfig,
    options: &AssemblyOptions,
) -> Result<MildSolution> {
    cfg.validate()?;
    let nv = mesh.n_vertices();
    if u0.len() != nv {
        return Err(Error::Dimension {
            expected: nv,
            actual: u0.len(),
        });
    }
    phi.validate(nv)?;
    if coeffs.has_complex_beta() {
        return Err(Error::Coefficients("parabolic runs take real coefficients".into()));
    }
    let boundary = mesh.boundary_vertices();
    let interior = mesh.interior_vertices();
    let phi0 = phi.at(0.0);
    if let Some(&v) = boundary.iter().find(|&&v| (u0[v] - phi0[v]).abs() > 1e-10) {
        return Err(Error::invalid(format!(
            "initial value {} at boundary vertex {v} differs from the boundary datum {}",
            u0[v], phi0[v]
        )));
    }
    let mut warnings = Vec::new();
    let vol = assemble_volume(mesh, coeffs, options)?;
    let a = vol.stiffness;
    // discrete shadow of ∫ c0 v + Σ ∫ b_k ∂_k v ≥ 0: a(𝟙, φ_i) is the row sum
    let sums = a.row_sums();
    let scale = a.max_abs();
    if let Some(&i) = interior.iter().find(|&&i| sums[i] < -1e-12 * scale) {
        warnings.push(format!(
            "coefficient sign condition fails at vertex {i} (a(1, phi_i) = {:e}); positivity claims lapse",
            sums[i]
        ));
    }
    let mass = match cfg.mass {
        MassKind::Consistent => vol.mass.clone(),
        MassKind::Lumped => CsrMatrix::from_diagonal(&vol.lumped),
    };
    let theta = match cfg.scheme {
        Scheme::ImplicitEuler => 1.0,
        Scheme::CrankNicolson => 0.5,
    };
    let (a_ii, a_ib) = split(&a, &interior, &interior, &boundary);
    let (m_ii, m_ib) = split(&mass, &interior, &interior, &boundary);

    let steps = cfg.steps();
    let mut factors: Vec<(f64, BandedLu<f64>, CsrMatrix<f64>)> = Vec::new();
    let mut step_matrix = None;
    let mut times = vec![0.0];
    let mut states = vec![u0.to_vec()];
    let mut t = 0.0;
    for (k, &h) in steps.iter().enumerate() {
        if !factors.iter().any(|f| f.0 == h) {
            let lhs = m_ii.linear_combination(1.0, &a_ii, theta * h);
            let lu = BandedLu::factor(&lhs).map_err(|e| Error::StepSolve {
                step: k + 1,
                source: Box::new(e),
            })?;
            if step_matrix.is_none() {
                step_matrix = Some(lhs.clone());
            }
            factors.push((h, lu, lhs));
        }
        let lu = &factors.iter().find(|f| f.0 == h).expect("factor cached").1;
        let t_next = if k + 1 == steps.len() { cfg.t_end } else { t + h };
        let prev = states.last().expect("initial state");
        let g_old: Vec<f64> = boundary.iter().map(|&v| prev[v]).collect();
        let phi_next = phi.at(t_next);
        let g_new: Vec<f64> = boundary.iter().map(|&v| phi_next[v]).collect();
        let u_i: Vec<f64> = interior.iter().map(|&v| prev[v]).collect();
        // M_II u_I' + M_IB g' + θh A_I·u' = M_II u_I + M_IB g − (1−θ)h A_I·u
        let mut rhs = m_ii.mul_vec(&u_i);
        let dg: Vec<f64> = g_old.iter().zip(&g_new).map(|(o, n)| o - n).collect();
        for (r, v) in rhs.iter_mut().zip(m_ib.mul_vec(&dg)) {
            *r += v;
        }
        for (r, v) in rhs.iter_mut().zip(a_ib.mul_vec(&g_new)) {
            *r -= theta * h * v;
        }
        if theta < 1.0 {
            let ai = a_ii.mul_vec(&u_i);
            let ab = a_ib.mul_vec(&g_old);
            for ((r, x), y) in rhs.iter_mut().zip(ai).zip(ab) {
                *r -= (1.0 - theta) * h * (x + y);
            }
        }
        let new_i = lu.solve(&rhs).map_err(|e| Error::StepSolve {
            step: k + 1,
            source: Box::new(e),
        })?;
        let mut next = vec![0.0; nv];
        for (&v, &x) in interior.iter().zip(&new_i) {
            next[v] = x;
        }
        for (&v, &x) in boundary.iter().zip(&g_new) {
            next[v] = x;
        }
        t = t_next;
        times.push(t);
        states.push(next);
    }
    let lhs = step_matrix.expect("at least one step");
    Ok(MildSolution {
        times,
        states,
        cfg: *cfg,
        phi: phi.clone(),
        mesh: Arc::new(mesh.clone()),
        coeffs: coeffs.clone(),
        options: *options,
        annihilates_constants: annihilates_constants(&a, &interior),
        step_matrix: step_matrix_report(&lhs),
        threshold_step: graph_diameter(&lhs),
        interior,
        boundary,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrongPositivityReport {
    pub verdict: Verdict,
    pub reason: Option<String>,
    /// Step from which interior positivity is asserted.
    pub start_step: usize,
    pub threshold_step: usize,
    /// First `(time, vertex)` with a non-positive interior value at or past the start.
    pub first_violation: Option<(f64, usize)>,
    /// Smallest interior value over the asserted steps.
    pub min_value: f64,
    /// Every value is nonnegative at every step.
    pub nonnegative: bool,
}

/// Interior positivity past the graph-diameter threshold, counted from
/// `t = 0` when `u0 ≠ 0` and otherwise from the first step with nonzero
/// boundary data.
pub fn strong_positivity_check(sol: &MildSolution) -> StrongPositivityReport {
    let na = |reason: &str| StrongPositivityReport {
        verdict: Verdict::NotApplicable,
        reason: Some(reason.to_string()),
        start_step: 0,
        threshold_step: sol.threshold_step,
        first_violation: None,
        min_value: f64::NAN,
        nonnegative: sol.states.iter().all(|u| u.iter().all(|&v| v >= 0.0)),
    };
    let u0 = &sol.states[0];
    if u0.iter().any(|&v| v < 0.0) || sol.phi.values.iter().any(|r| sol.boundary.iter().any(|&b| r[b] < 0.0)) {
        return na("needs u0 >= 0 and phi >= 0");
    }
    if sol.cfg.scheme != Scheme::ImplicitEuler || sol.cfg.mass != MassKind::Lumped || !sol.step_matrix.is_m_matrix {
        return na("needs implicit Euler with lumped mass and an M-matrix step");
    }
    let origin = if u0.iter().any(|&v| v != 0.0) {
        Some(0)
    } else {
        sol.states
            .iter()
            .position(|u| sol.boundary.iter().any(|&b| u[b] != 0.0))
    };
    let Some(origin) = origin else {
        return na("u0 = 0 and phi = 0: the solution vanishes");
    };
    let start = origin + sol.threshold_step.max(1);
    if start >= sol.states.len() {
        return na("the run ends before the threshold step");
    }
    let mut min_value = f64::INFINITY;
    let mut first_violation = None;
    for (k, u) in sol.states.iter().enumerate().skip(start) {
        for &v in &sol.interior {
            min_value = min_value.min(u[v]);
            if u[v] <= 0.0 && first_violation.is_none() {
                first_violation = Some((sol.times[k], v));
            }
        }
    }
    let nonnegative = sol.states.iter().all(|u| u.iter().all(|&v| v >= 0.0));
    let pass = first_violation.is_none() && nonnegative;
    StrongPositivityReport {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        reason: (!pass).then(|| "interior value not strictly positive".to_string()),
        start_step: start,
        threshold_step: sol.threshold_step,
        first_violation,
        min_value,
        nonnegative,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConstancyVerdict {
    Constant,
    HypothesisNotMet,
    Violation,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstancyReport {
    pub verdict: ConstancyVerdict,
    pub value: f64,
    pub max_value: f64,
    pub tolerance: f64,
    /// Largest deviation from `value` on `[0, t0] × Ω̄`.
    pub spread: f64,
}

/// `1e-8 · (max − min)` over `u0` and the boundary samples, floored at `1e-8`.
pub fn constancy_tolerance(sol: &MildSolution) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in &sol.states[0] {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    for row in &sol.phi.values {
        for &b in &sol.boundary {
            lo = lo.min(row[b]);
            hi = hi.max(row[b]);
        }
    }
    (1e-8 * (hi - lo)).max(1e-8)
}

/// If `u(t0, x0)` is the maximum over `[0, t0] × Ω̄`, checks that `u` is
/// constant there.
pub fn constancy_principle_check(sol: &MildSolution, t0: f64, x0: usize) -> Result<ConstancyReport> {
    if !sol.interior.contains(&x0) {
        return Err(Error::invalid(format!("vertex {x0} is not interior")));
    }
    let scale = sol.cfg.t_end.max(1.0);
    let k0 = sol
        .times
        .iter()
        .position(|&t| (t - t0).abs() <= 1e-12 * scale)
        .ok_or_else(|| Error::invalid(format!("t0 = {t0} is not a sample time")))?;
    let tolerance = constancy_tolerance(sol);
    let value = sol.states[k0][x0];
    let window = &sol.states[..=k0];
    let max_value = window.iter().flatten().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let spread = window.iter().flatten().fold(0.0f64, |m, &v| m.max((v - value).abs()));
    let verdict = if !sol.annihilates_constants {
        ConstancyVerdict::NotApplicable
    } else if value < max_value - tolerance {
        ConstancyVerdict::HypothesisNotMet
    } else if spread <= tolerance {
        ConstancyVerdict::Constant
    } else {
        ConstancyVerdict::Violation
    };
    Ok(ConstancyReport {
        verdict,
        value,
        max_value,
        tolerance,
        spread,
    })
}

/// Space-time test function `θ(t) ψ(x)`: `ψ` is a nodal vector vanishing
/// on the boundary and `θ = sin²` on the window `(a, b) ⊂ (0, T)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunction {
    pub space: Vec<f64>,
    pub window: (f64, f64),
    pub center: Point,
    pub radius: f64,
}

impl TestFunction {
    pub fn time_profile(&self, t: f64) -> f64 {
        let (a, b) = self.window;
        if t <= a || t >= b {
            0.0
        } else {
            (std::f64::consts::PI * (t - a) / (b - a)).sin().powi(2)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestBank {
    pub tests: Vec<TestFunction>,
}

/// `(1 − |x − c|² / r²)²` inside the ball, interpolated at the vertices.
fn bump(mesh: &TriMesh, c: Point, r: f64) -> Vec<f64> {
    mesh.vertices()
        .iter()
        .map(|p| {
            let s = ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)) / (r * r);
            if s < 1.0 {
                (1.0 - s).powi(2)
            } else {
                0.0
            }
        })
        .collect()
}

fn boundary_distance(mesh: &TriMesh, p: Point) -> f64 {
    let v = mesh.vertices();
    mesh.boundary_edges()
        .iter()
        .map(|e| point_segment_distance(p, v[e.vertices[0]], v[e.vertices[1]]))
        .fold(f64::INFINITY, f64::min)
}

impl TestBank {
    /// Seeded bank of bumps centred at the given points, each paired with
    /// `windows_per_center` time windows strictly inside `(0, t_end)`.
    pub fn new(mesh: &TriMesh, centers: &[Point], t_end: f64, windows_per_center: usize, seed: u64) -> Result<Self> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut tests = Vec::new();
        for &c in centers {
            let d = boundary_distance(mesh, c);
            if !(d > 0.0) {
                return Err(Error::invalid(format!("test bump centre {c:?} is not interior")));
            }
            let radius = 0.9 * d.min(0.5);
            for _ in 0..windows_per_center {
                let a = t_end * rng.gen_range(0.05..0.35);
                let b = t_end * rng.gen_range(0.6..0.95);
                tests.push(TestFunction {
                    space: bump(mesh, c, radius),
                    window: (a, b),
                    center: c,
                    radius,
                });
            }
        }
        Ok(TestBank { tests })
    }

    /// Bank centred on the interior vertices of `coarse`, reused on any
    /// refinement of the same domain.
    pub fn from_coarse(coarse: &TriMesh, target: &TriMesh, t_end: f64, min_size: usize, seed: u64) -> Result<Self> {
        let centers: Vec<Point> = coarse.interior_vertices().iter().map(|&v| coarse.vertices()[v]).collect();
        if centers.is_empty() {
            return Err(Error::invalid("coarse mesh has no interior vertices"));
        }
        let per = min_size.div_ceil(centers.len()).max(1);
        Self::new(target, &centers, t_end, per, seed)
    }

    /// Re-evaluates the same physical test functions on another mesh.
    pub fn on_mesh(&self, mesh: &TriMesh) -> Self {
        TestBank {
            tests: self
                .tests
                .iter()
                .map(|f| TestFunction {
                    space: bump(mesh, f.center, f.radius),
                    ..f.clone()
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    pub argmax: usize,
    pub residuals: Vec<f64>,
    pub signed: Vec<f64>,
}

/// `r(θψ) = Σ_k w_k [θ'(t_k) u_kᵀ M_L ψ − θ(t_k) u_kᵀ A_h* ψ]` with
/// trapezoidal weights and central differences for `θ'`.
pub fn very_weak_residual(sol: &MildSolution, bank: &TestBank) -> Result<ResidualReport> {
    let mesh = &sol.mesh;
    let nv = mesh.n_vertices();
    let t_end = *sol.times.last().expect("nonempty trajectory");
    let boundary = mesh.boundary_mask();
    for (i, f) in bank.tests.iter().enumerate() {
        if f.space.len() != nv {
            return Err(Error::Dimension {
                expected: nv,
                actual: f.space.len(),
            });
        }
        if f.space.iter().zip(&boundary).any(|(&v, &b)| b && v != 0.0) {
            return Err(Error::invalid(format!("test function {i} touches the boundary")));
        }
        let (a, b) = f.window;
        if !(a > sol.times[0] && b < t_end && a < b) {
            return Err(Error::invalid(format!("test function {i} does not vanish near t = 0 and t = T")));
        }
    }
    let adjoint = assemble_volume(mesh, &sol.coeffs.adjoint(), &sol.options)?;
    let lumped = adjoint.lumped;
    let times = &sol.times;
    let k_last = times.len() - 1;
    let weights: Vec<f64> = (0..=k_last)
        .map(|k| {
            let left = if k > 0 { times[k] - times[k - 1] } else { 0.0 };
            let right = if k < k_last { times[k + 1] - times[k] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect();
    let mut signed = Vec::with_capacity(bank.tests.len());
    for f in &bank.tests {
        let a_psi = adjoint.stiffness.mul_vec(&f.space);
        let m_psi: Vec<f64> = f.space.iter().zip(&lumped).map(|(p, m)| p * m).collect();
        let mut r = 0.0;
        for k in 0..=k_last {
            let (lo, hi) = (k.saturating_sub(1), (k + 1).min(k_last));
            let dtheta = (f.time_profile(times[hi]) - f.time_profile(times[lo])) / (times[hi] - times[lo]);
            let theta = f.time_profile(times[k]);
            if dtheta == 0.0 && theta == 0.0 {
                continue;
            }
            let u = &sol.states[k];
            // u_kᵀ A* ψ with A*[i][j] = a*(φ_j, φ_i)
            let ua: f64 = u.iter().zip(&a_psi).map(|(x, y)| x * y).sum();
            let um: f64 = u.iter().zip(&m_psi).map(|(x, y)| x * y).sum();
            r += weights[k] * (dtheta * um - theta * ua);
        }
        signed.push(r);
    }
    let residuals: Vec<f64> = signed.iter().map(|r| r.abs()).collect();
    let (argmax, max_residual) = residuals
        .iter()
        .copied()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    Ok(ResidualReport {
        max_residual,
        argmax,
        residuals,
        signed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipticReport {
    pub verdict: EllipticVerdict,
    /// `max_i |(A_h u)_i|` over interior rows, relative to `max|A|·‖u‖∞`.
    pub residual: f64,
    /// `None` when the hypotheses `u ≥ 0`, `u|_Γ ≠ 0` do not hold.
    pub positivity: Option<bool>,
    /// `None` unless `A_h 𝟙 = 0` and an interior vertex attains the maximum.
    pub constancy: Option<bool>,
    pub interior_min: f64,
    pub interior_max: f64,
    pub boundary_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EllipticVerdict {
    Pass,
    Fail,
    NotASolution,
}

/// Strong minimum and maximum principle for a discrete `𝒜`-harmonic `u`.
pub fn elliptic_strong_max_check(mesh: &TriMesh, coeffs: &CoefficientSet, u: &[f64]) -> Result<EllipticReport> {
    if u.len() != mesh.n_vertices() {
        return Err(Error::Dimension {
            expected: mesh.n_vertices(),
            actual: u.len(),
        });
    }
    let a = assemble_volume(mesh, coeffs, &AssemblyOptions::default())?.stiffness;
    let interior = mesh.interior_vertices();
    let boundary = mesh.boundary_vertices();
    let au = a.mul_vec(u);
    let inf = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = (a.max_abs() * inf).max(f64::MIN_POSITIVE);
    let residual = interior.iter().fold(0.0f64, |m, &i| m.max(au[i].abs())) / scale;
    let fold = |idx: &[usize], init: f64, f: fn(f64, f64) -> f64| idx.iter().fold(init, |m, &i| f(m, u[i]));
    let interior_min = fold(&interior, f64::INFINITY, f64::min);
    let interior_max = fold(&interior, f64::NEG_INFINITY, f64::max);
    let boundary_max = fold(&boundary, f64::NEG_INFINITY, f64::max);
    if residual > 1e-9 {
        return Ok(EllipticReport {
            verdict: EllipticVerdict::NotASolution,
            residual,
            positivity: None,
            constancy: None,
            interior_min,
            interior_max,
            boundary_max,
        });
    }
    let positivity = (u.iter().all(|&v| v >= 0.0) && boundary.iter().any(|&b| u[b] != 0.0))
        .then_some(interior.is_empty() || interior_min > POSITIVITY_TOL * inf);
    let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = (1e-8 * (hi - lo)).max(1e-8);
    let constancy = (annihilates_constants(&a, &interior) && !interior.is_empty() && interior_max >= hi - tol)
        .then_some(hi - lo <= tol);
    let pass = positivity != Some(false) && constancy != Some(false);
    Ok(EllipticReport {
        verdict: if pass { EllipticVerdict::Pass } else { EllipticVerdict::Fail },
        residual,
        positivity,
        constancy,
        interior_min,
        interior_max,
        boundary_max,
    })
}

/// Discrete `𝒜`-harmonic function with the boundary values of `g`.
pub fn harmonic_extension(mesh: &TriMesh, coeffs: &CoefficientSet, g: &[f64]) -> Result<Vec<f64>> {
    if g.len() != mesh.n_vertices() {
        return Err(Error::Dimension {
            expected: mesh.n_vertices(),
            actual: g.len(),
        });
    }
    let a = assemble_volume(mesh, coeffs, &AssemblyOptions::default())?.stiffness;
    let interior = mesh.interior_vertices();
    let boundary = mesh.boundary_vertices();
    let mut u = vec![0.0; g.len()];
    for &b in &boundary {
        u[b] = g[b];
    }
    if interior.is_empty() {
        return Ok(u);
    }
    let (a_ii, a_ib) = split(&a, &interior, &interior, &boundary);
    let gb: Vec<f64> = boundary.iter().map(|&b| g[b]).collect();
    let rhs: Vec<f64> = a_ib.mul_vec(&gb).iter().map(|v| -v).collect();
    let ui = BandedLu::factor(&a_ii)?.solve(&rhs)?;
    for (&v, x) in interior.iter().zip(ui) {
        u[v] = x;
    }
    Ok(u)
}
