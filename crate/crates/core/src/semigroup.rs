//! Discrete heat semigroup `S_t ≈ exp(−t M⁻¹ A_h)` by implicit time stepping,
//! heat kernels and positivity-improving checks.

use std::collections::VecDeque;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::assembly::{DiscreteOperator, MassKind};
use crate::error::{Error, Result};
use crate::linalg::{BandedLu, CsrMatrix};
use crate::spectral::{Region, POSITIVITY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImplicitEuler,
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub mass: MassKind,
}

impl EvolutionConfig {
    pub fn implicit_euler(dt: f64, t_end: f64) -> Self {
        EvolutionConfig {
            scheme: Scheme::ImplicitEuler,
            dt,
            t_end,
            mass: MassKind::Lumped,
        }
    }

    pub fn crank_nicolson(dt: f64, t_end: f64) -> Self {
        EvolutionConfig {
            scheme: Scheme::CrankNicolson,
            ..Self::implicit_euler(dt, t_end)
        }
    }

    /// `h_max² / 4`.
    pub fn default_dt(h_max: f64) -> f64 {
        h_max * h_max / 4.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= self.dt && self.t_end.is_finite()) {
            return Err(Error::invalid(format!(
                "t_end must be at least dt, got t_end = {} and dt = {}",
                self.t_end, self.dt
            )));
        }
        Ok(())
    }

    /// Step sizes reaching `t_end`; the last step is shortened when `dt`
    /// does not divide `t_end`.
    pub fn steps(&self) -> Vec<f64> {
        let ratio = self.t_end / self.dt;
        let full = (ratio * (1.0 + 1e-12)).floor() as usize;
        let mut steps = vec![self.dt; full];
        let rest = self.t_end - full as f64 * self.dt;
        if rest > 1e-12 * self.t_end {
            steps.push(rest);
        }
        steps
    }
}

/// Factored one-step propagator for a fixed step size.
#[derive(Debug, Clone)]
pub struct Stepper {
    scheme: Scheme,
    dt: f64,
    lhs: CsrMatrix<f64>,
    lu: BandedLu<f64>,
    mass: CsrMatrix<f64>,
    explicit: Option<CsrMatrix<f64>>,
}

impl Stepper {
    pub fn new(op: &DiscreteOperator, scheme: Scheme, dt: f64, mass: MassKind) -> Result<Self> {
        let a = op
            .real_stiffness()
            .ok_or_else(|| Error::invalid("time stepping needs a real operator"))?;
        let m = op.mass_of(mass);
        let theta = match scheme {
            Scheme::ImplicitEuler => dt,
            Scheme::CrankNicolson => dt / 2.0,
        };
        let lhs = m.linear_combination(1.0, a, theta);
        let lu = BandedLu::factor(&lhs).map_err(|e| Error::StepSolve {
            step: 1,
            source: Box::new(e),
        })?;
        let explicit = (scheme == Scheme::CrankNicolson).then(|| m.linear_combination(1.0, a, -theta));
        Ok(Stepper {
            scheme,
            dt,
            lhs,
            lu,
            mass: m,
            explicit,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Left-hand matrix `M + θ dt A_h`.
    pub fn step_matrix(&self) -> &CsrMatrix<f64> {
        &self.lhs
    }

    pub fn step(&self, u: &[f64], index: usize) -> Result<Vec<f64>> {
        let rhs = match &self.explicit {
            Some(b) => b.mul_vec(u),
            None => self.mass.mul_vec(u),
        };
        self.lu.solve(&rhs).map_err(|e| Error::StepSolve {
            step: index,
            source: Box::new(e),
        })
    }

    pub fn advance(&self, u: &[f64], steps: usize) -> Result<Vec<f64>> {
        let mut u = u.to_vec();
        for k in 1..=steps {
            u = self.step(&u, k)?;
        }
        Ok(u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Dof vectors, one per time.
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectories hold the initial state")
    }
}

/// Evolves `u0` (dof vector) to `cfg.t_end`, keeping every step.
pub fn evolve(op: &DiscreteOperator, u0: &[f64], cfg: &EvolutionConfig) -> Result<Trajectory> {
    let mut times = vec![0.0];
    let mut states = vec![u0.to_vec()];
    evolve_with(op, u0, cfg, |k, t, u| {
        debug_assert_eq!(k, times.len());
        times.push(t);
        states.push(u.to_vec());
        true
    })?;
    Ok(Trajectory { times, states })
}

/// Evolves and hands each step `(index, time, state)` to `visit`; returning
/// `false` stops early. Returns the last state.
pub fn evolve_with(
    op: &DiscreteOperator,
    u0: &[f64],
    cfg: &EvolutionConfig,
    mut visit: impl FnMut(usize, f64, &[f64]) -> bool,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if u0.len() != op.n_dof() {
        return Err(Error::Dimension {
            expected: op.n_dof(),
            actual: u0.len(),
        });
    }
    let steps = cfg.steps();
    let main = Stepper::new(op, cfg.scheme, cfg.dt, cfg.mass)?;
    let mut tail: Option<Stepper> = None;
    let mut u = u0.to_vec();
    let mut t = 0.0;
    for (i, &h) in steps.iter().enumerate() {
        let stepper = if h == cfg.dt {
            &main
        } else {
            tail.get_or_insert(Stepper::new(op, cfg.scheme, h, cfg.mass).map_err(|e| match e {
                Error::StepSolve { source, .. } => Error::StepSolve { step: i + 1, source },
                e => e,
            })?)
        };
        u = stepper.step(&u, i + 1)?;
        t = if i + 1 == steps.len() { cfg.t_end } else { t + h };
        if !visit(i + 1, t, &u) {
            break;
        }
    }
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepMatrixReport {
    pub z_pattern: bool,
    pub row_dominant: bool,
    pub column_dominant: bool,
    pub is_m_matrix: bool,
}

/// Sufficient M-matrix test: nonpositive off-diagonals with strict diagonal
/// dominance by rows or by columns.
pub fn step_matrix_report(b: &CsrMatrix<f64>) -> StepMatrixReport {
    let n = b.nrows();
    let mut z_pattern = true;
    let mut diag = vec![0.0; n];
    let mut row_off = vec![0.0; n];
    let mut col_off = vec![0.0; n];
    for (i, j, v) in b.triplets() {
        if i == j {
            diag[i] = v;
        } else {
            z_pattern &= v <= 0.0;
            row_off[i] += v.abs();
            col_off[j] += v.abs();
        }
    }
    let row_dominant = (0..n).all(|i| diag[i] > row_off[i]);
    let column_dominant = (0..n).all(|i| diag[i] > col_off[i]);
    StepMatrixReport {
        z_pattern,
        row_dominant,
        column_dominant,
        is_m_matrix: z_pattern && (row_dominant || column_dominant),
    }
}

/// Largest BFS eccentricity over the sparsity graph of `b`.
pub fn graph_diameter(b: &CsrMatrix<f64>) -> usize {
    let n = b.nrows();
    let mut adj = vec![Vec::new(); n];
    for (i, j, v) in b.triplets() {
        if i != j && v != 0.0 {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let mut best = 0;
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[s] = 0;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    best = best.max(dist[w]);
                    queue.push_back(w);
                }
            }
        }
    }
    best
}

/// Vertices of a region for the operator's mesh and constraints.
pub fn region_vertices(op: &DiscreteOperator, region: Region) -> Vec<usize> {
    let boundary = op.mesh.boundary_mask();
    let dirichlet = op.mesh.dirichlet_mask();
    (0..op.dofs.n_vertices())
        .filter(|&v| match region {
            Region::Interior => !boundary[v],
            Region::Closure => true,
            Region::OmegaUnionN => !dirichlet[v],
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    /// Dof carrying the initial indicator.
    pub dof: usize,
    pub vertex: usize,
    /// First step with every region value strictly positive.
    pub first_positive_step: Option<usize>,
    /// Positivity held at every step from the diameter step to the end.
    pub positive_after_threshold: bool,
    /// Region minimum over `‖u‖∞` at `t_end`.
    pub final_relative_min: f64,
    pub final_min_vertex: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityImprovingReport {
    pub verdict: Verdict,
    pub reason: Option<String>,
    pub region: Region,
    pub threshold_step: usize,
    pub steps: usize,
    pub step_matrix: Option<StepMatrixReport>,
    pub trials: Vec<TrialOutcome>,
    /// Smallest relative region value at `t_end` over all trials.
    pub min_value: f64,
    pub latest_first_positive_step: Option<usize>,
}

fn not_applicable(region: Region, reason: String, step_matrix: Option<StepMatrixReport>) -> PositivityImprovingReport {
    PositivityImprovingReport {
        verdict: Verdict::NotApplicable,
        reason: Some(reason),
        region,
        threshold_step: 0,
        steps: 0,
        step_matrix,
        trials: Vec::new(),
        min_value: f64::NAN,
        latest_first_positive_step: None,
    }
}

/// Evolves nodal indicators and checks that every region value is strictly
/// positive from the graph-diameter step on, and above the relative
/// positivity tolerance at `t_end`.
pub fn positivity_improving_check(
    op: &DiscreteOperator,
    cfg: &EvolutionConfig,
    trials: usize,
    region: Region,
) -> Result<PositivityImprovingReport> {
    cfg.validate()?;
    if cfg.scheme != Scheme::ImplicitEuler || cfg.mass != MassKind::Lumped {
        return Ok(not_applicable(
            region,
            "positivity claims need implicit Euler with lumped mass".into(),
            None,
        ));
    }
    if !op.is_real() {
        return Ok(not_applicable(region, "operator is complex".into(), None));
    }
    let stepper = Stepper::new(op, cfg.scheme, cfg.dt, cfg.mass)?;
    let sm = step_matrix_report(stepper.step_matrix());
    if !sm.is_m_matrix {
        return Ok(not_applicable(
            region,
            "step matrix M_L + dt A_h is not certified as an M-matrix".into(),
            Some(sm),
        ));
    }
    let threshold = graph_diameter(stepper.step_matrix());
    let steps = cfg.steps().len();
    if steps < threshold.max(1) {
        let mut r = not_applicable(
            region,
            format!("{steps} steps do not reach the graph-diameter step {threshold}"),
            Some(sm),
        );
        r.threshold_step = threshold;
        r.steps = steps;
        return Ok(r);
    }
    let nodes = region_vertices(op, region);
    if nodes.is_empty() || trials == 0 {
        return Ok(not_applicable(region, "empty region or no trials".into(), Some(sm)));
    }
    let n = op.n_dof();
    let mut outcomes = Vec::with_capacity(trials);
    for trial in 0..trials {
        let dof = trial % n;
        let mut u0 = vec![0.0; n];
        u0[dof] = 1.0;
        let mut first = None;
        let mut after = true;
        let last = evolve_with(op, &u0, cfg, |k, _, u| {
            let full = op.expand(u);
            let positive = nodes.iter().all(|&v| full[v] > 0.0);
            if positive && first.is_none() {
                first = Some(k);
            }
            if k >= threshold && !positive {
                after = false;
            }
            true
        })?;
        let full = op.expand(&last);
        let inf = full.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let (vertex_min, vmin) = nodes
            .iter()
            .map(|&v| (v, full[v]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("region is nonempty");
        outcomes.push(TrialOutcome {
            dof,
            vertex: op.dofs.vertex_of[dof],
            first_positive_step: first,
            positive_after_threshold: after,
            final_relative_min: vmin / inf,
            final_min_vertex: vertex_min,
        });
    }
    let pass = outcomes
        .iter()
        .all(|o| o.positive_after_threshold && o.final_relative_min >= POSITIVITY_TOL);
    let min_value = outcomes.iter().map(|o| o.final_relative_min).fold(f64::INFINITY, f64::min);
    let latest = outcomes
        .iter()
        .map(|o| o.first_positive_step)
        .try_fold(0usize, |m, s| s.map(|s| m.max(s)));
    Ok(PositivityImprovingReport {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        reason: (!pass).then(|| "a region value failed the positivity test".to_string()),
        region,
        threshold_step: threshold,
        steps,
        step_matrix: Some(sm),
        trials: outcomes,
        min_value,
        latest_first_positive_step: latest,
    })
}

/// Dense kernel on all vertices; rows and columns of constrained vertices are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub t: f64,
    pub n: usize,
    /// Row-major `n × n`.
    pub entries: Vec<f64>,
    pub constrained: Vec<bool>,
    /// Lumped mass per vertex.
    pub lumped: Vec<f64>,
}

impl KernelMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// `Σ_j K[i][j] m_j u_j`.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * self.lumped[j] * u[j]).sum())
            .collect()
    }

    /// `max |K − Kᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `K · M_L · other`.
    pub fn compose(&self, other: &KernelMatrix) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k) * self.lumped[k];
                if a == 0.0 {
                    continue;
                }
                let row = &other.entries[k * n..(k + 1) * n];
                for (o, b) in out[i * n..(i + 1) * n].iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(KERNEL_MAGIC)?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&self.t.to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * self.entries.len());
        for v in &self.entries {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Reads a dump written by [`KernelMatrix::write_binary`]. Constraint and
    /// mass data are not part of the format.
    pub fn read_binary(mut r: impl Read) -> Result<(f64, usize, Vec<f64>)> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != KERNEL_MAGIC {
            return Err(Error::invalid("not a kernel dump"));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let t = f64::from_le_bytes(b8);
        let mut data = vec![0u8; 8 * n * n];
        r.read_exact(&mut data)?;
        let entries = data
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok((t, n, entries))
    }
}

pub const KERNEL_MAGIC: &[u8; 8] = b"KTMAT001";

/// Column `j` is the evolution of `M_L⁻¹ e_j` to time `t`, so that
/// `(S_t u)_i = Σ_j K[i][j] m_j u_j`.
pub fn kernel(op: &DiscreteOperator, t: f64, cfg: &EvolutionConfig) -> Result<KernelMatrix> {
    let cfg = EvolutionConfig { t_end: t, ..*cfg };
    cfg.validate()?;
    let steps = cfg.steps();
    let main = Stepper::new(op, cfg.scheme, cfg.dt, cfg.mass)?;
    let tail = match steps.last() {
        Some(&h) if h != cfg.dt => Some(Stepper::new(op, cfg.scheme, h, cfg.mass)?),
        _ => None,
    };
    let n_dof = op.n_dof();
    let nv = op.dofs.n_vertices();
    let column = |d: usize| -> Result<Vec<f64>> {
        let mut u = vec![0.0; n_dof];
        u[d] = 1.0 / op.mass_lumped[d];
        for (i, &h) in steps.iter().enumerate() {
            let s = if h == cfg.dt { &main } else { tail.as_ref().expect("tail stepper") };
            u = s.step(&u, i + 1)?;
        }
        Ok(u)
    };
    let threads = std::thread::available_parallelism().map_or(1, |p| p.get()).min(n_dof.max(1));
    let chunk = n_dof.div_ceil(threads.max(1)).max(1);
    let columns: Vec<Vec<f64>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..n_dof)
            .step_by(chunk)
            .map(|start| {
                let column = &column;
                s.spawn(move || (start..(start + chunk).min(n_dof)).map(column).collect::<Result<Vec<_>>>())
            })
            .collect();
        let mut all = Vec::with_capacity(n_dof);
        for h in handles {
            all.extend(h.join().expect("kernel worker panicked")?);
        }
        Ok::<_, Error>(all)
    })?;
    let mut entries = vec![0.0; nv * nv];
    for (d, col) in columns.iter().enumerate() {
        let j = op.dofs.vertex_of[d];
        for (e, &v) in col.iter().enumerate() {
            entries[op.dofs.vertex_of[e] * nv + j] = v;
        }
    }
    Ok(KernelMatrix {
        t,
        n: nv,
        entries,
        constrained: (0..nv).map(|v| op.dofs.is_constrained(v)).collect(),
        lumped: op.vertex_lumped.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelPositivityReport {
    pub verdict: Verdict,
    pub region: Region,
    pub min_entry: f64,
    pub argmin: (usize, usize),
    pub tolerance: f64,
    /// Constrained rows and columns are identically zero.
    pub constrained_zero: bool,
    pub pairs_checked: usize,
}

/// Entry positivity over region pairs; constrained rows and columns must vanish.
pub fn kernel_positivity_report(k: &KernelMatrix, mode: crate::assembly::BoundaryMode) -> KernelPositivityReport {
    let region = crate::spectral::region_for_mode(mode);
    let free: Vec<usize> = (0..k.n).filter(|&v| !k.constrained[v]).collect();
    let max = k.entries.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tolerance = POSITIVITY_TOL * max;
    let mut min_entry = f64::INFINITY;
    let mut argmin = (0, 0);
    for &i in &free {
        for &j in &free {
            let v = k.get(i, j);
            if v < min_entry {
                min_entry = v;
                argmin = (i, j);
            }
        }
    }
    let constrained_zero = (0..k.n).all(|i| {
        (0..k.n).all(|j| !(k.constrained[i] || k.constrained[j]) || k.get(i, j) == 0.0)
    });
    let pass = !free.is_empty() && max > 0.0 && min_entry > tolerance && constrained_zero;
    KernelPositivityReport {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        region,
        min_entry,
        argmin,
        tolerance,
        constrained_zero,
        pairs_checked: free.len() * free.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, BoundaryMode, CoefficientSet};
    use crate::linalg::dot;
    use crate::mesh::{generate_structured, BoundaryTag, Shape, TagRule};
    use crate::spectral::{principal_eig_with, EigenOptions};
    use num_complex::Complex64;

    fn op(n: usize, mode: BoundaryMode) -> DiscreteOperator {
        let tag = match mode {
            BoundaryMode::Dirichlet => BoundaryTag::Dirichlet,
            _ => BoundaryTag::Flux,
        };
        let m = generate_structured(Shape::UnitSquare, n, &TagRule::all(tag)).unwrap();
        let mut c = CoefficientSet::laplacian(&m);
        if mode == BoundaryMode::Robin {
            c = c.with_beta(Complex64::new(1.0, 0.0));
        }
        assemble(&m, &c, mode).unwrap()
    }

    #[test]
    fn config_validation_and_steps() {
        assert!(EvolutionConfig::implicit_euler(0.0, 1.0).validate().is_err());
        assert!(EvolutionConfig::implicit_euler(0.1, 0.05).validate().is_err());
        assert_eq!(EvolutionConfig::implicit_euler(1e-3, 0.1).steps().len(), 100);
        let s = EvolutionConfig::implicit_euler(0.3, 1.0).steps();
        assert_eq!(s.len(), 4);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigenvector_decays_like_scalar_ode() {
        let o = op(8, BoundaryMode::Robin);
        let rep = principal_eig_with(&o, &EigenOptions::with_tol(1e-12).lumped()).unwrap();
        let l = rep.lambda1.re;
        let dt = 1e-3;
        let traj = evolve(&o, &rep.vector, &EvolutionConfig::implicit_euler(dt, 0.5)).unwrap();
        for (t, u) in traj.times.iter().zip(&traj.states) {
            let exact = (-l * t).exp();
            let err = u.iter().zip(&rep.vector).map(|(a, b)| (a - exact * b).abs()).fold(0.0, f64::max)
                / rep.vector.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(err <= 10.0 * dt * l * l * t.max(dt) + 1e-10, "t={t} err={err}");
        }
    }

    #[test]
    fn neumann_mass_is_conserved() {
        let o = op(6, BoundaryMode::Neumann);
        let u0: Vec<f64> = (0..o.n_dof()).map(|i| ((i * 7) % 5) as f64).collect();
        for cfg in [EvolutionConfig::implicit_euler(0.01, 0.2), EvolutionConfig::crank_nicolson(0.01, 0.2)] {
            for mass in [MassKind::Lumped, MassKind::Consistent] {
                let cfg = EvolutionConfig { mass, ..cfg };
                let m = o.mass_of(mass);
                let total0: f64 = m.mul_vec(&u0).iter().sum();
                for u in evolve(&o, &u0, &cfg).unwrap().states {
                    let total: f64 = m.mul_vec(&u).iter().sum();
                    assert!((total - total0).abs() <= 1e-12 * total0.abs());
                }
            }
        }
    }

    #[test]
    fn zero_stays_zero_and_splitting_is_exact() {
        let o = op(5, BoundaryMode::Robin);
        let z = evolve(&o, &vec![0.0; o.n_dof()], &EvolutionConfig::implicit_euler(0.01, 0.1)).unwrap();
        assert!(z.states.iter().all(|u| u.iter().all(|&v| v == 0.0)));
        assert_eq!(z.times.len(), 11);

        let u0: Vec<f64> = (0..o.n_dof()).map(|i| (i as f64).sin()).collect();
        let s = Stepper::new(&o, Scheme::ImplicitEuler, 0.01, MassKind::Lumped).unwrap();
        let split = s.advance(&s.advance(&u0, 3).unwrap(), 4).unwrap();
        assert_eq!(split, s.advance(&u0, 7).unwrap());
        assert!(evolve(&o, &u0[1..], &EvolutionConfig::implicit_euler(0.01, 0.1)).is_err());
    }

    #[test]
    fn contractive_in_max_norm() {
        let o = op(6, BoundaryMode::Robin);
        let u0: Vec<f64> = (0..o.n_dof()).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        let inf0 = u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for u in evolve(&o, &u0, &EvolutionConfig::implicit_euler(0.005, 0.2)).unwrap().states {
            assert!(u.iter().all(|v| v.abs() <= inf0 * (1.0 + 1e-14)));
        }
    }

    #[test]
    fn one_step_reaches_neighbours() {
        let o = op(6, BoundaryMode::Robin);
        let s = Stepper::new(&o, Scheme::ImplicitEuler, 1e-4, MassKind::Lumped).unwrap();
        let j = 20;
        let mut u0 = vec![0.0; o.n_dof()];
        u0[j] = 1.0;
        let u = s.step(&u0, 1).unwrap();
        let (cols, vals) = s.step_matrix().row(j);
        for (&c, &v) in cols.iter().zip(vals) {
            if v != 0.0 {
                assert!(u[c] > 0.0);
            }
        }
    }

    #[test]
    fn positivity_improving_small_robin() {
        let o = op(4, BoundaryMode::Robin);
        let cfg = EvolutionConfig::implicit_euler(1e-3, 0.05);
        let rep = positivity_improving_check(&o, &cfg, o.n_dof(), Region::Closure).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{rep:?}");
        assert_eq!(rep.threshold_step, 8);
        let cn = EvolutionConfig::crank_nicolson(1e-3, 0.05);
        assert_eq!(
            positivity_improving_check(&o, &cn, 3, Region::Closure).unwrap().verdict,
            Verdict::NotApplicable
        );
        let short = EvolutionConfig::implicit_euler(1e-3, 3e-3);
        assert_eq!(
            positivity_improving_check(&o, &short, 3, Region::Closure).unwrap().verdict,
            Verdict::NotApplicable
        );
    }

    #[test]
    fn positivity_improving_dirichlet_interior() {
        let o = op(6, BoundaryMode::Dirichlet);
        let cfg = EvolutionConfig::implicit_euler(2e-3, 0.05);
        let rep = positivity_improving_check(&o, &cfg, o.n_dof(), Region::Interior).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        let closure = positivity_improving_check(&o, &cfg, 2, Region::Closure).unwrap();
        assert_eq!(closure.verdict, Verdict::Fail);
    }

    #[test]
    fn verdict_invariant_under_positive_scaling() {
        let o = op(4, BoundaryMode::Robin);
        let cfg = EvolutionConfig::implicit_euler(1e-3, 0.02);
        let a = evolve(&o, &[&[1.0][..], &vec![0.0; o.n_dof() - 1]].concat(), &cfg).unwrap();
        let b = evolve(&o, &[&[7.5][..], &vec![0.0; o.n_dof() - 1]].concat(), &cfg).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            let am = x.iter().enumerate().min_by(|p, q| p.1.total_cmp(q.1)).unwrap().0;
            let bm = y.iter().enumerate().min_by(|p, q| p.1.total_cmp(q.1)).unwrap().0;
            assert_eq!(am, bm);
            assert_eq!(x.iter().all(|&v| v > 0.0), y.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn kernel_reproduces_evolution() {
        let o = op(4, BoundaryMode::Robin);
        let cfg = EvolutionConfig::implicit_euler(0.01, 0.1);
        let k = kernel(&o, 0.1, &cfg).unwrap();
        let u0: Vec<f64> = (0..o.n_dof()).map(|i| (i as f64 * 0.37).cos()).collect();
        let direct = evolve(&o, &u0, &cfg).unwrap();
        let via = k.apply(&o.expand(&u0));
        let inf0 = u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in o.expand(direct.last()).iter().zip(&via) {
            assert!((a - b).abs() <= 1e-10 * inf0);
        }
        assert!(k.asymmetry() < 1e-12);
        let rep = kernel_positivity_report(&k, BoundaryMode::Robin);
        assert_eq!(rep.verdict, Verdict::Pass);
        let k2 = kernel(&o, 0.2, &cfg).unwrap();
        let ck = k.compose(&k);
        let err = ck.iter().zip(&k2.entries).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn dirichlet_kernel_has_zero_boundary_rows() {
        let o = op(4, BoundaryMode::Dirichlet);
        let k = kernel(&o, 0.05, &EvolutionConfig::implicit_euler(0.005, 0.05)).unwrap();
        let rep = kernel_positivity_report(&k, BoundaryMode::Dirichlet);
        assert!(rep.constrained_zero);
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.pairs_checked, 9 * 9);
    }

    #[test]
    fn kernel_binary_round_trip() {
        let o = op(2, BoundaryMode::Robin);
        let k = kernel(&o, 0.1, &EvolutionConfig::implicit_euler(0.05, 0.1)).unwrap();
        let mut buf = Vec::new();
        k.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"KTMAT001");
        assert_eq!(buf.len(), 24 + 8 * 81);
        let (t, n, e) = KernelMatrix::read_binary(&buf[..]).unwrap();
        assert_eq!((t, n), (0.1, 9));
        assert_eq!(e, k.entries);
        assert!(KernelMatrix::read_binary(&b"NOTAKERN"[..]).is_err());
    }

    #[test]
    fn step_matrix_checks() {
        let o = op(3, BoundaryMode::Robin);
        let s = Stepper::new(&o, Scheme::ImplicitEuler, 0.01, MassKind::Lumped).unwrap();
        let r = step_matrix_report(s.step_matrix());
        assert!(r.is_m_matrix);
        let u: Vec<f64> = vec![1.0; o.n_dof()];
        assert!(dot(&u, &s.step_matrix().mul_vec(&u)) > 0.0);
        let bad = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 0.5), (1, 1, 1.0)]);
        assert!(!step_matrix_report(&bad).is_m_matrix);
        assert_eq!(graph_diameter(s.step_matrix()), 6);
    }
}
