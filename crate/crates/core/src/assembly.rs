//! P1 finite element assembly of the sesquilinear form
//!
//! ```text
//! a(u, v) = ∫ a_kl ∂_k u ∂_l v̄ + ∫ b_k u ∂_k v̄ + ∫ c_k ∂_k u v̄ + ∫ c0 u v̄ + ∫_Γ β u v̄
//! ```
//!
//! with `A[i][j] = a(φ_j, φ_i)` for nodal hat functions. The boundary term is
//! present only in the Robin family of modes; Dirichlet vertices are removed
//! by elimination.

mod coefficients;

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, CsrMatrix};
use crate::mesh::{check_corkscrew, BoundaryTag, TriMesh};

pub use coefficients::{
    ellipticity_check, BetaField, CoefficientFile, CoefficientSet, ComplexValue, EllipticityReport, Mat2,
    MatrixField, ScalarField, VectorField,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryMode {
    Dirichlet,
    Robin,
    ComplexRobin,
    Mixed,
    /// Robin with `beta = 0`.
    Neumann,
}

impl BoundaryMode {
    pub fn is_robin_family(self) -> bool {
        matches!(self, BoundaryMode::Robin | BoundaryMode::ComplexRobin | BoundaryMode::Neumann)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassKind {
    Consistent,
    #[default]
    Lumped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssemblyOptions {
    /// Quadrature of the `c0` term.
    pub zero_order: MassKind,
    /// Robin boundary mass: endpoint lumping or the consistent edge mass.
    pub robin: MassKind,
    /// Corkscrew parameter checked before a mixed assembly; `None` skips the check.
    pub corkscrew_delta: Option<f64>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            zero_order: MassKind::Lumped,
            robin: MassKind::Lumped,
            corkscrew_delta: Some(0.1),
        }
    }
}

/// Volume matrices on all vertices, before boundary terms and constraints.
#[derive(Debug, Clone)]
pub struct VolumeMatrices {
    pub stiffness: CsrMatrix<f64>,
    pub mass: CsrMatrix<f64>,
    pub lumped: Vec<f64>,
}

fn hat_gradients(p: [[f64; 2]; 3], area: f64) -> [[f64; 2]; 3] {
    let mut g = [[0.0; 2]; 3];
    for k in 0..3 {
        let q = p[(k + 1) % 3];
        let r = p[(k + 2) % 3];
        g[k] = [(q[1] - r[1]) / (2.0 * area), (r[0] - q[0]) / (2.0 * area)];
    }
    g
}

/// Local element matrix of the volume terms, `K[i][j] = a(φ_j, φ_i)`.
pub fn element_matrix(
    p: [[f64; 2]; 3],
    a: &Mat2,
    b: [f64; 2],
    c: [f64; 2],
    c0: f64,
    zero_order: MassKind,
) -> [[f64; 3]; 3] {
    let area = crate::mesh::signed_area(p[0], p[1], p[2]);
    let g = hat_gradients(p, area);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut diffusion = 0.0;
            for kk in 0..2 {
                for l in 0..2 {
                    diffusion += a[kk][l] * g[j][kk] * g[i][l];
                }
            }
            let b_term = (b[0] * g[i][0] + b[1] * g[i][1]) * area / 3.0;
            let c_term = (c[0] * g[j][0] + c[1] * g[j][1]) * area / 3.0;
            let mass = match zero_order {
                MassKind::Consistent => area / 12.0 * if i == j { 2.0 } else { 1.0 },
                MassKind::Lumped => {
                    if i == j {
                        area / 3.0
                    } else {
                        0.0
                    }
                }
            };
            k[i][j] = diffusion * area + b_term + c_term + c0 * mass;
        }
    }
    k
}

/// Assembles stiffness, consistent mass and row-sum lumped mass on all
/// vertices. Element contributions are summed in triangle order.
pub fn assemble_volume(mesh: &TriMesh, coeffs: &CoefficientSet, opts: &AssemblyOptions) -> Result<VolumeMatrices> {
    coeffs.validate(mesh)?;
    let nv = mesh.n_vertices();
    let mut kt = Vec::with_capacity(9 * mesh.n_triangles());
    let mut mt = Vec::with_capacity(9 * mesh.n_triangles());
    let mut lumped = vec![0.0; nv];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = tri.map(|v| mesh.vertices()[v]);
        let area = mesh.triangle_area(t);
        let ke = element_matrix(p, &coeffs.a[t], coeffs.b[t], coeffs.c[t], coeffs.c0[t], opts.zero_order);
        for i in 0..3 {
            lumped[tri[i]] += area / 3.0;
            for j in 0..3 {
                kt.push((tri[i], tri[j], ke[i][j]));
                mt.push((tri[i], tri[j], area / 12.0 * if i == j { 2.0 } else { 1.0 }));
            }
        }
    }
    let stiffness = CsrMatrix::from_triplets(nv, nv, &kt);
    // summation dust on couplings that vanish exactly (right angles) is dropped
    let diag = stiffness.diagonal();
    let stiffness = stiffness.prune(|i, j| 64.0 * f64::EPSILON * diag[i].abs().max(diag[j].abs()));
    Ok(VolumeMatrices {
        stiffness,
        mass: CsrMatrix::from_triplets(nv, nv, &mt),
        lumped,
    })
}

/// Vertex to degree-of-freedom numbering; constrained vertices carry no dof.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DofMap {
    pub dof_of: Vec<Option<usize>>,
    pub vertex_of: Vec<usize>,
}

impl DofMap {
    pub fn from_constraints(constrained: &[bool]) -> Self {
        let mut dof_of = vec![None; constrained.len()];
        let mut vertex_of = Vec::new();
        for (v, &c) in constrained.iter().enumerate() {
            if !c {
                dof_of[v] = Some(vertex_of.len());
                vertex_of.push(v);
            }
        }
        DofMap { dof_of, vertex_of }
    }

    pub fn n_dof(&self) -> usize {
        self.vertex_of.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.dof_of.len()
    }

    pub fn is_constrained(&self, v: usize) -> bool {
        self.dof_of[v].is_none()
    }
}

/// Assembled operator `A_h` with mass matrices, restricted to the free dofs.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub stiffness: CsrMatrix<Complex64>,
    pub mass: CsrMatrix<f64>,
    pub mass_lumped: Vec<f64>,
    pub dofs: DofMap,
    pub mode: BoundaryMode,
    pub options: AssemblyOptions,
    /// Lumped mass on all vertices (constrained ones included).
    pub vertex_lumped: Vec<f64>,
    pub mesh: Arc<TriMesh>,
    pub provenance: String,
    pub warnings: Vec<String>,
    real: Option<CsrMatrix<f64>>,
}

impl DiscreteOperator {
    pub fn n_dof(&self) -> usize {
        self.dofs.n_dof()
    }

    /// Real stiffness matrix, if every entry is real.
    pub fn real_stiffness(&self) -> Option<&CsrMatrix<f64>> {
        self.real.as_ref()
    }

    pub fn is_real(&self) -> bool {
        self.real.is_some()
    }

    /// Real and symmetric to round-off.
    pub fn is_hermitian(&self) -> bool {
        let Some(a) = &self.real else { return false };
        let tol = 1e-14 * a.max_abs();
        a.triplets().all(|(i, j, v)| i >= j || (v - a.get(j, i)).abs() <= tol)
            && a.triplets().all(|(i, j, v)| i <= j || (v - a.get(j, i)).abs() <= tol)
    }

    pub fn mass_of(&self, kind: MassKind) -> CsrMatrix<f64> {
        match kind {
            MassKind::Consistent => self.mass.clone(),
            MassKind::Lumped => CsrMatrix::from_diagonal(&self.mass_lumped),
        }
    }

    /// Nodal field on all vertices; constrained vertices get exactly zero.
    pub fn expand<T: crate::linalg::Scalar>(&self, dof_values: &[T]) -> Vec<T> {
        self.dofs
            .dof_of
            .iter()
            .map(|d| d.map_or(T::zero(), |d| dof_values[d]))
            .collect()
    }

    pub fn restrict<T: crate::linalg::Scalar>(&self, vertex_values: &[T]) -> Vec<T> {
        self.dofs.vertex_of.iter().map(|&v| vertex_values[v]).collect()
    }
}

/// Assembles `A_h`, `M_h` and the lumped mass for the given boundary mode.
pub fn assemble(mesh: &TriMesh, coeffs: &CoefficientSet, mode: BoundaryMode) -> Result<DiscreteOperator> {
    assemble_with(mesh, coeffs, mode, &AssemblyOptions::default())
}

pub fn assemble_with(
    mesh: &TriMesh,
    coeffs: &CoefficientSet,
    mode: BoundaryMode,
    opts: &AssemblyOptions,
) -> Result<DiscreteOperator> {
    coeffs.validate(mesh)?;
    let has_d = mesh.has_tag(BoundaryTag::Dirichlet);
    let has_n = mesh.has_tag(BoundaryTag::Flux);
    let mut warnings = Vec::new();
    match mode {
        BoundaryMode::Dirichlet if has_n => {
            return Err(Error::ModeMismatch("dirichlet mode needs every boundary edge tagged D".into()))
        }
        m if m.is_robin_family() && has_d => {
            return Err(Error::ModeMismatch(format!(
                "{m:?} mode needs every boundary edge tagged N"
            )))
        }
        BoundaryMode::Mixed => {
            if !has_d {
                return Err(Error::ModeMismatch("mixed mode needs at least one D edge".into()));
            }
            if !coeffs.lower_order_vanishes() {
                return Err(Error::Coefficients("mixed mode requires b = c = c0 = 0".into()));
            }
            if !has_n {
                warnings.push("mixed mode without N edges coincides with dirichlet mode".into());
            }
        }
        _ => {}
    }
    if coeffs.has_complex_beta() && mode != BoundaryMode::ComplexRobin {
        return Err(Error::Coefficients(format!(
            "complex beta is only allowed in complex_robin mode, not {mode:?}"
        )));
    }
    if mode == BoundaryMode::ComplexRobin {
        if !coeffs.is_symmetric_principal() {
            return Err(Error::Coefficients("complex_robin mode requires a symmetric".into()));
        }
        if !coeffs.convection_matches() {
            return Err(Error::Coefficients("complex_robin mode requires b = c".into()));
        }
    }
    if mode == BoundaryMode::Mixed && has_n {
        match opts.corkscrew_delta {
            Some(delta) => {
                let rep = check_corkscrew(mesh, delta)?;
                if !rep.pass {
                    let (v, r) = rep.failure.unwrap_or((0, 0.0));
                    warnings.push(format!(
                        "corkscrew check failed at vertex {v}, radius {r} (delta {delta})"
                    ));
                }
            }
            None => warnings.push("corkscrew check skipped".into()),
        }
    }

    let volume = assemble_volume(mesh, coeffs, opts)?;
    let nv = mesh.n_vertices();
    let mut triplets: Vec<(usize, usize, Complex64)> = volume
        .stiffness
        .triplets()
        .map(|(i, j, v)| (i, j, Complex64::new(v, 0.0)))
        .collect();
    if matches!(mode, BoundaryMode::Robin | BoundaryMode::ComplexRobin) {
        for (e, beta) in mesh.boundary_edges().iter().zip(&coeffs.beta) {
            let len = mesh.edge_length(e);
            let [p, q] = e.vertices;
            match opts.robin {
                MassKind::Lumped => {
                    triplets.push((p, p, beta * (len / 2.0)));
                    triplets.push((q, q, beta * (len / 2.0)));
                }
                MassKind::Consistent => {
                    for (i, j, w) in [(p, p, 2.0), (q, q, 2.0), (p, q, 1.0), (q, p, 1.0)] {
                        triplets.push((i, j, beta * (w * len / 6.0)));
                    }
                }
            }
        }
    }
    let full = CsrMatrix::from_triplets(nv, nv, &triplets);

    let constrained = match mode {
        BoundaryMode::Dirichlet => mesh.boundary_mask(),
        BoundaryMode::Mixed => mesh.dirichlet_mask(),
        _ => vec![false; nv],
    };
    let dofs = DofMap::from_constraints(&constrained);
    let free = &dofs.vertex_of;
    let stiffness = full.submatrix(free, free);
    let mass = volume.mass.submatrix(free, free);
    let mass_lumped = free.iter().map(|&v| volume.lumped[v]).collect();
    let real = stiffness.to_real();
    Ok(DiscreteOperator {
        stiffness,
        mass,
        mass_lumped,
        dofs,
        mode,
        options: *opts,
        vertex_lumped: volume.lumped,
        mesh: Arc::new(mesh.clone()),
        provenance: format!(
            "mesh '{}' ({} vertices, {} triangles), mode {:?}",
            mesh.label(),
            nv,
            mesh.n_triangles(),
            mode
        ),
        warnings,
        real,
    })
}

/// `v^* A_h u`.
pub fn apply_form(op: &DiscreteOperator, u: &[Complex64], v: &[Complex64]) -> Result<Complex64> {
    let n = op.n_dof();
    for x in [u, v] {
        if x.len() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: x.len(),
            });
        }
    }
    Ok(dot(v, &op.stiffness.mul_vec(u)))
}

/// Real-vector convenience form of [`apply_form`].
pub fn apply_form_real(op: &DiscreteOperator, u: &[f64], v: &[f64]) -> Result<Complex64> {
    let c = |x: &[f64]| x.iter().map(|&r| Complex64::new(r, 0.0)).collect::<Vec<_>>();
    apply_form(op, &c(u), &c(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MMatrixReport {
    pub offdiag_max: f64,
    pub is_m_compatible: bool,
}

/// Sign scan of the off-diagonal entries of a real `A_h`.
pub fn mmatrix_report(op: &DiscreteOperator) -> Result<MMatrixReport> {
    let a = op
        .real_stiffness()
        .ok_or_else(|| Error::invalid("M-matrix report needs a real stiffness matrix"))?;
    Ok(offdiagonal_report(a))
}

pub(crate) fn offdiagonal_report(a: &CsrMatrix<f64>) -> MMatrixReport {
    let offdiag_max = a
        .triplets()
        .filter(|&(i, j, _)| i != j)
        .map(|(_, _, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let offdiag_max = if offdiag_max == f64::NEG_INFINITY { 0.0 } else { offdiag_max };
    MMatrixReport {
        offdiag_max,
        is_m_compatible: offdiag_max <= 0.0,
    }
}
