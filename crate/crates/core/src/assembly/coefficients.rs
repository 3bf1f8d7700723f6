use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::BoundaryMode;
use crate::error::{Error, Result};
use crate::mesh::TriMesh;

pub type Mat2 = [[f64; 2]; 2];

/// Piecewise-constant coefficients: `a`, `b`, `c`, `c0` per triangle and
/// `beta` per boundary edge (indexed like [`TriMesh::boundary_edges`]).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub a: Vec<Mat2>,
    pub b: Vec<[f64; 2]>,
    pub c: Vec<[f64; 2]>,
    pub c0: Vec<f64>,
    pub beta: Vec<Complex64>,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipticityReport {
    pub mu_actual: f64,
    pub pass: bool,
}

fn min_sym_eigenvalue(a: &Mat2) -> f64 {
    let p = a[0][0];
    let q = a[1][1];
    let r = 0.5 * (a[0][1] + a[1][0]);
    0.5 * (p + q) - (0.25 * (p - q) * (p - q) + r * r).sqrt()
}

/// Smallest eigenvalue of the symmetric part of `a` over all triangles.
pub fn ellipticity_check(coeffs: &CoefficientSet) -> EllipticityReport {
    let mu_actual = coeffs
        .a
        .iter()
        .map(min_sym_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    EllipticityReport {
        mu_actual,
        pass: mu_actual >= coeffs.mu,
    }
}

impl CoefficientSet {
    /// Spatially constant coefficients.
    pub fn uniform(
        mesh: &TriMesh,
        a: Mat2,
        b: [f64; 2],
        c: [f64; 2],
        c0: f64,
        beta: Complex64,
        mu: f64,
    ) -> Result<Self> {
        let nt = mesh.n_triangles();
        let set = CoefficientSet {
            a: vec![a; nt],
            b: vec![b; nt],
            c: vec![c; nt],
            c0: vec![c0; nt],
            beta: vec![beta; mesh.boundary_edges().len()],
            mu,
        };
        set.validate(mesh)?;
        Ok(set)
    }

    /// `a = I`, all lower-order terms and `beta` zero, `mu = 1`.
    pub fn laplacian(mesh: &TriMesh) -> Self {
        Self::uniform(
            mesh,
            [[1.0, 0.0], [0.0, 1.0]],
            [0.0; 2],
            [0.0; 2],
            0.0,
            Complex64::new(0.0, 0.0),
            1.0,
        )
        .expect("identity coefficients are valid")
    }

    pub fn with_beta(mut self, beta: Complex64) -> Self {
        self.beta.iter_mut().for_each(|b| *b = beta);
        self
    }

    pub fn with_c0(mut self, c0: f64) -> Self {
        self.c0.iter_mut().for_each(|v| *v = c0);
        self
    }

    pub fn with_convection(mut self, b: [f64; 2], c: [f64; 2]) -> Self {
        self.b.iter_mut().for_each(|v| *v = b);
        self.c.iter_mut().for_each(|v| *v = c);
        self
    }

    /// Sizes, finiteness and ellipticity.
    pub fn validate(&self, mesh: &TriMesh) -> Result<()> {
        let nt = mesh.n_triangles();
        for (name, len) in [
            ("a", self.a.len()),
            ("b", self.b.len()),
            ("c", self.c.len()),
            ("c0", self.c0.len()),
        ] {
            if len != nt {
                return Err(Error::Coefficients(format!(
                    "{name} has {len} entries, mesh has {nt} triangles"
                )));
            }
        }
        if self.beta.len() != mesh.boundary_edges().len() {
            return Err(Error::Coefficients(format!(
                "beta has {} entries, mesh has {} boundary edges",
                self.beta.len(),
                mesh.boundary_edges().len()
            )));
        }
        let finite = self.a.iter().flatten().flatten().all(|v| v.is_finite())
            && self.b.iter().chain(&self.c).flatten().all(|v| v.is_finite())
            && self.c0.iter().all(|v| v.is_finite())
            && self.beta.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Coefficients("non-finite coefficient value".into()));
        }
        if !(self.mu > 0.0) {
            return Err(Error::Coefficients(format!("mu must be positive, got {}", self.mu)));
        }
        let report = ellipticity_check(self);
        if !report.pass {
            let t = self
                .a
                .iter()
                .position(|a| min_sym_eigenvalue(a) < self.mu)
                .unwrap_or(0);
            return Err(Error::Coefficients(format!(
                "ellipticity violated on triangle {t}: smallest eigenvalue {} < mu = {}",
                report.mu_actual, self.mu
            )));
        }
        Ok(())
    }

    pub fn has_complex_beta(&self) -> bool {
        self.beta.iter().any(|b| b.im != 0.0)
    }

    pub fn is_symmetric_principal(&self) -> bool {
        self.a.iter().all(|a| a[0][1] == a[1][0])
    }

    pub fn convection_matches(&self) -> bool {
        self.b == self.c
    }

    pub fn lower_order_vanishes(&self) -> bool {
        self.b.iter().chain(&self.c).flatten().all(|&v| v == 0.0) && self.c0.iter().all(|&v| v == 0.0)
    }

    /// Coefficients of the formal adjoint: `(a^T, c, b, c0, conj(beta))`.
    pub fn adjoint(&self) -> Self {
        CoefficientSet {
            a: self
                .a
                .iter()
                .map(|a| [[a[0][0], a[1][0]], [a[0][1], a[1][1]]])
                .collect(),
            b: self.c.clone(),
            c: self.b.clone(),
            c0: self.c0.clone(),
            beta: self.beta.iter().map(|b| b.conj()).collect(),
            mu: self.mu,
        }
    }

    /// Same coefficients with `beta` replaced by its real part.
    pub fn real_beta(&self) -> Self {
        let mut s = self.clone();
        s.beta.iter_mut().for_each(|b| b.im = 0.0);
        s
    }
}

/// JSON coefficient file.
///
/// `a` is one 2x2 matrix or one per triangle, `b`/`c` one 2-vector or one per
/// triangle, `c0` a number or a list, `beta` a number, a `{re, im}` pair, or a
/// list of either (one per boundary edge).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientFile {
    pub a: MatrixField,
    #[serde(default)]
    pub b: Option<VectorField>,
    #[serde(default)]
    pub c: Option<VectorField>,
    #[serde(default)]
    pub c0: Option<ScalarField>,
    #[serde(default)]
    pub beta: Option<BetaField>,
    pub mu: f64,
    pub mode: BoundaryMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixField {
    Global(Mat2),
    PerTriangle(Vec<Mat2>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorField {
    Global([f64; 2]),
    PerTriangle(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarField {
    Global(f64),
    PerTriangle(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair { re: f64, im: f64 },
}

impl ComplexValue {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexValue::Real(re) => Complex64::new(re, 0.0),
            ComplexValue::Pair { re, im } => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaField {
    Global(ComplexValue),
    PerEdge(Vec<ComplexValue>),
}

fn expand<T: Clone>(name: &str, global: Option<T>, list: Option<Vec<T>>, n: usize, default: T) -> Result<Vec<T>> {
    match (global, list) {
        (Some(g), _) => Ok(vec![g; n]),
        (None, Some(l)) if l.len() == n => Ok(l),
        (None, Some(l)) => Err(Error::Coefficients(format!(
            "{name} lists {} values, expected {n}",
            l.len()
        ))),
        (None, None) => Ok(vec![default; n]),
    }
}

impl CoefficientFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Expands to per-simplex data on `mesh` and validates it.
    pub fn to_coefficients(&self, mesh: &TriMesh) -> Result<CoefficientSet> {
        let nt = mesh.n_triangles();
        let ne = mesh.boundary_edges().len();
        let a = match &self.a {
            MatrixField::Global(m) => expand("a", Some(*m), None, nt, *m)?,
            MatrixField::PerTriangle(l) => expand("a", None, Some(l.clone()), nt, [[0.0; 2]; 2])?,
        };
        let vec_field = |name: &str, f: &Option<VectorField>| match f {
            Some(VectorField::Global(v)) => expand(name, Some(*v), None, nt, [0.0; 2]),
            Some(VectorField::PerTriangle(l)) => expand(name, None, Some(l.clone()), nt, [0.0; 2]),
            None => Ok(vec![[0.0; 2]; nt]),
        };
        let b = vec_field("b", &self.b)?;
        let c = vec_field("c", &self.c)?;
        let c0 = match &self.c0 {
            Some(ScalarField::Global(v)) => vec![*v; nt],
            Some(ScalarField::PerTriangle(l)) => expand("c0", None, Some(l.clone()), nt, 0.0)?,
            None => vec![0.0; nt],
        };
        let beta = match &self.beta {
            Some(BetaField::Global(v)) => vec![v.value(); ne],
            Some(BetaField::PerEdge(l)) => {
                expand("beta", None, Some(l.iter().map(|v| v.value()).collect()), ne, Complex64::new(0.0, 0.0))?
            }
            None => vec![Complex64::new(0.0, 0.0); ne],
        };
        let set = CoefficientSet {
            a,
            b,
            c,
            c0,
            beta,
            mu: self.mu,
        };
        set.validate(mesh)?;
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_structured, BoundaryTag, Shape, TagRule};

    fn with_a(a: Mat2, mu: f64) -> CoefficientSet {
        CoefficientSet {
            a: vec![a; 3],
            b: vec![[0.0; 2]; 3],
            c: vec![[0.0; 2]; 3],
            c0: vec![0.0; 3],
            beta: vec![],
            mu,
        }
    }

    /// Closed-form eigenvalues of the symmetric 2x2 part, written independently.
    fn oracle_min_eig(a: Mat2) -> f64 {
        let s = [[a[0][0], (a[0][1] + a[1][0]) / 2.0], [(a[0][1] + a[1][0]) / 2.0, a[1][1]]];
        let tr = s[0][0] + s[1][1];
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        tr / 2.0 - (tr * tr / 4.0 - det).sqrt()
    }

    #[test]
    fn ellipticity_examples() {
        let r = ellipticity_check(&with_a([[1.0, 0.0], [0.0, 1.0]], 1.0));
        assert_eq!(r.mu_actual, 1.0);
        assert!(r.pass);

        let a = [[2.0, 1.0], [0.0, 2.0]];
        let r = ellipticity_check(&with_a(a, 1.0));
        assert!((r.mu_actual - 1.5).abs() < 1e-14);
        assert!((r.mu_actual - oracle_min_eig(a)).abs() < 1e-14);

        let a = [[1.0, 3.0], [0.0, 1.0]];
        let r = ellipticity_check(&with_a(a, 1e-9));
        assert!((r.mu_actual + 0.5).abs() < 1e-14);
        assert!((r.mu_actual - oracle_min_eig(a)).abs() < 1e-14);
        assert!(!r.pass);
    }

    #[test]
    fn file_forms() {
        let mesh = generate_structured(Shape::UnitSquare, 2, &TagRule::all(BoundaryTag::Flux)).unwrap();
        let f = CoefficientFile::parse(
            r#"{"a": [[1, 0], [0, 1]], "c0": 2, "beta": {"re": 1, "im": 0.5}, "mu": 1, "mode": "complex_robin"}"#,
        )
        .unwrap();
        let c = f.to_coefficients(&mesh).unwrap();
        assert_eq!(c.c0, vec![2.0; 8]);
        assert_eq!(c.beta[3], Complex64::new(1.0, 0.5));
        assert_eq!(f.mode, BoundaryMode::ComplexRobin);

        let bad = CoefficientFile::parse(r#"{"a": [[1, 0], [0, 1]], "mu": 1, "mode": "robin", "gamma": 1}"#);
        assert!(bad.is_err());
        let short = CoefficientFile::parse(r#"{"a": [[1, 0], [0, 1]], "c0": [1, 2], "mu": 1, "mode": "robin"}"#)
            .unwrap()
            .to_coefficients(&mesh);
        assert!(short.is_err());
        let not_elliptic = CoefficientFile::parse(r#"{"a": [[1, 3], [0, 1]], "mu": 0.1, "mode": "robin"}"#)
            .unwrap()
            .to_coefficients(&mesh);
        assert!(not_elliptic.unwrap_err().to_string().contains("ellipticity"));
    }

    #[test]
    fn adjoint_swaps_convection() {
        let mesh = generate_structured(Shape::UnitSquare, 1, &TagRule::all(BoundaryTag::Flux)).unwrap();
        let c = CoefficientSet::uniform(
            &mesh,
            [[2.0, 0.5], [0.1, 1.0]],
            [1.0, 2.0],
            [3.0, 4.0],
            0.5,
            Complex64::new(1.0, 2.0),
            0.5,
        )
        .unwrap();
        let adj = c.adjoint();
        assert_eq!(adj.a[0], [[2.0, 0.1], [0.5, 1.0]]);
        assert_eq!(adj.b[0], [3.0, 4.0]);
        assert_eq!(adj.c[0], [1.0, 2.0]);
        assert_eq!(adj.beta[0], Complex64::new(1.0, -2.0));
        assert_eq!(adj.adjoint(), c);
    }
}
