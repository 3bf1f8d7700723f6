//! Principal eigenpairs of the pencil `A_h u = λ M_h u`, spectral gaps and
//! nodal positivity certificates.
//!
//! Real symmetric operators use block inverse iteration with Rayleigh-Ritz
//! projection. Everything else goes through a dense Schur decomposition up
//! to `dense_cutoff` dofs and shift-invert Arnoldi beyond it.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_with, AssemblyOptions, BoundaryMode, CoefficientSet, DiscreteOperator, MassKind};
use crate::error::{Error, Result};
use crate::linalg::{complex_eigenvalues, dot, generalized_to_standard, norm2, sort_by_real_part, BandedLu, CsrMatrix};
use crate::mesh::TriMesh;

const C0: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenOptions {
    /// Bound on `‖A u − λ M u‖₂ / ‖M u‖₂`.
    pub tol: f64,
    pub max_iter: usize,
    pub mass: MassKind,
    /// Largest non-Hermitian problem handled by the dense solver.
    pub dense_cutoff: usize,
    /// Use shift-invert Arnoldi above the cutoff instead of failing.
    pub arnoldi: bool,
    /// Seeds the random start vectors; set from the run seed, never read from config.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-9,
            max_iter: 1000,
            mass: MassKind::Consistent,
            dense_cutoff: 2000,
            arnoldi: true,
            seed: 0,
        }
    }
}

impl EigenOptions {
    pub fn with_tol(tol: f64) -> Self {
        EigenOptions { tol, ..Default::default() }
    }

    pub fn lumped(mut self) -> Self {
        self.mass = MassKind::Lumped;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    SubspaceInverseIteration,
    DenseSchur,
    ShiftInvertArnoldi,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenReport {
    pub lambda1: Complex64,
    /// Real part of the dof vector, unit lumped-L2 norm.
    pub vector: Vec<f64>,
    /// Imaginary part when the vector is genuinely complex.
    pub vector_imag: Option<Vec<f64>>,
    pub residual: f64,
    pub tol: f64,
    /// `Re λ₂ − Re λ₁`; `None` for a one-dimensional problem.
    pub gap: Option<f64>,
    pub multiplicity_flag: bool,
    pub mass: MassKind,
    pub method: EigenMethod,
    pub shift: f64,
    pub iterations: usize,
}

impl EigenReport {
    pub fn complex_vector(&self) -> Vec<Complex64> {
        match &self.vector_imag {
            Some(im) => self.vector.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect(),
            None => self.vector.iter().map(|&r| Complex64::new(r, 0.0)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    /// Sorted by real part.
    pub eigenvalues: Vec<Complex64>,
    pub residuals: Vec<f64>,
    /// Dof vectors with the same normalization as [`EigenReport::vector`].
    pub vectors: Vec<Vec<Complex64>>,
    pub gap: f64,
    pub mass: MassKind,
    pub method: EigenMethod,
    pub shift: f64,
    pub iterations: usize,
    pub tol: f64,
}

impl SpectrumReport {
    /// The `i`-th pair packaged as an [`EigenReport`].
    pub fn report(&self, i: usize) -> EigenReport {
        let v = &self.vectors[i];
        let imag: Vec<f64> = v.iter().map(|z| z.im).collect();
        let is_real = imag.iter().all(|&x| x == 0.0);
        EigenReport {
            lambda1: self.eigenvalues[i],
            vector: v.iter().map(|z| z.re).collect(),
            vector_imag: (!is_real).then_some(imag),
            residual: self.residuals[i],
            tol: self.tol,
            gap: self.eigenvalues.get(i + 1).map(|l| l.re - self.eigenvalues[i].re),
            multiplicity_flag: false,
            mass: self.mass,
            method: self.method,
            shift: self.shift,
            iterations: self.iterations,
        }
    }
}

/// Principal eigenpair with default options at tolerance `tol`.
pub fn principal_eig(op: &DiscreteOperator, tol: f64) -> Result<EigenReport> {
    principal_eig_with(op, &EigenOptions::with_tol(tol))
}

pub fn principal_eig_with(op: &DiscreteOperator, opts: &EigenOptions) -> Result<EigenReport> {
    check_options(opts)?;
    let n = op.n_dof();
    if n == 0 {
        return Err(Error::invalid("operator has no free degrees of freedom"));
    }
    let k = n.min(2);
    let spec = smallest(op, k, opts)?;
    let mut rep = spec.report(0);
    if let Some(gap) = rep.gap {
        let scale = spec.eigenvalues[1].norm().max(1.0);
        rep.multiplicity_flag = gap <= 100.0 * opts.tol * scale;
    }
    Ok(rep)
}

/// The `k` eigenvalues of smallest real part with their vectors.
pub fn spectral_gap(op: &DiscreteOperator, k: usize) -> Result<SpectrumReport> {
    spectral_gap_with(op, k, &EigenOptions::default())
}

pub fn spectral_gap_with(op: &DiscreteOperator, k: usize, opts: &EigenOptions) -> Result<SpectrumReport> {
    check_options(opts)?;
    if k < 2 || k > op.n_dof() {
        return Err(Error::invalid(format!(
            "spectral_gap needs 2 <= k <= n_dof = {}, got k = {k}",
            op.n_dof()
        )));
    }
    smallest(op, k, opts)
}

fn check_options(opts: &EigenOptions) -> Result<()> {
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(Error::invalid("eigen tolerance must be positive"));
    }
    if opts.max_iter == 0 {
        return Err(Error::invalid("max_iter must be positive"));
    }
    Ok(())
}

fn smallest(op: &DiscreteOperator, k: usize, opts: &EigenOptions) -> Result<SpectrumReport> {
    let mass = op.mass_of(opts.mass);
    let mut spec = if op.is_hermitian() {
        let a = op.real_stiffness().expect("hermitian operators are real");
        hermitian_smallest(a, &mass, &op.mass_lumped, k, opts)?
    } else if op.n_dof() <= opts.dense_cutoff {
        dense_smallest(&op.stiffness, &mass, k, opts)?
    } else if opts.arnoldi {
        arnoldi_smallest(&op.stiffness, &mass, &op.mass_lumped, k, opts)?
    } else {
        return Err(Error::DimensionCap {
            size: op.n_dof(),
            cap: opts.dense_cutoff,
        });
    };
    for v in &mut spec.vectors {
        normalize_complex(v, &op.mass_lumped);
    }
    Ok(spec)
}

/// Lower bound `g` on the spectrum of `M_L⁻¹ A` from Gershgorin row discs
/// (real parts for complex matrices).
pub fn gershgorin_lower_bound<T: crate::linalg::Scalar>(a: &CsrMatrix<T>, lumped: &[f64]) -> f64 {
    (0..a.nrows())
        .map(|i| {
            let (cols, vals) = a.row(i);
            let mut diag = 0.0;
            let mut off = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                if j == i {
                    diag = v.re();
                } else {
                    off += v.modulus();
                }
            }
            (diag - off) / lumped[i]
        })
        .fold(f64::INFINITY, f64::min)
}

/// Shift strictly below the spectrum of the pencil. With `M_L/4 ≤ M ≤ M_L`
/// for P1 mass matrices the lumped bound transfers to the consistent pencil.
fn initial_shift<T: crate::linalg::Scalar>(a: &CsrMatrix<T>, lumped: &[f64], mass: MassKind) -> f64 {
    let g = gershgorin_lower_bound(a, lumped);
    let g = match mass {
        MassKind::Lumped => g,
        MassKind::Consistent if g >= 0.0 => g,
        MassKind::Consistent => 4.0 * g,
    };
    g - 1.0
}

fn factor_shifted<T: crate::linalg::Scalar>(
    a: &CsrMatrix<T>,
    mass: &CsrMatrix<T>,
    mut sigma: f64,
    tol: f64,
) -> Result<(BandedLu<T>, f64)> {
    for _ in 0..8 {
        let b = a.linear_combination(T::one(), mass, T::from_real(-sigma));
        match BandedLu::factor(&b) {
            Ok(lu) => return Ok((lu, sigma)),
            Err(Error::Singular { .. }) => sigma -= 10.0 * tol * sigma.abs().max(1.0),
            Err(e) => return Err(e),
        }
    }
    Err(Error::Shift(format!("shifted matrix stays singular down to sigma = {sigma}")))
}

fn relative_residual<T: crate::linalg::Scalar>(a: &CsrMatrix<T>, m: &CsrMatrix<T>, lambda: T, x: &[T]) -> f64 {
    let ax = a.mul_vec(x);
    let mx = m.mul_vec(x);
    let r: Vec<T> = ax.iter().zip(&mx).map(|(&p, &q)| p - lambda * q).collect();
    norm2(&r) / norm2(&mx)
}

fn start_block(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1e1f);
    (0..p)
        .map(|j| {
            if j == 0 {
                vec![1.0; n]
            } else {
                (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
            }
        })
        .collect()
}

/// M-orthonormalizes the block in place by two passes of modified
/// Gram-Schmidt; collapsed columns are replaced by fresh random vectors.
fn m_orthonormalize(block: &mut [Vec<f64>], m: &CsrMatrix<f64>, rng: &mut ChaCha8Rng) {
    let n = m.nrows();
    let mut mq: Vec<Vec<f64>> = Vec::with_capacity(block.len());
    for j in 0..block.len() {
        for attempt in 0..4 {
            let before = norm2(&block[j]);
            for _ in 0..2 {
                for (i, mqi) in mq.iter().enumerate().take(j) {
                    let c = dot(mqi, &block[j]);
                    let (qi, qj) = split_pair(block, i, j);
                    for (x, y) in qj.iter_mut().zip(qi.iter()) {
                        *x -= c * y;
                    }
                }
            }
            let mv = m.mul_vec(&block[j]);
            let nrm = dot(&block[j], &mv).max(0.0).sqrt();
            if nrm > 1e-10 * before.max(f64::MIN_POSITIVE) && nrm > 0.0 || attempt == 3 {
                let s = 1.0 / nrm.max(f64::MIN_POSITIVE);
                block[j].iter_mut().for_each(|x| *x *= s);
                mq.push(mv.iter().map(|x| x * s).collect());
                break;
            }
            block[j] = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        }
    }
}

fn split_pair<T>(v: &mut [T], i: usize, j: usize) -> (&T, &mut T) {
    debug_assert!(i < j);
    let (lo, hi) = v.split_at_mut(j);
    (&lo[i], &mut hi[0])
}

fn hermitian_smallest(
    a: &CsrMatrix<f64>,
    m: &CsrMatrix<f64>,
    lumped: &[f64],
    k: usize,
    opts: &EigenOptions,
) -> Result<SpectrumReport> {
    let n = a.nrows();
    let p = n.min(k + 4);
    let (lu, sigma) = factor_shifted(a, m, initial_shift(a, lumped, opts.mass), opts.tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x0b10c);
    let mut x = start_block(n, p, opts.seed);
    let mut last = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let mut y = x
            .iter()
            .map(|col| lu.solve(&m.mul_vec(col)))
            .collect::<Result<Vec<_>>>()?;
        m_orthonormalize(&mut y, m, &mut rng);
        let ay: Vec<Vec<f64>> = y.iter().map(|c| a.mul_vec(c)).collect();
        let h = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&y[i], &ay[j]) + dot(&y[j], &ay[i])));
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        x = order
            .iter()
            .map(|&c| {
                let mut v = vec![0.0; n];
                for (i, yi) in y.iter().enumerate() {
                    let w = eig.eigenvectors[(i, c)];
                    v.iter_mut().zip(yi).for_each(|(a, b)| *a += w * b);
                }
                v
            })
            .collect();
        let values: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();
        let residuals: Vec<f64> = (0..k).map(|i| relative_residual(a, m, values[i], &x[i])).collect();
        last = residuals.iter().fold(0.0, |acc: f64, &r| acc.max(r));
        if last <= opts.tol || p == n {
            let eigenvalues: Vec<Complex64> = values[..k].iter().map(|&v| Complex64::new(v, 0.0)).collect();
            return Ok(SpectrumReport {
                gap: eigenvalues[1].re - eigenvalues[0].re,
                eigenvalues,
                residuals,
                vectors: x[..k].iter().map(|v| v.iter().map(|&r| Complex64::new(r, 0.0)).collect()).collect(),
                mass: opts.mass,
                method: EigenMethod::SubspaceInverseIteration,
                shift: sigma,
                iterations: it,
                tol: opts.tol,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: last,
    })
}

/// Refines an approximate eigenpair by inverse iteration at a fixed shift.
fn polish(
    a: &CsrMatrix<Complex64>,
    m: &CsrMatrix<Complex64>,
    lambda: Complex64,
    start: Option<Vec<Complex64>>,
    opts: &EigenOptions,
) -> Result<(Complex64, Vec<Complex64>, f64)> {
    let n = a.nrows();
    let mut shift = lambda;
    let lu = loop {
        let b = a.linear_combination(Complex64::new(1.0, 0.0), m, -shift);
        match BandedLu::factor(&b) {
            Ok(lu) => break lu,
            Err(Error::Singular { .. }) if (shift - lambda).norm() < 1e-6 * lambda.norm().max(1.0) => {
                shift += Complex64::new(1e-10 * lambda.norm().max(1.0), 0.0);
            }
            Err(e) => return Err(e),
        }
    };
    let mut x = start.unwrap_or_else(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9011);
        (0..n).map(|_| Complex64::new(1.0 + rng.gen_range(0.0..0.1), 0.0)).collect()
    });
    let mut best = (lambda, x.clone(), f64::INFINITY);
    for _ in 0..opts.max_iter.min(50) {
        let y = lu.solve(&m.mul_vec(&x))?;
        let denom = dot(&x, &y);
        let nx = dot(&x, &x);
        let est = if denom.norm() > 0.0 { shift + nx / denom } else { lambda };
        let ny = norm2(&y);
        x = y.iter().map(|v| v / ny).collect();
        for cand in [lambda, est] {
            let r = relative_residual(a, m, cand, &x);
            if r < best.2 {
                best = (cand, x.clone(), r);
            }
        }
        if best.2 <= opts.tol {
            break;
        }
    }
    Ok(best)
}

fn dense_smallest(
    a: &CsrMatrix<Complex64>,
    m: &CsrMatrix<f64>,
    k: usize,
    opts: &EigenOptions,
) -> Result<SpectrumReport> {
    let mut values = dense_spectrum(a, m)?;
    let all = values.clone();
    values.truncate(k);
    let mc = m.to_complex();
    let mut residuals = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for v in values.iter_mut() {
        let (lambda, x, r) = polish(a, &mc, *v, None, opts)?;
        if r > opts.tol {
            return Err(Error::NoConvergence {
                iterations: opts.max_iter.min(50),
                residual: r,
            });
        }
        *v = lambda;
        residuals.push(r);
        vectors.push(x);
    }
    let gap = all.get(1).map_or(f64::INFINITY, |l| l.re - all[0].re);
    Ok(SpectrumReport {
        eigenvalues: values,
        residuals,
        vectors,
        gap,
        mass: opts.mass,
        method: EigenMethod::DenseSchur,
        shift: f64::NAN,
        iterations: 1,
        tol: opts.tol,
    })
}

/// Full spectrum of the pencil, sorted by real part.
pub fn dense_spectrum(a: &CsrMatrix<Complex64>, m: &CsrMatrix<f64>) -> Result<Vec<Complex64>> {
    let c = generalized_to_standard(&a.to_dense(), &m.to_dense())?;
    let mut values = complex_eigenvalues(c);
    sort_by_real_part(&mut values);
    Ok(values)
}

/// Eigenvector of a small dense matrix for an eigenvalue estimate `theta`.
fn small_eigenvector(h: &DMatrix<Complex64>, theta: Complex64) -> DVector<Complex64> {
    let p = h.nrows();
    let eps = 1e-12 * theta.norm().max(1e-300);
    let shifted = h - DMatrix::<Complex64>::identity(p, p) * (theta + Complex64::new(eps, 0.0));
    let lu = shifted.lu();
    let mut y = DVector::from_element(p, Complex64::new(1.0, 0.0));
    for _ in 0..3 {
        if let Some(z) = lu.solve(&y) {
            let nz = z.norm();
            if nz > 0.0 && nz.is_finite() {
                y = z / Complex64::new(nz, 0.0);
            }
        }
    }
    y
}

fn arnoldi_smallest(
    a: &CsrMatrix<Complex64>,
    m: &CsrMatrix<f64>,
    lumped: &[f64],
    k: usize,
    opts: &EigenOptions,
) -> Result<SpectrumReport> {
    let n = a.nrows();
    let mc = m.to_complex();
    let (lu, sigma) = factor_shifted(a, &mc, initial_shift(a, lumped, opts.mass), opts.tol)?;
    let dim = n.min((2 * k + 20).max(40));
    let mut v0: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); n];
    let mut ritz: Vec<(Complex64, Vec<Complex64>)> = Vec::new();
    let mut restarts = 0;
    let coarse = opts.tol.sqrt().max(1e-6);
    for r in 0..opts.max_iter.min(200) {
        restarts = r + 1;
        let nv = norm2(&v0);
        let mut basis: Vec<Vec<Complex64>> = vec![v0.iter().map(|x| x / nv).collect()];
        let mut h = DMatrix::<Complex64>::zeros(dim + 1, dim);
        let mut size = dim;
        for j in 0..dim {
            let mut w = lu.solve(&mc.mul_vec(&basis[j]))?;
            for _ in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let c = dot(q, &w);
                    h[(i, j)] += c;
                    w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
                }
            }
            let nw = norm2(&w);
            h[(j + 1, j)] = Complex64::new(nw, 0.0);
            if nw <= 1e-13 * h.column(j).norm() {
                size = j + 1;
                break;
            }
            if j + 1 < dim {
                basis.push(w.iter().map(|x| x / nw).collect());
            }
        }
        let hs = h.view((0, 0), (size, size)).into_owned();
        let mut thetas = complex_eigenvalues(hs.clone());
        thetas.sort_by(|x, y| y.norm().total_cmp(&x.norm()));
        thetas.truncate(k.min(size));
        ritz = thetas
            .iter()
            .map(|&t| {
                let y = small_eigenvector(&hs, t);
                let mut x = vec![C0; n];
                for (i, q) in basis.iter().enumerate().take(size) {
                    x.iter_mut().zip(q).for_each(|(a, b)| *a += y[i] * b);
                }
                (Complex64::new(sigma, 0.0) + 1.0 / t, x)
            })
            .collect();
        let worst = ritz
            .iter()
            .map(|(l, x)| relative_residual(a, &mc, *l, x))
            .fold(0.0, f64::max);
        if worst <= coarse * ritz.iter().map(|(l, _)| l.norm()).fold(1.0, f64::max) || size < dim {
            break;
        }
        v0 = vec![C0; n];
        for (_, x) in &ritz {
            v0.iter_mut().zip(x).for_each(|(a, b)| *a += b);
        }
    }
    if ritz.len() < k {
        return Err(Error::NoConvergence {
            iterations: restarts,
            residual: f64::INFINITY,
        });
    }
    let mut pairs = Vec::with_capacity(k);
    for (l, x) in ritz {
        let (lambda, x, res) = polish(a, &mc, l, Some(x), opts)?;
        if res > opts.tol {
            return Err(Error::NoConvergence {
                iterations: restarts,
                residual: res,
            });
        }
        pairs.push((lambda, x, res));
    }
    pairs.sort_by(|p, q| p.0.re.total_cmp(&q.0.re).then(p.0.im.total_cmp(&q.0.im)));
    Ok(SpectrumReport {
        gap: pairs[1].0.re - pairs[0].0.re,
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        residuals: pairs.iter().map(|p| p.2).collect(),
        vectors: pairs.into_iter().map(|p| p.1).collect(),
        mass: opts.mass,
        method: EigenMethod::ShiftInvertArnoldi,
        shift: sigma,
        iterations: restarts,
        tol: opts.tol,
    })
}

/// Unit lumped-L2 norm, global phase making the lumped mean real and
/// nonnegative, ties broken by the first nonzero entry. Imaginary dust below
/// `1e-10‖u‖∞` is dropped.
fn normalize_complex(u: &mut [Complex64], lumped: &[f64]) {
    let nrm = u
        .iter()
        .zip(lumped)
        .map(|(z, m)| m * z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if nrm == 0.0 || !nrm.is_finite() {
        return;
    }
    let inf = u.iter().fold(0.0f64, |acc, z| acc.max(z.norm())) / nrm;
    let mean: Complex64 = u.iter().zip(lumped).map(|(z, m)| z * *m).sum::<Complex64>() / nrm;
    let abs_mean: f64 = u.iter().zip(lumped).map(|(z, m)| z.norm() * m).sum::<f64>() / nrm;
    let anchor = if mean.norm() > 1e-12 * abs_mean {
        mean
    } else {
        u.iter()
            .copied()
            .find(|z| z.norm() / nrm > 1e-12 * inf)
            .unwrap_or(Complex64::new(1.0, 0.0))
    };
    let phase = anchor.conj() / anchor.norm() / nrm;
    u.iter_mut().for_each(|z| *z *= phase);
    let inf = u.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if u.iter().all(|z| z.im.abs() <= 1e-10 * inf) {
        u.iter_mut().for_each(|z| z.im = 0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Region {
    /// Ω
    Interior,
    /// Ω̄
    Closure,
    /// Ω ∪ N
    OmegaUnionN,
}

pub fn region_for_mode(mode: BoundaryMode) -> Region {
    match mode {
        BoundaryMode::Dirichlet => Region::Interior,
        BoundaryMode::Mixed => Region::OmegaUnionN,
        BoundaryMode::Robin | BoundaryMode::ComplexRobin | BoundaryMode::Neumann => Region::Closure,
    }
}

/// Relative threshold above which a nodal value counts as strictly positive.
pub const POSITIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityCertificate {
    pub region: Region,
    pub min_value: f64,
    /// Vertex index attaining the minimum over the region.
    pub witness_node: usize,
    /// Certified lower bound; zero unless the certificate passes.
    pub delta_claim: f64,
    pub tolerance: f64,
    pub nodes_checked: usize,
    /// Every constrained vertex carries exactly zero.
    pub constrained_exact_zero: bool,
    pub pass: bool,
}

/// Nodal scan of a real eigenvector over the region selected by the mode.
pub fn certify_positivity(report: &EigenReport, op: &DiscreteOperator) -> Result<PositivityCertificate> {
    if report.vector_imag.is_some() {
        return Err(Error::invalid("positivity certificates need a real eigenvector"));
    }
    if report.vector.len() != op.n_dof() {
        return Err(Error::Dimension {
            expected: op.n_dof(),
            actual: report.vector.len(),
        });
    }
    if !(report.residual <= report.tol) {
        return Err(Error::invalid(format!(
            "eigen residual {:e} exceeds tolerance {:e}",
            report.residual, report.tol
        )));
    }
    certify_nodal(&op.expand(&report.vector), op)
}

/// Nodal positivity scan of a field on all vertices.
pub fn certify_nodal(values: &[f64], op: &DiscreteOperator) -> Result<PositivityCertificate> {
    if values.len() != op.dofs.n_vertices() {
        return Err(Error::Dimension {
            expected: op.dofs.n_vertices(),
            actual: values.len(),
        });
    }
    let region = region_for_mode(op.mode);
    let inf = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tolerance = POSITIVITY_TOL * inf;
    let (witness_node, min_value) = op
        .dofs
        .vertex_of
        .iter()
        .map(|&v| (v, values[v]))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::invalid("region is empty"))?;
    let constrained_exact_zero = (0..values.len()).all(|v| !op.dofs.is_constrained(v) || values[v] == 0.0);
    let pass = inf > 0.0 && min_value >= tolerance && constrained_exact_zero;
    Ok(PositivityCertificate {
        region,
        min_value,
        witness_node,
        delta_claim: if pass { min_value } else { 0.0 },
        tolerance,
        nodes_checked: op.n_dof(),
        constrained_exact_zero,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexRobinBound {
    /// `min Re σ(A_h(β))`.
    pub re_min_complex: f64,
    /// `min σ(A_h(Re β))`.
    pub min_real_part_problem: f64,
    pub strict: bool,
    pub margin: f64,
    pub tolerance: f64,
    pub n_dof: usize,
    pub method: EigenMethod,
}

/// Compares the complex Robin spectrum with the spectrum of the problem
/// with `Re β`. Both spectra come from the same solver so that the margin
/// vanishes exactly when `Im β ≡ 0`.
pub fn complex_robin_bound(
    mesh: &TriMesh,
    coeffs: &CoefficientSet,
    asm: &AssemblyOptions,
    opts: &EigenOptions,
) -> Result<ComplexRobinBound> {
    let complex = assemble_with(mesh, coeffs, BoundaryMode::ComplexRobin, asm)?;
    let real = assemble_with(mesh, &coeffs.real_beta(), BoundaryMode::ComplexRobin, asm)?;
    let n = complex.n_dof();
    let (re_min_complex, min_real_part_problem, method) = if n <= opts.dense_cutoff {
        let mass = complex.mass_of(opts.mass);
        let c = dense_spectrum(&complex.stiffness, &mass)?;
        let r = dense_spectrum(&real.stiffness, &mass)?;
        (c[0].re, r[0].re, EigenMethod::DenseSchur)
    } else if opts.arnoldi {
        let c = principal_eig_with(&complex, opts)?;
        let r = principal_eig_with(&real, opts)?;
        (c.lambda1.re, r.lambda1.re, EigenMethod::ShiftInvertArnoldi)
    } else {
        return Err(Error::DimensionCap {
            size: n,
            cap: opts.dense_cutoff,
        });
    };
    let margin = re_min_complex - min_real_part_problem;
    let tolerance = 1e-9 * min_real_part_problem.abs().max(1.0);
    Ok(ComplexRobinBound {
        re_min_complex,
        min_real_part_problem,
        strict: margin > tolerance,
        margin,
        tolerance,
        n_dof: n,
        method,
    })
}

/// Smallest positive root of `μ tan(μ/2) = β` by bisection on `(0, π)`.
pub fn robin_square_root_1d(beta: f64) -> f64 {
    let f = |m: f64| m * (m / 2.0).tan() - beta;
    let (mut lo, mut hi) = (1e-12, std::f64::consts::PI - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
