use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// All eigenvalues of a dense complex matrix from its Schur form.
pub fn complex_eigenvalues(a: DMatrix<Complex64>) -> Vec<Complex64> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![a[(0, 0)]];
    }
    let schur = nalgebra::linalg::Schur::new(a);
    if let Some(ev) = schur.eigenvalues() {
        return ev.iter().copied().collect();
    }
    // complex Schur forms are triangular; the diagonal carries the spectrum
    let (_, t) = schur.unpack();
    (0..n).map(|i| t[(i, i)]).collect()
}

/// Reduces the pencil `(A, M)` with `M` symmetric positive definite to the
/// standard matrix `L^{-1} A L^{-T}` where `M = L L^T`.
pub fn generalized_to_standard(a: &DMatrix<Complex64>, m: &DMatrix<f64>) -> Result<DMatrix<Complex64>> {
    let n = a.nrows();
    let chol = nalgebra::linalg::Cholesky::new(m.clone())
        .ok_or_else(|| Error::invalid("mass matrix is not positive definite"))?;
    let l = chol.l().map(|v| Complex64::new(v, 0.0));
    let y = l
        .solve_lower_triangular(a)
        .ok_or(Error::Singular { row: 0 })?;
    let c_t = l
        .solve_lower_triangular(&y.transpose())
        .ok_or(Error::Singular { row: 0 })?;
    debug_assert_eq!(c_t.nrows(), n);
    Ok(c_t.transpose())
}

/// Sorts by real part, then imaginary part.
pub fn sort_by_real_part(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}
