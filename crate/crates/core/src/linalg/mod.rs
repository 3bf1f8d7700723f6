//! Sparse storage, banded direct solvers and dense eigenvalue helpers.

mod banded;
mod dense;
mod sparse;

pub use banded::{bandwidth, reverse_cuthill_mckee, BandedLu};
pub use dense::{complex_eigenvalues, generalized_to_standard, sort_by_real_part};
pub use sparse::{CsrMatrix, Scalar};

/// Euclidean norm.
pub fn norm2<T: Scalar>(x: &[T]) -> f64 {
    x.iter().map(|v| v.modulus() * v.modulus()).sum::<f64>().sqrt()
}

pub fn norm_inf<T: Scalar>(x: &[T]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.modulus()))
}

/// `sum conj(x_i) y_i`.
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    x.iter()
        .zip(y)
        .fold(T::zero(), |acc, (&a, &b)| acc + a.conj() * b)
}
