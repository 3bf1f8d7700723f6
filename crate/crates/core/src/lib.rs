//! Discrete positivity laboratory.
//!
//! Piecewise-linear finite elements for divergence-form elliptic operators on
//! triangulated polygons, with Dirichlet, Robin, complex Robin and mixed
//! boundary conditions, plus certificates for the positivity properties of
//! principal eigenfunctions, heat semigroups, heat kernels and parabolic
//! problems. The [`lattice`] module is an exact finite-dimensional oracle for
//! positive matrix semigroups that does not depend on any discretization.

pub mod assembly;
pub mod cli;
pub mod error;
pub mod expr;
pub mod lattice;
pub mod linalg;
pub mod mesh;
pub mod parabolic;
pub mod plot;
pub mod semigroup;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
