//! C ABI over the poslab core.
//!
//! Every entry point returns a [`PoslabStatus`]; on failure
//! [`poslab_last_error`] describes the error for the calling thread. Handles
//! are opaque and owned by the caller, who releases them with the matching
//! `*_free` function. Strings returned through out-parameters are released
//! with [`poslab_string_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use poslab::assembly::{assemble_with, AssemblyOptions, CoefficientFile, DiscreteOperator};
use poslab::lattice::{is_irreducible, MetznerGenerator};
use poslab::mesh::{generate_structured, load_mesh, save_mesh, Shape, TagRule, TriMesh};
use poslab::spectral::{certify_positivity, complex_robin_bound, principal_eig_with, EigenOptions};
use poslab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoslabStatus {
    PoslabOk = 0,
    PoslabNullPointer = 1,
    PoslabInvalidUtf8 = 2,
    PoslabInvalidArgument = 3,
    PoslabParseError = 4,
    PoslabModeMismatch = 5,
    PoslabNumericalFailure = 6,
    PoslabIoError = 7,
    PoslabPanic = 8,
}

/// Opaque triangulation.
pub struct PoslabMesh {
    mesh: Arc<TriMesh>,
}

/// Opaque assembled operator.
pub struct PoslabOperator {
    op: DiscreteOperator,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PoslabEigenSummary {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub residual: f64,
    /// `Re λ₂ − Re λ₁`, NaN when there is a single dof.
    pub gap: f64,
    pub multiplicity_flag: bool,
    /// Whether the vector is real and a positivity certificate was issued.
    pub certified: bool,
    pub positivity_pass: bool,
    pub delta_claim: f64,
    pub min_value: f64,
    pub witness_node: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PoslabComplexRobinBound {
    pub re_min_complex: f64,
    pub min_real_part_problem: f64,
    pub margin: f64,
    pub strict: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(PoslabStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse { .. } | Error::Json(_) => PoslabStatus::PoslabParseError,
            Error::ModeMismatch(_) => PoslabStatus::PoslabModeMismatch,
            Error::Singular { .. }
            | Error::StepSolve { .. }
            | Error::NoConvergence { .. }
            | Error::Shift(_)
            | Error::DimensionCap { .. } => PoslabStatus::PoslabNumericalFailure,
            Error::Io(_) => PoslabStatus::PoslabIoError,
            _ => PoslabStatus::PoslabInvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PoslabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PoslabStatus::PoslabOk
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PoslabStatus::PoslabPanic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PoslabStatus::PoslabNullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(PoslabStatus::PoslabInvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn poslab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Structured mesh of `shape` (`unit_square`, `l_shape`, `rectangle:W,H`)
/// with `n` cells per unit length and a boundary tag rule such as `all=N`.
///
/// # Safety
/// `shape` and `tags` are NUL-terminated strings; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn poslab_mesh_generate(
    shape: *const c_char,
    n: usize,
    tags: *const c_char,
    out: *mut *mut PoslabMesh,
) -> PoslabStatus {
    guard(|| {
        let shape: Shape = text(shape, "shape")?.parse()?;
        let tags: TagRule = text(tags, "tags")?.parse()?;
        let mesh = generate_structured(shape, n, &tags)?;
        put(out, Box::into_raw(Box::new(PoslabMesh { mesh: Arc::new(mesh) })), "out")
    })
}

/// Parses a mesh in the text format.
///
/// # Safety
/// `source` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn poslab_mesh_load(source: *const c_char, out: *mut *mut PoslabMesh) -> PoslabStatus {
    guard(|| {
        let mesh = load_mesh(text(source, "source")?)?;
        put(out, Box::into_raw(Box::new(PoslabMesh { mesh: Arc::new(mesh) })), "out")
    })
}

/// Serializes a mesh; release the string with [`poslab_string_free`].
///
/// # Safety
/// `mesh` comes from this library; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn poslab_mesh_save(mesh: *const PoslabMesh, out: *mut *mut c_char) -> PoslabStatus {
    guard(|| {
        let m = handle(mesh, "mesh")?;
        let s = CString::new(save_mesh(&m.mesh)).map_err(|e| Failure(PoslabStatus::PoslabInvalidArgument, e.to_string()))?;
        put(out, s.into_raw(), "out")
    })
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `mesh` is null or comes from this library.
#[no_mangle]
pub unsafe extern "C" fn poslab_mesh_n_vertices(mesh: *const PoslabMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.n_vertices())
}

/// # Safety
/// `mesh` is null or comes from this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn poslab_mesh_free(mesh: *mut PoslabMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Assembles the operator described by a coefficient JSON document with
/// default assembly options.
///
/// # Safety
/// `mesh` comes from this library; `coefficients` is a NUL-terminated
/// string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn poslab_operator_assemble(
    mesh: *const PoslabMesh,
    coefficients: *const c_char,
    out: *mut *mut PoslabOperator,
) -> PoslabStatus {
    guard(|| {
        let m = handle(mesh, "mesh")?;
        let file = CoefficientFile::parse(text(coefficients, "coefficients")?)?;
        let coeffs = file.to_coefficients(&m.mesh)?;
        let op = assemble_with(&m.mesh, &coeffs, file.mode, &AssemblyOptions::default())?;
        put(out, Box::into_raw(Box::new(PoslabOperator { op })), "out")
    })
}

/// Number of free dofs, or 0 for a null handle.
///
/// # Safety
/// `op` is null or comes from this library.
#[no_mangle]
pub unsafe extern "C" fn poslab_operator_n_dof(op: *const PoslabOperator) -> usize {
    op.as_ref().map_or(0, |o| o.op.n_dof())
}

/// # Safety
/// `op` is null or comes from this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn poslab_operator_free(op: *mut PoslabOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// Principal eigenpair at residual tolerance `tol` with its positivity
/// certificate. When `vertex_values` is non-null it receives the real part
/// of the eigenvector on all `len` vertices.
///
/// # Safety
/// `op` comes from this library; `summary` is writable; `vertex_values` is
/// null or points to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn poslab_principal_eig(
    op: *const PoslabOperator,
    tol: f64,
    summary: *mut PoslabEigenSummary,
    vertex_values: *mut f64,
    len: usize,
) -> PoslabStatus {
    guard(|| {
        let o = &handle(op, "op")?.op;
        if summary.is_null() {
            return Err(null("summary"));
        }
        let nv = o.dofs.n_vertices();
        if !vertex_values.is_null() && len != nv {
            return Err(Failure(
                PoslabStatus::PoslabInvalidArgument,
                format!("vertex buffer holds {len} values, mesh has {nv} vertices"),
            ));
        }
        let rep = principal_eig_with(o, &EigenOptions::with_tol(tol))?;
        let mut s = PoslabEigenSummary {
            lambda_re: rep.lambda1.re,
            lambda_im: rep.lambda1.im,
            residual: rep.residual,
            gap: rep.gap.unwrap_or(f64::NAN),
            multiplicity_flag: rep.multiplicity_flag,
            ..Default::default()
        };
        if rep.vector_imag.is_none() {
            let c = certify_positivity(&rep, o)?;
            s.certified = true;
            s.positivity_pass = c.pass;
            s.delta_claim = c.delta_claim;
            s.min_value = c.min_value;
            s.witness_node = c.witness_node;
        }
        if !vertex_values.is_null() {
            let values = o.expand(&rep.vector);
            std::slice::from_raw_parts_mut(vertex_values, len).copy_from_slice(&values);
        }
        summary.write(s);
        Ok(())
    })
}

/// Compares `min Re σ` under the complex Robin coefficient with the bottom
/// of the spectrum under its real part.
///
/// # Safety
/// `mesh` comes from this library; `coefficients` is a NUL-terminated
/// string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn poslab_complex_robin_bound(
    mesh: *const PoslabMesh,
    coefficients: *const c_char,
    out: *mut PoslabComplexRobinBound,
) -> PoslabStatus {
    guard(|| {
        let m = handle(mesh, "mesh")?;
        let coeffs = CoefficientFile::parse(text(coefficients, "coefficients")?)?.to_coefficients(&m.mesh)?;
        let b = complex_robin_bound(&m.mesh, &coeffs, &AssemblyOptions::default(), &EigenOptions::default())?;
        put(
            out,
            PoslabComplexRobinBound {
                re_min_complex: b.re_min_complex,
                min_real_part_problem: b.min_real_part_problem,
                margin: b.margin,
                strict: b.strict,
            },
            "out",
        )
    })
}

/// Irreducibility of the `n × n` Metzner generator stored row-major in `q`.
///
/// # Safety
/// `q` points to `n * n` readable doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn poslab_oracle_is_irreducible(q: *const f64, n: usize, out: *mut bool) -> PoslabStatus {
    guard(|| {
        if q.is_null() {
            return Err(null("q"));
        }
        let len = n.checked_mul(n).ok_or_else(|| Failure(PoslabStatus::PoslabInvalidArgument, "n overflows".into()))?;
        let data = std::slice::from_raw_parts(q, len);
        let rows: Vec<Vec<f64>> = data.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        let g = MetznerGenerator::from_rows(&rows)?;
        put(out, is_irreducible(&g), "out")
    })
}

/// # Safety
/// `s` is null or a string returned by this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn poslab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
