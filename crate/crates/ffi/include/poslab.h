#ifndef POSLAB_H
#define POSLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>
#include <stddef.h>

typedef enum PoslabStatus {
  POSLAB_OK = 0,
  POSLAB_NULL_POINTER = 1,
  POSLAB_INVALID_UTF8 = 2,
  POSLAB_INVALID_ARGUMENT = 3,
  POSLAB_PARSE_ERROR = 4,
  POSLAB_MODE_MISMATCH = 5,
  POSLAB_NUMERICAL_FAILURE = 6,
  POSLAB_IO_ERROR = 7,
  POSLAB_PANIC = 8,
} PoslabStatus;

// Opaque triangulation.
typedef struct PoslabMesh PoslabMesh;

// Opaque assembled operator.
typedef struct PoslabOperator PoslabOperator;

typedef struct PoslabEigenSummary {
  double lambda_re;
  double lambda_im;
  double residual;
  // `Re λ₂ − Re λ₁`, NaN when there is a single dof.
  double gap;
  bool multiplicity_flag;
  // Whether the vector is real and a positivity certificate was issued.
  bool certified;
  bool positivity_pass;
  double delta_claim;
  double min_value;
  uintptr_t witness_node;
} PoslabEigenSummary;

typedef struct PoslabComplexRobinBound {
  double re_min_complex;
  double min_real_part_problem;
  double margin;
  bool strict;
} PoslabComplexRobinBound;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until
// the next call on the same thread.
const char *poslab_last_error(void);

// Structured mesh of `shape` (`unit_square`, `l_shape`, `rectangle:W,H`)
// with `n` cells per unit length and a boundary tag rule such as `all=N`.
//
// # Safety
// `shape` and `tags` are NUL-terminated strings; `out` is writable.
enum PoslabStatus poslab_mesh_generate(const char *shape,
                                       uintptr_t n,
                                       const char *tags,
                                       struct PoslabMesh **out);

// Parses a mesh in the text format.
//
// # Safety
// `source` is a NUL-terminated string; `out` is writable.
enum PoslabStatus poslab_mesh_load(const char *source, struct PoslabMesh **out);

// Serializes a mesh; release the string with [`poslab_string_free`].
//
// # Safety
// `mesh` comes from this library; `out` is writable.
enum PoslabStatus poslab_mesh_save(const struct PoslabMesh *mesh, char **out);

// Number of vertices, or 0 for a null handle.
//
// # Safety
// `mesh` is null or comes from this library.
uintptr_t poslab_mesh_n_vertices(const struct PoslabMesh *mesh);

// # Safety
// `mesh` is null or comes from this library and is not used afterwards.
void poslab_mesh_free(struct PoslabMesh *mesh);

// Assembles the operator described by a coefficient JSON document with
// default assembly options.
//
// # Safety
// `mesh` comes from this library; `coefficients` is a NUL-terminated
// string; `out` is writable.
enum PoslabStatus poslab_operator_assemble(const struct PoslabMesh *mesh,
                                           const char *coefficients,
                                           struct PoslabOperator **out);

// Number of free dofs, or 0 for a null handle.
//
// # Safety
// `op` is null or comes from this library.
uintptr_t poslab_operator_n_dof(const struct PoslabOperator *op);

// # Safety
// `op` is null or comes from this library and is not used afterwards.
void poslab_operator_free(struct PoslabOperator *op);

// Principal eigenpair at residual tolerance `tol` with its positivity
// certificate. When `vertex_values` is non-null it receives the real part
// of the eigenvector on all `len` vertices.
//
// # Safety
// `op` comes from this library; `summary` is writable; `vertex_values` is
// null or points to `len` writable doubles.
enum PoslabStatus poslab_principal_eig(const struct PoslabOperator *op,
                                       double tol,
                                       struct PoslabEigenSummary *summary,
                                       double *vertex_values,
                                       uintptr_t len);

// Compares `min Re σ` under the complex Robin coefficient with the bottom
// of the spectrum under its real part.
//
// # Safety
// `mesh` comes from this library; `coefficients` is a NUL-terminated
// string; `out` is writable.
enum PoslabStatus poslab_complex_robin_bound(const struct PoslabMesh *mesh,
                                             const char *coefficients,
                                             struct PoslabComplexRobinBound *out);

// Irreducibility of the `n × n` Metzner generator stored row-major in `q`.
//
// # Safety
// `q` points to `n * n` readable doubles; `out` is writable.
enum PoslabStatus poslab_oracle_is_irreducible(const double *q, uintptr_t n, bool *out);

// # Safety
// `s` is null or a string returned by this library, not used afterwards.
void poslab_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POSLAB_H */
