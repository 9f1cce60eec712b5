#ifndef PS3_H
#define PS3_H

/* Generated from the ps3-ffi sources by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum Ps3Status {
  PS3_STATUS_OK = 0,
  PS3_STATUS_NULL_POINTER = 1,
  PS3_STATUS_INVALID_STRING = 2,
  PS3_STATUS_NONCONFORMING = 3,
  PS3_STATUS_GEOMETRIC = 4,
  PS3_STATUS_DOMAIN = 5,
  PS3_STATUS_VALIDATION = 6,
  PS3_STATUS_CONFIGURATION = 7,
  PS3_STATUS_CAPABILITY = 8,
  PS3_STATUS_NUMERICAL = 9,
  PS3_STATUS_IO = 10,
  PS3_STATUS_BUFFER_TOO_SMALL = 11,
  PS3_STATUS_PANIC = 12,
} Ps3Status;

typedef enum Ps3Element {
  PS3_ELEMENT_PS = 0,
  PS3_ELEMENT_LAGRANGE = 1,
} Ps3Element;

typedef enum Ps3Refinement {
  PS3_REFINEMENT_GLOBAL = 0,
  PS3_REFINEMENT_LOCAL = 1,
} Ps3Refinement;

/**
 * Opaque Powell–Sabin basis handle.
 */
typedef struct Ps3Basis Ps3Basis;

/**
 * Opaque triangulation handle.
 */
typedef struct Ps3Mesh Ps3Mesh;

/**
 * Outcome of one solve.
 */
typedef struct Ps3SolveResult {
  size_t ndof;
  double h;
  double l2;
  double linf;
} Ps3SolveResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. Valid until the next call.
 */
const char *ps3_last_error(void);

/**
 * Library version as a static string.
 */
const char *ps3_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer returned by a ps3 function and not yet freed.
 */
void ps3_string_free(char *s);

/**
 * Parses mesh JSON `{"vertices": [[x, y]], "triangles": [[i, j, k]]}`.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` valid for a pointer write.
 */
enum Ps3Status ps3_mesh_from_json(const char *json, struct Ps3Mesh **out);

/**
 * Named base mesh: "square", "pentagon", "annulus" or "cylinder".
 *
 * # Safety
 * `name` must be a nul-terminated string and `out` valid for a pointer write.
 */
enum Ps3Status ps3_mesh_builder(const char *name, struct Ps3Mesh **out);

/**
 * New mesh after one dyadic refinement.
 *
 * # Safety
 * `mesh` must be a live handle and `out` valid for a pointer write.
 */
enum Ps3Status ps3_mesh_refine(const struct Ps3Mesh *mesh, struct Ps3Mesh **out);

/**
 * Vertex, edge and triangle counts.
 *
 * # Safety
 * `mesh` must be a live handle; each output must be valid for a write.
 */
enum Ps3Status ps3_mesh_counts(const struct Ps3Mesh *mesh,
                               size_t *vertices,
                               size_t *edges,
                               size_t *triangles);

/**
 * Mesh as JSON; release with [`ps3_string_free`].
 *
 * # Safety
 * `mesh` must be a live handle and `out` valid for a pointer write.
 */
enum Ps3Status ps3_mesh_to_json(const struct Ps3Mesh *mesh, char **out);

/**
 * # Safety
 * `mesh` must be null or a handle from this library that was not yet freed.
 */
void ps3_mesh_free(struct Ps3Mesh *mesh);

/**
 * Powell–Sabin basis of the mesh; the basis keeps its own copy of the mesh.
 *
 * # Safety
 * `mesh` must be a live handle and `out` valid for a pointer write.
 */
enum Ps3Status ps3_basis_new(const struct Ps3Mesh *mesh, struct Ps3Basis **out);

/**
 * Number of basis functions, 3|V| + 2|E|.
 *
 * # Safety
 * `basis` must be null or a live handle.
 */
size_t ps3_basis_dim(const struct Ps3Basis *basis);

/**
 * Values of all basis functions at (x, y) written to `values[0..len]`; `len` must equal the
 * dimension. Functions inactive at the point get 0.
 *
 * # Safety
 * `basis` must be a live handle and `values` valid for `len` writes.
 */
enum Ps3Status ps3_basis_eval(const struct Ps3Basis *basis,
                              double x,
                              double y,
                              double *values,
                              size_t len);

/**
 * # Safety
 * `basis` must be null or a handle from this library that was not yet freed.
 */
void ps3_basis_free(struct Ps3Basis *basis);

/**
 * Solves registry problem `name` on refinement level `level` (0 is the base mesh).
 *
 * # Safety
 * `name` must be a nul-terminated string and `out` valid for a write.
 */
enum Ps3Status ps3_solve(const char *name,
                         enum Ps3Element el,
                         size_t level,
                         struct Ps3SolveResult *out);

/**
 * Convergence study as CSV text; release with [`ps3_string_free`].
 *
 * # Safety
 * `name` must be a nul-terminated string and `out` valid for a pointer write.
 */
enum Ps3Status ps3_study_csv(const char *name,
                             enum Ps3Element el,
                             enum Ps3Refinement refinement,
                             size_t levels,
                             char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PS3_H */
