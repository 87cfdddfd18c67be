#ifndef STENCILFORGE_H
#define STENCILFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_POINTER = 1,
  SF_STATUS_INVALID_ARGUMENT = 2,
  SF_STATUS_GRID = 3,
  SF_STATUS_ORDER = 4,
  SF_STATUS_BINDING = 5,
  SF_STATUS_COMPILE = 6,
  SF_STATUS_LOCATION = 7,
  SF_STATUS_STABILITY = 8,
  SF_STATUS_INSTABILITY = 9,
  SF_STATUS_STATE = 10,
  SF_STATUS_IO = 11,
  SF_STATUS_PANIC = 99,
} SfStatus;

// Source and receiver layout with source wavelets.
typedef struct SfGeometry SfGeometry;

// Squared-slowness model with absorbing layer.
typedef struct SfModel SfModel;

// Compiled forward, adjoint and gradient operators for one geometry.
typedef struct SfSolver SfSolver;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *sf_version(void);

// Message of the last failed call on this thread, or NULL. Valid until the
// next call into the library from the same thread.
const char *sf_last_error_message(void);

// Constant-velocity model over a physical grid of `ndim` axes.
//
// # Safety
// `shape` and `spacing` point to `ndim` values; `out` is writable.
enum SfStatus sf_model_new_constant(size_t ndim,
                                    const size_t *shape,
                                    const double *spacing,
                                    double vp,
                                    size_t nbl,
                                    size_t space_order,
                                    struct SfModel **out);

// Model from a row-major velocity array over the physical grid.
//
// # Safety
// `shape` and `spacing` point to `ndim` values, `vp` to `prod(shape)` values.
enum SfStatus sf_model_new_velocity(size_t ndim,
                                    const size_t *shape,
                                    const double *spacing,
                                    const double *vp,
                                    size_t nbl,
                                    size_t space_order,
                                    struct SfModel **out);

// Copy of `model` with squared slowness `m` over the extended grid.
//
// # Safety
// `m` points to `len` values.
enum SfStatus sf_model_with_m(const struct SfModel *model,
                              const double *m,
                              size_t len,
                              struct SfModel **out);

// Number of axes and points of the extended grid (physical plus layer).
//
// # Safety
// `shape` has room for `capacity` values; `ndim` and `npoints` are writable or NULL.
enum SfStatus sf_model_shape(const struct SfModel *model,
                             size_t *shape,
                             size_t capacity,
                             size_t *ndim,
                             size_t *npoints);

// Squared slowness over the extended grid.
//
// # Safety
// `m` has room for `len` values.
enum SfStatus sf_model_get_m(const struct SfModel *model, double *m, size_t len);

// Largest stable time step of the model's discretization.
//
// # Safety
// `out` is writable.
enum SfStatus sf_model_critical_dt(const struct SfModel *model, double *out);

// # Safety
// `model` was returned by this library and is not used afterwards.
void sf_model_free(struct SfModel *model);

// Ricker sources and receivers; coordinates are `ndim` values per point.
//
// # Safety
// `src_coords` holds `nsrc * ndim` values and `rec_coords` `nrec * ndim`.
enum SfStatus sf_geometry_new_ricker(size_t ndim,
                                     size_t nsrc,
                                     const double *src_coords,
                                     size_t nrec,
                                     const double *rec_coords,
                                     double t0,
                                     double tn,
                                     double dt,
                                     double f0,
                                     struct SfGeometry **out);

// Number of time samples and receivers.
//
// # Safety
// `nt` and `nrec` are writable or NULL.
enum SfStatus sf_geometry_dims(const struct SfGeometry *geom, size_t *nt, size_t *nrec);

// # Safety
// `geom` was returned by this library and is not used afterwards.
void sf_geometry_free(struct SfGeometry *geom);

// Compile the acoustic operators for `model`'s grid and `geom`.
//
// # Safety
// Handles are valid; `out` is writable.
enum SfStatus sf_solver_new(const struct SfModel *model,
                            const struct SfGeometry *geom,
                            struct SfSolver **out);

// Forward modelling; writes receiver traces `[nt, nrec]`.
//
// # Safety
// `traces` has room for `len` values.
enum SfStatus sf_solver_forward(const struct SfSolver *solver,
                                const struct SfModel *model,
                                double *traces,
                                size_t len);

// Least-squares misfit against `observed` `[nt, nrec]` and its gradient
// with respect to `m` over the extended grid.
//
// # Safety
// `observed` holds `observed_len` values, `gradient` has room for
// `gradient_len`; `objective` is writable.
enum SfStatus sf_solver_gradient(const struct SfSolver *solver,
                                 const struct SfModel *model,
                                 const double *observed,
                                 size_t observed_len,
                                 double *objective,
                                 double *gradient,
                                 size_t gradient_len);

// # Safety
// `solver` was returned by this library and is not used afterwards.
void sf_solver_free(struct SfSolver *solver);

// Jacobi iterations for `Δp = b` on an `nx × ny` grid with zero boundary,
// starting from `p = 0`. `residuals` receives `iterations + 1` norms or is NULL.
//
// # Safety
// `b` and `p` hold `nx * ny` values; `residuals` has room for `iterations + 1`.
enum SfStatus sf_poisson_jacobi(size_t nx,
                                size_t ny,
                                double hx,
                                double hy,
                                const double *b,
                                size_t iterations,
                                double *p,
                                double *residuals);

// Write a row-major array in the SFGD binary grid format.
//
// # Safety
// `path` is NUL-terminated UTF-8; `shape` holds `ndim` values and `data` `prod(shape)`.
enum SfStatus sf_write_sfgd(const char *path, size_t ndim, const size_t *shape, const double *data);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* STENCILFORGE_H */
