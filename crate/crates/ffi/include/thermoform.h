#ifndef THERMOFORM_H
#define THERMOFORM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum TfMethod {
  TF_METHOD_PERIODIC_ORBIT = 0,
  TF_METHOD_CYLINDER_MATRIX = 1,
} TfMethod;

typedef enum TfStatus {
  TF_STATUS_OK = 0,
  TF_STATUS_NULL_POINTER = 1,
  TF_STATUS_INVALID = 2,
  TF_STATUS_DOMAIN = 3,
  TF_STATUS_BUDGET = 4,
  TF_STATUS_CONVERGENCE = 5,
  TF_STATUS_BRACKET = 6,
  TF_STATUS_NOT_NORMALIZED = 7,
  TF_STATUS_INSUFFICIENT_DATA = 8,
  TF_STATUS_BUFFER_TOO_SMALL = 9,
  TF_STATUS_OTHER = 10,
  TF_STATUS_PANIC = 11,
} TfStatus;

typedef struct TfMap TfMap;

typedef struct TfPotential TfPotential;

typedef struct TfPressureCurve TfPressureCurve;

typedef struct TfTemperatureCurve TfTemperatureCurve;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. Valid until the
 next call into the library on the same thread.
 */
const char *tf_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *tf_version(void);

enum TfStatus tf_map_doubling(struct TfMap **out);

enum TfStatus tf_map_chebyshev(struct TfMap **out);

/*
 Tent map with left slope `slope > 1`.
 */
enum TfStatus tf_map_tent(double slope, struct TfMap **out);

enum TfStatus tf_map_manneville_pomeau(double gamma, struct TfMap **out);

/*
 Increasing affine branches cut at `count` interior breakpoints.

 # Safety
 `breakpoints` must point to `count` readable doubles (or be NULL with
 `count == 0`).
 */
enum TfStatus tf_map_piecewise_linear(const double *breakpoints,
                                      uintptr_t count,
                                      struct TfMap **out);

/*
 Map from a TOML `[map]` table body such as `family = "tent"\nslope = 3`.

 # Safety
 `text` must be a NUL-terminated string.
 */
enum TfStatus tf_map_from_toml(const char *text, struct TfMap **out);

/*
 # Safety
 `map` must be NULL or a handle from a `tf_map_*` constructor, not yet freed.
 */
void tf_map_free(struct TfMap *map);

/*
 Number of branches, or 0 for NULL.

 # Safety
 `map` must be NULL or a live map handle.
 */
uintptr_t tf_map_branch_count(const struct TfMap *map);

/*
 # Safety
 `map` must be a live map handle and `out` writable.
 */
enum TfStatus tf_map_eval(const struct TfMap *map, double x, double *out);

/*
 `φ = −t·log|Df|`.

 # Safety
 `out` must be writable.
 */
enum TfStatus tf_potential_geometric(double t, struct TfPotential **out);

/*
 One value per branch.

 # Safety
 `values` must point to `count` readable doubles; `out` must be writable.
 */
enum TfStatus tf_potential_locally_constant(const double *values,
                                            uintptr_t count,
                                            struct TfPotential **out);

/*
 `log p_i` on branch `i`.

 # Safety
 `probs` must point to `count` readable doubles; `out` must be writable.
 */
enum TfStatus tf_potential_bernoulli(const double *probs,
                                     uintptr_t count,
                                     struct TfPotential **out);

/*
 # Safety
 `phi` must be NULL or a live potential handle.
 */
void tf_potential_free(struct TfPotential *phi);

/*
 Pressure from periodic orbits of period `period`.

 # Safety
 Handles must be live; `out` writable.
 */
enum TfStatus tf_pressure_periodic(const struct TfMap *map,
                                   const struct TfPotential *phi,
                                   uintptr_t period,
                                   double *out);

/*
 Pressure as the log spectral radius of the depth-`depth` cylinder matrix.

 # Safety
 Handles must be live; `out` writable.
 */
enum TfStatus tf_pressure_matrix(const struct TfMap *map,
                                 const struct TfPotential *phi,
                                 uintptr_t depth,
                                 double *out);

/*
 `t ↦ P(−t·log|Df|)` on `grid`.

 # Safety
 `grid` must point to `count` readable doubles; `map` live; `out` writable.
 */
enum TfStatus tf_pressure_curve_geometric(const struct TfMap *map,
                                          const double *grid,
                                          uintptr_t count,
                                          enum TfMethod kind,
                                          uintptr_t param,
                                          struct TfPressureCurve **out);

/*
 Copies the curve values into `buf`; `*len` is the capacity on entry
 and the number of values on exit.

 # Safety
 `curve` live; `buf` holds `*len` writable doubles; `len` writable.
 */
enum TfStatus tf_pressure_curve_values(const struct TfPressureCurve *curve,
                                       double *buf,
                                       uintptr_t *len);

/*
 Kink locations with slope gap above `slope_gap_tol`; `*len` is the
 capacity on entry and the kink count on exit.

 # Safety
 As for [`tf_pressure_curve_values`].
 */
enum TfStatus tf_pressure_curve_kinks(const struct TfPressureCurve *curve,
                                      double slope_gap_tol,
                                      double *buf,
                                      uintptr_t *len);

/*
 Lyapunov spectrum value `L(λ)`.

 # Safety
 `curve` live; `out` writable.
 */
enum TfStatus tf_legendre_lyapunov(const struct TfPressureCurve *curve, double lambda, double *out);

/*
 # Safety
 `curve` must be NULL or a live curve handle.
 */
void tf_pressure_curve_free(struct TfPressureCurve *curve);

/*
 Temperature `T_φ(q)`; `*is_infinite` is set when it is `+∞`, in which
 case `*out` is `INFINITY`.

 # Safety
 Handles live; `out` and `is_infinite` writable.
 */
enum TfStatus tf_temperature(const struct TfMap *map,
                             const struct TfPotential *phi,
                             double q,
                             enum TfMethod kind,
                             uintptr_t param,
                             double *out,
                             bool *is_infinite);

/*
 Temperature function on `q_grid`.

 # Safety
 `q_grid` holds `count` readable doubles; handles live; `out` writable.
 */
enum TfStatus tf_temperature_curve(const struct TfMap *map,
                                   const struct TfPotential *phi,
                                   const double *q_grid,
                                   uintptr_t count,
                                   enum TfMethod kind,
                                   uintptr_t param,
                                   struct TfTemperatureCurve **out);

/*
 Temperature values, `INFINITY` marking infinite entries.

 # Safety
 As for [`tf_pressure_curve_values`].
 */
enum TfStatus tf_temperature_curve_values(const struct TfTemperatureCurve *curve,
                                          double *buf,
                                          uintptr_t *len);

/*
 Dimension spectrum at `count` values of `α`, written to `out`.

 # Safety
 `alphas` holds `count` readable doubles and `out` `count` writable ones.
 */
enum TfStatus tf_dimension_spectrum(const struct TfTemperatureCurve *curve,
                                    const double *alphas,
                                    uintptr_t count,
                                    double *out);

/*
 # Safety
 `curve` must be NULL or a live temperature-curve handle.
 */
void tf_temperature_curve_free(struct TfTemperatureCurve *curve);

/*
 `(1/n)·log|Df^n(x0)|`.

 # Safety
 `map` live; `out` writable.
 */
enum TfStatus tf_finite_time_lyapunov(const struct TfMap *map, double x0, uintptr_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THERMOFORM_H */
