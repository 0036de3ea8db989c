/* C interface to the z2flow library. Generated by cbindgen; do not edit. */

#ifndef Z2FLOW_H
#define Z2FLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum Z2fStatus {
  Z2F_STATUS_OK = 0,
  Z2F_STATUS_IO_ERROR = 1,
  Z2F_STATUS_INVALID_INPUT = 2,
  Z2F_STATUS_NUMERICAL_REFUSAL = 3,
  Z2F_STATUS_NULL_ARGUMENT = 4,
  Z2F_STATUS_PANIC = 5,
} Z2fStatus;

/**
 * Opaque handle to a validated tight-binding model.
 */
typedef struct Z2fModel Z2fModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *z2f_last_error(void);

/**
 * Parse and validate a model from a JSON document (see the README for the
 * schema). On success writes a heap-allocated handle to `out`; release it
 * with `z2f_model_free`.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum Z2fStatus z2f_model_from_json(const char *json, struct Z2fModel **out);

/**
 * Built-in BHZ-type model with the given mass parameter.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum Z2fStatus z2f_model_bhz(double mass, struct Z2fModel **out);

/**
 * Built-in trivial atomic insulator.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum Z2fStatus z2f_model_atomic(struct Z2fModel **out);

/**
 * Release a model handle. Passing NULL is a no-op.
 *
 * # Safety
 * `model` must come from one of the constructors and not be freed twice.
 */
void z2f_model_free(struct Z2fModel *model);

/**
 * Z2 bulk invariant (Wannier-center partner switching). `t_points` tracks
 * the half cycle, `s_points` resolves each Wilson loop; 0 picks the default
 * (40 and 100).
 *
 * # Safety
 * `model` and `out_value` must be valid pointers.
 */
enum Z2fStatus z2f_bulk_index(const struct Z2fModel *model,
                              uint32_t t_points,
                              uint32_t s_points,
                              int *out_value);

/**
 * Z2 edge invariant (half-spectral flow of the truncated edge family with
 * left-edge localization filtering). Zeros pick the defaults (30 sites,
 * 400 scan points, threshold 0.9).
 *
 * # Safety
 * `model` and `out_value` must be valid pointers.
 */
enum Z2fStatus z2f_edge_index(const struct Z2fModel *model,
                              uint32_t sites,
                              uint32_t t_points,
                              double loc_threshold,
                              int *out_value);

/**
 * Bulk-edge correspondence: computes both invariants and their equality
 * verdict. Zeros pick the defaults.
 *
 * # Safety
 * `model` and the output pointers must be valid.
 */
enum Z2fStatus z2f_bec_verify(const struct Z2fModel *model,
                              uint32_t sites,
                              int *out_bulk,
                              int *out_edge,
                              bool *out_equal);

/**
 * Half-spectral flow of a built-in abstract family (`arctan-pair`,
 * `shifted-arctan-pair`, `constant`, `constant-circle`, `cos-sin-circle`,
 * `sin-rank2-circle`).
 *
 * # Safety
 * `name` must be a valid NUL-terminated string, `out_value` a valid pointer.
 */
enum Z2fStatus z2f_sf_tau_fixture(const char *name, int *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* Z2FLOW_H */
