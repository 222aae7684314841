#ifndef KLCHERNOFF_H
#define KLCHERNOFF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum KlcStatus {
  KLC_STATUS_OK = 0,
  KLC_STATUS_NULL_POINTER = 1,
  KLC_STATUS_INVALID_SHAPE = 2,
  /**
   * `lambda`, `t`, `alpha` or a coordinate outside its domain
   */
  KLC_STATUS_OUT_OF_DOMAIN = 3,
  /**
   * an argument is not a valid method, probability vector or table
   */
  KLC_STATUS_INVALID_ARGUMENT = 4,
  /**
   * plug-in method requested with `t <= k - 1`
   */
  KLC_STATUS_BELOW_CORRECTION_DOMAIN = 5,
  KLC_STATUS_SEARCH_FAILED = 6,
  KLC_STATUS_PANIC = 255,
} KlcStatus;

/**
 * Bound methods, passed as `int32_t`.
 */
typedef enum KlcMethod {
  KLC_METHOD_EXACT = 0,
  KLC_METHOD_CORRECTED = 1,
  KLC_METHOD_UNCORRECTED = 2,
  KLC_METHOD_LAMBDA_ONE = 3,
  KLC_METHOD_TYPES = 4,
  KLC_METHOD_MARDIA = 5,
  KLC_METHOD_AGRAWAL_LIMIT = 6,
  /**
   * reference curve, not a guaranteed bound
   */
  KLC_METHOD_ASYMP_GAMMA = 7,
} KlcMethod;

/**
 * Opaque handle: the polynomial and every bound for one `(k, n)`.
 */
typedef struct KlcBounds KlcBounds;

/**
 * One bound value. `lambda_used` is NaN for methods without a λ.
 */
typedef struct KlcBound {
  double value;
  double log_value;
  double lambda_used;
  bool meaningful;
} KlcBound;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds the handle for alphabet size `k >= 2` and sample size `n >= 1`.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum KlcStatus klc_bounds_new(size_t k, size_t n, struct KlcBounds **out);

/**
 * Releases a handle. Null is a no-op.
 *
 * # Safety
 * `bounds` must be null or a handle from [`klc_bounds_new`] not yet freed.
 */
void klc_bounds_free(struct KlcBounds *bounds);

/**
 * # Safety
 * `bounds` must be a live handle; `k` and `n` valid for writes.
 */
enum KlcStatus klc_bounds_shape(const struct KlcBounds *bounds, size_t *k, size_t *n);

/**
 * `G_{k,n}(λ)` for `λ ∈ [0, 1]`.
 *
 * # Safety
 * `bounds` must be a live handle; `out` valid for a write.
 */
enum KlcStatus klc_gkn_eval(const struct KlcBounds *bounds, double lambda, double *out);

/**
 * `ln G_{k,n}(λ)`.
 *
 * # Safety
 * `bounds` must be a live handle; `out` valid for a write.
 */
enum KlcStatus klc_gkn_ln_eval(const struct KlcBounds *bounds, double lambda, double *out);

/**
 * `G'_{k,n}(λ)`.
 *
 * # Safety
 * `bounds` must be a live handle; `out` valid for a write.
 */
enum KlcStatus klc_gkn_eval_deriv(const struct KlcBounds *bounds, double lambda, double *out);

/**
 * `min(ln G_{k,n}(1), k - 1)`; the exact bound is below 1 beyond it.
 *
 * # Safety
 * `bounds` must be a live handle; `out` valid for a write.
 */
enum KlcStatus klc_meaningful_threshold(const struct KlcBounds *bounds, double *out);

/**
 * Upper bound on `P(n·D(p̂‖p) > t)` by `method` (a [`KlcMethod`] code).
 *
 * # Safety
 * `bounds` must be a live handle; `out` valid for a write.
 */
enum KlcStatus klc_bound(const struct KlcBounds *bounds,
                         int32_t method_code,
                         double t,
                         struct KlcBound *out);

/**
 * Deviation level `t` at which `method` equals `alpha ∈ (0, 1)`.
 *
 * # Safety
 * `bounds` must be a live handle; `out_t` valid for a write.
 */
enum KlcStatus klc_critical_value(const struct KlcBounds *bounds,
                                  double alpha,
                                  int32_t method_code,
                                  double *out_t);

/**
 * Largest probability of category `coord` (1-based) on the KL ball of
 * radius `t / n` around the empirical distribution of `counts`.
 *
 * # Safety
 * `counts` must be valid for `k` reads; `out` valid for a write.
 */
enum KlcStatus klc_coord_upper_bound(const uint64_t *counts,
                                     size_t k,
                                     size_t coord,
                                     double t,
                                     double *out);

/**
 * Upper confidence bound at level `1 - alpha` on the total mass of unseen
 * categories, from `len` `(frequency, species)` pairs. Writes the critical
 * value to `out_t` when it is non-null.
 *
 * # Safety
 * `frequency` and `species` must be valid for `len` reads; `out_upper`
 * valid for a write; `out_t` null or valid for a write.
 */
enum KlcStatus klc_unseen_upper_bound(const uint64_t *frequency,
                                      const uint64_t *species,
                                      size_t len,
                                      double alpha,
                                      double *out_t,
                                      double *out_upper);

/**
 * Static description of a [`KlcStatus`] code, passed as `int32_t`.
 */
const char *klc_status_string(int32_t status);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len` bytes) and returns the full message length without
 * the terminator; 0 when there is no message. Pass a null `buf` to query
 * the length.
 *
 * # Safety
 * `buf` must be null or valid for `len` byte writes.
 */
size_t klc_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KLCHERNOFF_H */
