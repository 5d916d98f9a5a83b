#ifndef TODA_SPECTRA_H
#define TODA_SPECTRA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum TsStatus {
  TS_STATUS_OK = 0,
  TS_STATUS_NULL_POINTER = 1,
  TS_STATUS_OUT_OF_RANGE = 2,
  TS_STATUS_DOMAIN = 3,
  TS_STATUS_NEAR_POLE = 4,
  TS_STATUS_NOT_CONVERGED = 5,
  TS_STATUS_ROOT_FINDING = 6,
  TS_STATUS_DEGENERATE = 7,
  TS_STATUS_RESONANT_DENOMINATOR = 8,
  TS_STATUS_ORACLE = 9,
  TS_STATUS_CONFIG = 10,
  TS_STATUS_PANIC = 99,
} TsStatus;

/**
 * Quantization condition selector.
 */
typedef enum TsCase {
  TS_CASE_EVEN = 0,
  TS_CASE_ODD_CASE1 = 1,
  TS_CASE_ODD_CASE2 = 2,
} TsCase;

/**
 * Floquet exponents and multipliers at one parameter point.
 */
typedef struct TsFloquet TsFloquet;

/**
 * Model couplings plus truncation options.
 */
typedef struct TsModel TsModel;

/**
 * Roots located by a spectrum search.
 */
typedef struct TsSpectrum TsSpectrum;

typedef struct TsComplex {
  double re;
  double im;
} TsComplex;

/**
 * One located root.
 */
typedef struct TsRoot {
  struct TsComplex u_n;
  double qc_abs;
  double truncation_stability;
  size_t refinement_steps;
} TsRoot;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ts_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next library call on the same thread.
 */
const char *ts_last_error_message(void);

/**
 * Creates a model. `u` holds `u_2 … u_{N−2}` (`u_len = max(N − 3, 0)`);
 * it may be null when `u_len` is zero.
 *
 * # Safety
 * `u` must point to `u_len` doubles; `out` must be valid for writes.
 */
enum TsStatus ts_model_new(size_t n,
                           double hbar,
                           double lambda,
                           const double *u,
                           size_t u_len,
                           struct TsComplex u_n,
                           struct TsModel **out);

/**
 * Sets the explicit determinant rows used by every later call.
 *
 * # Safety
 * `model` must be a live handle from [`ts_model_new`].
 */
enum TsStatus ts_model_set_det_rows(struct TsModel *model, size_t rows);

/**
 * # Safety
 * `model` must be null or a handle from [`ts_model_new`] not yet freed.
 */
void ts_model_free(struct TsModel *model);

/**
 * Locates the Floquet exponents of `model`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be valid for writes.
 */
enum TsStatus ts_locate_sigma(const struct TsModel *model, struct TsFloquet **out);

/**
 * Number of exponents (the order `N`); 0 for a null handle.
 *
 * # Safety
 * `fd` must be null or a live handle.
 */
size_t ts_floquet_len(const struct TsFloquet *fd);

/**
 * Exponent `σ_j` and multiplier `ζ_j`, zero-based `j`.
 *
 * # Safety
 * `fd` must be a live handle; `sigma` and `zeta` must be valid for writes.
 */
enum TsStatus ts_floquet_get(const struct TsFloquet *fd,
                             size_t j,
                             struct TsComplex *sigma,
                             struct TsComplex *zeta);

/**
 * # Safety
 * `fd` must be null or a live handle.
 */
void ts_floquet_free(struct TsFloquet *fd);

/**
 * Quantization function at `u_n`; the value of `u_N` stored in `model` is
 * ignored.
 *
 * # Safety
 * `model` must be a live handle; `out` must be valid for writes.
 */
enum TsStatus ts_quantization_function(const struct TsModel *model,
                                       struct TsComplex u_n,
                                       enum TsCase case_,
                                       struct TsComplex *out);

/**
 * Bound states for even `N`: real scan of `u_N ∈ [lo, hi]` with `steps`
 * cells, Newton refinement and deduplication.
 *
 * # Safety
 * `model` must be a live handle; `out` must be valid for writes.
 */
enum TsStatus ts_spectrum_real(const struct TsModel *model,
                               double lo,
                               double hi,
                               size_t steps,
                               struct TsSpectrum **out);

/**
 * Resonances for odd `N` on the rectangle `[re_lo, re_hi] × [im_lo, im_hi]`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be valid for writes.
 */
enum TsStatus ts_spectrum_complex(const struct TsModel *model,
                                  enum TsCase case_,
                                  double re_lo,
                                  double re_hi,
                                  double im_lo,
                                  double im_hi,
                                  size_t re_steps,
                                  size_t im_steps,
                                  struct TsSpectrum **out);

/**
 * Number of accepted roots; 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
size_t ts_spectrum_len(const struct TsSpectrum *s);

/**
 * Accepted root `i`, sorted by real part.
 *
 * # Safety
 * `s` must be a live handle; `root` must be valid for writes.
 */
enum TsStatus ts_spectrum_root(const struct TsSpectrum *s, size_t i, struct TsRoot *root);

/**
 * # Safety
 * `s` must be null or a live handle.
 */
void ts_spectrum_free(struct TsSpectrum *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TODA_SPECTRA_H */
