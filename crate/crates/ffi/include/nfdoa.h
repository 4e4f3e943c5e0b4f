#ifndef NFDOA_H
#define NFDOA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum NfdoaStatus {
  NFDOA_STATUS_OK = 0,
  NFDOA_STATUS_NULL_POINTER = 1,
  NFDOA_STATUS_INVALID_ARGUMENT = 2,
  NFDOA_STATUS_SHAPE = 3,
  NFDOA_STATUS_NUMERIC = 4,
  NFDOA_STATUS_IO = 5,
  NFDOA_STATUS_PARSE = 6,
  NFDOA_STATUS_PANIC = 7,
} NfdoaStatus;

/*
 Uniform linear array geometry.
 */
typedef struct NfdoaArray NfdoaArray;

/*
 A trained (or freshly constructed) regression network.
 */
typedef struct NfdoaModel NfdoaModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message describing the last failure on this thread (empty after a
 success). The pointer stays valid until the next call on this thread.
 */
const char *nfdoa_last_error(void);

/*
 Creates an `n`-element array with `spacing` in wavelengths and
 `wavelength` in meters.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum NfdoaStatus nfdoa_array_new(size_t n_elements,
                                 double spacing,
                                 double wavelength,
                                 struct NfdoaArray **out);

/*
 Releases an array; null is ignored.

 # Safety
 `array` must come from [`nfdoa_array_new`] and not be used afterwards.
 */
void nfdoa_array_free(struct NfdoaArray *array);

/*
 Number of elements, or 0 for a null handle.

 # Safety
 `array` must be null or a live handle.
 */
size_t nfdoa_array_len(const struct NfdoaArray *array);

/*
 Exact near-field steering vector for angle `theta` (radians) and range
 (wavelengths), written as `2 N` interleaved doubles.

 # Safety
 `out` must point to `out_len` writable doubles.
 */
enum NfdoaStatus nfdoa_steering(const struct NfdoaArray *array,
                                double theta,
                                double range,
                                double *out,
                                size_t out_len);

/*
 Simulates `k` snapshots of one unit-power source at `(theta, range)` with
 the given SNR (`INFINITY` for noiseless) and seed, written as a `2 N K`
 row-major interleaved matrix.

 # Safety
 `out` must point to `out_len` writable doubles.
 */
enum NfdoaStatus nfdoa_simulate(const struct NfdoaArray *array,
                                double theta,
                                double range,
                                size_t k,
                                double snr_db,
                                uint64_t seed,
                                double *out,
                                size_t out_len);

/*
 Network input for `k` snapshots (`2 N K` doubles): the canonicalized
 principal eigenvector of the virtual covariance cropped to `n_in`,
 written as `2 n_in` doubles.

 # Safety
 `snapshots` must point to `2 N k` readable doubles and `out` to
 `out_len` writable doubles.
 */
enum NfdoaStatus nfdoa_feature(const struct NfdoaArray *array,
                               const double *snapshots,
                               size_t k,
                               size_t n_in,
                               double *out,
                               size_t out_len);

/*
 Loads a JSON checkpoint.

 # Safety
 `path` must be a NUL-terminated string and `out` writable.
 */
enum NfdoaStatus nfdoa_model_load(const char *path, struct NfdoaModel **out);

/*
 Builds an untrained complex residual network for `n_in`-length features,
 initialized from `seed`.

 # Safety
 `out` must be writable.
 */
enum NfdoaStatus nfdoa_model_new_cvnn(size_t n_in, uint64_t seed, struct NfdoaModel **out);

/*
 Releases a model; null is ignored.

 # Safety
 `model` must come from a model constructor and not be used afterwards.
 */
void nfdoa_model_free(struct NfdoaModel *model);

/*
 Complex feature length the model expects, or 0 for a null handle.

 # Safety
 `model` must be null or a live handle.
 */
size_t nfdoa_model_input_len(const struct NfdoaModel *model);

/*
 Predicted angle (radians) for a feature of `2 n_in` doubles.

 # Safety
 `feature` must point to `len` readable doubles and `theta` be writable.
 */
enum NfdoaStatus nfdoa_model_predict(const struct NfdoaModel *model,
                                     const double *feature,
                                     size_t len,
                                     double *theta);

/*
 End-to-end estimate: feature extraction from `k` snapshots followed by
 the network, angle in radians.

 # Safety
 `snapshots` must point to `2 N k` readable doubles and `theta` be writable.
 */
enum NfdoaStatus nfdoa_estimate(const struct NfdoaArray *array,
                                const struct NfdoaModel *model,
                                const double *snapshots,
                                size_t k,
                                double *theta);

/*
 FLOPs of one forward pass of the complex network at `n_in`.

 # Safety
 `out` must be writable.
 */
enum NfdoaStatus nfdoa_cvnn_flops(size_t n_in, uint64_t *out);

/*
 Library version as a static NUL-terminated string.
 */
const char *nfdoa_version(void);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* NFDOA_H */
