#ifndef PRIVTOPK_H
#define PRIVTOPK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum PtkStatus {
  PTK_STATUS_OK = 0,
  PTK_STATUS_NULL_POINTER = 1,
  PTK_STATUS_INVALID_ARGUMENT = 2,
  PTK_STATUS_OUT_OF_RANGE = 3,
  PTK_STATUS_EXHAUSTED = 4,
  PTK_STATUS_IO = 5,
  PTK_STATUS_PARSE = 6,
  // A Rust panic was caught at the boundary.
  PTK_STATUS_INTERNAL = 7,
} PtkStatus;

typedef enum PtkNoiseKind {
  PTK_NOISE_KIND_LAPLACE = 0,
  PTK_NOISE_KIND_GUMBEL = 1,
} PtkNoiseKind;

typedef enum PtkMode {
  PTK_MODE_EAGER = 0,
  PTK_MODE_LAZY = 1,
} PtkMode;

// Opaque histogram handle.
typedef struct PtkHistogram PtkHistogram;

// Opaque lazily sampled sorted noise array.
typedef struct PtkNoiseOracle PtkNoiseOracle;

// Accesses performed by one query.
typedef struct PtkCost {
  // Accesses to the histogram.
  uint64_t histogram;
  // Accesses to every list, including noise.
  uint64_t total;
} PtkCost;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *ptk_last_error(void);

// Library version as a static NUL-terminated string.
const char *ptk_version(void);

// Builds a histogram from `m` scores, each at most `n`.
//
// # Safety
// `scores` must point to `m` readable values and `out` must be writable.
enum PtkStatus ptk_histogram_new(const uint64_t *scores,
                                 size_t m,
                                 uint64_t n,
                                 struct PtkHistogram **out);

// Parses histogram JSON (`{"n": ..., "scores": [...]}`).
//
// # Safety
// `json` must be a NUL-terminated string and `out` must be writable.
enum PtkStatus ptk_histogram_from_json(const char *json, struct PtkHistogram **out);

// Number of items, or 0 for a null handle.
//
// # Safety
// `h` must be null or a live handle.
size_t ptk_histogram_len(const struct PtkHistogram *h);

// # Safety
// `h` must be null or a handle not yet freed.
void ptk_histogram_free(struct PtkHistogram *h);

// Private top-k through the threshold algorithm with noise of scale
// `1/epsilon`. Writes `k` item ids, best first, into `out_items`.
//
// # Safety
// `h` must be a live handle, `out_items` must have room for `k` values,
// and `out_cost` must be null or writable.
enum PtkStatus ptk_private_topk(const struct PtkHistogram *h,
                                size_t k,
                                enum PtkNoiseKind kind,
                                double epsilon,
                                enum PtkMode mode,
                                uint64_t seed,
                                size_t *out_items,
                                struct PtkCost *out_cost);

// One-shot noisy top-k (reads every score).
//
// # Safety
// As for [`ptk_private_topk`].
enum PtkStatus ptk_oneshot_topk(const struct PtkHistogram *h,
                                size_t k,
                                enum PtkNoiseKind kind,
                                double epsilon,
                                uint64_t seed,
                                size_t *out_items,
                                struct PtkCost *out_cost);

// Exponential mechanism: one item with probability proportional to
// `exp(epsilon * score)`.
//
// # Safety
// `h` must be a live handle, `out_item` writable, `out_cost` null or writable.
enum PtkStatus ptk_exponential_mechanism(const struct PtkHistogram *h,
                                         double epsilon,
                                         uint64_t seed,
                                         size_t *out_item,
                                         struct PtkCost *out_cost);

// Privacy levels of one-shot Laplace noise. `*out_has_approx` is false
// when no approximate level is reported for these parameters.
//
// # Safety
// All output pointers must be writable.
enum PtkStatus ptk_laplace_privacy(size_t k,
                                   double epsilon,
                                   double delta,
                                   size_t m,
                                   double *out_pure,
                                   double *out_approx,
                                   bool *out_has_approx);

// Privacy level of one-shot Gumbel noise at the given `delta`.
//
// # Safety
// `out_eps` must be writable.
enum PtkStatus ptk_gumbel_privacy(size_t k, double epsilon, double delta, double *out_eps);

// Sorted array of `m` i.i.d. noise values with the given scale, sampled
// on demand.
//
// # Safety
// `out` must be writable.
enum PtkStatus ptk_noise_oracle_new(size_t m,
                                    enum PtkNoiseKind kind,
                                    double scale,
                                    uint64_t seed,
                                    struct PtkNoiseOracle **out);

// Next `(item, value)` in descending value order.
//
// # Safety
// `o` must be a live handle; the output pointers must be writable.
enum PtkStatus ptk_noise_oracle_sorted_access(struct PtkNoiseOracle *o,
                                              size_t *out_item,
                                              double *out_value);

// Noise value of `item`.
//
// # Safety
// `o` must be a live handle; `out_value` must be writable.
enum PtkStatus ptk_noise_oracle_random_access(struct PtkNoiseOracle *o,
                                              size_t item,
                                              double *out_value);

// Accesses answered so far, or 0 for a null handle.
//
// # Safety
// `o` must be null or a live handle.
uint64_t ptk_noise_oracle_access_count(const struct PtkNoiseOracle *o);

// # Safety
// `o` must be null or a handle not yet freed.
void ptk_noise_oracle_free(struct PtkNoiseOracle *o);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PRIVTOPK_H */
