#ifndef POSTERIOR_HMM_H
#define POSTERIOR_HMM_H

/* Generated by cbindgen from the posterior-hmm-ffi crate. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PhmmStatus {
  PHMM_STATUS_OK = 0,
  PHMM_STATUS_NULL_POINTER = 1,
  PHMM_STATUS_INVALID_MODEL = 2,
  PHMM_STATUS_IMPOSSIBLE = 3,
  PHMM_STATUS_INVALID_ARGUMENT = 4,
  PHMM_STATUS_NOT_TWO_STATE = 5,
  PHMM_STATUS_IO = 6,
  PHMM_STATUS_PARSE = 7,
  PHMM_STATUS_BUFFER_LENGTH = 8,
  PHMM_STATUS_PANIC = 9,
} PhmmStatus;

/**
 * Pattern statistics of state 1 (the second state).
 */
typedef enum PhmmStatistic {
  PHMM_STATISTIC_JUMPS = 0,
  PHMM_STATISTIC_RUNS = 1,
  PHMM_STATISTIC_POSITIONS = 2,
  /**
   * Runs of exactly `run_length`.
   */
  PHMM_STATISTIC_EXACT_RUN = 3,
  PHMM_STATISTIC_LONGEST_RUN = 4,
} PhmmStatistic;

/**
 * Opaque handle holding a model, an observation sequence and its
 * forward-backward tables and posterior chain.
 */
typedef struct PhmmAnalysis PhmmAnalysis;

/**
 * Opaque model handle.
 */
typedef struct PhmmModel PhmmModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread; empty after a success.
 * The pointer is valid until the next call on this thread.
 */
const char *phmm_last_error(void);

/**
 * Builds a model from `pi` (length `k`), `gamma` (`k * k`) and `lambda` (`k`),
 * requiring rows to sum to one within 1e-9.
 *
 * # Safety
 * Array arguments must point to the stated number of readable values and
 * `out` to writable storage for one pointer.
 */
enum PhmmStatus phmm_model_new(size_t k,
                               const double *pi,
                               const double *gamma,
                               const double *lambda,
                               struct PhmmModel **out);

/**
 * Reads a model file. With `renormalize`, rows within 1e-2 of one are rescaled.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum PhmmStatus phmm_model_from_file(const char *path, bool renormalize, struct PhmmModel **out);

/**
 * # Safety
 * `model` must be null or a handle from this library not yet freed.
 */
void phmm_model_free(struct PhmmModel *model);

/**
 * Number of hidden states, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t phmm_model_num_states(const struct PhmmModel *model);

/**
 * Simulates `n` steps into `states` and `counts`, both of length `n`.
 *
 * # Safety
 * `model` must be a live handle; output arrays must hold `n` values.
 */
enum PhmmStatus phmm_simulate(const struct PhmmModel *model,
                              size_t n,
                              uint64_t seed,
                              uint32_t *states,
                              uint64_t *counts);

/**
 * Runs forward-backward on `counts` and builds the posterior chain.
 *
 * # Safety
 * `model` must be a live handle, `counts` must hold `n` values and `out` be writable.
 */
enum PhmmStatus phmm_analysis_new(const struct PhmmModel *model,
                                  const uint64_t *counts,
                                  size_t n,
                                  struct PhmmAnalysis **out);

/**
 * # Safety
 * `analysis` must be null or a live handle.
 */
void phmm_analysis_free(struct PhmmAnalysis *analysis);

/**
 * Sequence length, or 0 for a null handle.
 *
 * # Safety
 * `analysis` must be null or a live handle.
 */
size_t phmm_analysis_len(const struct PhmmAnalysis *analysis);

/**
 * # Safety
 * `analysis` must be a live handle and `out` writable.
 */
enum PhmmStatus phmm_analysis_loglik(const struct PhmmAnalysis *analysis, double *out);

/**
 * Posterior marginals, `n * K` values, row `t` holding `P(state at t | counts)`.
 *
 * # Safety
 * `analysis` must be a live handle and `out` hold `len` values.
 */
enum PhmmStatus phmm_analysis_marginals(const struct PhmmAnalysis *analysis,
                                        double *out,
                                        size_t len);

/**
 * Per-position most probable states.
 *
 * # Safety
 * `analysis` must be a live handle and `out` hold `len` values.
 */
enum PhmmStatus phmm_decode_posterior(const struct PhmmAnalysis *analysis,
                                      uint32_t *out,
                                      size_t len);

/**
 * Most probable path.
 *
 * # Safety
 * `analysis` must be a live handle and `out` hold `len` values.
 */
enum PhmmStatus phmm_decode_viterbi(const struct PhmmAnalysis *analysis, uint32_t *out, size_t len);

/**
 * Hybrid path at weight `alpha` in [0, 1]. `objective` may be null.
 *
 * # Safety
 * `analysis` must be a live handle, `out` hold `len` values and `objective`
 * be null or writable.
 */
enum PhmmStatus phmm_decode_hybrid(const struct PhmmAnalysis *analysis,
                                   double alpha,
                                   uint32_t *out,
                                   size_t len,
                                   double *objective);

/**
 * Posterior law of a statistic of state 1 in a two-state model, tracked
 * exactly up to `truncation`. `out` receives `truncation + 2` values: the
 * probabilities of 0..=truncation followed by the mass above.
 *
 * # Safety
 * `analysis` must be a live handle and `out` hold `len` values.
 */
enum PhmmStatus phmm_fmci_distribution(const struct PhmmAnalysis *analysis,
                                       enum PhmmStatistic statistic,
                                       size_t run_length,
                                       size_t truncation,
                                       double *out,
                                       size_t len);

/**
 * Draws `count` posterior paths into `out`, `count * n` values, path by path.
 *
 * # Safety
 * `analysis` must be a live handle and `out` hold `len` values.
 */
enum PhmmStatus phmm_sample_paths(const struct PhmmAnalysis *analysis,
                                  size_t count,
                                  uint64_t seed,
                                  uint32_t *out,
                                  size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POSTERIOR_HMM_H */
