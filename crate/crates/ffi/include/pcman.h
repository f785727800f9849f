#ifndef PCMAN_H
#define PCMAN_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum {
  PCM_STATUS_OK = 0,
  PCM_STATUS_NULL_POINTER = 1,
  // Not square, too small, non-positive or non-reciprocal entries.
  PCM_STATUS_INVALID_MATRIX = 2,
  // Bad indices, alpha, threshold, enum value or buffer length.
  PCM_STATUS_INVALID_ARGUMENT = 3,
  PCM_STATUS_NO_CONVERGENCE = 4,
  PCM_STATUS_RANDOM_INDEX_UNAVAILABLE = 5,
  PCM_STATUS_PARSE = 6,
  PCM_STATUS_OUT_OF_RANGE = 7,
  PCM_STATUS_PANIC = 8,
  PCM_STATUS_OTHER = 9,
} PcmStatus;

typedef enum {
  PCM_FORMAT_CSV = 0,
  PCM_FORMAT_JSON = 1,
} PcmFormat;

typedef enum {
  PCM_METHOD_EVM = 0,
  PCM_METHOD_GMM = 1,
} PcmMethod;

typedef enum {
  PCM_ALGORITHM_ROW = 0,
  PCM_ALGORITHM_MATRIX = 1,
} PcmAlgorithm;

typedef enum {
  PCM_SELECTION_FEASIBLE = 0,
  PCM_SELECTION_FEWEST = 1,
} PcmSelection;

// Opaque outcome of [`pcm_detect`].
typedef struct PcmDetection PcmDetection;

// Opaque pairwise-comparison matrix.
typedef struct PcmMatrix PcmMatrix;

// Opaque outcome of [`pcm_manipulate`].
typedef struct PcmResult PcmResult;

// Options for [`pcm_manipulate`]. Start from
// [`pcm_manipulation_options_default`].
typedef struct {
  PcmAlgorithm algorithm;
  PcmMethod method;
  double alpha_start;
  double alpha_step;
  double ci_threshold;
  // Saturate new entries at the 1/9..9 scale.
  bool clamp;
  // Additionally require alpha above the current `c_pq`.
  bool strict_alpha;
  PcmSelection selection;
} PcmManipulationOptions;

// One pair overwrite recorded by a heuristic.
typedef struct {
  size_t i;
  size_t j;
  double value;
  double ci;
  // 1-based rank positions of p and q after the step.
  size_t rank_p;
  size_t rank_q;
  bool clamped;
} PcmStep;

typedef struct {
  size_t promoted;
  size_t reference;
  size_t witness_count;
  double common_ratio;
} PcmSuspect;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next call into this library on the same thread.
const char *pcm_last_error(void);

// Library version as a static NUL-terminated string.
const char *pcm_version(void);

// Builds an `n x n` matrix from `n * n` row-major entries.
//
// # Safety
// `data` must point to `n * n` readable doubles.
PcmStatus pcm_matrix_new(size_t n, const double *data, PcmMatrix **out);

// Consistent matrix `c_ij = w_i / w_j`.
//
// # Safety
// `weights` must point to `n` readable doubles.
PcmStatus pcm_matrix_from_weights(const double *weights, size_t n, PcmMatrix **out);

// Parses CSV or JSON text.
//
// # Safety
// `text` must be a NUL-terminated string.
PcmStatus pcm_matrix_parse(const char *text, PcmFormat format, PcmMatrix **out);

// # Safety
// `m` must come from this library and not be freed twice. Null is ignored.
void pcm_matrix_free(PcmMatrix *m);

// Number of alternatives, 0 for a null handle.
//
// # Safety
// `m` must be a live handle or null.
size_t pcm_matrix_size(const PcmMatrix *m);

// # Safety
// `m` must be a live handle; `value` must be writable.
PcmStatus pcm_matrix_get(const PcmMatrix *m, size_t i, size_t j, double *value);

// Copies the `n * n` entries row-major into `buf`.
//
// # Safety
// `buf` must hold `len` writable doubles.
PcmStatus pcm_matrix_entries(const PcmMatrix *m, double *buf, size_t len);

// Writes the `n` normalized weights into `weights`. `lambda_max` may be
// null; for GMM it receives NaN.
//
// # Safety
// `weights` must hold `len` writable doubles.
PcmStatus pcm_priorities(const PcmMatrix *m,
                         PcmMethod method_,
                         double *weights,
                         size_t len,
                         double *lambda_max);

// Writes the 1-based rank position of every alternative; position 1 is
// the smallest weight.
//
// # Safety
// `positions` must hold `len` writable values.
PcmStatus pcm_ranking(const PcmMatrix *m, PcmMethod method_, size_t *positions, size_t len);

// Saaty's consistency index `(lambda_max - n) / (n - 1)`.
//
// # Safety
// `m` must be a live handle; `ci` must be writable.
PcmStatus pcm_consistency_index(const PcmMatrix *m, double *ci);

// CI divided by Saaty's random index for this `n`.
//
// # Safety
// `m` must be a live handle; `cr` must be writable.
PcmStatus pcm_consistency_ratio(const PcmMatrix *m, double *cr);

PcmManipulationOptions pcm_manipulation_options_default(void);

// Promotes alternative `p` over `q` with the fewest overwritten
// comparisons found by sweeping alpha. `options` may be null for the
// defaults. A result is produced even when the goal is missed; check
// [`pcm_result_success`].
//
// # Safety
// `m` must be a live handle; `options` null or readable; `out` writable.
PcmStatus pcm_manipulate(const PcmMatrix *m,
                         size_t p,
                         size_t q,
                         const PcmManipulationOptions *options,
                         PcmResult **out);

// # Safety
// `r` must come from [`pcm_manipulate`] and not be freed twice.
void pcm_result_free(PcmResult *r);

// Modified entries, both members of each pair counted.
//
// # Safety
// `r` must be a live handle or null (returns 0).
size_t pcm_result_m_res(const PcmResult *r);

// Swap achieved within the CI threshold.
//
// # Safety
// `r` must be a live handle or null (returns false).
bool pcm_result_success(const PcmResult *r);

// # Safety
// `r` must be a live handle or null (returns false).
bool pcm_result_swapped(const PcmResult *r);

// # Safety
// `r` must be a live handle or null (returns NaN).
double pcm_result_final_ci(const PcmResult *r);

// Alpha of the chosen run; NaN when the input already met the goal.
//
// # Safety
// `r` must be a live handle or null (returns NaN).
double pcm_result_alpha(const PcmResult *r);

// New handle holding a copy of the manipulated matrix.
//
// # Safety
// `r` must be a live handle; `out` writable.
PcmStatus pcm_result_matrix(const PcmResult *r, PcmMatrix **out);

// # Safety
// `r` must be a live handle or null (returns 0).
size_t pcm_result_step_count(const PcmResult *r);

// # Safety
// `r` must be a live handle; `step` writable.
PcmStatus pcm_result_step(const PcmResult *r, size_t k, PcmStep *step);

// Looks for rows that are a scaled copy of another row. `tol` is the
// relative ratio tolerance; pass 0 or less for the default.
//
// # Safety
// `m` must be a live handle; `out` writable.
PcmStatus pcm_detect(const PcmMatrix *m, double tol, PcmDetection **out);

// # Safety
// `d` must come from [`pcm_detect`] and not be freed twice.
void pcm_detection_free(PcmDetection *d);

// # Safety
// `d` must be a live handle or null (returns 0).
size_t pcm_detection_count(const PcmDetection *d);

// True when the matrix was consistent enough that no scan ran.
//
// # Safety
// `d` must be a live handle or null (returns false).
bool pcm_detection_gated(const PcmDetection *d);

// # Safety
// `d` must be a live handle; `suspect` writable.
PcmStatus pcm_detection_suspect(const PcmDetection *d, size_t k, PcmSuspect *suspect);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PCMAN_H */
