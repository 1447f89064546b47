#ifndef CODEEVO_H
#define CODEEVO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CodeevoPolicy {
  CODEEVO_POLICY_STRICT = 0,
  CODEEVO_POLICY_DROP_DANGLING_EDGES = 1,
} CodeevoPolicy;

typedef enum CodeevoStatus {
  CODEEVO_STATUS_OK = 0,
  CODEEVO_STATUS_NULL_POINTER = 1,
  CODEEVO_STATUS_INVALID_UTF8 = 2,
  CODEEVO_STATUS_IO = 3,
  CODEEVO_STATUS_PARSE = 4,
  CODEEVO_STATUS_VALIDATION = 5,
  CODEEVO_STATUS_INVALID_ARGUMENT = 6,
  CODEEVO_STATUS_BUFFER_TOO_SMALL = 7,
  CODEEVO_STATUS_PANIC = 8,
} CodeevoStatus;

/**
 * A validated run log.
 */
typedef struct CodeevoDataset CodeevoDataset;

/**
 * Options for [`codeevo_run_pipeline`]; start from
 * [`codeevo_pipeline_options_default`].
 */
typedef struct CodeevoPipelineOptions {
  uint64_t seed;
  double perplexity;
  uintptr_t iterations;
  double node_radius;
  bool include_eigencentrality;
  enum CodeevoPolicy policy;
  /**
   * "pc1", "tokens" or "feature:<name>"; NULL means "pc1".
   */
  const char *y_axis;
} CodeevoPipelineOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *codeevo_last_error(void);

/**
 * Number of canonical features written by [`codeevo_extract_features`].
 */
uintptr_t codeevo_feature_count(void);

/**
 * Name of canonical feature `index` (static storage), or NULL when out of
 * range.
 */
const char *codeevo_feature_name(uintptr_t index);

/**
 * Extract the canonical features of one Python source into `out`, which
 * must hold `out_len >= codeevo_feature_count()` doubles.
 *
 * # Safety
 * `code` must be a NUL-terminated string and `out` must point to `out_len`
 * writable doubles.
 */
enum CodeevoStatus codeevo_extract_features(const char *code, double *out, uintptr_t out_len);

/**
 * Syntax-tree graph of one Python source as JSON. Free the result with
 * [`codeevo_string_free`].
 *
 * # Safety
 * `code` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CodeevoStatus codeevo_parse_to_json(const char *code, char **out);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void codeevo_string_free(char *s);

/**
 * Load and validate a JSONL run log.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CodeevoStatus codeevo_dataset_load(const char *path,
                                        enum CodeevoPolicy policy,
                                        struct CodeevoDataset **out);

/**
 * Number of samples, 0 for NULL.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
uintptr_t codeevo_dataset_len(const struct CodeevoDataset *dataset);

/**
 * Id of sample `index`, owned by the handle; NULL when out of range.
 *
 * # Safety
 * `dataset` must be NULL or a live handle.
 */
const char *codeevo_dataset_sample_id(const struct CodeevoDataset *dataset, uintptr_t index);

/**
 * # Safety
 * `dataset` must be NULL or a handle from [`codeevo_dataset_load`] that
 * has not been freed.
 */
void codeevo_dataset_free(struct CodeevoDataset *dataset);

/**
 * Spearman's rho of two length-`n` arrays. Writes NaN when fewer than 3
 * finite pairs exist.
 *
 * # Safety
 * `x` and `y` must point to `n` doubles, `out` to one writable double.
 */
enum CodeevoStatus codeevo_spearman(const double *x, const double *y, uintptr_t n, double *out);

struct CodeevoPipelineOptions codeevo_pipeline_options_default(void);

/**
 * Run every stage on the log at `input`, writing into `out_dir`. `options`
 * may be NULL for defaults.
 *
 * # Safety
 * `input` and `out_dir` must be NUL-terminated strings; `options` must be
 * NULL or valid.
 */
enum CodeevoStatus codeevo_run_pipeline(const char *input,
                                        const char *out_dir,
                                        const struct CodeevoPipelineOptions *options);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CODEEVO_H */
