#ifndef KPE_H
#define KPE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum KpeStatus {
  KPE_STATUS_OK = 0,
  KPE_STATUS_NULL_ARGUMENT = 1,
  KPE_STATUS_INVALID_UTF8 = 2,
  KPE_STATUS_CORPUS = 3,
  KPE_STATUS_PROMPT = 4,
  KPE_STATUS_PARSE = 5,
  KPE_STATUS_METRICS = 6,
  KPE_STATUS_ALIGN = 7,
  /**
   * The value is mathematically undefined, e.g. tau with no decided pairs.
   */
  KPE_STATUS_UNDEFINED = 8,
  KPE_STATUS_PANIC = 99,
} KpeStatus;

/**
 * A loaded evaluation dataset.
 */
typedef struct KpeDataset KpeDataset;

/**
 * Running concordant/discordant counts for Kendall's tau.
 */
typedef struct KpeKendall KpeKendall;

/**
 * A prompt template registry.
 */
typedef struct KpeRegistry KpeRegistry;

/**
 * Message for the last failing call on this thread, or NULL.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *kpe_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be NULL or a pointer previously returned through a `char **` out-parameter.
 */
void kpe_string_free(char *s);

/**
 * Loads segments, system outputs and judgments (TSV or JSONL by extension).
 *
 * # Safety
 * Paths must be valid C strings and `out` a writable pointer.
 */
enum KpeStatus kpe_dataset_load(const char *segments,
                                const char *outputs,
                                const char *judgments,
                                struct KpeDataset **out);

/**
 * # Safety
 * `dataset` must be NULL or a live handle from [`kpe_dataset_load`].
 */
void kpe_dataset_free(struct KpeDataset *dataset);

/**
 * Number of source segments; 0 for a NULL handle.
 */
size_t kpe_dataset_segment_count(const struct KpeDataset *dataset);

/**
 * Number of system outputs; 0 for a NULL handle.
 */
size_t kpe_dataset_output_count(const struct KpeDataset *dataset);

/**
 * Number of relative-ranking judgments; 0 for a NULL handle.
 */
size_t kpe_dataset_judgment_count(const struct KpeDataset *dataset);

/**
 * The built-in template registry. Never NULL.
 */
struct KpeRegistry *kpe_registry_builtin(void);

/**
 * Built-in templates, overridden or extended by every `*.txt` template in `dir`.
 *
 * # Safety
 * `dir` must be a valid C string and `out` a writable pointer.
 */
enum KpeStatus kpe_registry_load(const char *dir, struct KpeRegistry **out);

/**
 * # Safety
 * `registry` must be NULL or a live registry handle.
 */
void kpe_registry_free(struct KpeRegistry *registry);

/**
 * Renders `template_id` with `n` placeholder bindings `names[i] = values[i]`.
 *
 * # Safety
 * `names` and `values` must each hold `n` valid C strings; `out_text` must be writable.
 */
enum KpeStatus kpe_registry_render(const struct KpeRegistry *registry,
                                   const char *template_id,
                                   const char *const *names,
                                   const char *const *values,
                                   size_t n,
                                   char **out_text);

/**
 * Parses a completion against the response schema of `template_id` and
 * writes its ordinal (class index, star count or rounded scalar).
 *
 * # Safety
 * String arguments must be valid C strings; `out_ordinal` must be writable.
 */
enum KpeStatus kpe_parse_response(const struct KpeRegistry *registry,
                                  const char *template_id,
                                  const char *text,
                                  int64_t *out_ordinal);

struct KpeKendall *kpe_kendall_new(void);

/**
 * # Safety
 * `counts` must be NULL or a live handle from [`kpe_kendall_new`].
 */
void kpe_kendall_free(struct KpeKendall *counts);

/**
 * Records one judgment where `better` was preferred over `worse`.
 * A score whose `has_*` flag is false counts as missing and excludes the pair.
 *
 * # Safety
 * `counts` must be a live handle not used concurrently from another thread.
 */
enum KpeStatus kpe_kendall_record(struct KpeKendall *counts,
                                  int64_t better,
                                  bool has_better,
                                  int64_t worse,
                                  bool has_worse);

/**
 * # Safety
 * Out-pointers must be NULL (ignored) or writable.
 */
enum KpeStatus kpe_kendall_counts(const struct KpeKendall *counts,
                                  size_t *concordant,
                                  size_t *discordant,
                                  size_t *excluded);

/**
 * `(C - D) / (C + D)`; `Undefined` when no pair was decided.
 *
 * # Safety
 * `out_tau` must be writable.
 */
enum KpeStatus kpe_kendall_tau(const struct KpeKendall *counts, double *out_tau);

/**
 * Fraction of system pairs ordered the same way by `metric[i]` and `human[i]`.
 *
 * # Safety
 * `metric` and `human` must each hold `n` values; `out_accuracy` must be writable.
 */
enum KpeStatus kpe_pairwise_accuracy(const double *metric,
                                     const double *human,
                                     size_t n,
                                     double *out_accuracy);

/**
 * Renders an alignment heatmap as SVG. `cells` is row-major,
 * `n_src` rows by `n_mt` columns.
 *
 * # Safety
 * Token arrays must hold `n_src` / `n_mt` valid C strings, `cells` must hold
 * `n_src * n_mt` values and `out_svg` must be writable.
 */
enum KpeStatus kpe_heatmap_svg(const char *const *src_tokens,
                               size_t n_src,
                               const char *const *mt_tokens,
                               size_t n_mt,
                               const double *cells,
                               char **out_svg);

#endif  /* KPE_H */
