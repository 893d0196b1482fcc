#ifndef DISCOQAD_H
#define DISCOQAD_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call. On anything but `Ok` the message is
 * available from `dq_last_error` on the same thread.
 */
typedef enum DqStatus {
  DQ_STATUS_OK = 0,
  DQ_STATUS_NULL_POINTER = 1,
  DQ_STATUS_INVALID_UTF8 = 2,
  DQ_STATUS_INVALID_ARGUMENT = 3,
  DQ_STATUS_VALIDATION = 4,
  DQ_STATUS_UNKNOWN_UTILITY = 5,
  DQ_STATUS_UTILITY_FAILED = 6,
  DQ_STATUS_IO = 7,
  DQ_STATUS_PANIC = 8,
} DqStatus;

typedef struct DqPool DqPool;

typedef struct DqRegistry DqRegistry;

/**
 * Edit operations turning a hypothesis into a baseline, with the rate
 * `(insertions + deletions + substitutions + shifts) / reference_length`.
 */
typedef struct DqEditRate {
  size_t insertions;
  size_t deletions;
  size_t substitutions;
  size_t shifts;
  size_t reference_length;
  double rate;
} DqEditRate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string.
 */
const char *dq_version(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void dq_string_free(char *s);

/**
 * Sentence BLEU (effective order, exponential smoothing), in `[0, 100]`.
 *
 * # Safety
 * `hyp` and `ref_` must be valid C strings, `out` a writable `double`.
 */
enum DqStatus dq_sentence_bleu(const char *hyp, const char *ref_, double *out);

/**
 * Sentence chrF, in `[0, 100]`.
 *
 * # Safety
 * As [`dq_sentence_bleu`].
 */
enum DqStatus dq_sentence_chrf(const char *hyp, const char *ref_, double *out);

/**
 * Corpus BLEU over `n` aligned hypothesis/reference pairs.
 *
 * # Safety
 * `hyps` and `refs` must point to `n` valid C strings each.
 */
enum DqStatus dq_corpus_bleu(const char *const *hyps,
                             const char *const *refs,
                             size_t n,
                             double *out);

/**
 * Corpus chrF over `n` aligned hypothesis/reference pairs.
 *
 * # Safety
 * As [`dq_corpus_bleu`].
 */
enum DqStatus dq_corpus_chrf(const char *const *hyps,
                             const char *const *refs,
                             size_t n,
                             double *out);

/**
 * Edit rate of `hyp` against `baseline`. Fails on an empty baseline.
 *
 * # Safety
 * `hyp` and `baseline` must be valid C strings, `out` writable.
 */
enum DqStatus dq_edit_rate(const char *hyp, const char *baseline, struct DqEditRate *out);

/**
 * Lexical cohesion ratio of `text_`. `language` selects a built-in
 * stopword list; NULL treats every token as a content word.
 *
 * # Safety
 * `text_` must be a valid C string, `language` NULL or a valid C string.
 */
enum DqStatus dq_lc_ratio(const char *text_, const char *language, double *out);

/**
 * Creates a registry with the `bleu`, `chrf`, `lc` and `lc_raw` utilities.
 * `language` selects the stopword list for the cohesion utilities (NULL for
 * none).
 *
 * # Safety
 * `language` NULL or a valid C string; `out` writable.
 */
enum DqStatus dq_registry_new(const char *language, struct DqRegistry **out);

/**
 * Comma-separated utility names. Free the result with [`dq_string_free`].
 *
 * # Safety
 * `registry` must be a live handle, `out` writable.
 */
enum DqStatus dq_registry_names(const struct DqRegistry *registry, char **out);

/**
 * # Safety
 * `registry` must be NULL or a handle from [`dq_registry_new`] not yet freed.
 */
void dq_registry_free(struct DqRegistry *registry);

/**
 * Creates an empty candidate pool for sentence `index` of `doc_id`.
 *
 * # Safety
 * `doc_id` must be a valid C string, `out` writable.
 */
enum DqStatus dq_pool_new(const char *doc_id, size_t index, struct DqPool **out);

/**
 * Appends a candidate. `logprob` (natural log, <= 0) and `qe` are
 * optional: pass NULL to leave them unset.
 *
 * # Safety
 * `pool` must be a live handle; `text_` a valid C string; `logprob` and
 * `qe` NULL or readable.
 */
enum DqStatus dq_pool_push(struct DqPool *pool,
                           const char *text_,
                           const double *logprob,
                           const double *qe);

/**
 * Number of candidates; 0 for a NULL handle.
 *
 * # Safety
 * `pool` must be NULL or a live handle.
 */
size_t dq_pool_len(const struct DqPool *pool);

/**
 * # Safety
 * `pool` must be NULL or a handle from [`dq_pool_new`] not yet freed.
 */
void dq_pool_free(struct DqPool *pool);

/**
 * Index of the most probable candidate (smallest index on ties). Every
 * candidate needs a log-probability.
 *
 * # Safety
 * `pool` must be a live handle, `out` writable.
 */
enum DqStatus dq_select_map(const struct DqPool *pool, size_t *out);

/**
 * Index of the candidate with the highest QE score (smallest index on
 * ties). Every candidate needs a QE score.
 *
 * # Safety
 * As [`dq_select_map`].
 */
enum DqStatus dq_select_rerank(const struct DqPool *pool, size_t *out);

/**
 * MBR selection with the named utility, using the pool itself as
 * pseudo-references. When `expected_utilities` is not NULL it receives one
 * value per candidate and must hold at least `capacity` doubles, with
 * `capacity >= dq_pool_len(pool)`.
 *
 * # Safety
 * `pool` and `registry` must be live handles, `utility` a valid C string,
 * `out` writable and `expected_utilities` NULL or writable for `capacity`
 * doubles.
 */
enum DqStatus dq_select_mbr(const struct DqPool *pool,
                            const struct DqRegistry *registry,
                            const char *utility,
                            bool include_self,
                            size_t *out,
                            double *expected_utilities,
                            size_t capacity);

/**
 * Message for the most recent failed call on this thread, or NULL if the
 * last call succeeded. Valid until the next call on the same thread.
 */
const char *dq_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DISCOQAD_H */
