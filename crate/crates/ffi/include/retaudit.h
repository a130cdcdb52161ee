#pragma once

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs; regenerate by building the crate. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Default BM25 term-frequency saturation, matching the CLI's `--k1`.
 */
#define RA_DEFAULT_K1 1.2

/**
 * Default BM25 length-normalization strength, matching the CLI's `--b`.
 */
#define RA_DEFAULT_B 0.75

/**
 * Result of every fallible call. Zero is success.
 */
typedef enum RaStatus {
  RA_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  RA_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  RA_STATUS_INVALID_UTF8 = 2,
  /**
   * The operating system reported an I/O failure.
   */
  RA_STATUS_IO = 3,
  /**
   * An input file exists but its contents are malformed.
   */
  RA_STATUS_PARSE = 4,
  /**
   * An argument value is outside its documented domain.
   */
  RA_STATUS_INVALID_ARGUMENT = 5,
  /**
   * A document ordinal or id does not exist in the index.
   */
  RA_STATUS_UNKNOWN_DOC = 6,
  /**
   * The caller buffer cannot hold the result; the size out-parameter
   * holds the required capacity.
   */
  RA_STATUS_BUFFER_TOO_SMALL = 7,
  /**
   * A defect inside the library (including a caught panic).
   */
  RA_STATUS_INTERNAL = 8,
} RaStatus;

/**
 * A loaded document collection. Opaque; create with [`ra_corpus_load`].
 */
typedef struct RaCorpus RaCorpus;

/**
 * A searchable index over one corpus slice. Opaque; create with
 * [`ra_index_build`].
 */
typedef struct RaIndex RaIndex;

/**
 * One retrieved document.
 */
typedef struct RaHit {
  /**
   * Position in the result list, 1-based.
   */
  uint32_t rank;
  /**
   * Document ordinal; resolve to an id with [`ra_index_doc_id`].
   */
  uint32_t doc;
  /**
   * BM25 score, strictly positive.
   */
  double score;
} RaHit;

/**
 * One Lorenz-curve point.
 */
typedef struct RaPoint {
  /**
   * Fraction of the population, ascending from 0 to 1.
   */
  double population_share;
  /**
   * Fraction of the total value held by that population share.
   */
  double value_share;
} RaPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The library version as a static nul-terminated string.
 */
const char *ra_version(void);

/**
 * Message for the calling thread's most recent failure, or an empty string
 * if nothing failed yet. The pointer stays valid until this thread's next
 * failing call.
 */
const char *ra_last_error(void);

/**
 * Loads a typed corpus from `path` (`.jsonl` or `.tsv`, decided by
 * extension) and stores an owned handle in `*out`.
 *
 * # Safety
 * `path` must point to a nul-terminated string and `out` to writable
 * storage for one pointer. On success the caller owns `*out` and must
 * release it with [`ra_corpus_free`]; on failure `*out` is untouched.
 */
enum RaStatus ra_corpus_load(const char *path, struct RaCorpus **out);

/**
 * Releases a corpus handle. Null is a no-op.
 *
 * # Safety
 * `corpus` must be a pointer from [`ra_corpus_load`] that has not been
 * freed, or null.
 */
void ra_corpus_free(struct RaCorpus *corpus);

/**
 * Number of documents in the corpus; 0 for a null handle.
 *
 * # Safety
 * `corpus` must be a live handle from [`ra_corpus_load`], or null.
 */
uint64_t ra_corpus_doc_count(const struct RaCorpus *corpus);

/**
 * Builds a BM25 index over `corpus` and stores an owned handle in `*out`.
 * `category` restricts the index to one document type (`"publication"`,
 * `"dataset"`, `"variable"`, or any custom label); null indexes everything.
 *
 * # Safety
 * `corpus` must be a live handle from [`ra_corpus_load`]; `category` must
 * be null or a nul-terminated string; `out` must be writable storage for
 * one pointer. On success the caller owns `*out` and must release it with
 * [`ra_index_free`].
 */
enum RaStatus ra_index_build(const struct RaCorpus *corpus,
                             const char *category,
                             struct RaIndex **out);

/**
 * Releases an index handle. Null is a no-op.
 *
 * # Safety
 * `index` must be a pointer from [`ra_index_build`] that has not been
 * freed, or null.
 */
void ra_index_free(struct RaIndex *index);

/**
 * Number of indexed documents; 0 for a null handle.
 *
 * # Safety
 * `index` must be a live handle from [`ra_index_build`], or null.
 */
uint64_t ra_index_doc_count(const struct RaIndex *index);

/**
 * Mean indexed document length in tokens; 0 for a null handle or an empty
 * index.
 *
 * # Safety
 * `index` must be a live handle from [`ra_index_build`], or null.
 */
double ra_index_avg_doc_length(const struct RaIndex *index);

/**
 * Runs one BM25 query and fills `hits` with up to `depth` results, best
 * first. `query` is analyzed exactly like document text (lowercased,
 * split on non-alphanumerics, stopwords dropped). `hit_count` receives the
 * number of hits written; if more than `capacity` hits were found, nothing
 * is written, `*hit_count` is the required capacity, and the call returns
 * `RA_STATUS_BUFFER_TOO_SMALL`. Passing `capacity` = `depth` never trips
 * that. Pass [`RA_DEFAULT_K1`]/[`RA_DEFAULT_B`] for standard scoring.
 *
 * # Safety
 * `index` must be a live handle from [`ra_index_build`]; `query` must be a
 * nul-terminated string; `hits` must point to `capacity` writable slots
 * (null is allowed when `capacity` is 0); `hit_count` must be writable.
 */
enum RaStatus ra_index_search(const struct RaIndex *index,
                              const char *query,
                              double k1,
                              double b,
                              uintptr_t depth,
                              struct RaHit *hits,
                              uintptr_t capacity,
                              uintptr_t *hit_count);

/**
 * Copies the id of document `ordinal` into `buf` as a nul-terminated
 * string. `written` receives the bytes written including the nul; when
 * `capacity` is too small, nothing is written, `*written` is the required
 * capacity, and the call returns `RA_STATUS_BUFFER_TOO_SMALL`.
 *
 * # Safety
 * `index` must be a live handle from [`ra_index_build`]; `buf` must point
 * to `capacity` writable bytes (null is allowed when `capacity` is 0);
 * `written` must be writable.
 */
enum RaStatus ra_index_doc_id(const struct RaIndex *index,
                              uint32_t ordinal,
                              char *buf,
                              uintptr_t capacity,
                              uintptr_t *written);

/**
 * Gini coefficient of `len` nonnegative values with a positive sum, stored
 * in `*out`.
 *
 * # Safety
 * `values` must point to `len` readable doubles (null is allowed when
 * `len` is 0); `out` must be writable.
 */
enum RaStatus ra_gini(const double *values, uintptr_t len, double *out);

/**
 * Lorenz curve of `len` nonnegative values with a positive sum: `len + 1`
 * points from (0, 0) to (1, 1). `written` receives the number of points
 * written; when `capacity` is too small, nothing is written, `*written` is
 * the required capacity, and the call returns
 * `RA_STATUS_BUFFER_TOO_SMALL`.
 *
 * # Safety
 * `values` must point to `len` readable doubles; `points` must point to
 * `capacity` writable slots (null is allowed when `capacity` is 0);
 * `written` must be writable.
 */
enum RaStatus ra_lorenz(const double *values,
                        uintptr_t len,
                        struct RaPoint *points,
                        uintptr_t capacity,
                        uintptr_t *written);

/**
 * Kendall's τ-b between two paired score vectors of length `len` (ties
 * handled), stored in `*out`. Needs `len` ≥ 2 and variation on both sides.
 *
 * # Safety
 * `xs` and `ys` must each point to `len` readable doubles; `out` must be
 * writable.
 */
enum RaStatus ra_kendall_tau(const double *xs, const double *ys, uintptr_t len, double *out);

/**
 * Spearman's ρ between two paired score vectors of length `len` (average
 * ranks for ties), stored in `*out`. Needs `len` ≥ 2 and variation on both
 * sides.
 *
 * # Safety
 * `xs` and `ys` must each point to `len` readable doubles; `out` must be
 * writable.
 */
enum RaStatus ra_spearman_rho(const double *xs, const double *ys, uintptr_t len, double *out);

/**
 * Rank-biased overlap of two ranked id lists at persistence `p` (strictly
 * between 0 and 1), truncated to the longer list's depth and normalized so
 * identical lists score exactly 1. Stored in `*out`.
 *
 * # Safety
 * `left` and `right` must each point to an array of nul-terminated strings
 * of the stated length (null is allowed for a zero-length list); `out`
 * must be writable.
 */
enum RaStatus ra_rbo(const char *const *left,
                     uintptr_t left_len,
                     const char *const *right,
                     uintptr_t right_len,
                     double p,
                     double *out);

/**
 * Jaccard overlap of the top `k` entries of two ranked id lists, stored in
 * `*out`. Lists shorter than `k` are used whole.
 *
 * # Safety
 * `left` and `right` must each point to an array of nul-terminated strings
 * of the stated length (null is allowed for a zero-length list); `out`
 * must be writable.
 */
enum RaStatus ra_jaccard_topk(const char *const *left,
                              uintptr_t left_len,
                              const char *const *right,
                              uintptr_t right_len,
                              uintptr_t k,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
