#ifndef CASETRIAGE_H
#define CASETRIAGE_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum CtStatus {
  CT_STATUS_OK = 0,
  CT_STATUS_NULL_ARGUMENT = 1,
  CT_STATUS_INVALID_UTF8 = 2,
  CT_STATUS_INVALID_ARGUMENT = 3,
  CT_STATUS_NOT_FOUND = 4,
  CT_STATUS_IO = 5,
  CT_STATUS_STORAGE = 6,
  CT_STATUS_SCHEMA_MISMATCH = 7,
  CT_STATUS_UNREADABLE_DOCUMENT = 8,
  CT_STATUS_NO_MARKERS = 9,
  CT_STATUS_VALIDATION = 10,
  CT_STATUS_INVALID_QUERY = 11,
  CT_STATUS_CONFIG = 12,
  CT_STATUS_EMPTY_INPUT = 13,
  CT_STATUS_PANIC = 14,
} CtStatus;

/**
 * Clusters, priorities and insights computed over a store's cases.
 */
typedef struct CtAnalysis CtAnalysis;

/**
 * An open case database plus the configuration used to extract into it.
 */
typedef struct CtStore CtStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static string.
 */
const char *ct_version(void);

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *ct_last_error_message(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ct_string_free(char *s);

/**
 * Opens or creates the database at `path`. `config_path` may be null for
 * the built-in configuration.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum CtStatus ct_store_open(const char *path, const char *config_path, struct CtStore **out);

/**
 * Opens an existing database without write access.
 *
 * # Safety
 * As for [`ct_store_open`].
 */
enum CtStatus ct_store_open_read_only(const char *path,
                                      const char *config_path,
                                      struct CtStore **out);

/**
 * Closes a store. Null is ignored.
 *
 * # Safety
 * `store` must come from `ct_store_open*` and not have been closed.
 */
void ct_store_close(struct CtStore *store);

/**
 * # Safety
 * `store` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_store_case_count(const struct CtStore *store, size_t *out);

/**
 * Batches and extracts `text` as a report of `org` for `year`, storing the
 * cases. `out_stored` (nullable) receives the number of cases stored. Cases
 * that fail validation are skipped; if any were, the call still stores the
 * rest and returns `Validation`.
 *
 * # Safety
 * `store` must be a live handle; strings must be NUL-terminated.
 */
enum CtStatus ct_ingest_text(struct CtStore *store,
                             const char *text,
                             const char *org,
                             int32_t year,
                             bool whole_doc_fallback,
                             size_t *out_stored);

/**
 * Ingests a PDF or text file, taking organization and year from the file
 * name unless `org` is non-null or `year` is non-zero.
 *
 * # Safety
 * As for [`ct_ingest_text`].
 */
enum CtStatus ct_ingest_file(struct CtStore *store,
                             const char *path,
                             const char *org,
                             int32_t year,
                             bool whole_doc_fallback,
                             size_t *out_stored);

/**
 * Writes the stored case as JSON, including its highlight spans. Functions
 * returning JSON set `*out` to null when they fail.
 *
 * # Safety
 * `store` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_store_case_json(const struct CtStore *store, const char *case_id, char **out);

/**
 * Copies the cases of the database at `src_path` into `store`, keeping
 * existing cases on id collisions.
 *
 * # Safety
 * `store` must be a live handle; out pointers are nullable.
 */
enum CtStatus ct_store_merge(struct CtStore *store,
                             const char *src_path,
                             size_t *out_copied,
                             size_t *out_skipped);

/**
 * Clusters, ranks and summarizes every case in `store`.
 *
 * # Safety
 * `store` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_analysis_new(const struct CtStore *store, struct CtAnalysis **out);

/**
 * Frees an analysis. Null is ignored.
 *
 * # Safety
 * `analysis` must come from [`ct_analysis_new`] and not have been freed.
 */
void ct_analysis_free(struct CtAnalysis *analysis);

/**
 * # Safety
 * `analysis` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_analysis_clusters_json(const struct CtAnalysis *analysis, char **out);

/**
 * Ranked priority results followed by the band summary, as
 * `{"summary": ..., "results": [...]}`.
 *
 * # Safety
 * `analysis` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_analysis_triage_json(const struct CtAnalysis *analysis, char **out);

/**
 * # Safety
 * `analysis` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_analysis_insights_json(const struct CtAnalysis *analysis, char **out);

/**
 * Cases carrying every tag of `query_json`
 * (`{"selected_tags": [{"category": ..., "tag": ...}]}`), each with the
 * spans that justify its tags.
 *
 * # Safety
 * `analysis` must be a live handle; `out` must be writable.
 */
enum CtStatus ct_analysis_filter_json(const struct CtAnalysis *analysis,
                                      const char *query_json,
                                      char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CASETRIAGE_H */
