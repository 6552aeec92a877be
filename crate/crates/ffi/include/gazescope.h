#ifndef GAZESCOPE_H
#define GAZESCOPE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum GzStatus {
  GZ_OK = 0,
  GZ_NULL_POINTER = 1,
  GZ_INVALID_UTF8 = 2,
  GZ_PARSE_ERROR = 3,
  GZ_VALIDATION_ERROR = 4,
  GZ_UNSUPPORTED = 5,
  GZ_NOT_FOUND = 6,
  GZ_BUNDLE_ERROR = 7,
  GZ_PANIC = 8,
} GzStatus;

/**
 * Opaque session handle.
 */
typedef struct GzSession GzSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *gz_last_error(void);

/**
 * A new, empty session. Never null.
 */
struct GzSession *gz_session_new(void);

/**
 * # Safety
 * `session` must come from this library and not be used afterwards. Null is ignored.
 */
void gz_session_free(struct GzSession *session);

/**
 * Current version; 0 for a null handle.
 *
 * # Safety
 * `session` must be null or a live handle.
 */
uint64_t gz_session_version(const struct GzSession *session);

/**
 * Adds (or replaces) a sample from gaze TSV bytes.
 *
 * # Safety
 * `id` must be a NUL-terminated string; `data` must point to `len` readable bytes.
 */
enum GzStatus gz_session_add_sample_tsv(struct GzSession *session,
                                        const char *id,
                                        const uint8_t *data,
                                        size_t len,
                                        bool twi_column);

/**
 * Replaces the AOIs from AOI JSON.
 *
 * # Safety
 * `data` must point to `len` readable bytes.
 */
enum GzStatus gz_session_set_aois_json(struct GzSession *session, const uint8_t *data, size_t len);

/**
 * Replaces the TWIs from TWI TSV.
 *
 * # Safety
 * `data` must point to `len` readable bytes.
 */
enum GzStatus gz_session_set_twis_tsv(struct GzSession *session, const uint8_t *data, size_t len);

/**
 * Applies a groups JSON table.
 *
 * # Safety
 * `data` must point to `len` readable bytes.
 */
enum GzStatus gz_session_set_groups_json(struct GzSession *session,
                                         const uint8_t *data,
                                         size_t len);

/**
 * Sets the I-DT dispersion threshold and minimum duration (ms).
 *
 * # Safety
 * `session` must be a live handle.
 */
enum GzStatus gz_session_set_detection(struct GzSession *session,
                                       double dispersion_threshold,
                                       double min_duration);

/**
 * Sets the scope, e.g. `"group:4,one:trial1"`.
 *
 * # Safety
 * `scope` must be a NUL-terminated string.
 */
enum GzStatus gz_session_set_scope(struct GzSession *session, const char *scope);

/**
 * Number of fixations detected in a sample (unscoped).
 *
 * # Safety
 * `sample_id` must be a NUL-terminated string; `out_count` must be writable.
 */
enum GzStatus gz_session_fixation_count(const struct GzSession *session,
                                        const char *sample_id,
                                        size_t *out_count);

/**
 * Fraction of a sample's fixations that hit an AOI (unscoped).
 *
 * # Safety
 * `sample_id` must be a NUL-terminated string; `out_haar` must be writable.
 */
enum GzStatus gz_session_haar(const struct GzSession *session,
                              const char *sample_id,
                              double *out_haar);

/**
 * A relationship matrix under the session scope, as TSV.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out_tsv` must be writable.
 * Release the result with [`gz_string_free`].
 */
enum GzStatus gz_session_matrix_tsv(const struct GzSession *session,
                                    const char *rows,
                                    const char *cols,
                                    const char *metric,
                                    char **out_tsv);

/**
 * The metrics summary under the session scope, as TSV.
 *
 * # Safety
 * `out_tsv` must be writable. Release the result with [`gz_string_free`].
 */
enum GzStatus gz_session_metrics_tsv(const struct GzSession *session, char **out_tsv);

/**
 * Serializes the session as a zip bundle.
 *
 * # Safety
 * `out_data` and `out_len` must be writable. Release with [`gz_bytes_free`].
 */
enum GzStatus gz_session_export(const struct GzSession *session,
                                uint8_t **out_data,
                                size_t *out_len);

/**
 * Builds a new session from a zip bundle. Recomputation mismatches are not
 * errors; they are reported through [`gz_last_error`] with `GZ_OK`.
 *
 * # Safety
 * `data` must point to `len` readable bytes; `out_session` must be writable.
 */
enum GzStatus gz_session_import(const uint8_t *data, size_t len, struct GzSession **out_session);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not freed before.
 */
void gz_string_free(char *s);

/**
 * # Safety
 * `data`/`len` must be exactly as returned by [`gz_session_export`].
 */
void gz_bytes_free(uint8_t *data, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAZESCOPE_H */
