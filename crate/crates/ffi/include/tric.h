#ifndef TRIC_H
#define TRIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum TricStatus {
  TRIC_STATUS_OK = 0,
  TRIC_STATUS_NULL_ARGUMENT = 1,
  TRIC_STATUS_INVALID_UTF8 = 2,
  TRIC_STATUS_UNKNOWN_ENGINE = 3,
  TRIC_STATUS_PARSE_ERROR = 4,
  TRIC_STATUS_DUPLICATE_QUERY = 5,
  TRIC_STATUS_OUT_OF_ORDER = 6,
  TRIC_STATUS_PANIC = 7,
} TricStatus;

/**
 * Opaque engine handle.
 */
typedef struct TricEngine TricEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates an engine. `engine` is one of `tric`, `tric+`, `inv`, `inv+`,
 * `inc`, `inc+`, `oracle`; a nonzero `isomorphism` requires injective
 * embeddings.
 *
 * # Safety
 * `engine` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TricStatus tric_engine_new(const char *engine, int32_t isomorphism, struct TricEngine **out);

/**
 * Releases an engine. Null is ignored.
 *
 * # Safety
 * `engine` must come from [`tric_engine_new`] and not be used afterwards.
 */
void tric_engine_free(struct TricEngine *engine);

/**
 * Indexes every query in `text` (query file format). Nothing is indexed if
 * the text fails to parse.
 *
 * # Safety
 * `engine` must be a live handle and `text` a NUL-terminated string.
 */
enum TricStatus tric_engine_add_queries(struct TricEngine *engine, const char *text);

/**
 * Adds the edge `label = (source, target)` at time `t` and queues the
 * resulting notifications. `out_count`, if not null, receives the number of
 * new embeddings.
 *
 * # Safety
 * `engine` must be a live handle; the strings must be NUL-terminated;
 * `out_count` must be null or valid.
 */
enum TricStatus tric_engine_push_update(struct TricEngine *engine,
                                        const char *label,
                                        const char *source,
                                        const char *target,
                                        uint64_t t,
                                        size_t *out_count);

/**
 * Moves all queued notifications into a newly allocated TSV string, one
 * line per embedding: `t<TAB>query_id<TAB>vertex...`. Release it with
 * [`tric_string_free`].
 *
 * # Safety
 * `engine` must be a live handle and `out` a valid pointer.
 */
enum TricStatus tric_engine_take_notifications(struct TricEngine *engine, char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void tric_string_free(char *s);

/**
 * Message describing the last failure on this thread, or an empty string.
 * Valid until the next call into this library from the same thread.
 */
const char *tric_last_error(void);

/**
 * Number of notifications currently queued.
 *
 * # Safety
 * `engine` must be null or a live handle.
 */
size_t tric_engine_pending(const struct TricEngine *engine);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRIC_H */
