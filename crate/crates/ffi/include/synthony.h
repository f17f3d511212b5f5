/* C interface for the synthesizer selection engine. */

#ifndef SYNTHONY_H
#define SYNTHONY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum SynthonyStatus {
  SYNTHONY_STATUS_OK = 0,
  SYNTHONY_STATUS_NULL_ARGUMENT = 1,
  SYNTHONY_STATUS_INVALID_UTF8 = 2,
  SYNTHONY_STATUS_IO_ERROR = 3,
  SYNTHONY_STATUS_PARSE_ERROR = 4,
  SYNTHONY_STATUS_INVALID_ARGUMENT = 5,
  // Hard filters removed every model.
  SYNTHONY_STATUS_EMPTY_POOL = 6,
  SYNTHONY_STATUS_INTERNAL = 7,
} SynthonyStatus;

// Opaque engine handle: a loaded, validated registry.
typedef struct SynthonyEngine SynthonyEngine;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static string; never freed by the caller.
const char *synthony_version(void);

// Message for the most recent failure on this thread, or null. Valid until
// the next failing call on the same thread; do not free.
const char *synthony_last_error_message(void);

// Creates an engine from a registry file; pass null to use the built-in
// registry. On success writes the handle to `out_engine`.
//
// # Safety
// `registry_path` must be null or a valid NUL-terminated path; `out_engine`
// must be a valid pointer.
enum SynthonyStatus synthony_engine_new(const char *registry_path,
                                        struct SynthonyEngine **out_engine);

// Releases an engine handle. Null is a no-op.
//
// # Safety
// `engine` must be null or a pointer from [`synthony_engine_new`], released
// at most once.
void synthony_engine_free(struct SynthonyEngine *engine);

// Frees a string returned by this library. Null is a no-op.
//
// # Safety
// `s` must be null or a string returned by this library, freed at most once.
void synthony_string_free(char *s);

// Profiles a CSV file and writes the profile document (stress statistics,
// flags, requirement vector, meta-features) as JSON to `out_json`.
//
// # Safety
// `engine` must be a live engine handle; `csv_path` a valid NUL-terminated
// path; `out_json` a valid pointer.
enum SynthonyStatus synthony_profile_csv(const struct SynthonyEngine *engine,
                                         const char *csv_path,
                                         char **out_json);

// Ranks synthesizers for a CSV file and writes the recommendation document
// as JSON to `out_json`. `intent` may be null (unit scale factors) or one of
// "privacy", "fidelity", "utility". `top_n` bounds the listed alternatives.
//
// # Safety
// `engine` must be a live engine handle; `csv_path` a valid NUL-terminated
// path; `intent` null or NUL-terminated; `out_json` a valid pointer.
enum SynthonyStatus synthony_recommend_csv(const struct SynthonyEngine *engine,
                                           const char *csv_path,
                                           const char *intent,
                                           bool cpu_only,
                                           bool strict_dp,
                                           uint32_t top_n,
                                           char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYNTHONY_H */
