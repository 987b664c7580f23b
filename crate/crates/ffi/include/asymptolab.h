#ifndef ASYMPTOLAB_H
#define ASYMPTOLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. The positive values match the command-line exit codes.
typedef enum AsymStatus {
  ASYM_STATUS_OK = 0,
  // A cross-check raised inconsistency flags.
  ASYM_STATUS_INCONSISTENT = 1,
  // Malformed JSON or invalid parameters.
  ASYM_STATUS_PARSE = 2,
  // A resource cap was hit.
  ASYM_STATUS_RESOURCE = 3,
  // A required pointer was null or a string was not UTF-8.
  ASYM_STATUS_INVALID_ARGUMENT = 4,
  // The library panicked; the handle involved should be dropped.
  ASYM_STATUS_PANIC = 5,
} AsymStatus;

// An example family built from a JSON family spec.
typedef struct AsymFamily AsymFamily;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next call on the same thread.
const char *asym_last_error(void);

// Frees a string returned by this library. Null is a no-op.
//
// # Safety
// `s` is null or came from this library and was not freed before.
void asym_string_free(char *s);

// Builds a family from a JSON spec such as `{"kind": "geometric", "q": 2}`.
//
// # Safety
// `spec_json` is a NUL-terminated string; `out` is valid for one write.
enum AsymStatus asym_family_new(const char *spec_json, struct AsymFamily **out);

// Frees a family. Null is a no-op.
//
// # Safety
// `f` is null or came from [`asym_family_new`] and was not freed before.
void asym_family_free(struct AsymFamily *f);

// Porosity at infinity of the family's distance set by the gap formula on
// the family's horizon schedule.
//
// # Safety
// `f` is a live family; `out` is valid for one write.
enum AsymStatus asym_family_porosity(const struct AsymFamily *f, double *out);

// Classification report of the family as JSON. Free with
// [`asym_string_free`].
//
// # Safety
// `f` is a live family; `out` is valid for one write.
enum AsymStatus asym_family_classify_json(const struct AsymFamily *f, uint64_t seed, char **out);

// Runs the gallery cross-check suite. Writes the report JSON and returns
// [`AsymStatus::Inconsistent`] when any flag was raised.
//
// # Safety
// `out` is valid for one write.
enum AsymStatus asym_verify_json(uint64_t seed, char **out);

// Runs a CLI configuration (the `--spec` JSON) and writes its reports into
// `out_dir`.
//
// # Safety
// Both arguments are NUL-terminated strings.
enum AsymStatus asym_run(const char *config_json, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ASYMPTOLAB_H */
