#ifndef NOSQL_ADVISOR_H
#define NOSQL_ADVISOR_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define NSA_FEATURE_COUNT 9

#define NSA_AREA_COUNT 6

// Result of every fallible call. Zero is success.
typedef enum NsaStatus {
  NSA_STATUS_OK = 0,
  NSA_STATUS_NULL_POINTER = 1,
  NSA_STATUS_INVALID_UTF8 = 2,
  NSA_STATUS_IO = 3,
  NSA_STATUS_CORRUPT_BUNDLE = 4,
  NSA_STATUS_BAD_FEATURE_VECTOR = 5,
  NSA_STATUS_BAD_FEATURE_INDEX = 6,
  NSA_STATUS_BAD_DATASET = 7,
  NSA_STATUS_DATASET_MISMATCH = 8,
  NSA_STATUS_INTERNAL = 9,
} NsaStatus;

// Opaque trained advisor (one tree per application area).
typedef struct NsaBundle NsaBundle;

// Opaque dataset of solution records.
typedef struct NsaDataset NsaDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next call on the same thread; do not free.
const char *nsa_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void nsa_string_free(char *s);

// Static name of area `index`, or null when out of range. Do not free.
const char *nsa_area_name(size_t index);

// Static name of feature `index`, or null when out of range. Do not free.
const char *nsa_feature_name(size_t index);

// The bundle shipped with the library.
//
// # Safety
// `out` must be a valid pointer to write the handle to.
enum NsaStatus nsa_bundle_canonical(struct NsaBundle **out);

// Loads a bundle JSON file. `*out` is left untouched on failure.
//
// # Safety
// `path` must be a NUL-terminated string; `out` a valid pointer.
enum NsaStatus nsa_bundle_load(const char *path, struct NsaBundle **out);

// # Safety
// `b` must come from `nsa_bundle_*` and not be used afterwards. Null is ignored.
void nsa_bundle_free(struct NsaBundle *b);

// Dataset version the bundle was trained on; free with `nsa_string_free`.
//
// # Safety
// `b` must be a live bundle handle or null.
char *nsa_bundle_dataset_version(const struct NsaBundle *b);

// Writes one byte per area (1 = suitable) into `out_verdicts`.
//
// # Safety
// `features` must point to 9 readable bytes, `out_verdicts` to 6 writable bytes.
enum NsaStatus nsa_predict(const struct NsaBundle *b,
                           const uint8_t *features,
                           uint8_t *out_verdicts);

// Full report (verdicts, decision paths, leaf counts) as JSON; free the
// string with `nsa_string_free`.
//
// # Safety
// `features` must point to 9 readable bytes; `out_json` must be valid.
enum NsaStatus nsa_predict_json(const struct NsaBundle *b,
                                const uint8_t *features,
                                char **out_json);

// Verdicts before and after flipping feature `toggle`, plus a bit mask of
// the areas whose verdict changed (bit `i` = area `i`).
//
// # Safety
// `features` must point to 9 readable bytes, `before`/`after` to 6 writable
// bytes each, `changed_mask` to a writable `uint32_t`.
enum NsaStatus nsa_what_if(const struct NsaBundle *b,
                           const uint8_t *features,
                           size_t toggle,
                           uint8_t *before,
                           uint8_t *after,
                           uint32_t *changed_mask);

// The dataset shipped with the library.
//
// # Safety
// `out` must be a valid pointer to write the handle to.
enum NsaStatus nsa_dataset_canonical(struct NsaDataset **out);

// Loads a dataset CSV. Parsing errors give `BadDataset`; record invariant
// violations are reported by `nsa_dataset_violations`, not here.
//
// # Safety
// `path` must be a NUL-terminated string; `out` a valid pointer.
enum NsaStatus nsa_dataset_load(const char *path, struct NsaDataset **out);

// # Safety
// `d` must come from `nsa_dataset_*` and not be used afterwards. Null is ignored.
void nsa_dataset_free(struct NsaDataset *d);

// Number of records; 0 for a null handle.
//
// # Safety
// `d` must be a live dataset handle or null.
size_t nsa_dataset_len(const struct NsaDataset *d);

// Content version string; free with `nsa_string_free`.
//
// # Safety
// `d` must be a live dataset handle or null.
char *nsa_dataset_version(const struct NsaDataset *d);

// Writes the number of record invariant violations to `out_count`.
//
// # Safety
// `d` must be a live dataset handle; `out_count` a valid pointer.
enum NsaStatus nsa_dataset_violations(const struct NsaDataset *d, size_t *out_count);

// Checks that a bundle was trained on this dataset.
//
// # Safety
// Both handles must be live.
enum NsaStatus nsa_bundle_matches_dataset(const struct NsaBundle *b, const struct NsaDataset *d);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOSQL_ADVISOR_H */
