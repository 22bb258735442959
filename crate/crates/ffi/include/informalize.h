#ifndef INFORMALIZE_H
#define INFORMALIZE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum InfStatus {
  INF_STATUS_OK = 0,
  // A required pointer argument was NULL.
  INF_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  INF_STATUS_INVALID_UTF8 = 2,
  // A file could not be read or parsed.
  INF_STATUS_IO = 3,
  // Input was well-formed text but not valid for the operation.
  INF_STATUS_INVALID = 4,
  // The tactic line matches no known pattern.
  INF_STATUS_NO_MATCH = 5,
  // The text holds no ('formal', 'informal') tuple.
  INF_STATUS_FORMAT = 6,
  // An internal error was caught at the boundary.
  INF_STATUS_INTERNAL = 99,
} InfStatus;

// Tactic template table handle.
typedef struct InfTemplates InfTemplates;

// Byte-level BPE tokenizer handle.
typedef struct InfTokenizer InfTokenizer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *inf_version(void);

// Message for the last failed call on this thread, or NULL. Valid until
// the next call into this library on the same thread.
const char *inf_last_error(void);

// Release a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not have been freed already.
void inf_string_free(char *s);

// The bundled reference tokenizer.
//
// # Safety
// `out` must be a valid pointer to write a handle to.
enum InfStatus inf_tokenizer_reference(struct InfTokenizer **out);

// Load a tokenizer from a vocab JSON and a merges file.
//
// # Safety
// String arguments must be NUL-terminated; `out` must be writable.
enum InfStatus inf_tokenizer_from_files(const char *vocab_path,
                                        const char *merges_path,
                                        struct InfTokenizer **out);

// Number of BPE tokens in `text_utf8`.
//
// # Safety
// `tokenizer` must be a live handle; `text_utf8` NUL-terminated; `out_count` writable.
enum InfStatus inf_tokenizer_count(const struct InfTokenizer *tokenizer,
                                   const char *text_utf8,
                                   uintptr_t *out_count);

// # Safety
// `tokenizer` must come from this library and not be used afterwards.
void inf_tokenizer_free(struct InfTokenizer *tokenizer);

// The default tactic templates.
//
// # Safety
// `out` must be writable.
enum InfStatus inf_templates_default(struct InfTemplates **out);

// Defaults overlaid with a TOML (or `.json`) override file.
//
// # Safety
// `path` must be NUL-terminated; `out` writable.
enum InfStatus inf_templates_load(const char *path, struct InfTemplates **out);

// # Safety
// `templates` must come from this library and not be used afterwards.
void inf_templates_free(struct InfTemplates *templates);

// Informal sentence for one tactic line. Returns `NoMatch` when the line
// is not a recognised tactic.
//
// # Safety
// `templates` must be live; `line` NUL-terminated; `out` writable.
enum InfStatus inf_informalize_tactic(const struct InfTemplates *templates,
                                      const char *line,
                                      char **out);

// Extract declarations from Lean source as JSON
// `{"records": [...], "warnings": [...]}`.
//
// # Safety
// String arguments must be NUL-terminated; `out_json` writable.
enum InfStatus inf_extract_theorems_json(const char *source,
                                         const char *file_name,
                                         char **out_json);

// First ('formal', 'informal') tuple in a teacher completion.
//
// # Safety
// `raw` must be NUL-terminated; both out-pointers writable.
enum InfStatus inf_parse_teacher_response(const char *raw, char **out_formal, char **out_informal);

// Render a pair in the single-quoted tuple format.
//
// # Safety
// String arguments must be NUL-terminated; `out` writable.
enum InfStatus inf_render_tuple(const char *formal, const char *informal, char **out);

// Deterministic pair id used for deduplication.
//
// # Safety
// String arguments must be NUL-terminated; `out` writable.
enum InfStatus inf_content_id(const char *formal, const char *informal, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INFORMALIZE_H */
