#ifndef HENT_H
#define HENT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HentStatus {
  HENT_STATUS_OK = 0,
  HENT_STATUS_NULL_ARGUMENT = 1,
  HENT_STATUS_INVALID_UTF8 = 2,
  HENT_STATUS_IO = 3,
  HENT_STATUS_INVALID_INPUT = 4,
  HENT_STATUS_EVAL_FAILED = 5,
  HENT_STATUS_PANIC = 6,
} HentStatus;

// Opaque handle to a loaded corpus.
typedef struct HentCorpus HentCorpus;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer
// stays valid until the next `hent_*` call on the same thread.
const char *hent_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from a `hent_*` out parameter and not be freed twice.
void hent_string_free(char *s);

// Loads a JSONL corpus file.
//
// # Safety
// `path` must be a valid C string and `out` a valid pointer.
enum HentStatus hent_corpus_load(const char *path, struct HentCorpus **out);

// Parses a corpus from JSONL text.
//
// # Safety
// `jsonl` must be a valid C string and `out` a valid pointer.
enum HentStatus hent_corpus_from_jsonl(const char *jsonl, struct HentCorpus **out);

// # Safety
// `corpus` must be null or a handle from this library, freed at most once.
void hent_corpus_free(struct HentCorpus *corpus);

// Writes the number of records, mentions and distinct repositories.
//
// # Safety
// `corpus` must be a live handle; the out pointers must be valid.
enum HentStatus hent_corpus_counts(const struct HentCorpus *corpus,
                                   size_t *records,
                                   size_t *mentions,
                                   size_t *repositories);

// Writes mention counts per class into `out[4]`, ordered
// DatasetDirectLink, DatasetLandingPage, Software, Other.
//
// # Safety
// `corpus` must be a live handle and `out` must point to 4 writable slots.
enum HentStatus hent_corpus_class_counts(const struct HentCorpus *corpus, size_t *out);

// Parses raw model output. `out_json` receives
// `{"id", "predictions": [{"url", "label"}], "parse_status"}`.
//
// # Safety
// `raw` must be a valid C string and `out_json` a valid pointer.
enum HentStatus hent_parse_output(const char *raw, char **out_json);

// Longest-common-substring length of `pred` and `gold` over the character
// length of `gold`.
//
// # Safety
// `pred` and `gold` must be valid C strings and `out` a valid pointer.
enum HentStatus hent_lcs_ratio(const char *pred, const char *gold, double *out);

// URLs found in markdown text, as a JSON array of
// `{"url", "start", "end", "kind"}` with character offsets.
//
// # Safety
// `markdown` must be a valid C string and `out_json` a valid pointer.
enum HentStatus hent_extract_urls(const char *markdown, char **out_json);

// Scores prediction records (JSONL, one per evaluation unit) against the
// corpus and writes the evaluation report as JSON. `task` is `e+cl` or
// `cl`; `tau` of 0 means any overlap.
//
// # Safety
// `corpus` must be a live handle; the strings must be valid C strings and
// `out_json` a valid pointer.
enum HentStatus hent_evaluate(const struct HentCorpus *corpus,
                              const char *predictions_jsonl,
                              const char *model,
                              const char *task,
                              const char *mode,
                              double tau,
                              char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HENT_H */
