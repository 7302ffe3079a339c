#ifndef GRIDSIEVE_H
#define GRIDSIEVE_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GsStatus {
  GS_STATUS_OK = 0,
  GS_STATUS_NULL_ARGUMENT = 1,
  GS_STATUS_INVALID_UTF8 = 2,
  GS_STATUS_USAGE = 3,
  GS_STATUS_VALIDATION = 4,
  GS_STATUS_IO = 5,
  GS_STATUS_RUNTIME = 6,
  GS_STATUS_BUFFER_TOO_SMALL = 7,
  GS_STATUS_PANIC = 8,
} GsStatus;

/**
 * How [`gs_sequence_id`] combines adjacent byte values.
 */
typedef enum GsIdFormula {
  GS_ID_FORMULA_SUM_OF_SQUARES = 0,
  GS_ID_FORMULA_SQUARE_OF_SUM = 1,
} GsIdFormula;

/**
 * Which score equation [`gs_models_score`] evaluates.
 */
typedef enum GsModelKind {
  GS_MODEL_KIND_QPT = 0,
  GS_MODEL_KIND_WORD = 1,
  GS_MODEL_KIND_PATH = 2,
} GsModelKind;

typedef struct GsAlphabet GsAlphabet;

typedef struct GsKeySpace GsKeySpace;

typedef struct GsLexicon GsLexicon;

typedef struct GsModels GsModels;

typedef struct GsNgram GsNgram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `cap` bytes. Returns the full message
 * length excluding the terminator.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t gs_last_error_message(char *buf, size_t cap);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum GsStatus gs_alphabet_load(const char *path, struct GsAlphabet **out);

/**
 * Parses alphabet text: one `symbol<TAB>byte` per line.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum GsStatus gs_alphabet_parse(const char *text, struct GsAlphabet **out);

/**
 * Number of symbols, or 0 for a null handle.
 *
 * # Safety
 * `alphabet` must be null or a live handle.
 */
size_t gs_alphabet_len(const struct GsAlphabet *alphabet);

/**
 * Encodes `text`, dropping characters outside the alphabet. Writes up to
 * `cap` codes to `codes` and the full encoded length to `out_len`; returns
 * `BUFFER_TOO_SMALL` when `cap` is short.
 *
 * # Safety
 * `alphabet` must be a live handle, `text` NUL-terminated, `codes` valid for
 * `cap` writes and `out_len` writable.
 */
enum GsStatus gs_alphabet_encode(const struct GsAlphabet *alphabet,
                                 const char *text,
                                 uint8_t *codes,
                                 size_t cap,
                                 size_t *out_len);

/**
 * # Safety
 * `alphabet` must be null or a handle from this library, not yet freed.
 */
void gs_alphabet_free(struct GsAlphabet *alphabet);

/**
 * # Safety
 * `alphabet` must be a live handle, `codes` valid for `len` reads and `out`
 * writable.
 */
enum GsStatus gs_sequence_id(const struct GsAlphabet *alphabet,
                             const uint8_t *codes,
                             size_t len,
                             enum GsIdFormula formula,
                             uint64_t *out);

/**
 * Key space of a `rows`×`cols` grid with precomputed permutation tables.
 *
 * # Safety
 * `out` must be writable.
 */
enum GsStatus gs_keyspace_new(size_t rows, size_t cols, struct GsKeySpace **out);

/**
 * Keys per level, or 0 for a null handle.
 *
 * # Safety
 * `space` must be null or a live handle.
 */
uint64_t gs_keyspace_size(const struct GsKeySpace *space);

/**
 * Writes the output of key `ordinal` applied to the row-major grid `input`.
 *
 * # Safety
 * `space` must be a live handle; `input` and `output` must each be valid for
 * `len` elements and must not overlap.
 */
enum GsStatus gs_keyspace_apply(const struct GsKeySpace *space,
                                uint64_t ordinal,
                                const uint8_t *input,
                                uint8_t *output,
                                size_t len);

/**
 * Undoes [`gs_keyspace_apply`] for the same `ordinal`.
 *
 * # Safety
 * As for [`gs_keyspace_apply`].
 */
enum GsStatus gs_keyspace_invert(const struct GsKeySpace *space,
                                 uint64_t ordinal,
                                 const uint8_t *input,
                                 uint8_t *output,
                                 size_t len);

/**
 * # Safety
 * `space` must be null or a handle from this library, not yet freed.
 */
void gs_keyspace_free(struct GsKeySpace *space);

/**
 * # Safety
 * `path` must be NUL-terminated, `alphabet` a live handle, `out` writable.
 */
enum GsStatus gs_ngram_load(const char *path,
                            const struct GsAlphabet *alphabet,
                            struct GsNgram **out);

/**
 * Writes the six QPT features in the order quadnum, quadscore, tripnum,
 * tripscore, pairnum, pairscore.
 *
 * # Safety
 * `ngram` must be a live handle, `codes` valid for `len` reads and
 * `features` for 6 writes.
 */
enum GsStatus gs_ngram_qpt_features(const struct GsNgram *ngram,
                                    const uint8_t *codes,
                                    size_t len,
                                    double *features);

/**
 * # Safety
 * `ngram` must be null or a handle from this library, not yet freed.
 */
void gs_ngram_free(struct GsNgram *ngram);

/**
 * Loads a word list, keeping words of `min_len` to 11 symbols.
 *
 * # Safety
 * `path` must be NUL-terminated, `alphabet` a live handle, `out` writable.
 */
enum GsStatus gs_lexicon_load(const char *path,
                              const struct GsAlphabet *alphabet,
                              size_t min_len,
                              struct GsLexicon **out);

/**
 * Number of words, or 0 for a null handle.
 *
 * # Safety
 * `lexicon` must be null or a live handle.
 */
size_t gs_lexicon_len(const struct GsLexicon *lexicon);

/**
 * Writes the five word features in the order maxspan, minspan, totspan,
 * unspan, wordnum.
 *
 * # Safety
 * `lexicon` must be a live handle, `codes` valid for `len` reads and
 * `features` for 5 writes.
 */
enum GsStatus gs_lexicon_word_features(const struct GsLexicon *lexicon,
                                       const uint8_t *codes,
                                       size_t len,
                                       double *features);

/**
 * # Safety
 * `lexicon` must be null or a handle from this library, not yet freed.
 */
void gs_lexicon_free(struct GsLexicon *lexicon);

/**
 * Loads `qpt.model`, `word.model` and `path.model` from `dir`.
 *
 * # Safety
 * `dir` must be NUL-terminated and `out` writable.
 */
enum GsStatus gs_models_load(const char *dir, struct GsModels **out);

/**
 * Evaluates one score equation on `count` features.
 *
 * # Safety
 * `models` must be a live handle, `features` valid for `count` reads and
 * `out` writable.
 */
enum GsStatus gs_models_score(const struct GsModels *models,
                              enum GsModelKind kind,
                              const double *features,
                              size_t count,
                              double *out);

/**
 * # Safety
 * `models` must be null or a handle from this library, not yet freed.
 */
void gs_models_free(struct GsModels *models);

/**
 * Advances the Lehmer generator held in `*state` (1 ≤ state < 2³¹−1) and
 * writes the new value to `*value`.
 *
 * # Safety
 * `state` and `value` must be writable.
 */
enum GsStatus gs_prng_next(uint32_t *state, uint32_t *value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRIDSIEVE_H */
