#ifndef HALLUC_H
#define HALLUC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HallucStatus {
  HALLUC_STATUS_OK = 0,
  HALLUC_STATUS_NULL_POINTER = 1,
  HALLUC_STATUS_INVALID_UTF8 = 2,
  // Malformed input, mismatched lengths, out-of-range index.
  HALLUC_STATUS_INVALID_INPUT = 3,
  // The value is undefined for this input (e.g. constant ranks).
  HALLUC_STATUS_DEGENERATE = 4,
  HALLUC_STATUS_REMOTE = 5,
  HALLUC_STATUS_INVARIANT = 6,
  HALLUC_STATUS_PANIC = 7,
} HallucStatus;

// Annotated token sequence.
typedef struct HallucLabeledSeq HallucLabeledSeq;

// Running token-level precision/recall counts.
typedef struct HallucPrf HallucPrf;

typedef struct HallucPrfResult {
  double precision;
  double recall;
  double f1;
  uint64_t tp;
  uint64_t fp;
  uint64_t fn_;
  bool precision_undefined;
  bool recall_undefined;
} HallucPrfResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *halluc_last_error_message(void);

// Library version, static storage.
const char *halluc_version(void);

// # Safety
// `s` must come from this library or be NULL.
void halluc_string_free(char *s);

// Parses a `word[0] word[1] ...` line.
//
// # Safety
// `line` must be a NUL-terminated string; `out` a valid pointer.
enum HallucStatus halluc_labeled_seq_parse(const char *line, struct HallucLabeledSeq **out);

// Labels each token of `hallucinated` against the whitespace-tokenized
// `base` sentence.
//
// # Safety
// String arguments must be NUL-terminated; `out` a valid pointer.
enum HallucStatus halluc_assign_labels(const char *hallucinated,
                                       const char *base,
                                       struct HallucLabeledSeq **out);

// # Safety
// `seq` must come from this library or be NULL.
void halluc_labeled_seq_free(struct HallucLabeledSeq *seq);

// Number of tokens, 0 for NULL.
//
// # Safety
// `seq` must be a live handle or NULL.
size_t halluc_labeled_seq_len(const struct HallucLabeledSeq *seq);

// Copies the labels into `buf`, which must hold `halluc_labeled_seq_len`
// bytes.
//
// # Safety
// `seq` must be a live handle; `buf` must have room for `cap` bytes.
enum HallucStatus halluc_labeled_seq_labels(const struct HallucLabeledSeq *seq,
                                            uint8_t *buf,
                                            size_t cap);

// Token at `index` as a new string.
//
// # Safety
// `seq` must be a live handle; `out` a valid pointer.
enum HallucStatus halluc_labeled_seq_token(const struct HallucLabeledSeq *seq,
                                           size_t index,
                                           char **out);

// Serializes back to the `word[label]` line format.
//
// # Safety
// `seq` must be a live handle; `out` a valid pointer.
enum HallucStatus halluc_labeled_seq_serialize(const struct HallucLabeledSeq *seq, char **out);

// Unit-cost token edit distance between two whitespace-tokenized strings.
//
// # Safety
// String arguments must be NUL-terminated; `out` a valid pointer.
enum HallucStatus halluc_edit_distance(const char *a, const char *b, size_t *out);

struct HallucPrf *halluc_prf_new(void);

// # Safety
// `prf` must come from `halluc_prf_new` or be NULL.
void halluc_prf_free(struct HallucPrf *prf);

// Adds one sentence of gold and predicted 0/1 labels.
//
// # Safety
// `prf` must be a live handle; `gold` and `pred` must point to `len` bytes.
enum HallucStatus halluc_prf_add(struct HallucPrf *prf,
                                 const uint8_t *gold,
                                 const uint8_t *pred,
                                 size_t len);

// # Safety
// `prf` must be a live handle; `out` a valid pointer.
enum HallucStatus halluc_prf_result(const struct HallucPrf *prf, struct HallucPrfResult *out);

// Spearman rank correlation with average ranks for ties.
//
// # Safety
// `x` and `y` must point to `n` doubles; `out` a valid pointer.
enum HallucStatus halluc_spearman(const double *x, const double *y, size_t n, double *out);

// Fleiss' kappa from a row-major `items` x `categories` count matrix.
//
// # Safety
// `counts` must point to `items * categories` values; `out` a valid pointer.
enum HallucStatus halluc_fleiss_kappa(const uint32_t *counts,
                                      size_t items,
                                      size_t categories,
                                      double *out);

// Mean predicted hallucination probability of a sentence.
//
// # Safety
// `probs` must point to `n` doubles; `out` a valid pointer.
enum HallucStatus halluc_sentence_score_prob(const double *probs, size_t n, double *out);

// Fraction of tokens labeled hallucinated.
//
// # Safety
// `labels` must point to `n` bytes; `out` a valid pointer.
enum HallucStatus halluc_sentence_score_ratio(const uint8_t *labels, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HALLUC_H */
