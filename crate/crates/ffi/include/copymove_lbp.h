#ifndef COPYMOVE_LBP_H
#define COPYMOVE_LBP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum CmlStatus {
  CML_STATUS_OK = 0,
  CML_STATUS_NULL_POINTER = 1,
  CML_STATUS_MALFORMED_IMAGE = 2,
  CML_STATUS_UNSUPPORTED_FORMAT = 3,
  CML_STATUS_DIMENSION_MISMATCH = 4,
  CML_STATUS_IMAGE_TOO_SMALL = 5,
  CML_STATUS_NOT_ENOUGH_REGIONS = 6,
  CML_STATUS_EMPTY_BAND = 7,
  CML_STATUS_GEOMETRY_VIOLATION = 8,
  CML_STATUS_INVALID_CONFIG = 9,
  CML_STATUS_IO = 10,
  CML_STATUS_OUT_OF_RANGE = 11,
  CML_STATUS_INTERNAL = 99,
} CmlStatus;

// Overall verdict of a discrimination.
typedef enum CmlLabel {
  CML_LABEL_UNDECIDED = 0,
  CML_LABEL_A_FORGED = 1,
  CML_LABEL_B_FORGED = 2,
} CmlLabel;

// A single radius' vote.
typedef enum CmlVote {
  CML_VOTE_ABSTAIN = 0,
  CML_VOTE_A_FORGED = 1,
  CML_VOTE_B_FORGED = 2,
} CmlVote;

// Opaque 8-bit grayscale image.
typedef struct CmlImage CmlImage;

// Opaque binary mask.
typedef struct CmlMask CmlMask;

// Opaque discrimination verdict.
typedef struct CmlVerdict CmlVerdict;

// Per-radius data copied out of a verdict. Deviations are NaN when the
// radius abstained before a histogram could be formed.
typedef struct CmlRadiusDecision {
  double radius;
  double std_a;
  double std_b;
  enum CmlVote vote;
} CmlRadiusDecision;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *cml_last_error_message(void);

// Decodes a PNG or binary PGM/PPM byte buffer; colour input is converted
// to grayscale.
//
// # Safety
// `data` must point to `len` readable bytes; `out` must be writable.
enum CmlStatus cml_image_decode(const uint8_t *data, size_t len, struct CmlImage **out);

// Wraps a row-major 8-bit buffer of `width * height` bytes (copied).
//
// # Safety
// `data` must point to `width * height` readable bytes; `out` must be writable.
enum CmlStatus cml_image_from_gray(uint32_t width,
                                   uint32_t height,
                                   const uint8_t *data,
                                   struct CmlImage **out);

// # Safety
// `img` must be NULL or a live handle from this library.
uint32_t cml_image_width(const struct CmlImage *img);

// # Safety
// `img` must be NULL or a live handle from this library.
uint32_t cml_image_height(const struct CmlImage *img);

// # Safety
// `img` must be NULL or a handle from this library not yet freed.
void cml_image_free(struct CmlImage *img);

// Decodes a grayscale PNG/PGM mask; values above 127 are foreground.
//
// # Safety
// `data` must point to `len` readable bytes; `out` must be writable.
enum CmlStatus cml_mask_decode(const uint8_t *data, size_t len, struct CmlMask **out);

// Builds a mask from `width * height` bytes; nonzero is foreground.
//
// # Safety
// `data` must point to `width * height` readable bytes; `out` must be writable.
enum CmlStatus cml_mask_from_bytes(uint32_t width,
                                   uint32_t height,
                                   const uint8_t *data,
                                   struct CmlMask **out);

// Number of foreground pixels, or 0 for NULL.
//
// # Safety
// `mask` must be NULL or a live handle from this library.
size_t cml_mask_count(const struct CmlMask *mask);

// Copies the mask into `out` as 0/255 bytes.
//
// # Safety
// `out` must have room for `len` bytes.
enum CmlStatus cml_mask_copy_bytes(const struct CmlMask *mask, uint8_t *out, size_t len);

// # Safety
// `mask` must be NULL or a handle from this library not yet freed.
void cml_mask_free(struct CmlMask *mask);

// Runs the block-matching copy-move detector with default parameters.
//
// # Safety
// `img` must be a live handle; `out` must be writable.
enum CmlStatus cml_detect(const struct CmlImage *img, struct CmlMask **out);

// Decides which of the mask's two largest components is the duplicate.
//
// `radii`/`n_radii` select the LBP radii (NULL or 0 means 2, 3, 4);
// `band_width` of 0 selects the default half-width.
//
// # Safety
// Handles must be live; `radii` must point to `n_radii` doubles when
// non-NULL; `out` must be writable.
enum CmlStatus cml_discriminate(const struct CmlImage *img,
                                const struct CmlMask *mask,
                                const double *radii,
                                size_t n_radii,
                                uint32_t band_width,
                                struct CmlVerdict **out);

// # Safety
// `verdict` must be NULL or a live handle.
enum CmlLabel cml_verdict_label(const struct CmlVerdict *verdict);

// # Safety
// `verdict` must be NULL or a live handle.
size_t cml_verdict_radius_count(const struct CmlVerdict *verdict);

// # Safety
// `verdict` must be a live handle; `out` must be writable.
enum CmlStatus cml_verdict_radius(const struct CmlVerdict *verdict,
                                  size_t index,
                                  struct CmlRadiusDecision *out);

// The verdict as a JSON document; release with [`cml_string_free`].
//
// # Safety
// `verdict` must be a live handle; `out` must be writable.
enum CmlStatus cml_verdict_json(const struct CmlVerdict *verdict, char **out);

// # Safety
// `verdict` must be NULL or a handle from this library not yet freed.
void cml_verdict_free(struct CmlVerdict *verdict);

// # Safety
// `s` must be NULL or a string returned by this library not yet freed.
void cml_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COPYMOVE_LBP_H */
