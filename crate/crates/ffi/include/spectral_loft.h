#ifndef SPECTRAL_LOFT_H
#define SPECTRAL_LOFT_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpectralStatus {
  SPECTRAL_STATUS_OK = 0,
  SPECTRAL_STATUS_NULL_ARGUMENT = 1,
  SPECTRAL_STATUS_INVALID_ARGUMENT = 2,
  SPECTRAL_STATUS_IO = 3,
  SPECTRAL_STATUS_FORMAT = 4,
  SPECTRAL_STATUS_SHAPE_MISMATCH = 5,
  SPECTRAL_STATUS_NO_FOREGROUND = 6,
  SPECTRAL_STATUS_NO_LOFT = 7,
  SPECTRAL_STATUS_INTERNAL = 8,
  SPECTRAL_STATUS_PANIC = 9,
} SpectralStatus;

/**
 * Values accepted by the `mode` argument of [`spectral_segment`].
 */
typedef enum SpectralMode {
  SPECTRAL_MODE_TISSUE = 0,
  SPECTRAL_MODE_LESION = 1,
} SpectralMode;

/**
 * Opaque 16-bit grayscale image.
 */
typedef struct SpectralImage SpectralImage;

/**
 * Opaque segmentation result.
 */
typedef struct SpectralResult SpectralResult;

typedef struct SpectralComponent {
  size_t area;
  size_t min_x;
  size_t min_y;
  size_t max_x;
  size_t max_y;
  double centroid_x;
  double centroid_y;
} SpectralComponent;

typedef struct SpectralMetrics {
  double dsc;
  double ji;
  uint64_t tp;
  uint64_t fp;
  uint64_t fn_;
  uint64_t tn;
} SpectralMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *spectral_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *spectral_version(void);

/**
 * Copies `width * height` row-major samples into a new image.
 *
 * # Safety
 * `pixels` must point to `width * height` readable values; `out` must be
 * writable.
 */
enum SpectralStatus spectral_image_new(size_t width,
                                       size_t height,
                                       const uint16_t *pixels,
                                       struct SpectralImage **out);

/**
 * Reads a 16-bit PGM or PNG file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SpectralStatus spectral_image_read(const char *path, struct SpectralImage **out);

/**
 * Writes an image; the format follows the extension (`.pgm` or `.png`).
 *
 * # Safety
 * `image` must be a live handle; `path` a NUL-terminated string.
 */
enum SpectralStatus spectral_image_write(const struct SpectralImage *image, const char *path);

/**
 * Width of `image`, or 0 for a null handle.
 *
 * # Safety
 * `image` must be null or a live handle.
 */
size_t spectral_image_width(const struct SpectralImage *image);

/**
 * Height of `image`, or 0 for a null handle.
 *
 * # Safety
 * `image` must be null or a live handle.
 */
size_t spectral_image_height(const struct SpectralImage *image);

/**
 * Copies the samples into `dst`, which must hold exactly `width * height`.
 *
 * # Safety
 * `image` must be a live handle; `dst` must point to `len` writable values.
 */
enum SpectralStatus spectral_image_copy_pixels(const struct SpectralImage *image,
                                               uint16_t *dst,
                                               size_t len);

/**
 * # Safety
 * `image` must be null or a handle not yet freed.
 */
void spectral_image_free(struct SpectralImage *image);

/**
 * Runs the full pipeline. `overrides_json` may be null or a JSON object
 * with parameter overrides, e.g. `{"lo": 300, "smooth_window": 1}`.
 *
 * # Safety
 * `image` must be a live handle; `overrides_json` null or NUL-terminated;
 * `out` writable.
 */
enum SpectralStatus spectral_segment(const struct SpectralImage *image,
                                     uint32_t mode,
                                     const char *overrides_json,
                                     struct SpectralResult **out);

/**
 * Threshold of a result, or 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
uint16_t spectral_result_threshold(const struct SpectralResult *result);

/**
 * Copies the mask out as a new 0/65535 image.
 *
 * # Safety
 * `result` must be a live handle; `out` writable.
 */
enum SpectralStatus spectral_result_mask(const struct SpectralResult *result,
                                         struct SpectralImage **out);

/**
 * Number of lesion components (0 in tissue mode or for a null handle).
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t spectral_result_component_count(const struct SpectralResult *result);

/**
 * Component `index` in decreasing-area order.
 *
 * # Safety
 * `result` must be a live handle; `out` writable.
 */
enum SpectralStatus spectral_result_component(const struct SpectralResult *result,
                                              size_t index,
                                              struct SpectralComponent *out);

/**
 * # Safety
 * `result` must be null or a handle not yet freed.
 */
void spectral_result_free(struct SpectralResult *result);

/**
 * Overlap of two masks given as images (non-zero = set).
 *
 * # Safety
 * Both images must be live handles; `out` writable.
 */
enum SpectralStatus spectral_metrics(const struct SpectralImage *pred,
                                     const struct SpectralImage *truth,
                                     struct SpectralMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECTRAL_LOFT_H */
