#ifndef CRACKRESTORE_H
#define CRACKRESTORE_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CrStatus {
  CR_STATUS_OK = 0,
  CR_STATUS_NULL_POINTER = 1,
  CR_STATUS_INVALID_ARGUMENT = 2,
  CR_STATUS_IO = 3,
  CR_STATUS_DECODE = 4,
  CR_STATUS_DIMENSION_MISMATCH = 5,
  CR_STATUS_NO_BOUNDARY = 6,
  CR_STATUS_INTERNAL = 7,
  CR_STATUS_PANIC = 8,
} CrStatus;

typedef enum CrVariant {
  CR_VARIANT_BLACK = 0,
  CR_VARIANT_WHITE = 1,
  CR_VARIANT_BOTH = 2,
} CrVariant;

typedef enum CrShape {
  CR_SHAPE_SQUARE3 = 0,
  CR_SHAPE_DISK2 = 1,
} CrShape;

typedef enum CrFillMethod {
  CR_FILL_METHOD_MTM = 0,
  CR_FILL_METHOD_AD = 1,
} CrFillMethod;

/**
 * Opaque image handle: 8-bit, 1 or 3 channels, row-major interleaved.
 */
typedef struct CrImage CrImage;

/**
 * Opaque binary mask handle.
 */
typedef struct CrMask CrMask;

typedef struct CrDetectorConfig {
  enum CrVariant variant;
  enum CrShape se;
  uint8_t threshold;
  uint32_t dilation_iters;
  uint32_t min_component;
} CrDetectorConfig;

typedef struct CrDiffusionConfig {
  double lambda;
  double kappa;
  uint32_t iterations;
} CrDiffusionConfig;

/**
 * Detection scores as fractions (not percent).
 */
typedef struct CrDetectionMetrics {
  double accuracy;
  double f1;
  double iou;
  double dice;
  double mcc;
} CrDetectionMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing why the most recent status-returning call on this
 * thread failed, or NULL if it succeeded. The pointer stays valid until
 * the next such call on the same thread.
 */
const char *cr_last_error_message(void);

/**
 * Loads an 8-bit PNG; alpha is dropped.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum CrStatus cr_image_load(const char *path, struct CrImage **out);

/**
 * # Safety
 * `image` must come from this library; `path` must be NUL-terminated.
 */
enum CrStatus cr_image_save(const struct CrImage *image, const char *path);

/**
 * Copies `len` bytes of interleaved pixels into a new image.
 *
 * # Safety
 * `data` must point to at least `len` readable bytes.
 */
enum CrStatus cr_image_from_buffer(uint32_t width,
                                   uint32_t height,
                                   uint32_t channels,
                                   const uint8_t *data,
                                   size_t len,
                                   struct CrImage **out);

/**
 * # Safety
 * `image` must be NULL or a handle from this library not yet freed.
 */
void cr_image_free(struct CrImage *image);

/**
 * # Safety
 * `image` must be NULL or a live handle.
 */
uint32_t cr_image_width(const struct CrImage *image);

/**
 * # Safety
 * `image` must be NULL or a live handle.
 */
uint32_t cr_image_height(const struct CrImage *image);

/**
 * # Safety
 * `image` must be NULL or a live handle.
 */
uint32_t cr_image_channels(const struct CrImage *image);

/**
 * Borrowed pixel bytes, valid while the handle lives. Writes the length
 * to `len` when it is not NULL.
 *
 * # Safety
 * `image` must be NULL or a live handle; `len` NULL or writable.
 */
const uint8_t *cr_image_data(const struct CrImage *image, size_t *len);

/**
 * Loads a mask PNG; any nonzero luma is crack.
 *
 * # Safety
 * `path` must be NUL-terminated and `out` valid.
 */
enum CrStatus cr_mask_load(const char *path, struct CrMask **out);

/**
 * Writes an 8-bit single-channel PNG with 255 = crack.
 *
 * # Safety
 * `mask` must be a live handle; `path` NUL-terminated.
 */
enum CrStatus cr_mask_save(const struct CrMask *mask, const char *path);

/**
 * Builds a mask from `width * height` bytes; nonzero is crack.
 *
 * # Safety
 * `data` must point to at least `len` readable bytes.
 */
enum CrStatus cr_mask_from_buffer(uint32_t width,
                                  uint32_t height,
                                  const uint8_t *data,
                                  size_t len,
                                  struct CrMask **out);

/**
 * Copies the mask as 0/255 bytes into `dst`, which must hold exactly
 * `width * height` bytes.
 *
 * # Safety
 * `dst` must point to `len` writable bytes.
 */
enum CrStatus cr_mask_copy_to(const struct CrMask *mask, uint8_t *dst, size_t len);

/**
 * # Safety
 * `mask` must be NULL or a handle from this library not yet freed.
 */
void cr_mask_free(struct CrMask *mask);

/**
 * # Safety
 * `mask` must be NULL or a live handle.
 */
uint32_t cr_mask_width(const struct CrMask *mask);

/**
 * # Safety
 * `mask` must be NULL or a live handle.
 */
uint32_t cr_mask_height(const struct CrMask *mask);

/**
 * Number of crack pixels.
 *
 * # Safety
 * `mask` must be NULL or a live handle.
 */
size_t cr_mask_count(const struct CrMask *mask);

struct CrDetectorConfig cr_detector_config_default(void);

/**
 * Top-hat crack detection. A NULL `config` uses the defaults.
 *
 * # Safety
 * `image` must be live, `config` NULL or valid, `out` writable.
 */
enum CrStatus cr_detect(const struct CrImage *image,
                        const struct CrDetectorConfig *config,
                        struct CrMask **out);

struct CrDiffusionConfig cr_diffusion_config_default(void);

/**
 * Fills masked pixels. A NULL `config` uses the diffusion defaults; it is
 * ignored by the trimmed-mean method.
 *
 * # Safety
 * `image` and `mask` must be live, `config` NULL or valid, `out` writable.
 */
enum CrStatus cr_fill(const struct CrImage *image,
                      const struct CrMask *mask,
                      enum CrFillMethod method,
                      const struct CrDiffusionConfig *config,
                      struct CrImage **out);

/**
 * Mean SSIM on luma, as a fraction in [-1, 1].
 *
 * # Safety
 * `a`, `b` must be live handles and `out` writable.
 */
enum CrStatus cr_ssim(const struct CrImage *a, const struct CrImage *b, double *out);

/**
 * PSNR in dB, capped at 99 for identical images.
 *
 * # Safety
 * `a`, `b` must be live handles and `out` writable.
 */
enum CrStatus cr_psnr(const struct CrImage *a, const struct CrImage *b, double *out);

/**
 * Mean absolute error over all samples.
 *
 * # Safety
 * `a`, `b` must be live handles and `out` writable.
 */
enum CrStatus cr_mae(const struct CrImage *a, const struct CrImage *b, double *out);

/**
 * # Safety
 * `pred` and `truth` must be live handles and `out` writable.
 */
enum CrStatus cr_detection_metrics(const struct CrMask *pred,
                                   const struct CrMask *truth,
                                   struct CrDetectionMetrics *out);

/**
 * Synthesizes a damaged/clean/mask triplet from `source` with the default
 * crack parameters, `seed`, and the given output size.
 *
 * # Safety
 * `source` must be live; the three output pointers writable.
 */
enum CrStatus cr_generate_triplet(const struct CrImage *source,
                                  uint64_t seed,
                                  uint32_t target_width,
                                  uint32_t target_height,
                                  struct CrImage **clean,
                                  struct CrMask **mask,
                                  struct CrImage **damaged);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRACKRESTORE_H */
