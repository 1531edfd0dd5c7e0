#pragma once

/* Generated with cbindgen:0.29.4 */

/* This file is generated by cbindgen from purejpeg-capi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  PJ_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PJ_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument was out of range or inconsistent.
   */
  PJ_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Input bytes could not be parsed.
   */
  PJ_STATUS_FORMAT_ERROR = 3,
  /**
   * The input uses a feature outside the supported baseline subset.
   */
  PJ_STATUS_UNSUPPORTED = 4,
} PjStatus;

/**
 * Opaque image handle.
 */
typedef struct PjImage PjImage;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next library call on the same thread.
 */
const char *pj_last_error_message(void);

/**
 * Builds an image from interleaved 8-bit samples (row-major; RGB order
 * for 3 channels). `channels` must be 1 or 3.
 *
 * # Safety
 * `pixels` must point to `width * height * channels` readable bytes and
 * `out` to a writable handle slot.
 */
PjStatus pj_image_from_pixels(uint32_t width,
                              uint32_t height,
                              uint32_t channels,
                              const uint8_t *pixels,
                              PjImage **out);

/**
 * Parses a binary PGM/PPM file.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes and `out` to a writable
 * handle slot.
 */
PjStatus pj_image_read_pnm(const uint8_t *bytes, uintptr_t len, PjImage **out);

/**
 * Serializes an image as binary PGM/PPM into a new buffer; release it
 * with [`pj_bytes_free`].
 *
 * # Safety
 * All pointers must be non-null; `img` must be a live handle.
 */
PjStatus pj_image_write_pnm(const PjImage *img, uint8_t **out_bytes, uintptr_t *out_len);

/**
 * # Safety
 * `img` must be a live handle or null.
 */
uint32_t pj_image_width(const PjImage *img);

/**
 * # Safety
 * `img` must be a live handle or null.
 */
uint32_t pj_image_height(const PjImage *img);

/**
 * # Safety
 * `img` must be a live handle or null.
 */
uint32_t pj_image_channels(const PjImage *img);

/**
 * Copies interleaved samples into a caller buffer of at least
 * `width * height * channels` bytes.
 *
 * # Safety
 * `img` must be a live handle; `out` must point to `capacity` writable
 * bytes.
 */
PjStatus pj_image_pixels(const PjImage *img, uint8_t *out, uintptr_t capacity);

/**
 * Releases an image handle. Null is ignored.
 *
 * # Safety
 * `img` must be a handle from this library that has not been freed.
 */
void pj_image_free(PjImage *img);

/**
 * Releases a buffer returned by this library.
 *
 * # Safety
 * `bytes`/`len` must describe an allocation returned by this library
 * that has not been freed.
 */
void pj_bytes_free(uint8_t *bytes, uintptr_t len);

/**
 * Smallest integer quantization step that rounds every DCT coefficient of
 * an epsilon-bounded spatial perturbation to zero.
 *
 * # Safety
 * `out_step` must be non-null.
 */
PjStatus pj_min_filtering_step(double epsilon, uint32_t *out_step);

/**
 * Per-band deviation statistics of the luma plane, zig-zag order.
 * `out_mean` and `out_block_count` may be null when not needed.
 *
 * # Safety
 * `img` must be a live handle; non-null out-pointers must reference
 * arrays of 64 doubles (or a u64 slot for the count).
 */
PjStatus pj_analyze(const PjImage *img,
                    double *out_sigma,
                    double *out_mean,
                    uint64_t *out_block_count);

/**
 * Synthesizes the two-band table for an image into 64 zig-zag bytes.
 *
 * # Safety
 * `img` must be a live handle; `out_table` must reference 64 writable
 * bytes.
 */
PjStatus pj_dm_table(const PjImage *img, uint32_t n, uint8_t s1, uint8_t s2, uint8_t *out_table);

/**
 * Purifies with a per-image two-band table; `out_table` (64 bytes,
 * zig-zag) may be null.
 *
 * # Safety
 * As [`pj_image_from_pixels`], plus `out_table` must be null or reference
 * 64 writable bytes.
 */
PjStatus pj_purify_dm(const PjImage *img,
                      uint32_t n,
                      uint8_t s1,
                      uint8_t s2,
                      PjImage **out,
                      uint8_t *out_table);

/**
 * Purifies with one step for all bands.
 *
 * # Safety
 * As [`pj_purify_dm`].
 */
PjStatus pj_purify_uniform(const PjImage *img, uint32_t step, PjImage **out);

/**
 * Purifies with the standard luminance table scaled by `qf` in 1..=100.
 *
 * # Safety
 * As [`pj_purify_dm`].
 */
PjStatus pj_purify_default_jpeg(const PjImage *img, uint32_t qf, PjImage **out);

/**
 * Distortion between two same-shape images on the [0,1] sample scale.
 *
 * # Safety
 * Handles must be live; out-pointers must be non-null.
 */
PjStatus pj_distortion(const PjImage *a,
                       const PjImage *b,
                       double *out_l_inf,
                       double *out_l2,
                       double *out_l0);

/**
 * Encodes a baseline JFIF stream carrying the given table (64 zig-zag
 * bytes); release the buffer with [`pj_bytes_free`].
 *
 * # Safety
 * `img` must be a live handle; `table_zigzag` must reference 64 readable
 * bytes; out-pointers must be non-null.
 */
PjStatus pj_jpeg_encode(const PjImage *img,
                        const uint8_t *table_zigzag,
                        uint8_t **out_bytes,
                        uintptr_t *out_len);

/**
 * Decodes a baseline JFIF stream; `out_table` (64 bytes, zig-zag,
 * the luma quantization table) may be null.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes; `out` must be non-null;
 * `out_table` must be null or reference 64 writable bytes.
 */
PjStatus pj_jpeg_decode(const uint8_t *bytes, uintptr_t len, PjImage **out, uint8_t *out_table);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
