/* C interface of the ctdecomp image decomposition library. */

#ifndef CTDECOMP_H
#define CTDECOMP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
typedef enum CtdStatus {
  CTD_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  CTD_STATUS_NULL_ARGUMENT = 1,
  /**
   * A parameter was out of range or structurally invalid.
   */
  CTD_STATUS_INVALID_ARGUMENT = 2,
  /**
   * File could not be read or written.
   */
  CTD_STATUS_IO_ERROR = 3,
  /**
   * File contents or dimensions were not understood.
   */
  CTD_STATUS_FORMAT_ERROR = 4,
  /**
   * Shapes are incompatible with the requested operation.
   */
  CTD_STATUS_DIMENSION_ERROR = 5,
  /**
   * A computation produced a non-finite value or panicked.
   */
  CTD_STATUS_NUMERICAL_ERROR = 6,
} CtdStatus;

/**
 * Which transform models the noise component.
 */
typedef enum CtdNoiseModel {
  CTD_NOISE_MODEL_CONTOURLET = 0,
  CTD_NOISE_MODEL_WAVELET = 1,
} CtdNoiseModel;

/**
 * Component selector for [`ctd_decomposition_component`].
 */
typedef enum CtdComponent {
  CTD_COMPONENT_STRUCTURES = 0,
  CTD_COMPONENT_TEXTURES = 1,
  CTD_COMPONENT_NOISE = 2,
  CTD_COMPONENT_RESIDUAL = 3,
} CtdComponent;

/**
 * Opaque result handle of a decomposition.
 */
typedef struct CtdDecomposition CtdDecomposition;

/**
 * Opaque grayscale image handle (row-major f64 samples).
 */
typedef struct CtdImage CtdImage;

/**
 * Decomposition parameters. `levels` points at `levels_len` direction
 * exponents (finest scale first); pass null/0 for the default 3,3,4.
 */
typedef struct CtdDecompParams {
  double lambda;
  double mu;
  double delta;
  double eps;
  uint32_t n_step;
  const uint32_t *levels;
  uintptr_t levels_len;
  enum CtdNoiseModel noise_model;
} CtdDecompParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates an image from `width * height` row-major samples.
 * Returns null when `data` is null or the sizes are zero.
 */
struct CtdImage *ctd_image_create(uintptr_t width, uintptr_t height, const double *data);

/**
 * Creates an all-zero image. Returns null when a size is zero.
 */
struct CtdImage *ctd_image_zeros(uintptr_t width, uintptr_t height);

uintptr_t ctd_image_width(const struct CtdImage *img);

uintptr_t ctd_image_height(const struct CtdImage *img);

/**
 * Copies the samples into `out`, which must hold `width * height` values.
 */
enum CtdStatus ctd_image_copy_data(const struct CtdImage *img, double *out, uintptr_t out_len);

void ctd_image_free(struct CtdImage *img);

/**
 * Loads an 8-bit grayscale PGM or PNG file.
 */
enum CtdStatus ctd_image_load(const char *path, struct CtdImage **out);

/**
 * Saves as 8-bit grayscale, quantizing to `round(clamp(x + offset, 0, 255))`;
 * the format follows the file extension (.pgm or .png).
 */
enum CtdStatus ctd_image_save(const struct CtdImage *img, const char *path, double offset);

/**
 * Adds seeded Gaussian noise (standard deviation `sigma`); the stream is
 * fixed, so identical arguments produce bit-identical images.
 */
enum CtdStatus ctd_add_gaussian_noise(const struct CtdImage *img,
                                      double sigma,
                                      uint64_t seed,
                                      struct CtdImage **out);

/**
 * Peak signal-to-noise ratio in dB; equal images yield +infinity.
 */
enum CtdStatus ctd_psnr(const struct CtdImage *a,
                        const struct CtdImage *b,
                        double peak,
                        double *out);

/**
 * Transform self-test on a seeded random image: writes the perfect
 * reconstruction error and the coefficient/image energy ratio.
 */
enum CtdStatus ctd_check_transform(uintptr_t size,
                                   const uint32_t *levels,
                                   uintptr_t levels_len,
                                   uint64_t seed,
                                   double *out_pr_error,
                                   double *out_energy_ratio);

/**
 * Runs the structures + textures + noise decomposition.
 */
enum CtdStatus ctd_decompose(const struct CtdImage *img,
                             const struct CtdDecompParams *params,
                             struct CtdDecomposition **out);

/**
 * Clones one component out of a decomposition.
 */
enum CtdStatus ctd_decomposition_component(const struct CtdDecomposition *dec,
                                           enum CtdComponent which,
                                           struct CtdImage **out);

uint32_t ctd_decomposition_iterations(const struct CtdDecomposition *dec);

bool ctd_decomposition_converged(const struct CtdDecomposition *dec);

void ctd_decomposition_free(struct CtdDecomposition *dec);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CTDECOMP_H */
