#ifndef SIQA_H
#define SIQA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of phase features written by [`siqa_extract_features`].
 */
#define SIQA_PHASE_FEATURES 40

/**
 * Number of contrast features written by [`siqa_extract_features`].
 */
#define SIQA_CONTRAST_FEATURES 36

typedef enum {
  SIQA_STATUS_OK = 0,
  SIQA_STATUS_NULL_POINTER = 1,
  SIQA_STATUS_INVALID_ARGUMENT = 2,
  SIQA_STATUS_DEGENERATE = 3,
  SIQA_STATUS_IO = 4,
  SIQA_STATUS_PARSE = 5,
  SIQA_STATUS_BUFFER_TOO_SMALL = 6,
  SIQA_STATUS_PANIC = 7,
} SiqaStatus;

typedef enum {
  SIQA_DISPARITY_PHASE = 0,
  SIQA_DISPARITY_BLOCK = 1,
} SiqaDisparity;

/**
 * Fused contrast and phase images.
 */
typedef struct SiqaFused SiqaFused;

/**
 * Grayscale image handle.
 */
typedef struct SiqaImage SiqaImage;

/**
 * Trained stacked model.
 */
typedef struct SiqaModel SiqaModel;

/**
 * Fusion settings. A `mu_sigma` of zero or less selects the default of one
 * grating period.
 */
typedef struct {
  double g;
  double f_s;
  double pixels_per_degree;
  double mu_sigma;
  double c1;
  SiqaDisparity disparity;
} SiqaFusionParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread, or null. Valid
 * until the next call on the same thread.
 */
const char *siqa_last_error_message(void);

SiqaStatus siqa_fusion_params_default(SiqaFusionParams *out);

/**
 * Copies `width * height` values from `data` into a new image.
 */
SiqaStatus siqa_image_from_buffer(const double *data, size_t width, size_t height, SiqaImage **out);

/**
 * Loads an 8- or 16-bit PNG, converting to grayscale.
 */
SiqaStatus siqa_image_load(const char *path, SiqaImage **out);

SiqaStatus siqa_image_size(const SiqaImage *image, size_t *width, size_t *height);

void siqa_image_free(SiqaImage *image);

/**
 * Fuses a stereo pair. `params` may be null for the defaults.
 */
SiqaStatus siqa_synthesize(const SiqaImage *left,
                           const SiqaImage *right,
                           const SiqaFusionParams *params,
                           SiqaFused **out);

SiqaStatus siqa_fused_size(const SiqaFused *fused, size_t *width, size_t *height);

/**
 * Copies the fused contrast image (row-major) into `out`.
 */
SiqaStatus siqa_fused_contrast(const SiqaFused *fused, double *out, size_t len);

/**
 * Copies the fused phase image (row-major, radians) into `out`.
 */
SiqaStatus siqa_fused_phase(const SiqaFused *fused, double *out, size_t len);

void siqa_fused_free(SiqaFused *fused);

/**
 * Writes `SIQA_PHASE_FEATURES` values to `phase_out` and
 * `SIQA_CONTRAST_FEATURES` values to `contrast_out`.
 */
SiqaStatus siqa_extract_features(const SiqaFused *fused, double *phase_out, double *contrast_out);

SiqaStatus siqa_model_load(const char *path, SiqaModel **out);

/**
 * Predicts a quality score from precomputed features.
 */
SiqaStatus siqa_model_predict(const SiqaModel *model,
                              const double *phase,
                              const double *contrast,
                              double *out);

/**
 * Fuses, extracts and predicts in one call. `params` may be null.
 */
SiqaStatus siqa_model_score_pair(const SiqaModel *model,
                                 const SiqaImage *left,
                                 const SiqaImage *right,
                                 const SiqaFusionParams *params,
                                 double *out);

void siqa_model_free(SiqaModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIQA_H */
