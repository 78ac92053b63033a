/* C interface for the serkit speech emotion recognition toolkit. */

#ifndef SERKIT_H
#define SERKIT_H

/* Generated by cbindgen from crates/ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes returned by every fallible function in this library.
 */
typedef enum {
  /**
   * The call succeeded.
   */
  SERKIT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SERKIT_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  SERKIT_STATUS_INVALID_UTF8 = 2,
  /**
   * The file could not be read or written.
   */
  SERKIT_STATUS_IO = 3,
  /**
   * The model file exists but does not describe a usable model.
   */
  SERKIT_STATUS_INVALID_MODEL = 4,
  /**
   * The audio could not be decoded or is unusable (empty, non-finite).
   */
  SERKIT_STATUS_INVALID_AUDIO = 5,
  /**
   * The feature configuration is inconsistent.
   */
  SERKIT_STATUS_INVALID_CONFIG = 6,
  /**
   * The input's shape does not match what the model was trained on.
   */
  SERKIT_STATUS_SHAPE_MISMATCH = 7,
  /**
   * An output buffer is too small for the result.
   */
  SERKIT_STATUS_BUFFER_TOO_SMALL = 8,
  /**
   * An internal invariant failed; the library state is still usable.
   */
  SERKIT_STATUS_PANIC = 9,
} SerkitStatus;

/**
 * An opaque loaded classifier (sequence model or baseline).
 */
typedef struct SerkitModel SerkitModel;

/**
 * Feature extraction settings; fill with [`serkit_feature_config_default`]
 * and adjust as needed.
 */
typedef struct {
  /**
   * Sample rate the extractor operates at, in Hz.
   */
  uint32_t sample_rate;
  /**
   * FFT length in samples (a power of two).
   */
  size_t n_fft;
  /**
   * Hop between adjacent frames in samples.
   */
  size_t hop_length;
  /**
   * Number of triangular mel filters.
   */
  size_t n_mels;
  /**
   * Number of cepstral coefficients kept per frame.
   */
  size_t n_mfcc;
  /**
   * Lower edge of the mel filterbank in Hz.
   */
  double fmin;
  /**
   * Upper edge of the mel filterbank in Hz (at most Nyquist).
   */
  double fmax;
  /**
   * Clips are zero-padded or truncated to this many seconds before
   * extraction; 0 keeps the natural length.
   */
  double duration;
} SerkitFeatureConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the library version as a static NUL-terminated string.
 */
const char *serkit_version(void);

/**
 * Returns the message for the most recent failure on this thread (empty
 * string if none). The pointer stays valid until the next failing serkit
 * call on the same thread.
 */
const char *serkit_last_error(void);

/**
 * Fills `out` with the standard extraction settings for `sample_rate`:
 * 2048-point FFT, 512-sample hop, 128 mel filters up to Nyquist, 40
 * coefficients, 3-second clips.
 *
 * # Safety
 * `out` must be null or valid for writing one `SerkitFeatureConfig`.
 */
SerkitStatus serkit_feature_config_default(uint32_t sample_rate, SerkitFeatureConfig *out);

/**
 * Loads a model file (either kind) and stores the new handle in `out`.
 * The handle must be released with [`serkit_model_free`].
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writing
 * one pointer.
 */
SerkitStatus serkit_model_load(const char *path, SerkitModel **out);

/**
 * Releases a handle returned by [`serkit_model_load`]. Null is a no-op.
 *
 * # Safety
 * `model` must be null or a pointer previously returned by
 * [`serkit_model_load`] that has not been freed yet.
 */
void serkit_model_free(SerkitModel *model);

/**
 * Returns the model kind as a static string: "lstm" for the sequence
 * model or "svm" for the baseline. Null input yields null.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
const char *serkit_model_kind(const SerkitModel *model);

/**
 * Returns the number of labels the model distinguishes (0 for null).
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t serkit_model_n_labels(const SerkitModel *model);

/**
 * Returns label `index`, or null when the handle is null or the index is
 * out of range. The string stays valid until the model is freed.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
const char *serkit_model_label(const SerkitModel *model, size_t index);

/**
 * Reports the input shape the model expects: frames per sequence (0 when
 * any length is accepted, as for the baseline) and coefficients per frame.
 *
 * # Safety
 * `model` must be a live handle; shape outputs may each be null.
 */
SerkitStatus serkit_model_expected_shape(const SerkitModel *model,
                                         size_t *frames_out,
                                         size_t *coeffs_out);

/**
 * Extracts MFCC features from raw samples (assumed to be at
 * `cfg->sample_rate`). The frame and coefficient counts are always written
 * on success; pass a null `out` to query them without copying. With a
 * non-null `out`, `out_capacity` must be at least frames * coefficients and
 * the features are written row-major, one frame per row.
 *
 * # Safety
 * `samples` must point to `n_samples` doubles; `cfg`, `frames_out` and
 * `coeffs_out` must be valid; `out` must be null or valid for
 * `out_capacity` doubles.
 */
SerkitStatus serkit_mfcc(const double *samples,
                         size_t n_samples,
                         const SerkitFeatureConfig *cfg,
                         double *out,
                         size_t out_capacity,
                         size_t *frames_out,
                         size_t *coeffs_out);

/**
 * Classifies raw samples (assumed to be at `cfg->sample_rate`). Writes the
 * winning label index to `winner_out` and one score per label to
 * `scores_out` (probabilities for the sequence model, pairwise vote shares
 * for the baseline); either output may be null to skip it.
 *
 * # Safety
 * `model` and `cfg` must be valid; `samples` must point to `n_samples`
 * doubles; `scores_out` must be null or valid for `scores_capacity`
 * doubles; `winner_out` must be null or valid for one `size_t`.
 */
SerkitStatus serkit_predict_samples(const SerkitModel *model,
                                    const double *samples,
                                    size_t n_samples,
                                    const SerkitFeatureConfig *cfg,
                                    double *scores_out,
                                    size_t scores_capacity,
                                    size_t *winner_out);

/**
 * Classifies a WAV file: decodes it, resamples to `cfg->sample_rate`,
 * applies `cfg->duration`, extracts features and runs the model. Output
 * arguments behave as in [`serkit_predict_samples`].
 *
 * # Safety
 * `model` and `cfg` must be valid; `wav_path` must be a NUL-terminated
 * string; `scores_out` must be null or valid for `scores_capacity`
 * doubles; `winner_out` must be null or valid for one `size_t`.
 */
SerkitStatus serkit_predict_wav(const SerkitModel *model,
                                const char *wav_path,
                                const SerkitFeatureConfig *cfg,
                                double *scores_out,
                                size_t scores_capacity,
                                size_t *winner_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SERKIT_H */
