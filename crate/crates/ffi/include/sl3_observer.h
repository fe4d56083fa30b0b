#ifndef SL3_OBSERVER_H
#define SL3_OBSERVER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every API call.
 */
typedef enum Sl3Status {
  Ok = 0,
  InvalidArgument = 1,
  ConfigError = 2,
  Diverged = 3,
  IoError = 4,
} Sl3Status;

/**
 * Opaque observer handle: reference image, quadrature region, gains, state.
 */
typedef struct Sl3Tracker Sl3Tracker;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the most recent error message (UTF-8, NUL terminated) into `buf`.
 * Returns the full message length, regardless of truncation.
 *
 * # Safety
 * `buf` must point to `len` writable bytes (or be null with `len` 0).
 */
uintptr_t sl3_last_error_message(char *buf, uintptr_t len);

/**
 * Creates a tracker from a reference image file (PGM P5 or grayscale PNG).
 * `fu <= 0` selects default intrinsics (fu = fv = width/2, centered).
 * `region` is u,v,width,height; width 0 selects the full frame.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `region` must point to 4 values;
 * `out` must be a valid pointer.
 */
enum Sl3Status sl3_tracker_create_from_file(const char *path,
                                            double fu,
                                            double fv,
                                            double u0,
                                            double v0,
                                            const uintptr_t *region,
                                            double k_delta,
                                            double k_gamma,
                                            struct Sl3Tracker **out);

/**
 * Destroys a tracker. Passing null is a no-op.
 *
 * # Safety
 * `tracker` must come from `sl3_tracker_create_from_file` and not be used
 * afterwards.
 */
void sl3_tracker_destroy(struct Sl3Tracker *tracker);

/**
 * Feeds one 8-bit grayscale frame with a known group velocity `u`
 * (row-major 3x3, projected onto sl(3)). `dt <= 0` updates the correction
 * without stepping.
 *
 * # Safety
 * `pixels` must hold width*height bytes; `u` must point to 9 doubles.
 */
enum Sl3Status sl3_tracker_feed_known(struct Sl3Tracker *tracker,
                                      const uint8_t *pixels,
                                      uintptr_t width,
                                      uintptr_t height,
                                      const double *u,
                                      double dt);

/**
 * Feeds one frame with only the angular velocity measured; the unmeasured
 * velocity component is estimated online.
 *
 * # Safety
 * `pixels` must hold width*height bytes; `omega` must point to 3 doubles.
 */
enum Sl3Status sl3_tracker_feed_gyro(struct Sl3Tracker *tracker,
                                     const uint8_t *pixels,
                                     uintptr_t width,
                                     uintptr_t height,
                                     const double *omega,
                                     double dt);

/**
 * Copies the current homography estimate (row-major 3x3) into `out`.
 *
 * # Safety
 * `out` must point to 9 writable doubles.
 */
enum Sl3Status sl3_tracker_homography(const struct Sl3Tracker *tracker, double *out);

/**
 * Copies the estimated unmeasured velocity component (row-major 3x3).
 *
 * # Safety
 * `out` must point to 9 writable doubles.
 */
enum Sl3Status sl3_tracker_velocity_estimate(const struct Sl3Tracker *tracker, double *out);

/**
 * Reports |Delta| of the last correction and the last per-pixel residual.
 *
 * # Safety
 * Out pointers may be null to skip a value.
 */
enum Sl3Status sl3_tracker_metrics(const struct Sl3Tracker *tracker,
                                   double *out_delta_norm,
                                   double *out_eps_i);

/**
 * Runs the excitation analysis of a reference image file: writes the 8
 * ascending Gram eigenvalues into `out_eigenvalues`.
 *
 * # Safety
 * `path` must be NUL-terminated; `out_eigenvalues` must point to 8 doubles.
 */
enum Sl3Status sl3_check_excitation(const char *path, double *out_eigenvalues);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SL3_OBSERVER_H */
