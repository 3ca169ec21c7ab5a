#ifndef SOLVBOUND_H
#define SOLVBOUND_H

#include <stddef.h>
#include <stdint.h>

typedef enum SbStatus {
  SB_STATUS_OK = 0,
  SB_STATUS_NULL_POINTER = 1,
  SB_STATUS_INVALID_SPECTRUM = 2,
  SB_STATUS_DIMENSION_MISMATCH = 3,
  SB_STATUS_INVALID_ARGUMENT = 4,
  SB_STATUS_NO_CONVERGENCE = 5,
  SB_STATUS_BUFFER_TOO_SMALL = 6,
  SB_STATUS_PANIC = 7,
} SbStatus;

/**
 * Opaque spectrum handle.
 */
typedef struct SbSpectrum SbSpectrum;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a spectrum from `len` blocks `(dims[i], alphas[i])`; free with [`sb_spectrum_free`].
 *
 * # Safety
 * `dims` and `alphas` must point to `len` readable values; `out` must be writable.
 */
enum SbStatus sb_spectrum_new(const size_t *dims,
                              const double *alphas,
                              size_t len,
                              struct SbSpectrum **out);

/**
 * # Safety
 * `spec` must come from [`sb_spectrum_new`] and not be used afterwards. Null is ignored.
 */
void sb_spectrum_free(struct SbSpectrum *spec);

/**
 * Ambient dimension `n` and homogeneous dimension `Q`.
 *
 * # Safety
 * `spec` must be a live handle; `n` and `q` must be writable.
 */
enum SbStatus sb_spectrum_dims(const struct SbSpectrum *spec, size_t *n, double *q);

/**
 * Boundary metric `D(x, y)`.
 *
 * # Safety
 * `x` and `y` must point to `len` values; `out` must be writable.
 */
enum SbStatus sb_dist_d(const struct SbSpectrum *spec,
                        const double *x,
                        const double *y,
                        size_t len,
                        double *out);

/**
 * # Safety
 * As for [`sb_dist_d`].
 */
enum SbStatus sb_dist_ds(const struct SbSpectrum *spec,
                         const double *x,
                         const double *y,
                         size_t len,
                         double *out);

/**
 * # Safety
 * As for [`sb_dist_d`].
 */
enum SbStatus sb_dist_de(const struct SbSpectrum *spec,
                         const double *x,
                         const double *y,
                         size_t len,
                         double *out);

/**
 * Lebesgue measure of a `D`-ball of the given radius.
 *
 * # Safety
 * `out` must be writable.
 */
enum SbStatus sb_ball_measure(const struct SbSpectrum *spec, double radius, double *out);

/**
 * Riemannian distance between `(px, pt)` and `(qx, qt)`.
 *
 * # Safety
 * `px` and `qx` must point to `len` values; `out` must be writable.
 */
enum SbStatus sb_distance(const struct SbSpectrum *spec,
                          const double *px,
                          double pt,
                          const double *qx,
                          double qt,
                          size_t len,
                          double *out);

/**
 * Parabolic visual quasimetric at `xi_0` seen from `(base_x, base_t)`.
 *
 * # Safety
 * `base_x`, `a` and `b` must point to `len` values; `out` must be writable.
 */
enum SbStatus sb_parabolic(const struct SbSpectrum *spec,
                           const double *base_x,
                           double base_t,
                           double epsilon,
                           const double *a,
                           const double *b,
                           size_t len,
                           double *out);

/**
 * Copies the calling thread's last error message, NUL-terminated, into `buf`.
 * `needed` receives the buffer size required, terminator included.
 *
 * # Safety
 * `buf` must hold `cap` writable bytes (may be null when `cap` is 0); `needed` must be writable.
 */
enum SbStatus sb_last_error_message(char *buf, size_t cap, size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOLVBOUND_H */
