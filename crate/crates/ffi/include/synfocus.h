#ifndef SYNFOCUS_H
#define SYNFOCUS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SF_FAMILY_SPHERICAL = 0,
  SF_FAMILY_PLANE = 1,
  SF_FAMILY_XRAY = 2,
} SfFamily;

typedef enum {
  SF_KERNEL_METHOD_BRUTEFORCE = 0,
  SF_KERNEL_METHOD_ADJOINT = 1,
} SfKernelMethod;

/**
 * Result of every fallible call.
 */
typedef enum {
  SF_STATUS_OK = 0,
  SF_STATUS_NULL_POINTER = 1,
  SF_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Solver failure, singular geometry or lattice mismatch.
   */
  SF_STATUS_NUMERICAL = 3,
  SF_STATUS_UNSUPPORTED = 4,
  SF_STATUS_IO = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  SF_STATUS_PANIC = 6,
} SfStatus;

typedef struct SfData SfData;

typedef struct SfGrid SfGrid;

typedef struct SfKernel SfKernel;

typedef struct SfPhantom SfPhantom;

/**
 * Acquisition settings for `sf_measure`; zero counts pick the defaults.
 */
typedef struct {
  SfFamily family;
  size_t transducers;
  double transducer_radius;
  size_t radii;
  size_t angles;
  size_t offsets;
  /**
   * Noise standard deviation relative to the data RMS.
   */
  double noise;
  uint64_t seed;
} SfMeasureParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL after a success.
 * Valid until the next call on the same thread.
 */
const char *sf_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sf_version(void);

/**
 * Cell-centered grid with `n` cells per axis on `[lo, hi]^dim`.
 */
SfStatus sf_grid_new(size_t dim, size_t n, double lo, double hi, SfGrid **out);

/**
 * Number of grid points, 0 for NULL.
 */
size_t sf_grid_len(const SfGrid *grid);

void sf_grid_free(SfGrid *grid);

/**
 * The default four-disk log-conductivity phantom on a 2D grid.
 */
SfStatus sf_phantom_default(const SfGrid *grid, SfPhantom **out);

/**
 * Phantom from `len` log-conductivity values in x-fastest order.
 */
SfStatus sf_phantom_from_values(const SfGrid *grid,
                                const double *values,
                                size_t len,
                                SfPhantom **out);

void sf_phantom_free(SfPhantom *phantom);

/**
 * Measurement kernel of `phantom` under the left/right current pattern,
 * on the `interior` grid (which must tile the phantom grid).
 */
SfStatus sf_kernel_compute(const SfPhantom *phantom,
                           const SfGrid *interior,
                           SfKernelMethod method,
                           double eps,
                           SfKernel **out);

SfStatus sf_kernel_shape(const SfKernel *kernel, size_t *electrodes, size_t *pixels);

/**
 * Copies the row-major `[electrodes × pixels]` kernel into `buf`, which must hold exactly that many values.
 */
SfStatus sf_kernel_values(const SfKernel *kernel,
                          double *buf,
                          size_t len);

/**
 * `‖a - b‖_F / ‖b‖_F`.
 */
SfStatus sf_kernel_relative_error(const SfKernel *a, const SfKernel *b, double *out);

void sf_kernel_free(SfKernel *kernel);

/**
 * Settings that select `family` with every count left to its default.
 */
SfMeasureParams sf_measure_params_default(SfFamily family);

/**
 * Synthetic unfocused-wave data of `kernel`.
 */
SfStatus sf_measure(const SfKernel *kernel, const SfMeasureParams *params, SfData **out);

/**
 * Number of samples (complex samples count once), 0 for NULL.
 */
size_t sf_data_len(const SfData *data);

void sf_data_free(SfData *data);

/**
 * Reconstructs the kernel on `out_grid` with the inversion matching the data family.
 */
SfStatus sf_focus(const SfData *data, const SfGrid *out_grid, SfKernel **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYNFOCUS_H */
