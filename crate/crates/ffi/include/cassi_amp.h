#ifndef CASSI_AMP_H
#define CASSI_AMP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call. Values above 2 match the exit codes
// of the command-line tool.
typedef enum CassiStatus {
  CASSI_STATUS_OK = 0,
  // A required pointer was null or a string was not UTF-8.
  CASSI_STATUS_INVALID_ARGUMENT = 1,
  // A Rust panic was caught; the handle arguments should be discarded.
  CASSI_STATUS_PANIC = 2,
  CASSI_STATUS_SIZE = 3,
  CASSI_STATUS_VALIDATION = 4,
  CASSI_STATUS_DOMAIN = 5,
  CASSI_STATUS_REFUSED = 6,
  CASSI_STATUS_DIVERGENCE = 7,
  CASSI_STATUS_CONFIG = 8,
  CASSI_STATUS_BAD_MAGIC = 10,
  CASSI_STATUS_TRUNCATED = 11,
  CASSI_STATUS_DIMENSION_OVERFLOW = 12,
  CASSI_STATUS_INVALID_APERTURE_BYTE = 13,
  CASSI_STATUS_IO = 14,
  CASSI_STATUS_IMAGE = 15,
} CassiStatus;

typedef enum CassiOrder {
  CASSI_ORDER_STANDARD = 0,
  CASSI_ORDER_HIGHER_ORDER = 1,
} CassiOrder;

typedef enum CassiWavelet {
  CASSI_WAVELET_HAAR = 0,
  CASSI_WAVELET_DAUBECHIES4 = 1,
} CassiWavelet;

// Opaque spectral cube.
typedef struct CassiCube CassiCube;

// Opaque sensing model (apertures, band count, dispersion order).
typedef struct CassiModel CassiModel;

// Reconstruction settings. Obtain defaults from `cassi_amp_options_default`.
typedef struct CassiAmpOptions {
  double alpha;
  size_t max_iters;
  enum CassiWavelet wavelet;
  size_t levels;
} CassiAmpOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. The
// pointer stays valid until the next failing call on the same thread.
const char *cassi_last_error(void);

// Creates an `m x n x bands` cube. `values` holds `m*n*bands` doubles in
// band-major order (x fastest) or is null for an all-zero cube.
enum CassiStatus cassi_cube_new(size_t m,
                                size_t n,
                                size_t bands,
                                const double *values,
                                struct CassiCube **out);

void cassi_cube_free(struct CassiCube *cube);

// Writes the cube dimensions; any output pointer may be null.
enum CassiStatus cassi_cube_dims(const struct CassiCube *cube, size_t *m, size_t *n, size_t *bands);

// Copies the cube values into `dst`, which must hold exactly `len` doubles.
enum CassiStatus cassi_cube_copy_values(const struct CassiCube *cube, double *dst, size_t len);

enum CassiStatus cassi_cube_read(const char *path, struct CassiCube **out);

enum CassiStatus cassi_cube_write(const struct CassiCube *cube, const char *path);

// Builds a sensing model from `shots` binary masks of `m x n` bytes each,
// stored consecutively in row-major order. `weights` points to three
// higher-order tap weights or is null for the defaults; it is ignored for
// the standard order.
enum CassiStatus cassi_model_new(const uint8_t *masks,
                                 size_t shots,
                                 size_t m,
                                 size_t n,
                                 size_t bands,
                                 enum CassiOrder order,
                                 const double *weights,
                                 struct CassiModel **out);

void cassi_model_free(struct CassiModel *model);

// Number of detector measurements `m`, or 0 for a null model.
size_t cassi_model_measurement_count(const struct CassiModel *model);

// Computes `g = H f` into `g`, which must hold exactly `len` doubles.
enum CassiStatus cassi_model_forward(const struct CassiModel *model,
                                     const struct CassiCube *cube,
                                     double *g,
                                     size_t len);

// Computes `H^T g` as a new cube.
enum CassiStatus cassi_model_adjoint(const struct CassiModel *model,
                                     const double *g,
                                     size_t len,
                                     struct CassiCube **out);

struct CassiAmpOptions cassi_amp_options_default(void);

// Reconstructs a cube from `len` measurements. `options` may be null for
// the defaults; `final_sigma2` may be null.
enum CassiStatus cassi_run_amp(const struct CassiModel *model,
                               const double *g,
                               size_t len,
                               const struct CassiAmpOptions *options,
                               struct CassiCube **out,
                               double *final_sigma2);

// PSNR of `estimate` against `reference` in dB; identical cubes give
// positive infinity.
enum CassiStatus cassi_psnr(const struct CassiCube *reference,
                            const struct CassiCube *estimate,
                            double *out_db);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CASSI_AMP_H */
