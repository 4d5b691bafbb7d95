#ifndef GINIBRE_JPD_H
#define GINIBRE_JPD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GjpdStatus {
  GJPD_STATUS_OK = 0,
  GJPD_STATUS_DOMAIN = 1,
  GJPD_STATUS_DIMENSION = 2,
  GJPD_STATUS_SINGULAR = 3,
  GJPD_STATUS_NUMERICAL = 4,
  GJPD_STATUS_IO = 5,
  GJPD_STATUS_NULL_POINTER = 6,
  GJPD_STATUS_EMPTY_GRID = 7,
  GJPD_STATUS_PANIC = 8,
} GjpdStatus;

/**
 * Opaque ensemble description.
 */
typedef struct GjpdEnsemble GjpdEnsemble;

/**
 * Opaque histogram.
 */
typedef struct GjpdHistogram GjpdHistogram;

/**
 * Opaque analytic density model.
 */
typedef struct GjpdModel GjpdModel;

typedef struct GjpdComparison {
  double chi2_per_dof;
  double max_abs_z;
  double total_mass_ratio;
  size_t n_effective_bins;
  /**
   * 1 when the default verdict (χ²/dof in [0.5, 1.5], max |z| ≤ 5) passes.
   */
  int passed;
} GjpdComparison;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`) and returns the full message length in bytes.
 */
size_t gjpd_last_error(char *buf, size_t len);

enum GjpdStatus gjpd_regularized_gamma_upper(uint32_t n, double a, double *out);

enum GjpdStatus gjpd_erfcx(double s, double *out);

enum GjpdStatus gjpd_ginue_density(uint32_t n, double re, double im, double *out);

enum GjpdStatus gjpd_ginoe_complex_density(uint32_t n, double re, double im, double *out);

enum GjpdStatus gjpd_ginoe_real_density(uint32_t n, double x, double *out);

enum GjpdStatus gjpd_jpd_interpolating(double tau,
                                       uint32_t n,
                                       double re,
                                       double im,
                                       double u,
                                       double *out);

enum GjpdStatus gjpd_mean_density_interpolating(double tau,
                                                uint32_t n,
                                                double re,
                                                double im,
                                                double *out);

/**
 * `closed_form` selects the erfcx form (non-zero) or the integral form (zero).
 */
enum GjpdStatus gjpd_weak_nonreality_density(double delta,
                                             double x_tilde,
                                             double y,
                                             int closed_form,
                                             double *out);

enum GjpdStatus gjpd_limiting_eigvec_jpd(double tau,
                                         double re,
                                         double im,
                                         double u_tilde,
                                         double *out);

enum GjpdStatus gjpd_rank_one_normal_mean_density(double a_re,
                                                  double a_im,
                                                  uint32_t n,
                                                  double re,
                                                  double im,
                                                  double *out);

enum GjpdStatus gjpd_outlier_rate(double alpha_re,
                                  double alpha_im,
                                  double w_re,
                                  double w_im,
                                  double *out);

enum GjpdStatus gjpd_ensemble_new_interpolating(double tau,
                                                size_t n,
                                                uint64_t samples,
                                                uint64_t seed,
                                                uint32_t streams,
                                                struct GjpdEnsemble **out);

/**
 * Deformed ensemble `G + a·e₁e₁*`.
 */
enum GjpdStatus gjpd_ensemble_new_rank_one_normal(double a_re,
                                                  double a_im,
                                                  size_t n,
                                                  uint64_t samples,
                                                  uint64_t seed,
                                                  uint32_t streams,
                                                  struct GjpdEnsemble **out);

void gjpd_ensemble_free(struct GjpdEnsemble *h);

/**
 * Eigenvalue histogram over `[x_min, x_max) × [y_min, y_max)` for matrices of size `n`.
 */
enum GjpdStatus gjpd_histogram_new_plane(double x_min,
                                         double x_max,
                                         size_t x_bins,
                                         double y_min,
                                         double y_max,
                                         size_t y_bins,
                                         size_t n,
                                         struct GjpdHistogram **out);

/**
 * `Im z` histogram of eigenvalues with `|x − x0| < half_width`
 * (`x = Re z/√N` when `scaled_x` is non-zero).
 */
enum GjpdStatus gjpd_histogram_new_strip(double x0,
                                         double half_width,
                                         int scaled_x,
                                         double y_min,
                                         double y_max,
                                         size_t y_bins,
                                         size_t n,
                                         struct GjpdHistogram **out);

void gjpd_histogram_free(struct GjpdHistogram *h);

size_t gjpd_histogram_len(const struct GjpdHistogram *h);

uint64_t gjpd_histogram_n_matrices(const struct GjpdHistogram *h);

uint64_t gjpd_histogram_overflow(const struct GjpdHistogram *h);

/**
 * Copies the bin counts into `buf`, which must hold `gjpd_histogram_len(h)` values.
 */
enum GjpdStatus gjpd_histogram_counts(const struct GjpdHistogram *h, uint64_t *buf, size_t len);

/**
 * Samples the ensemble and replaces the contents of `hist`.
 */
enum GjpdStatus gjpd_run_mc(const struct GjpdEnsemble *e,
                            struct GjpdHistogram *hist,
                            size_t workers);

enum GjpdStatus gjpd_model_new_ginue(uint32_t n, struct GjpdModel **out);

enum GjpdStatus gjpd_model_new_interpolating(double tau, uint32_t n, struct GjpdModel **out);

enum GjpdStatus gjpd_model_new_rank_one_normal(double a_re,
                                               double a_im,
                                               uint32_t n,
                                               struct GjpdModel **out);

/**
 * Weak non-reality limit; pair it with a scaled strip histogram.
 */
enum GjpdStatus gjpd_model_new_weak_nonreality(double delta, struct GjpdModel **out);

void gjpd_model_free(struct GjpdModel *h);

/**
 * Poisson comparison of a filled histogram with a model at the default thresholds.
 */
enum GjpdStatus gjpd_compare(const struct GjpdHistogram *hist,
                             const struct GjpdModel *model,
                             struct GjpdComparison *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GINIBRE_JPD_H */
