#ifndef ORDINAL_THRESHOLD_H
#define ORDINAL_THRESHOLD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OtStatus {
  OT_STATUS_OK = 0,
  OT_STATUS_NULL_POINTER = 1,
  OT_STATUS_INVALID_UTF8 = 2,
  OT_STATUS_INVALID_ARGUMENT = 3,
  OT_STATUS_DIMENSION_MISMATCH = 4,
  OT_STATUS_BUFFER_TOO_SMALL = 5,
  OT_STATUS_PARSE = 6,
  OT_STATUS_NUMERICAL_FAILURE = 7,
  OT_STATUS_PANIC = 8,
} OtStatus;

typedef enum OtTask {
  OT_TASK_ZERO_ONE = 0,
  OT_TASK_ABSOLUTE = 1,
  OT_TASK_SQUARED = 2,
} OtTask;

// A discrete population: support points, label distributions, weights.
typedef struct OtDistribution OtDistribution;

// A fitted 1DT and bias vector.
typedef struct OtFit OtFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static NUL-terminated string.
const char *ot_version(void);

// Message of the last failed call on this thread, or NULL after a
// successful call. Valid until the next call on the same thread.
const char *ot_last_error(void);

// Builds a simulation distribution by name, e.g. `"H-1/3"` or `"O-1-3"`
// (K = 10, N = 100).
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum OtStatus ot_distribution_from_name(const char *name, struct OtDistribution **out);

// Builds a distribution from `n` support points, an `n × k` row-major
// table of label probabilities and `n` weights. A NULL `weights` means
// uniform weights.
//
// # Safety
// `support` must hold `n` values, `cpds` `n * k` values, `weights` `n`
// values or be NULL; `out` must be valid.
enum OtStatus ot_distribution_new(const double *support,
                                  const double *cpds,
                                  const double *weights,
                                  size_t n,
                                  size_t k,
                                  struct OtDistribution **out);

// # Safety
// `dist` must come from this library and not be used afterwards.
void ot_distribution_free(struct OtDistribution *dist);

// Number of support points `N`.
//
// # Safety
// `dist` and `out` must be valid.
enum OtStatus ot_distribution_num_points(const struct OtDistribution *dist, size_t *out);

// Number of labels `K`.
//
// # Safety
// `dist` and `out` must be valid.
enum OtStatus ot_distribution_num_classes(const struct OtDistribution *dist, size_t *out);

// Minimizes the population surrogate risk of `method` (e.g.
// `"logi-at-o"`) with full-batch Adam. `epochs = 0` uses the default
// length.
//
// # Safety
// `dist`, `method` and `out` must be valid.
enum OtStatus ot_fit(const struct OtDistribution *dist,
                     const char *method,
                     size_t epochs,
                     struct OtFit **out);

// # Safety
// `fit` must come from this library and not be used afterwards.
void ot_fit_free(struct OtFit *fit);

// Final surrogate risk.
//
// # Safety
// `fit` and `out` must be valid.
enum OtStatus ot_fit_risk(const struct OtFit *fit, double *out);

// Copies the `N` fitted 1DT values into `out`, which has room for `len`.
//
// # Safety
// `fit` must be valid and `out` must hold `len` values.
enum OtStatus ot_fit_a(const struct OtFit *fit, double *out, size_t len);

// Copies the `K - 1` fitted biases into `out`, which has room for `len`.
//
// # Safety
// `fit` must be valid and `out` must hold `len` values.
enum OtStatus ot_fit_b(const struct OtFit *fit, double *out, size_t len);

// Task-optimal thresholds for 1DT values `a` (one per support point).
// Writes `K - 1` thresholds into `t_out` and the task risk into `risk`.
//
// # Safety
// `a` must hold `n` values, `t_out` `t_len` values; pointers must be valid.
enum OtStatus ot_optimal_thresholds(const struct OtDistribution *dist,
                                    const double *a,
                                    size_t n,
                                    enum OtTask task,
                                    double *t_out,
                                    size_t t_len,
                                    double *risk);

// Mean task loss of labeling 1DT values `a` with thresholds `t`. For the
// squared task this is the MSE.
//
// # Safety
// `a` must hold `n` values and `t` `t_len` values; pointers must be valid.
enum OtStatus ot_approximation_error(const struct OtDistribution *dist,
                                     const double *a,
                                     size_t n,
                                     const double *t,
                                     size_t t_len,
                                     enum OtTask task,
                                     double *out);

// Mean task loss of the Bayes rule.
//
// # Safety
// `dist` and `out` must be valid.
enum OtStatus ot_bayes_error(const struct OtDistribution *dist, enum OtTask task, double *out);

// Surrogate loss of `method` at 1DT value `a`, biases `b` (`b_len = K - 1`)
// and label `y`.
//
// # Safety
// `method` must be a NUL-terminated string, `b` must hold `b_len` values
// and `out` must be valid.
enum OtStatus ot_surrogate_loss(const char *method,
                                double a,
                                const double *b,
                                size_t b_len,
                                size_t y,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORDINAL_THRESHOLD_H */
