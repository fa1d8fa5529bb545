#ifndef REGGE_ICS_H
#define REGGE_ICS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RiStatus {
  RI_STATUS_OK = 0,
  RI_STATUS_NULL_POINTER = 1,
  RI_STATUS_INVALID_ARGUMENT = 2,
  RI_STATUS_NUMERICAL = 3,
  RI_STATUS_OUT_OF_RANGE = 4,
  RI_STATUS_PANIC = 5,
} RiStatus;

// Opaque reconstructed model.
typedef struct RiModel RiModel;

// Settings of one reconstruction; see [`ri_fit_options_default`].
// `niter = 0` builds the plain rational interpolant without phase passes.
typedef struct RiFitOptions {
  double energy;
  size_t jstart;
  size_t jfin;
  size_t niter;
  double sht;
  double dxl;
  bool extended_precision;
} RiFitOptions;

typedef struct RiComplex {
  double re;
  double im;
} RiComplex;

// Delta-shell hard sphere: radius Å, well width Å, depth meV,
// barrier strength meV·Å, reduced mass Da.
typedef struct RiShellParams {
  double r;
  double d;
  double v_well;
  double omega_delta;
  double mu;
} RiShellParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Defaults for `n` values starting at J = 0: the whole grid is fitted.
// `energy` only labels the model and must be positive.
struct RiFitOptions ri_fit_options_default(size_t n);

// Reconstructs a model from `n` values S(J), J = 0..n-1. The handle must
// be released with [`ri_model_free`].
//
// # Safety
// `s` must point to `n` readable values and `out` to writable storage.
enum RiStatus ri_model_fit(const struct RiComplex *s,
                           size_t n,
                           const struct RiFitOptions *options,
                           struct RiModel **out);

// # Safety
// `model` must come from [`ri_model_fit`] and not be used afterwards.
void ri_model_free(struct RiModel *model);

// Largest |S_model(J) - S(J)| over the fitted points, in the working precision.
//
// # Safety
// Pointers must be valid or null.
enum RiStatus ri_model_fit_residual(const struct RiModel *model, double *out);

// # Safety
// Pointers must be valid or null.
enum RiStatus ri_model_eval(const struct RiModel *model, struct RiComplex j, struct RiComplex *out);

// # Safety
// Pointers must be valid or null.
enum RiStatus ri_model_pole_count(const struct RiModel *model, size_t *out);

// # Safety
// Pointers must be valid or null.
enum RiStatus ri_model_zero_count(const struct RiModel *model, size_t *out);

// # Safety
// Pointers must be valid or null.
enum RiStatus ri_model_pole(const struct RiModel *model, size_t i, struct RiComplex *out);

// # Safety
// Pointers must be valid or null.
enum RiStatus ri_model_zero(const struct RiModel *model, size_t i, struct RiComplex *out);

// Residue of the model at pole `i`.
//
// # Safety
// Pointers must be valid or null.
enum RiStatus ri_model_residue(const struct RiModel *model, size_t i, struct RiComplex *out);

// Writes S(J) of the delta-shell model for J = 0..len-1 at `energy` meV.
//
// # Safety
// `out` must point to `len` writable values.
enum RiStatus ri_shell_s_matrix(const struct RiShellParams *params,
                                double energy,
                                struct RiComplex *out,
                                size_t len);

// Copies the last error of this thread into `buf` (NUL-terminated,
// truncated to `len`) and returns the full message length, 0 if none.
//
// # Safety
// `buf` must point to `len` writable bytes or be null.
size_t ri_last_error(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REGGE_ICS_H */
