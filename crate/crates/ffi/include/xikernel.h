#ifndef XIKERNEL_H
#define XIKERNEL_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum xk_status {
  XK_STATUS_OK = 0,
  XK_STATUS_NULL_POINTER = 1,
  // Malformed UTF-8 or JSON.
  XK_STATUS_PARSE = 2,
  XK_STATUS_INVALID_ARGUMENT = 3,
  XK_STATUS_OUTSIDE_DOMAIN = 4,
  // Every basis element has infinite norm; kernels are zero.
  XK_STATUS_EMPTY_MODEL = 5,
  // The parameter is outside the regular set of the ideal family.
  XK_STATUS_OUTSIDE_REGULAR_SET = 6,
  // Any other library error.
  XK_STATUS_COMPUTE = 7,
  XK_STATUS_PANIC = 8,
} xk_status;

// Ideal family with its annihilator and functionals.
typedef struct xk_ideal xk_ideal;

// Gram model of a weighted space on a polydisc.
typedef struct xk_model xk_model;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or NULL after a
// success. The pointer stays valid until the next library call on this
// thread.
const char *xk_last_error(void);

// Library version as a static NUL-terminated string.
const char *xk_version(void);

// Release a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from this library and must not be freed twice.
void xk_string_free(char *s);

// Assemble the Gram model of `(domain, weight)` on polynomials of total
// degree at most `degree`. `weight_json` must have w-arity 0.
//
// # Safety
// String arguments must be NUL-terminated; `out` must be writable.
enum xk_status xk_model_new(const char *domain_json,
                            const char *weight_json,
                            size_t degree,
                            bool force_quadrature,
                            struct xk_model **out);

// # Safety
// `model` must come from [`xk_model_new`] and not be used afterwards.
void xk_model_free(struct xk_model *model);

// Number of orthonormal basis elements kept.
//
// # Safety
// `model` must be a live handle; `out` must be writable.
enum xk_status xk_model_rank(const struct xk_model *model, size_t *out);

// Kernel value `K(z)` for the functional in `functional_json` at the point
// `z = re + i·im` of length `n`.
//
// # Safety
// `model` must be a live handle; `re`/`im` must hold `n` values.
enum xk_status xk_model_kernel(const struct xk_model *model,
                               const char *functional_json,
                               const double *re,
                               const double *im,
                               size_t n,
                               double *out);

// Build the annihilator of an ideal family. `grid_re`/`grid_im` hold
// `n_points` base points of arity `m` stored point after point; they are
// tried first when searching for the generic rank. They may be NULL when
// `n_points` is 0.
//
// # Safety
// String arguments must be NUL-terminated; grid arrays must hold
// `n_points * m` values; `out` must be writable.
enum xk_status xk_ideal_new(const char *ideal_json,
                            const char *base_json,
                            const double *grid_re,
                            const double *grid_im,
                            size_t n_points,
                            uint64_t seed,
                            struct xk_ideal **out);

// # Safety
// `ideal` must come from [`xk_ideal_new`] and not be used afterwards.
void xk_ideal_free(struct xk_ideal *ideal);

// Generic rank of the coefficient matrix.
//
// # Safety
// `ideal` must be a live handle; `out` must be writable.
enum xk_status xk_ideal_rank(const struct xk_ideal *ideal, size_t *out);

// Whether `w` lies in the regular set where the annihilator is exact.
//
// # Safety
// `ideal` must be a live handle; `re`/`im` must hold `m` values.
enum xk_status xk_ideal_in_regular_set(const struct xk_ideal *ideal,
                                       const double *re,
                                       const double *im,
                                       size_t m,
                                       bool *out);

// Membership of the fiber polynomial `poly_json` in the fiber ideal at `w`
// modulo the jet order, decided by the annihilator functionals.
//
// # Safety
// `ideal` must be a live handle; `re`/`im` must hold `m` values.
enum xk_status xk_ideal_contains(const struct xk_ideal *ideal,
                                 const double *re,
                                 const double *im,
                                 size_t m,
                                 const char *poly_json,
                                 bool *out);

// Annihilator matrix, rank data and functionals as JSON.
//
// # Safety
// `ideal` must be a live handle; the result must be released with
// [`xk_string_free`].
enum xk_status xk_ideal_to_json(const struct xk_ideal *ideal, char **out);

// Run a full CLI config. The result is a JSON object with keys `failed`,
// `warnings`, `summary` and `artifacts` (file name to contents). A failed
// verification is reported through `failed`, not through the status.
//
// # Safety
// `config_json` must be NUL-terminated; the result must be released with
// [`xk_string_free`].
enum xk_status xk_run_config(const char *config_json, const uint64_t *seed, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* XIKERNEL_H */
