#ifndef NCPNORM_H
#define NCPNORM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result codes.
 */
typedef enum NcpStatus {
  NCP_STATUS_OK = 0,
  NCP_STATUS_NULL_POINTER = 1,
  NCP_STATUS_INVALID_ARGUMENT = 2,
  NCP_STATUS_DIMENSION_MISMATCH = 3,
  NCP_STATUS_NON_FINITE = 4,
  NCP_STATUS_NOT_HERMITIAN = 5,
  NCP_STATUS_GUARD_EXCEEDED = 6,
  NCP_STATUS_NON_CONVERGENCE = 7,
  NCP_STATUS_ZERO_COEFFICIENT = 8,
  NCP_STATUS_PRECONDITION_FAILED = 9,
  NCP_STATUS_PARSE = 10,
  NCP_STATUS_PANIC = 11,
  NCP_STATUS_OTHER = 12,
} NcpStatus;

/*
 Opaque ordered list of matrices of a common size.
 */
typedef struct NcpFamily NcpFamily;

/*
 Opaque square complex matrix.
 */
typedef struct NcpMatrix NcpMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread ("" after a success).
 The pointer stays valid until the next call on the same thread.
 */
const char *ncp_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *ncp_version(void);

/*
 Builds a `dim × dim` matrix from row-major real and imaginary parts;
 `im` may be null for a real matrix.
 */
enum NcpStatus ncp_matrix_new(size_t dim,
                              const double *re,
                              const double *im,
                              struct NcpMatrix **result);

void ncp_matrix_free(struct NcpMatrix *m);

enum NcpStatus ncp_matrix_dim(const struct NcpMatrix *m, size_t *result);

/*
 Entry `(i, j)`, 0-based.
 */
enum NcpStatus ncp_matrix_get(const struct NcpMatrix *m,
                              size_t i,
                              size_t j,
                              double *re,
                              double *im);

enum NcpStatus ncp_normalized_trace(const struct NcpMatrix *m, double *re, double *im);

/*
 Normalized Schatten p-norm, `p > 0`.
 */
enum NcpStatus ncp_schatten_norm(const struct NcpMatrix *m, double p, double *result);

enum NcpStatus ncp_family_new(struct NcpFamily **result);

void ncp_family_free(struct NcpFamily *f);

/*
 Appends a copy of `m`; all members must share one dimension.
 */
enum NcpStatus ncp_family_push(struct NcpFamily *f, const struct NcpMatrix *m);

enum NcpStatus ncp_family_len(const struct NcpFamily *f, size_t *result);

/*
 `τ(word)` for a word such as `"1*,2"` (1-based indices).
 */
enum NcpStatus ncp_word_trace(const struct NcpFamily *f, const char *word, double *re, double *im);

/*
 Recovers `τ(word)` from Schatten p-norms only; `residual` (nullable)
 receives the extrapolation residual.
 */
enum NcpStatus ncp_estimate_moment(const struct NcpFamily *f,
                                   const char *word,
                                   double p,
                                   double *re,
                                   double *im,
                                   double *residual);

/*
 Weight of a moment with `n` letters and statistic `alpha` in the p-norm
 expansion.
 */
enum NcpStatus ncp_moment_coefficient(double p, size_t n, size_t alpha, double *result);

/*
 Exhaustive cyclic-trace check; `kind` 0 is the full cycle, 1 the compact
 family.
 */
enum NcpStatus ncp_gadget_verify(uint32_t kind, size_t n, double *max_deviation, bool *pass);

enum NcpStatus ncp_psi(double t, double p, double *result);

/*
 `‖1 + Σ a_j ⊗ x_j‖_{2m}^{2m}` through its finite word expansion.
 */
enum NcpStatus ncp_expand_even_norm(const struct NcpFamily *coeffs,
                                    const struct NcpFamily *elements,
                                    size_t m,
                                    double *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NCPNORM_H */
