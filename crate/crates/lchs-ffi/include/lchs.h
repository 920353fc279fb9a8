#ifndef LCHS_H
#define LCHS_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LchsStatus {
  LCHS_STATUS_OK = 0,
  LCHS_STATUS_DOMAIN = 1,
  LCHS_STATUS_OVERFLOW = 2,
  LCHS_STATUS_INFEASIBLE = 3,
  LCHS_STATUS_CONVERGENCE = 4,
  LCHS_STATUS_SIZE = 5,
  LCHS_STATUS_PARSE = 6,
  LCHS_STATUS_IO = 7,
  LCHS_STATUS_NULL_POINTER = 8,
  LCHS_STATUS_PANIC = 9,
} LchsStatus;

typedef enum LchsMethod {
  LCHS_METHOD_SOL_EPS_AA = 0,
  LCHS_METHOD_SOL_EPS_EXP = 1,
} LchsMethod;

/**
 * Opaque result handle from `lchs_estimate` or `lchs_optimize`.
 */
typedef struct LchsReport LchsReport;

/**
 * Opaque problem handle.
 */
typedef struct LchsSpec LchsSpec;

/**
 * Problem parameters, mirroring the Rust `ProblemSpec`.
 */
typedef struct LchsSpecParams {
  double t;
  double alpha_a;
  double norm_l;
  double norm_u0;
  double norm_ut;
  double eps_total;
  double beta;
  uint32_t m_a;
} LchsSpecParams;

/**
 * Scalar view of a cost report. `c_r` is split into 64-bit halves.
 */
typedef struct LchsCostSummary {
  double beta;
  double delta;
  uint64_t c_lchs;
  uint64_t qubitization_per_call;
  uint64_t c_a;
  uint64_t c_r_lo;
  uint64_t c_r_hi;
  uint64_t c_0;
  uint32_t ancilla_estimate;
  double success_prob_lower;
  double k_cut;
  uint64_t m_total;
  uint32_t log2_m;
  double c_l1;
  double eps_v;
  double eps_lchs;
  uint64_t excluded_queries;
} LchsCostSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * The pointer stays valid until the next call into this library.
 */
const char *lchs_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lchs_version(void);

/**
 * Defaults: t = 1, α_A = ‖L‖ = ‖u₀‖ = ‖u(t)‖ = 1, ε = 1e-10, β = 0.75.
 */
struct LchsSpecParams lchs_spec_params_default(void);

/**
 * Validates `params` and writes a new handle to `*out`.
 *
 * # Safety
 * `params` must point to a valid `LchsSpecParams`; `out` must be writable.
 */
enum LchsStatus lchs_spec_new(const struct LchsSpecParams *params, struct LchsSpec **out);

/**
 * # Safety
 * `spec` must be null or a handle from `lchs_spec_new` not yet freed.
 */
void lchs_spec_free(struct LchsSpec *spec);

/**
 * Equal-budget estimate. `perfect_oracle` nonzero zeroes the oracle
 * errors; `tight_q` nonzero uses the tight Gauss-Legendre order.
 *
 * # Safety
 * `spec` must be a live handle and `out` writable.
 */
enum LchsStatus lchs_estimate(const struct LchsSpec *spec,
                              int32_t perfect_oracle,
                              int32_t tight_q,
                              struct LchsReport **out);

/**
 * Optimized budget and β; deterministic for a given seed.
 *
 * # Safety
 * `spec` must be a live handle and `out` writable.
 */
enum LchsStatus lchs_optimize(const struct LchsSpec *spec,
                              enum LchsMethod method,
                              uint32_t eval_limit,
                              uint64_t seed,
                              struct LchsReport **out);

/**
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum LchsStatus lchs_report_summary(const struct LchsReport *report, struct LchsCostSummary *out);

/**
 * Full report (budget, plan header, costs, constraint check) as JSON.
 * Returns null on failure.
 *
 * # Safety
 * `report` must be a live handle.
 */
char *lchs_report_to_json(const struct LchsReport *report);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void lchs_string_free(char *s);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
void lchs_report_free(struct LchsReport *report);

/**
 * Principal branch W0(x), x ≥ -1/e.
 *
 * # Safety
 * `out` must be writable.
 */
enum LchsStatus lchs_lambert_w0(double x, double *out);

/**
 * Lower branch W-1(x), -1/e ≤ x < 0.
 *
 * # Safety
 * `out` must be writable.
 */
enum LchsStatus lchs_lambert_wm1(double x, double *out);

/**
 * Truncation cutoff K for kernel parameter β and tolerance ε.
 *
 * # Safety
 * `out` must be writable.
 */
enum LchsStatus lchs_truncation_k(double beta, double eps, double *out);

/**
 * Sign-polynomial degree for gap Δ and accuracy ε.
 *
 * # Safety
 * `out` must be writable.
 */
enum LchsStatus lchs_degree_bound(double delta, double eps, uint64_t *out);

/**
 * Human-readable name of a status code (static string).
 */
const char *lchs_status_name(enum LchsStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LCHS_H */
