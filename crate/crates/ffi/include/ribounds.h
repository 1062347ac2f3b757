#ifndef RIBOUNDS_H
#define RIBOUNDS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of parameters of the two-qubit family searched by [`rb_optimize_chsh`].
 */
#define RB_QUBIT_PARAMS 9

typedef enum RbStatus {
  RB_STATUS_OK = 0,
  RB_STATUS_NULL_POINTER = 1,
  RB_STATUS_INVALID_UTF8 = 2,
  RB_STATUS_MALFORMED = 3,
  RB_STATUS_DEGENERATE = 4,
  RB_STATUS_PRECONDITION = 5,
  RB_STATUS_NUMERICAL = 6,
  RB_STATUS_BUFFER_TOO_SMALL = 7,
  RB_STATUS_PANIC = 8,
} RbStatus;

/**
 * A finite-dimensional quantum scenario.
 */
typedef struct RbScenario RbScenario;

/**
 * Correlator data for Alice's and Bob's two settings.
 */
typedef struct RbTable RbTable;

typedef struct RbVerdict {
  /**
   * 1 local, 0 nonlocal, −1 unknown (outcomes not ±1).
   */
  int32_t local;
  bool quantum_compatible;
  bool ri_feasible;
  /**
   * NaN when Alice's intervals do not meet.
   */
  double witness_r;
  double epsilon;
  double chsh;
} RbVerdict;

typedef struct RbTlm {
  bool pass;
  double lhs[2];
  double rhs[2];
} RbTlm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rb_version(void);

/**
 * Message of the most recent failure on this thread, or NULL if none.
 */
const char *rb_last_error(void);

/**
 * Builds a table from four Pearson coefficients in row-major order
 * `ϱ00, ϱ01, ϱ10, ϱ11` (Alice's setting first).
 *
 * # Safety
 * `pearson` must point to 4 readable doubles and `out` to a writable handle slot.
 */
enum RbStatus rb_table_from_pearson(const double *pearson, struct RbTable **out);

/**
 * Builds a table from means, variances and the row-major covariance block.
 *
 * # Safety
 * The four pair pointers must each reference 2 doubles, `cov` 4 doubles,
 * and `out` a writable handle slot.
 */
enum RbStatus rb_table_from_moments(const double *means_a,
                                    const double *means_b,
                                    const double *var_a,
                                    const double *var_b,
                                    const double *cov,
                                    struct RbTable **out);

/**
 * Writes the Pearson coefficients row-major into `out[4]`.
 *
 * # Safety
 * `table` must be a live handle and `out` must reference 4 writable doubles.
 */
enum RbStatus rb_table_pearson(const struct RbTable *table, double *out);

/**
 * # Safety
 * `table` must be NULL or a handle not yet freed.
 */
void rb_table_free(struct RbTable *table);

/**
 * # Safety
 * `table` must be a live handle and `out` writable.
 */
enum RbStatus rb_classify(const struct RbTable *table, double tol, struct RbVerdict *out);

/**
 * # Safety
 * `table` must be a live handle and `out` writable.
 */
enum RbStatus rb_tlm_check(const struct RbTable *table, double tol, struct RbTlm *out);

/**
 * Gap between Alice's `r'` intervals; zero when they meet within `tol`.
 *
 * # Safety
 * `table` must be a live handle and `out` writable.
 */
enum RbStatus rb_epsilon(const struct RbTable *table, double tol, double *out);

/**
 * Parses a scenario from the JSON form the CLI reads.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable handle slot.
 */
enum RbStatus rb_scenario_from_json(const char *json, struct RbScenario **out);

/**
 * Alice–Bob correlator table of a scenario, as a new handle.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a writable handle slot.
 */
enum RbStatus rb_scenario_table(const struct RbScenario *scenario, struct RbTable **out);

/**
 * `η` of Alice and Bob.
 *
 * # Safety
 * `scenario` must be a live handle; `eta_a` and `eta_b` must be writable.
 */
enum RbStatus rb_scenario_eta(const struct RbScenario *scenario, double *eta_a, double *eta_b);

/**
 * # Safety
 * `scenario` must be NULL or a handle not yet freed.
 */
void rb_scenario_free(struct RbScenario *scenario);

/**
 * Multistart CHSH maximisation over two-qubit scenarios. Writes the best
 * value and, when `params` is non-NULL, its [`RB_QUBIT_PARAMS`] parameters.
 *
 * # Safety
 * `best` must be writable; `params`, if non-NULL, must reference
 * `params_len` writable doubles.
 */
enum RbStatus rb_optimize_chsh(uint32_t restarts,
                               uint32_t max_evals,
                               uint64_t seed,
                               double *best,
                               double *params,
                               size_t params_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RIBOUNDS_H */
