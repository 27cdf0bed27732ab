#ifndef EQPROX_H
#define EQPROX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum EqpxError {
  EQPX_ERROR_OK = 0,
  EQPX_ERROR_NULL_POINTER = 1,
  EQPX_ERROR_INVALID_ARGUMENT = 2,
  EQPX_ERROR_DIMENSION = 3,
  EQPX_ERROR_UNKNOWN_PROBLEM = 4,
  EQPX_ERROR_PARSE = 5,
  EQPX_ERROR_IO = 6,
  EQPX_ERROR_EVALUATION = 7,
  EQPX_ERROR_DERIVATIVE_CHECK = 8,
  EQPX_ERROR_BUFFER_TOO_SMALL = 9,
  EQPX_ERROR_PANIC = 10,
  EQPX_ERROR_INTERNAL = 11,
} EqpxError;

typedef enum EqpxStatus {
  EQPX_STATUS_KKT_POINT = 0,
  EQPX_STATUS_INFEASIBLE_STATIONARY = 1,
  EQPX_STATUS_MAX_ITERATIONS = 2,
  EQPX_STATUS_SUBSOLVER_ERROR = 3,
} EqpxStatus;

/**
 * Opaque problem handle.
 */
typedef struct EqpxProblem EqpxProblem;

/**
 * Opaque result handle.
 */
typedef struct EqpxReport EqpxReport;

/**
 * Solver settings; obtain defaults from [`eqpx_config_default`].
 */
typedef struct EqpxSolverConfig {
  double alpha0;
  double tau_init;
  double kappa_v;
  double sigma_c;
  double eps_tau;
  double xi;
  double eta;
  double sigma_u;
  size_t max_iterations;
  double tol_feas;
  double tol_stat;
  double isp_feas_floor;
  double isp_stat_tol;
  double sub_tol_stat;
  double sub_tol_feas;
  size_t max_inner_iterations;
  double penalty_rho;
} EqpxSolverConfig;

/**
 * Writes `f(x)`; returns 0 on success.
 */
typedef int (*EqpxObjectiveFn)(const double *x, size_t n, double *f, void *user_data);

/**
 * Writes the `n` gradient entries; returns 0 on success.
 */
typedef int (*EqpxGradientFn)(const double *x, size_t n, double *g, void *user_data);

/**
 * Writes the `m` constraint values; returns 0 on success.
 */
typedef int (*EqpxConstraintsFn)(const double *x, size_t n, double *c, size_t m, void *user_data);

/**
 * Writes the `m x n` Jacobian in row-major order; returns 0 on success.
 */
typedef int (*EqpxJacobianFn)(const double *x, size_t n, double *jac, size_t m, void *user_data);

/**
 * User-supplied problem callbacks. A nonzero return value marks the
 * evaluation as failed. The callbacks must be safe to call from any
 * thread for as long as the problem handle exists.
 */
typedef struct EqpxCallbacks {
  EqpxObjectiveFn objective;
  EqpxGradientFn gradient;
  EqpxConstraintsFn constraints;
  EqpxJacobianFn jacobian;
  void *user_data;
} EqpxCallbacks;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Defaults of every solver setting.
 */
struct EqpxSolverConfig eqpx_config_default(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *eqpx_version(void);

/**
 * Message for the most recent failure on this thread; empty after a
 * successful call. Valid until the next call into the library.
 */
const char *eqpx_last_error_message(void);

size_t eqpx_catalog_count(void);

/**
 * Name of catalog entry `index` (sorted order), or NULL when out of range.
 */
const char *eqpx_catalog_name(size_t index);

/**
 * Builds a problem from callbacks with start point `x0` of length `n`.
 *
 * # Safety
 * `name` must be a NUL-terminated string, `x0` must point to `n` doubles,
 * and `out` must be a valid pointer.
 */
enum EqpxError eqpx_problem_new(const char *name,
                                size_t n,
                                size_t m,
                                const double *x0,
                                struct EqpxCallbacks callbacks,
                                struct EqpxProblem **out);

/**
 * Built-in problem by name. With `reformulate` the problem is solved in
 * its slack form with weight `lambda`, or `||y*||_inf + 10` when
 * `lambda <= 0`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EqpxError eqpx_problem_from_catalog(const char *name,
                                         bool reformulate,
                                         double lambda,
                                         struct EqpxProblem **out);

/**
 * Problem from a text description file; see [`eqpx_problem_from_catalog`]
 * for `reformulate` and `lambda`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EqpxError eqpx_problem_from_file(const char *path,
                                      bool reformulate,
                                      double lambda,
                                      struct EqpxProblem **out);

/**
 * Replaces the regularizer with `weight * sum |x_i|` over `indices`
 * (zero-based). `count == 0` removes it.
 *
 * # Safety
 * `problem` must be a live handle and `indices` must point to `count`
 * values (it may be NULL when `count == 0`).
 */
enum EqpxError eqpx_problem_set_l1(struct EqpxProblem *problem,
                                   double weight,
                                   const size_t *indices,
                                   size_t count);

/**
 * Number of variables of the problem as solved (including slacks).
 *
 * # Safety
 * `problem` must be a live handle or NULL.
 */
size_t eqpx_problem_num_variables(const struct EqpxProblem *problem);

/**
 * # Safety
 * `problem` must be a live handle or NULL.
 */
size_t eqpx_problem_num_constraints(const struct EqpxProblem *problem);

/**
 * # Safety
 * `problem` must come from one of the constructors and not be used again.
 */
void eqpx_problem_free(struct EqpxProblem *problem);

/**
 * Runs the solver. `config` may be NULL for defaults. A report is
 * produced for every terminated run, including failed ones; inspect
 * [`eqpx_report_status`].
 *
 * # Safety
 * `problem` must be a live handle, `config` NULL or valid, `out` valid.
 */
enum EqpxError eqpx_solve(const struct EqpxProblem *problem,
                          const struct EqpxSolverConfig *config,
                          struct EqpxReport **out);

/**
 * # Safety
 * `report` must be a live handle.
 */
enum EqpxStatus eqpx_report_status(const struct EqpxReport *report);

/**
 * # Safety
 * `report` must be a live handle or NULL.
 */
size_t eqpx_report_iterations(const struct EqpxReport *report);

/**
 * # Safety
 * `report` must be a live handle or NULL.
 */
size_t eqpx_report_accepted_count(const struct EqpxReport *report);

/**
 * Final `f + r`; NaN for a NULL handle.
 *
 * # Safety
 * `report` must be a live handle or NULL.
 */
double eqpx_report_objective(const struct EqpxReport *report);

/**
 * # Safety
 * `report` must be a live handle or NULL.
 */
double eqpx_report_feasibility(const struct EqpxReport *report);

/**
 * # Safety
 * `report` must be a live handle or NULL.
 */
double eqpx_report_stationarity(const struct EqpxReport *report);

/**
 * # Safety
 * `report` must be a live handle or NULL.
 */
double eqpx_report_wall_time(const struct EqpxReport *report);

/**
 * Copies the final point (length [`eqpx_problem_num_variables`]).
 *
 * # Safety
 * `report` must be a live handle and `out` must have room for `len` doubles.
 */
enum EqpxError eqpx_report_x(const struct EqpxReport *report, double *out, size_t len);

/**
 * Copies the final multiplier estimate (length [`eqpx_problem_num_constraints`]).
 *
 * # Safety
 * `report` must be a live handle and `out` must have room for `len` doubles.
 */
enum EqpxError eqpx_report_multiplier(const struct EqpxReport *report, double *out, size_t len);

/**
 * # Safety
 * `report` must come from [`eqpx_solve`] and not be used again.
 */
void eqpx_report_free(struct EqpxReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EQPROX_H */
