#ifndef ARCQK_H
#define ARCQK_H

/* Generated by cbindgen; do not edit. */

#include <stddef.h>

/**
 * Return codes of the C interface.
 */
typedef enum ArcqkCode {
  ARCQK_CODE_OK = 0,
  ARCQK_CODE_NULL_POINTER = 1,
  ARCQK_CODE_INVALID_ARGUMENT = 2,
  ARCQK_CODE_UNKNOWN_PROBLEM = 3,
  ARCQK_CODE_SOLVE_FAILED = 4,
  ARCQK_CODE_PANIC = 5,
} ArcqkCode;

typedef enum ArcqkSolver {
  ARCQK_SOLVER_ARCQK = 0,
  ARCQK_SOLVER_STEIHAUG_TOINT = 1,
} ArcqkSolver;

/**
 * Why a solve stopped.
 */
typedef enum ArcqkTermination {
  ARCQK_TERMINATION_FIRST_ORDER_STATIONARY = 0,
  ARCQK_TERMINATION_MAX_ITER = 1,
  ARCQK_TERMINATION_TIME_EXCEEDED = 2,
  ARCQK_TERMINATION_UNBOUNDED_BELOW = 3,
  ARCQK_TERMINATION_GRID_EXHAUSTED = 4,
  ARCQK_TERMINATION_HESSIAN_TOO_INDEFINITE = 5,
  ARCQK_TERMINATION_RUNNING = 6,
} ArcqkTermination;

/**
 * Per-shift outcome of `arcqk_multishift_cg`.
 */
typedef enum ArcqkShiftStatus {
  ARCQK_SHIFT_STATUS_CONVERGED = 0,
  ARCQK_SHIFT_STATUS_INDEFINITE = 1,
  ARCQK_SHIFT_STATUS_CAPPED = 2,
  ARCQK_SHIFT_STATUS_RUNNING = 3,
} ArcqkShiftStatus;

/**
 * Opaque parameter set shared by both solvers.
 */
typedef struct ArcqkParams ArcqkParams;

/**
 * Opaque problem handle.
 */
typedef struct ArcqkProblem ArcqkProblem;

/**
 * `f(x)`; `x` has `n` entries.
 */
typedef double (*ArcqkObjectiveFn)(void *user_data, const double *x, size_t n);

/**
 * Writes `∇f(x)` into `out`.
 */
typedef void (*ArcqkGradientFn)(void *user_data, const double *x, double *out, size_t n);

/**
 * Writes `∇²f(x)·v` into `out`.
 */
typedef void (*ArcqkHessVecFn)(void *user_data,
                               const double *x,
                               const double *v,
                               double *out,
                               size_t n);

/**
 * Summary of a finished solve.
 */
typedef struct ArcqkResult {
  enum ArcqkTermination termination;
  size_t iterations;
  double f;
  double grad_norm;
  size_t neval_f;
  size_t neval_grad;
  size_t neval_hvp;
  double elapsed_seconds;
} ArcqkResult;

/**
 * Writes `M·v` into `out`.
 */
typedef void (*ArcqkOperatorFn)(void *user_data, const double *v, double *out, size_t n);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or an empty string. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *arcqk_last_error(void);

/**
 * Creates a built-in suite problem. `n = 0` selects its default dimension.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ArcqkCode arcqk_problem_from_suite(const char *name, size_t n, struct ArcqkProblem **out);

/**
 * Creates a problem from callbacks. `x0` is copied.
 *
 * # Safety
 * `x0` must point to `n` doubles and `out` must be valid. The callbacks must
 * be safe to call with `user_data` for as long as the handle lives.
 */
enum ArcqkCode arcqk_problem_from_callbacks(size_t n,
                                            const double *x0,
                                            ArcqkObjectiveFn objective,
                                            ArcqkGradientFn gradient,
                                            ArcqkHessVecFn hess_vec,
                                            void *user_data,
                                            struct ArcqkProblem **out);

/**
 * Dimension of a problem, or 0 for a null handle.
 *
 * # Safety
 * `problem` must be null or a live handle.
 */
size_t arcqk_problem_dim(const struct ArcqkProblem *problem);

/**
 * # Safety
 * `problem` must be null or a handle not yet freed.
 */
void arcqk_problem_free(struct ArcqkProblem *problem);

/**
 * New parameter set with default values.
 */
struct ArcqkParams *arcqk_params_new(void);

/**
 * Sets a parameter by field name, e.g. `"alpha0"`, `"delta0"`, `"grid"`.
 * Keys shared by both solvers update both.
 *
 * # Safety
 * `params` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum ArcqkCode arcqk_params_set(struct ArcqkParams *params, const char *key, const char *value);

/**
 * # Safety
 * `params` must be null or a handle not yet freed.
 */
void arcqk_params_free(struct ArcqkParams *params);

/**
 * Minimizes `problem` from its start point. `params` may be null for the
 * defaults; `x_out`, when not null, receives the final point (`n` doubles).
 * Least-squares suite problems run through their Gauss-Newton formulation.
 *
 * # Safety
 * Handles must be live; `x_out` must be null or hold `arcqk_problem_dim`
 * doubles; `result` must be valid.
 */
enum ArcqkCode arcqk_solve(const struct ArcqkProblem *problem,
                           const struct ArcqkParams *params,
                           enum ArcqkSolver solver,
                           double *x_out,
                           struct ArcqkResult *result);

/**
 * Solves `(M + λ_i I) x_i = b` for every shift with one product per
 * iteration. `shifts` must be strictly increasing within `[1e-15, 1e15]`.
 * `x_out` receives the solutions shift by shift (`nshifts·n` doubles);
 * `statuses_out` and `products_out` may be null.
 *
 * # Safety
 * `b` must hold `n` doubles, `shifts` `nshifts`, `x_out` `nshifts·n`, and
 * `statuses_out` (when not null) `nshifts` entries.
 */
enum ArcqkCode arcqk_multishift_cg(ArcqkOperatorFn apply,
                                   void *user_data,
                                   size_t n,
                                   const double *b,
                                   const double *shifts,
                                   size_t nshifts,
                                   double tol,
                                   size_t max_iter,
                                   double *x_out,
                                   enum ArcqkShiftStatus *statuses_out,
                                   size_t *products_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARCQK_H */
