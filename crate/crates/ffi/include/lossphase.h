#ifndef LOSSPHASE_H
#define LOSSPHASE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

// Result codes shared by every function.
typedef enum LpStatus {
  LP_STATUS_OK = 0,
  // Argument outside the domain of the quantity.
  LP_STATUS_DOMAIN = 1,
  // Structurally invalid input.
  LP_STATUS_VALIDATION = 2,
  // An iterative solver did not reach the requested tolerance.
  LP_STATUS_CONVERGENCE = 3,
  LP_STATUS_IO = 4,
  LP_STATUS_NULL_POINTER = 5,
  // The caller's buffer is shorter than the data.
  LP_STATUS_BUFFER_TOO_SMALL = 6,
  LP_STATUS_PANIC = 7,
} LpStatus;

// Which asymptotic bound to use.
typedef enum LpBoundForm {
  // Equal-arm form when the transmissions match, otherwise one-arm.
  LP_BOUND_FORM_NATURAL = 0,
  LP_BOUND_FORM_EQUAL_ARMS = 1,
  LP_BOUND_FORM_ONE_ARM = 2,
} LpBoundForm;

// Optimal probe and cost for one configuration.
typedef struct LpSolution LpSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, empty after a success.
// The pointer stays valid until the next call into the library from the
// same thread.
const char *lp_last_error(void);

// Library version as a static NUL-terminated string.
const char *lp_version(void);

// Default eigen-residual tolerance.
double lp_default_tol(void);

// Solves for the optimal `n_total`-photon probe under the `4 sin^2` cost.
// On success `*out` receives a handle owned by the caller.
//
// # Safety
// `out` must be valid for writing one pointer.
enum LpStatus lp_optimize(size_t n_total,
                          double eta_a,
                          double eta_b,
                          double tol,
                          struct LpSolution **out);

// Releases a handle from [`lp_optimize`]; null is ignored.
//
// # Safety
// `solution` must be null or a handle not yet freed.
void lp_solution_free(struct LpSolution *solution);

// Minimal average cost `2 - lambda_max`.
//
// # Safety
// `solution` must be a live handle and `out` valid for one write.
enum LpStatus lp_solution_cost(const struct LpSolution *solution, double *out);

// Largest eigenvalue of the cost matrix.
//
// # Safety
// `solution` must be a live handle and `out` valid for one write.
enum LpStatus lp_solution_lambda_max(const struct LpSolution *solution, double *out);

// Eigen residual of the returned pair.
//
// # Safety
// `solution` must be a live handle and `out` valid for one write.
enum LpStatus lp_solution_residual(const struct LpSolution *solution, double *out);

// Number of amplitudes, `N + 1`; zero for a null handle.
//
// # Safety
// `solution` must be null or a live handle.
size_t lp_solution_len(const struct LpSolution *solution);

// Copies the optimal amplitudes into `buf`, which must hold at least
// [`lp_solution_len`] values.
//
// # Safety
// `solution` must be a live handle and `buf` valid for `len` writes.
enum LpStatus lp_solution_state(const struct LpSolution *solution, double *buf, size_t len);

// Monte Carlo estimate of the cost of `solution`'s probe under the optimal
// measurement, at true phase zero.
//
// # Safety
// `solution` must be a live handle; `mean` and `std_error` valid for one
// write each.
enum LpStatus lp_monte_carlo(const struct LpSolution *solution,
                             size_t n_samples,
                             uint64_t seed,
                             double *mean,
                             double *std_error);

// Finite-`N` lower bound on the cost for weaker-arm transmission `eta`.
//
// # Safety
// `out` must be valid for one write.
enum LpStatus lp_finite_bound(size_t n_total, double eta, double *out);

// Leading `1/N` quantum bound.
//
// # Safety
// `out` must be valid for one write.
enum LpStatus lp_asymptotic_bound(size_t n_total,
                                  double eta_a,
                                  double eta_b,
                                  enum LpBoundForm form,
                                  double *out);

// Asymptotic quantum gain factor; `LP_STATUS_DOMAIN` when lossless.
//
// # Safety
// `out` must be valid for one write.
enum LpStatus lp_gain_factor(double eta_a, double eta_b, enum LpBoundForm form, double *out);

// Coherent-state cost at mean photon number `n_mean` and splitting `tau`.
//
// # Safety
// `out` must be valid for one write.
enum LpStatus lp_classical_cost(double n_mean, double eta_a, double eta_b, double tau, double *out);

// Asymptotically optimal splitting `1 / (1 + sqrt(eta_a / eta_b))`.
//
// # Safety
// `out` must be valid for one write.
enum LpStatus lp_classical_optimal_tau(double eta_a, double eta_b, double *out);

// Mean of `sqrt(n)` for `n ~ Poisson(x)`.
//
// # Safety
// `out` must be valid for one write.
enum LpStatus lp_bell_half(double x, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOSSPHASE_H */
