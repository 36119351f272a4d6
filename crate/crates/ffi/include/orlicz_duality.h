#ifndef ORLICZ_DUALITY_H
#define ORLICZ_DUALITY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum OdStatus {
  OD_STATUS_OK = 0,
  OD_STATUS_INVALID_INPUT = 1,
  OD_STATUS_DOMAIN = 2,
  OD_STATUS_EMPTY_POLYTOPE = 3,
  OD_STATUS_UNBOUNDED = 4,
  OD_STATUS_NOT_CONVERGED = 5,
  OD_STATUS_STRICT_CONCAVITY_REQUIRED = 6,
  OD_STATUS_UNSUPPORTED = 7,
  OD_STATUS_NULL_POINTER = 8,
  OD_STATUS_BUFFER_TOO_SMALL = 9,
  OD_STATUS_PANIC = 10,
  OD_STATUS_OTHER = 11,
} OdStatus;

/*
 Opaque dual solution.
 */
typedef struct OdDualSolution OdDualSolution;

/*
 Opaque finite market.
 */
typedef struct OdMarket OdMarket;

/*
 Opaque primal solution.
 */
typedef struct OdPrimalSolution OdPrimalSolution;

/*
 Opaque utility function.
 */
typedef struct OdUtility OdUtility;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer is
 valid until the next failing call on the same thread.
 */
const char *od_last_error_message(void);

/*
 Library version as a static nul-terminated string.
 */
const char *od_version(void);

/*
 `u(x) = −e^{−γx}`.
 */
enum OdStatus od_utility_exponential(double gamma, struct OdUtility **out);

/*
 `u(x) = ln(x − a)`.
 */
enum OdStatus od_utility_log_shifted(double a, struct OdUtility **out);

/*
 Shifted power utility with endpoint `a` and exponent in `(0, 1)`.
 */
enum OdStatus od_utility_power_shifted(double a, double exponent, struct OdUtility **out);

/*
 `u(x) = x`.
 */
enum OdStatus od_utility_linear(struct OdUtility **out);

/*
 Utility value; `-inf` outside the domain.
 */
enum OdStatus od_utility_value(const struct OdUtility *u, double x, double *out);

/*
 Convex conjugate `Φ(y) = sup_x (u(x) − xy)`; `+inf` where it is infinite.
 */
enum OdStatus od_utility_conjugate(const struct OdUtility *u, double y, double *out);

/*
 Left endpoint of the utility's domain (`-inf` when unbounded).
 */
enum OdStatus od_utility_endpoint(const struct OdUtility *u, double *out);

void od_utility_free(struct OdUtility *u);

/*
 Multiplicative binomial tree.
 */
enum OdStatus od_market_binomial(double s0,
                                 double up,
                                 double down,
                                 double p_up,
                                 uintptr_t periods,
                                 struct OdMarket **out);

/*
 One period with `states` outcomes over `assets` assets. `prices` holds
 `states × assets` values in row-major order.
 */
enum OdStatus od_market_one_period(uintptr_t assets,
                                   const double *s0,
                                   uintptr_t states,
                                   const double *probs,
                                   const double *prices,
                                   struct OdMarket **out);

/*
 Market from the JSON `market` section of a scenario document.
 */
enum OdStatus od_market_from_json(const char *json, uint64_t seed, struct OdMarket **out);

enum OdStatus od_market_path_count(const struct OdMarket *m, uintptr_t *out);

void od_market_free(struct OdMarket *m);

/*
 Minimizes the dual objective over the market's martingale measures.
 */
enum OdStatus od_dual_optimize(const struct OdUtility *u,
                               const struct OdMarket *m,
                               double x,
                               struct OdDualSolution **out);

enum OdStatus od_dual_value(const struct OdDualSolution *s, double *out);

/*
 Optimal multiplier `λ*`.
 */
enum OdStatus od_dual_lambda(const struct OdDualSolution *s, double *out);

/*
 Optimal martingale measure as path probabilities. Writes the number of
 paths to `len_out` even when `capacity` is too small.
 */
enum OdStatus od_dual_measure(const struct OdDualSolution *s,
                              double *buf,
                              uintptr_t capacity,
                              uintptr_t *len_out);

void od_dual_free(struct OdDualSolution *s);

/*
 Maximizes expected utility of terminal wealth. `c_max` caps losses at
 `c_max` per unit of a constant loss bound; pass NaN for no cap.
 */
enum OdStatus od_primal_optimize(const struct OdUtility *u,
                                 const struct OdMarket *m,
                                 double x,
                                 double c_max,
                                 struct OdPrimalSolution **out);

enum OdStatus od_primal_value(const struct OdPrimalSolution *s, double *out);

/*
 Positions at every nonterminal node, concatenated in node order.
 */
enum OdStatus od_primal_strategy(const struct OdPrimalSolution *s,
                                 double *buf,
                                 uintptr_t capacity,
                                 uintptr_t *len_out);

/*
 Terminal wealth per path.
 */
enum OdStatus od_primal_wealth(const struct OdPrimalSolution *s,
                               double *buf,
                               uintptr_t capacity,
                               uintptr_t *len_out);

void od_primal_free(struct OdPrimalSolution *s);

/*
 Luxemburg norm of `f` for the Young function `û(x) = −u(−|x|)`.
 */
enum OdStatus od_luxemburg_norm(const struct OdUtility *u,
                                const double *values,
                                const double *probs,
                                uintptr_t len,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORLICZ_DUALITY_H */
