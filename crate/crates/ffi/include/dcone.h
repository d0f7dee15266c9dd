#ifndef DCONE_H
#define DCONE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DconeStatus {
  DCONE_STATUS_OK = 0,
  DCONE_STATUS_NULL_POINTER = 1,
  DCONE_STATUS_INVALID_ARGUMENT = 2,
  DCONE_STATUS_REGIME = 3,
  DCONE_STATUS_RESOLUTION = 4,
  DCONE_STATUS_NON_CONVERGENCE = 5,
  DCONE_STATUS_INVALID_CURVE = 6,
  DCONE_STATUS_NUMERICAL = 7,
  DCONE_STATUS_IO = 8,
  DCONE_STATUS_PANIC = 9,
} DconeStatus;

typedef enum DconeInit {
  DCONE_INIT_ONE_BUMP = 0,
  DCONE_INIT_TWO_BUMP = 1,
} DconeInit;

/**
 * Opaque recovery table.
 */
typedef struct DconeRecovery DconeRecovery;

/**
 * Opaque result of an elastica solve.
 */
typedef struct DconeSolution DconeSolution;

/**
 * The one-fold solution of the linear problem.
 */
typedef struct DconeLinear {
  double s_hat;
  double lambda;
  double energy;
  double fold_length;
} DconeLinear;

/**
 * Energies behind the one-fold certificate.
 */
typedef struct DconeCertificate {
  double one_fold_energy;
  /**
   * Infinity when no two-fold configuration exists.
   */
  double two_fold_energy;
  bool passed;
} DconeCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. Valid until
 * the next failing call on the same thread.
 */
const char *dcone_last_error(void);

const char *dcone_version(void);

/**
 * # Safety
 * `out` must be null or point to writable memory for one `DconeLinear`.
 */
enum DconeStatus dcone_linear_solve(struct DconeLinear *out);

/**
 * # Safety
 * `out` must be null or point to writable memory for one `DconeCertificate`.
 */
enum DconeStatus dcone_certify(struct DconeCertificate *out);

/**
 * Minimizes at obstacle height `epsilon` on `n` nodes with default solver
 * settings. A run that stops without converging still yields a handle; see
 * [`dcone_solution_converged`].
 *
 * # Safety
 * `out` must be null or point to writable memory for one pointer.
 */
enum DconeStatus dcone_elastica_solve(double epsilon,
                                      size_t n,
                                      enum DconeInit init,
                                      struct DconeSolution **out);

/**
 * # Safety
 * `sol` must be null or a handle from [`dcone_elastica_solve`] not yet freed.
 */
void dcone_solution_free(struct DconeSolution *sol);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
size_t dcone_solution_len(const struct DconeSolution *sol);

/**
 * # Safety
 * `sol` must be null or a live handle.
 */
bool dcone_solution_converged(const struct DconeSolution *sol);

/**
 * Bending energy of the solution, NaN for a null handle.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
double dcone_solution_energy(const struct DconeSolution *sol);

/**
 * # Safety
 * `sol` must be null or a live handle.
 */
size_t dcone_solution_lift_count(const struct DconeSolution *sol);

/**
 * Copies the heights above the equator into `buf`, which holds `len` values.
 *
 * # Safety
 * `sol` must be null or a live handle; `buf` must be null or hold `len`
 * writable values.
 */
enum DconeStatus dcone_solution_alpha(const struct DconeSolution *sol, double *buf, size_t len);

/**
 * Report as JSON. Release the string with [`dcone_string_free`].
 *
 * # Safety
 * `sol` must be null or a live handle; `out` must be null or writable.
 */
enum DconeStatus dcone_solution_report_json(const struct DconeSolution *sol, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void dcone_string_free(char *s);

/**
 * Limit energy `int |gamma'' + gamma|^2` of a unit-speed closed curve of
 * length `2 pi` given as `n` points `x0 y0 z0 x1 ...` uniform in arclength.
 *
 * # Safety
 * `points` must hold `3 * n` values; `out` must be null or writable.
 */
enum DconeStatus dcone_limit_energy(const double *points, size_t n, double *out);

/**
 * Recovery energies over the thicknesses `h_list` (decreasing, in `(0, 0.1]`)
 * for a curve given as in [`dcone_limit_energy`].
 *
 * # Safety
 * `points` must hold `3 * n` values, `h_list` must hold `m` values and `out`
 * must be null or writable.
 */
enum DconeStatus dcone_recovery(const double *points,
                                size_t n,
                                const double *h_list,
                                size_t m,
                                struct DconeRecovery **out);

/**
 * # Safety
 * `t` must be null or a handle from [`dcone_recovery`] not yet freed.
 */
void dcone_recovery_free(struct DconeRecovery *t);

/**
 * Fitted log-log slope of the energy gap, NaN for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
double dcone_recovery_slope(const struct DconeRecovery *t);

/**
 * Fitted `a` in `gap = a / |log h|`, NaN for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
double dcone_recovery_coefficient(const struct DconeRecovery *t);

/**
 * Copies the energy gaps, one per thickness, into `buf` of length `len`.
 *
 * # Safety
 * `t` must be null or a live handle; `buf` must be null or hold `len`
 * writable values.
 */
enum DconeStatus dcone_recovery_gaps(const struct DconeRecovery *t, double *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DCONE_H */
