#ifndef LPPACK_H
#define LPPACK_H

/* Generated by cbindgen from the lppack-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum LppackStatus {
  /**
   * Success.
   */
  LPPACK_STATUS_OK = 0,
  /**
   * A verification or invariant failed (dispersion violation, broken
   * precondition, undefined dispersion).
   */
  LPPACK_STATUS_VERIFICATION_FAILURE = 1,
  /**
   * Sampling could not produce a survivor, or no covering witness
   * exists at the current net density.
   */
  LPPACK_STATUS_INSUFFICIENT_DENSITY = 2,
  /**
   * Bad argument: invalid parameters, unparseable input, or I/O.
   */
  LPPACK_STATUS_INVALID_ARGUMENT = 3,
  /**
   * A required pointer was NULL.
   */
  LPPACK_STATUS_NULL_POINTER = 4,
  /**
   * Internal panic; indicates a bug.
   */
  LPPACK_STATUS_INTERNAL_ERROR = 5,
} LppackStatus;

/**
 * Opaque sparse point.
 */
typedef struct LppackPoint LppackPoint;

/**
 * Opaque staged packing state.
 */
typedef struct LppackState LppackState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static library version string; do not free.
 */
const char *lppack_version(void);

/**
 * Builds a staged packing: `depth` stages with the given space and
 * sampler parameters. On success stores a new state in `out`.
 *
 * # Safety
 * `out` must be a valid pointer to writable memory for one pointer.
 */
enum LppackStatus lppack_state_build(double p,
                                     double eta,
                                     double truncation_radius,
                                     double net_step,
                                     size_t max_points_per_stage,
                                     size_t max_support_size,
                                     size_t candidate_budget,
                                     size_t depth,
                                     uint64_t seed,
                                     struct LppackState **out);

/**
 * Parses a state file produced by `lppack_state_to_json` or the CLI.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum LppackStatus lppack_state_from_json(const char *json, struct LppackState **out);

/**
 * Serializes the state file JSON; free with `lppack_string_free`.
 * Returns NULL when `state` is NULL.
 *
 * # Safety
 * `state` must be NULL or a live handle from this library.
 */
char *lppack_state_to_json(const struct LppackState *state);

/**
 * One extension step; the input state is untouched and a new state is
 * stored in `out`.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
enum LppackStatus lppack_state_extend(const struct LppackState *state, struct LppackState **out);

/**
 * Number of stages; 0 when `state` is NULL.
 *
 * # Safety
 * `state` must be NULL or a live handle.
 */
size_t lppack_state_depth(const struct LppackState *state);

/**
 * Total packing points across stages; 0 when `state` is NULL.
 *
 * # Safety
 * `state` must be NULL or a live handle.
 */
size_t lppack_state_packing_count(const struct LppackState *state);

/**
 * Content digest (hex SHA-256); free with `lppack_string_free`.
 *
 * # Safety
 * `state` must be NULL or a live handle.
 */
char *lppack_state_digest(const struct LppackState *state);

/**
 * Exact dispersion audit. Writes the minimum of `distance^p - 2` over
 * all packing pairs to `min_excess_out` when non-NULL. Returns
 * `VerificationFailure` when a pair violates dispersion or an identity
 * drifts, in which case `min_excess_out` is left untouched.
 *
 * # Safety
 * `state` must be a live handle; `min_excess_out` NULL or writable.
 */
enum LppackStatus lppack_state_verify(const struct LppackState *state, double *min_excess_out);

/**
 * Covering witness for `x` at tolerance `epsilon`. On success stores the
 * witness point in `witness_out` (caller frees) and, when non-NULL, the
 * recomputed distance in `distance_out`. `InsufficientDensity` is the
 * expected failure at coarse nets.
 *
 * # Safety
 * `state` and `x` must be live handles; `witness_out` writable;
 * `distance_out` NULL or writable.
 */
enum LppackStatus lppack_state_covering_witness(const struct LppackState *state,
                                                const struct LppackPoint *x,
                                                double epsilon,
                                                struct LppackPoint **witness_out,
                                                double *distance_out);

/**
 * Releases a state handle. NULL is a no-op.
 *
 * # Safety
 * `state` must be NULL or an unreleased handle from this library.
 */
void lppack_state_free(struct LppackState *state);

/**
 * The origin point.
 *
 * # Safety
 * `out` must be writable.
 */
enum LppackStatus lppack_point_zero(struct LppackPoint **out);

/**
 * The unit vector on axis `s{stage}i{index}`; `stage` must be positive.
 *
 * # Safety
 * `out` must be writable.
 */
enum LppackStatus lppack_point_unit(uint32_t stage, uint32_t index, struct LppackPoint **out);

/**
 * Sets one coordinate of a point in place; values below the support
 * threshold clear the entry.
 *
 * # Safety
 * `point` must be a live handle.
 */
enum LppackStatus lppack_point_set(struct LppackPoint *point,
                                   uint32_t stage,
                                   uint32_t index,
                                   double value);

/**
 * Reads one coordinate (0 outside the support or on NULL).
 *
 * # Safety
 * `point` must be NULL or a live handle.
 */
double lppack_point_get(const struct LppackPoint *point, uint32_t stage, uint32_t index);

/**
 * Parses the point JSON form `{"entries": {"s1i0": 2.5}}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` writable.
 */
enum LppackStatus lppack_point_parse(const char *json, struct LppackPoint **out);

/**
 * Serializes a point to its JSON form; free with `lppack_string_free`.
 *
 * # Safety
 * `point` must be NULL or a live handle.
 */
char *lppack_point_to_json(const struct LppackPoint *point);

/**
 * Releases a point handle. NULL is a no-op.
 *
 * # Safety
 * `point` must be NULL or an unreleased handle from this library.
 */
void lppack_point_free(struct LppackPoint *point);

/**
 * p-norm of a point under exponent `p` (margin `eta`).
 *
 * # Safety
 * `point` must be a live handle; `out` writable.
 */
enum LppackStatus lppack_p_norm(const struct LppackPoint *point, double p, double eta, double *out);

/**
 * Distance between two points under exponent `p`.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` writable.
 */
enum LppackStatus lppack_distance(const struct LppackPoint *a,
                                  const struct LppackPoint *b,
                                  double p,
                                  double eta,
                                  double *out);

/**
 * Center-shift magnitude `((r + 2e)^p - r^p)^(1/p)` of the hole
 * expansion step.
 *
 * # Safety
 * `out` must be writable.
 */
enum LppackStatus lppack_delta_step(double r, double epsilon, double p, double eta, double *out);

/**
 * Runs the greedy dispersed-set probe and stores the accepted count.
 *
 * # Safety
 * `count_out` must be writable.
 */
enum LppackStatus lppack_greedy_dispersed_count(double p,
                                                double eta,
                                                size_t dim,
                                                double alpha,
                                                size_t budget,
                                                uint64_t seed,
                                                size_t *count_out);

/**
 * Releases a string returned by this library. NULL is a no-op.
 *
 * # Safety
 * `s` must be NULL or an unreleased string from this library.
 */
void lppack_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LPPACK_H */
