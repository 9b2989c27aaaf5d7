#ifndef DFOKIT_H
#define DFOKIT_H

/* Generated by cbindgen from dfokit-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible entry point.
typedef enum DfokitStatus {
  DFOKIT_STATUS_OK = 0,
  // A problem, filter, or point failed to parse or validate.
  DFOKIT_STATUS_PARSE_ERROR = 2,
  // The supplied point violates the problem's constraints.
  DFOKIT_STATUS_INFEASIBLE = 3,
  // A numerical kernel failed (instability, non-convergence).
  DFOKIT_STATUS_NUMERICAL_ERROR = 4,
  // Null pointer, bad length, or unknown name.
  DFOKIT_STATUS_INVALID_ARGUMENT = 5,
  // An internal invariant failed; details in `dfokit_last_error`.
  DFOKIT_STATUS_INTERNAL_ERROR = 6,
} DfokitStatus;

// Why an optimization run stopped.
typedef enum DfokitStopReason {
  DFOKIT_STOP_REASON_TOLERANCE_F = 0,
  DFOKIT_STOP_REASON_TOLERANCE_X = 1,
  DFOKIT_STOP_REASON_BUDGET = 2,
  DFOKIT_STOP_REASON_NO_IMPROVEMENT = 3,
} DfokitStopReason;

// Stationarity verdict of the probe.
typedef enum DfokitClassification {
  DFOKIT_CLASSIFICATION_DESCENT_FOUND = 0,
  DFOKIT_CLASSIFICATION_APPROXIMATELY_STATIONARY = 1,
  DFOKIT_CLASSIFICATION_INFEASIBLE = 2,
} DfokitClassification;

// Opaque problem handle: a parsed synthesis problem plus its objective.
typedef struct DfokitProblem DfokitProblem;

// Filter evaluation report; `value` is +inf when the filter is infeasible.
typedef struct DfokitEvalReport {
  bool positive;
  bool stable;
  double value;
  // Peak frequency in [0, pi]; NaN for H2 objectives.
  double peak_omega;
  // Objective of the same filter truncated to its D-hat block.
  double static_value;
  // Percent change from the truncation.
  double truncation_pct;
} DfokitEvalReport;

// Outcome of one optimization run.
typedef struct DfokitRunStats {
  double final_value;
  uint64_t evaluations;
  enum DfokitStopReason stop_reason;
  // Derived per-run seed actually used.
  uint64_t seed;
} DfokitRunStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version string of the library; static storage, never freed.
const char *dfokit_version(void);

// Message for the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *dfokit_last_error(void);

// Parses a problem from TOML text.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer; the
// returned handle must be released with `dfokit_problem_free`.
enum DfokitStatus dfokit_problem_from_str(const char *text, struct DfokitProblem **out);

// Loads a problem from a TOML file.
//
// # Safety
// As `dfokit_problem_from_str`, with `path` a NUL-terminated file path.
enum DfokitStatus dfokit_problem_load(const char *path, struct DfokitProblem **out);

// Releases a problem handle. Passing NULL is a no-op.
//
// # Safety
// `p` must come from a dfokit load call and not be freed twice.
void dfokit_problem_free(struct DfokitProblem *p);

// Length of the decision vector for this problem.
//
// # Safety
// `p` must be a live handle.
size_t dfokit_problem_dim(const struct DfokitProblem *p);

// Extreme-barrier objective value at `x`; +inf means infeasible.
//
// # Safety
// `p` live handle; `x` points to `len` doubles; `out` valid.
enum DfokitStatus dfokit_objective_value(const struct DfokitProblem *p,
                                         const double *x,
                                         size_t len,
                                         double *out);

// Full evaluation report for a decision vector, including the D-hat-only
// truncation diagnostic.
//
// # Safety
// As `dfokit_objective_value`, with `out` pointing to a report struct.
enum DfokitStatus dfokit_eval(const struct DfokitProblem *p,
                              const double *x,
                              size_t len,
                              struct DfokitEvalReport *out);

// One optimization run. `method` is one of "nm", "nm-restart", "mds",
// "mads", "cd". When `x0` is NULL a feasible start is sampled from the
// master seed; otherwise `x0` must point to `x_len` doubles and be feasible.
// The final point is written to `x_out` (`x_len` doubles).
//
// # Safety
// Pointers must be valid as described; `x_len` must equal the problem dim.
enum DfokitStatus dfokit_synth(const struct DfokitProblem *p,
                               const char *method,
                               uint64_t master_seed,
                               size_t budget,
                               const double *x0,
                               double *x_out,
                               size_t x_len,
                               struct DfokitRunStats *stats);

// Finite-difference stationarity probe at `x` with default radii
// (1e-2, 1e-4, 1e-6) and descent threshold -1e-3.
//
// # Safety
// `p` live handle; `x` points to `len` doubles; out-pointers valid.
enum DfokitStatus dfokit_probe(const struct DfokitProblem *p,
                               const double *x,
                               size_t len,
                               size_t n_directions,
                               uint64_t seed,
                               double *out_min_estimate,
                               enum DfokitClassification *out_classification);

// Discrete-time H-infinity norm of (A, B, C, D) with default evaluation
// options; matrices are row-major, A is n x n, B n x m, C p x n, D p x m.
//
// # Safety
// Matrix pointers must cover the stated row-major extents.
enum DfokitStatus dfokit_hinf_norm(const double *a,
                                   size_t n,
                                   const double *b,
                                   size_t m,
                                   const double *c,
                                   size_t p_rows,
                                   const double *d,
                                   double *out_value,
                                   double *out_peak_omega);

// Discrete-time H2 norm of (A, B, C, D); layout as `dfokit_hinf_norm`.
//
// # Safety
// Matrix pointers must cover the stated row-major extents.
enum DfokitStatus dfokit_h2_norm(const double *a,
                                 size_t n,
                                 const double *b,
                                 size_t m,
                                 const double *c,
                                 size_t p_rows,
                                 const double *d,
                                 double *out_value);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DFOKIT_H */
