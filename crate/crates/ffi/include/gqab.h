#ifndef GQAB_H
#define GQAB_H

/* Generated by cbindgen from the gqab-ffi crate; edit the Rust source instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome class of a fallible call. Anything other than `Ok` stores a
 * message retrievable with `gqab_last_error`.
 */
typedef enum GqabStatus {
  /**
   * The call succeeded.
   */
  GQAB_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  GQAB_STATUS_NULL_POINTER = 1,
  /**
   * Malformed JSON, bad parameters, or operands of the wrong shape.
   */
  GQAB_STATUS_INVALID_INPUT = 2,
  /**
   * The iteration hit a certified-descent violation or another
   * numerical breakdown.
   */
  GQAB_STATUS_NUMERICAL_FAILURE = 3,
  /**
   * An inner projection ran out of iterations before its tolerance.
   */
  GQAB_STATUS_NO_CONVERGENCE = 4,
  /**
   * A panic was caught at the boundary; the handle state is unharmed
   * but the result is unusable.
   */
  GQAB_STATUS_PANIC = 5,
} GqabStatus;

/**
 * A bottleneck instance: source, relevance channel, weights, memory
 * dimension, and the induced constraint family.
 */
typedef struct GqabProblem GqabProblem;

/**
 * A density matrix, usually a member of a problem's constraint family.
 */
typedef struct GqabState GqabState;

/**
 * Per-iterate history of a solver run; owns the final state.
 */
typedef struct GqabTrace GqabTrace;

/**
 * Solver tolerances and iteration limits. Obtain defaults from
 * `gqab_solver_options_default` and override selectively.
 */
typedef struct GqabSolverOptions {
  /**
   * Curvature weight of the fixed-point map; must be positive, and
   * descent is certified when it is at least the compression weight.
   */
  double gamma;
  /**
   * Relative objective-change threshold of the stopping rule.
   */
  double tol_obj;
  /**
   * Outer iteration cap.
   */
  size_t max_iters;
  /**
   * Gradient-norm threshold of the inner projection.
   */
  double tol_proj;
  /**
   * Projection iteration cap.
   */
  size_t max_proj_iters;
  /**
   * Eigenvalue floor applied before operator logarithms.
   */
  double eps_clamp;
} GqabSolverOptions;

/**
 * Static facts about a problem.
 */
typedef struct GqabProblemInfo {
  /**
   * Compression weight.
   */
  double alpha;
  /**
   * Relevance weight.
   */
  double beta;
  /**
   * Memory dimension.
   */
  size_t dim_t;
  /**
   * Total source dimension.
   */
  size_t dim_x;
  /**
   * Total channel-output dimension.
   */
  size_t dim_y;
} GqabProblemInfo;

/**
 * Objective value split into its entropic parts at a family member.
 */
typedef struct GqabDecomposition {
  /**
   * Mutual information between memory and source, in nats.
   */
  double i_tx;
  /**
   * Memory entropy, in nats.
   */
  double h_t;
  /**
   * Mutual information between memory and channel output, in nats.
   */
  double i_ty;
  /**
   * alpha * i_tx + (1 - alpha) * h_t - beta * i_ty.
   */
  double total;
} GqabDecomposition;

/**
 * One row of a run trace.
 */
typedef struct GqabIterRecord {
  /**
   * 1-based iterate index.
   */
  size_t iter;
  /**
   * Objective at this iterate.
   */
  double objective;
  /**
   * Constraint residual at this iterate.
   */
  double residual;
  /**
   * Relative entropy to the next iterate; NaN on the last row.
   */
  double step_relent;
  /**
   * Projection steps spent producing the next iterate.
   */
  size_t proj_iters;
  /**
   * Whether the descent certificate held on the step leaving here.
   */
  bool monotone_ok;
} GqabIterRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the linked library, as a static string; do not free.
 */
const char *gqab_version(void);

/**
 * Message of the last failure on the calling thread, empty when none.
 * The pointer stays valid until the thread's next failing gqab call.
 */
const char *gqab_last_error(void);

/**
 * Frees a string returned by this library. NULL is ignored.
 */
void gqab_string_free(char *text);

/**
 * Default tolerances and iteration limits.
 */
struct GqabSolverOptions gqab_solver_options_default(void);

/**
 * Builds a problem from its JSON description: source density, Kraus
 * channel, weights, and memory dimension.
 */
enum GqabStatus gqab_problem_from_json(const char *json, struct GqabProblem **out);

/**
 * Serializes a problem back to JSON; free the string with
 * `gqab_string_free`.
 */
enum GqabStatus gqab_problem_to_json(const struct GqabProblem *problem, char **out);

/**
 * Reports a problem's weights and dimensions.
 */
enum GqabStatus gqab_problem_info(const struct GqabProblem *problem, struct GqabProblemInfo *out);

/**
 * Frees a problem handle. NULL is ignored.
 */
void gqab_problem_free(struct GqabProblem *problem);

/**
 * Parses a density matrix from JSON.
 */
enum GqabStatus gqab_density_from_json(const char *json, struct GqabState **out);

/**
 * Serializes a state to JSON; free the string with `gqab_string_free`.
 */
enum GqabStatus gqab_density_to_json(const struct GqabState *state, char **out);

/**
 * Frees a state handle. NULL is ignored.
 */
void gqab_state_free(struct GqabState *state);

/**
 * Draws a seeded random member of the problem's constraint family,
 * suitable as a run initializer.
 */
enum GqabStatus gqab_random_member(const struct GqabProblem *problem,
                                   uint64_t seed,
                                   struct GqabState **out);

/**
 * Objective value at a state.
 */
enum GqabStatus gqab_objective(const struct GqabProblem *problem,
                               const struct GqabState *state,
                               double *out);

/**
 * Entropic split of the objective at a family member.
 */
enum GqabStatus gqab_decompose(const struct GqabProblem *problem,
                               const struct GqabState *state,
                               struct GqabDecomposition *out);

/**
 * Induced divergence between two states: a weighted combination of
 * relative entropies that, unlike each term, can be negative. The result
 * may be infinite when supports do not nest.
 */
enum GqabStatus gqab_divergence(const struct GqabProblem *problem,
                                const struct GqabState *a,
                                const struct GqabState *b,
                                double *out);

/**
 * Slack of the data-processing contraction between two family members;
 * nonnegative there, and its size controls how much descent each solver
 * step certifies.
 */
enum GqabStatus gqab_contraction_gap(const struct GqabProblem *problem,
                                     const struct GqabState *a,
                                     const struct GqabState *b,
                                     double *out);

/**
 * One solver update from a family member. `options` may be NULL for
 * defaults.
 */
enum GqabStatus gqab_step(const struct GqabProblem *problem,
                          const struct GqabState *state,
                          const struct GqabSolverOptions *options,
                          struct GqabState **out);

/**
 * Full solver run from an initial family member. `options` may be NULL
 * for defaults. On success the trace owns the final state; hitting the
 * iteration cap still counts as success and is visible through
 * `gqab_trace_converged`.
 */
enum GqabStatus gqab_run(const struct GqabProblem *problem,
                         const struct GqabState *initial,
                         const struct GqabSolverOptions *options,
                         struct GqabTrace **out);

/**
 * Projects any state of matching shape onto the problem's constraint
 * family along the exponential arc. `options` may be NULL for defaults.
 */
enum GqabStatus gqab_project(const struct GqabProblem *problem,
                             const struct GqabState *state,
                             const struct GqabSolverOptions *options,
                             struct GqabState **out);

/**
 * Randomized search for the sign of the induced divergence: evaluates it
 * on seeded families of state pairs and reports the smallest finite value
 * and how many trials were finite.
 */
enum GqabStatus gqab_probe_min_divergence(const struct GqabProblem *problem,
                                          size_t trials,
                                          uint64_t seed,
                                          double *out_min,
                                          size_t *out_finite);

/**
 * Number of iterates a run visited; zero for NULL.
 */
size_t gqab_trace_iterations(const struct GqabTrace *trace);

/**
 * Objective at the last iterate; NaN for NULL or an empty trace.
 */
double gqab_trace_final_objective(const struct GqabTrace *trace);

/**
 * Whether the run stopped on the objective tolerance rather than the
 * iteration cap; false for NULL.
 */
bool gqab_trace_converged(const struct GqabTrace *trace);

/**
 * Whether every step satisfied the descent certificate; false for NULL.
 */
bool gqab_trace_monotone(const struct GqabTrace *trace);

/**
 * Copies out one trace row by 0-based position.
 */
enum GqabStatus gqab_trace_record(const struct GqabTrace *trace,
                                  size_t index,
                                  struct GqabIterRecord *out);

/**
 * Copies the run's final state into a fresh handle.
 */
enum GqabStatus gqab_trace_final_state(const struct GqabTrace *trace, struct GqabState **out);

/**
 * Renders the trace as CSV with columns
 * iter,objective,residual,step_relent,proj_iters; free the string with
 * `gqab_string_free`.
 */
enum GqabStatus gqab_trace_csv(const struct GqabTrace *trace, char **out);

/**
 * Frees a trace handle. NULL is ignored.
 */
void gqab_trace_free(struct GqabTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GQAB_H */
