/* Minimal C caller: build a problem from JSON, run the solver from a
 * seeded family member, and print the per-iterate objective.
 *
 * Build from the repository root:
 *   cargo build -p gqab-ffi --release
 *   cc crates/ffi/examples/demo.c -Icrates/ffi/include \
 *      target/release/libgqab_ffi.a -lm -o demo
 */

#include <stdio.h>
#include <stdlib.h>

#include "gqab.h"

static const char *PROBLEM_JSON =
    "{"
    "  \"rho_X\": {\"dims\": [2, 2],"
    "    \"re\": [[0.35, 0, 0, 0], [0, 0.35, 0, 0],"
    "             [0, 0, 0.15, 0], [0, 0, 0, 0.15]],"
    "    \"im\": [[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]},"
    "  \"channel\": {\"in_dims\": [2, 2], \"out_dims\": [2],"
    "    \"kraus\": ["
    "      {\"re\": [[1, 0, 0, 0], [0, 0, 0.5477225575051661, 0]],"
    "       \"im\": [[0, 0, 0, 0], [0, 0, 0, 0]]},"
    "      {\"re\": [[0, 0, 0.8366600265340756, 0], [0, 0, 0, 0]],"
    "       \"im\": [[0, 0, 0, 0], [0, 0, 0, 0]]},"
    "      {\"re\": [[0, 1, 0, 0], [0, 0, 0, 0.5477225575051661]],"
    "       \"im\": [[0, 0, 0, 0], [0, 0, 0, 0]]},"
    "      {\"re\": [[0, 0, 0, 0.8366600265340756], [0, 0, 0, 0]],"
    "       \"im\": [[0, 0, 0, 0], [0, 0, 0, 0]]}"
    "    ]},"
    "  \"alpha\": 1.0, \"beta\": 2.0, \"dim_T\": 2"
    "}";

static void die(const char *where)
{
    fprintf(stderr, "%s: %s\n", where, gqab_last_error());
    exit(1);
}

int main(void)
{
    printf("gqab %s\n", gqab_version());

    GqabProblem *problem = NULL;
    if (gqab_problem_from_json(PROBLEM_JSON, &problem) != GQAB_STATUS_OK)
        die("problem_from_json");

    GqabProblemInfo info;
    gqab_problem_info(problem, &info);
    printf("alpha %.2f beta %.2f dims T=%zu X=%zu Y=%zu\n",
           info.alpha, info.beta, info.dim_t, info.dim_x, info.dim_y);

    GqabState *initial = NULL;
    if (gqab_random_member(problem, 7, &initial) != GQAB_STATUS_OK)
        die("random_member");

    GqabTrace *trace = NULL;
    if (gqab_run(problem, initial, NULL, &trace) != GQAB_STATUS_OK)
        die("run");

    size_t count = gqab_trace_iterations(trace);
    printf("%s after %zu iterations, monotone=%d\n",
           gqab_trace_converged(trace) ? "converged" : "hit the cap",
           count, (int)gqab_trace_monotone(trace));
    for (size_t i = 0; i < count; i++) {
        GqabIterRecord record;
        if (gqab_trace_record(trace, i, &record) != GQAB_STATUS_OK)
            die("trace_record");
        printf("  iter %zu objective % .12e residual %.3e\n",
               record.iter, record.objective, record.residual);
    }

    GqabState *final_state = NULL;
    if (gqab_trace_final_state(trace, &final_state) != GQAB_STATUS_OK)
        die("final_state");
    GqabDecomposition parts;
    if (gqab_decompose(problem, final_state, &parts) != GQAB_STATUS_OK)
        die("decompose");
    printf("I(T;X) %.6f  H(T) %.6f  I(T;Y) %.6f  total % .6e\n",
           parts.i_tx, parts.h_t, parts.i_ty, parts.total);

    gqab_state_free(final_state);
    gqab_trace_free(trace);
    gqab_state_free(initial);
    gqab_problem_free(problem);
    return 0;
}
