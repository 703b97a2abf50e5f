/* C interface for the madj library: adjustment-set checking, enumeration,
 * minimum-set search, effect estimation from incomplete data, and model
 * simulation.
 *
 * Conventions:
 *   - Every fallible function returns madj_status; on failure, out-parameters
 *     are untouched and madj_last_error() describes the problem (thread-local,
 *     valid until the next madj_* call on the same thread).
 *   - Strings returned through char** are heap-allocated; release them with
 *     madj_string_free.
 *   - Node-list arguments are comma-separated names ("A,B,C"); NULL and ""
 *     both mean the empty list. Assignment arguments pair names with values
 *     ("X=1,W=0").
 */
#ifndef MADJ_H
#define MADJ_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum madj_status {
    MADJ_OK = 0,
    MADJ_ERR_ARGUMENT = 1,   /* NULL handle / malformed argument string */
    MADJ_ERR_PARSE = 2,      /* graph, model, or csv text is malformed */
    MADJ_ERR_VALIDATION = 3, /* well-formed input violating a documented precondition */
    MADJ_ERR_POSITIVITY = 4, /* a required stratum has no usable rows */
    MADJ_ERR_TOO_LARGE = 5,  /* exact computation refused beyond its size bound */
    MADJ_ERR_IO = 6,         /* file not readable */
    MADJ_ERR_INTERNAL = 7    /* invariant violation inside the library */
} madj_status;

typedef struct madj_graph madj_graph;
typedef struct madj_dataset madj_dataset;
typedef struct madj_scm madj_scm;

/* Description of the most recent failure on this thread ("" if none). */
const char* madj_last_error(void);
void madj_string_free(char* s);

/* ---- graphs ------------------------------------------------------------ */

madj_status madj_graph_parse(const char* text, madj_graph** out);
madj_status madj_graph_read_file(const char* path, madj_graph** out);
madj_status madj_graph_serialize(const madj_graph* g, char** out_text);
/* 1 if the graph declares a selection node, else 0. */
int madj_graph_has_selection(const madj_graph* g);
/* Name of the selection node, or "" when the graph has none. */
madj_status madj_graph_selection_name(const madj_graph* g, char** out_name);
void madj_graph_free(madj_graph* g);

/* ---- criteria ----------------------------------------------------------- */

typedef enum madj_criterion {
    MADJ_CRITERION_BACKDOOR = 0,
    MADJ_CRITERION_ADJUSTMENT = 1,
    MADJ_CRITERION_M_SUFFICIENT = 2,
    MADJ_CRITERION_M = 3,
    MADJ_CRITERION_MS = 4
} madj_criterion;

/* Verdict JSON:
 *   {"criterion": "...", "valid": bool, "failed": ["a", ...],
 *    "notes": {"a": "...", ...}, "w": [...], "rw": [...]}
 * failed/notes list the violated conditions; w is the partially observed part
 * of x∪y∪z and rw its indicator set. */
madj_status madj_check(const madj_graph* g, madj_criterion criterion, const char* x,
                       const char* y, const char* z, char** out_json);

/* ---- enumeration -------------------------------------------------------- */

/* Called once per valid set with a JSON array of node names; return 0 to
 * continue, nonzero to stop early. */
typedef int (*madj_set_callback)(void* user, const char* json_array);

/* Streams every covariate set valid for recovering P(y|do(x)), in a fixed
 * order with polynomial delay. ms selects the selection-aware criterion.
 * out_count (optional) receives the number of sets streamed. */
madj_status madj_list(const madj_graph* g, int ms, const char* x, const char* y,
                      madj_set_callback cb, void* user, uint64_t* out_count);

/* JSON {"set": [...], "size": n} for a minimum-size valid set, or "null"
 * when no valid set exists. */
madj_status madj_min_adj_set(const madj_graph* g, int ms, const char* x, const char* y,
                             char** out_json);

/* ---- datasets and estimation -------------------------------------------- */

/* selection_column: name of the selection column, "" to force plain data, or
 * NULL to auto-detect a column named "S". */
madj_status madj_dataset_load(const char* csv_text, const char* selection_column,
                              madj_dataset** out);
madj_status madj_dataset_read_file(const char* path, const char* selection_column,
                                   madj_dataset** out);
void madj_dataset_free(madj_dataset* d);

typedef enum madj_method {
    MADJ_METHOD_M = 0,   /* stratified adjustment */
    MADJ_METHOD_IPW = 1, /* inverse-probability weighting (same estimand) */
    MADJ_METHOD_MS = 2   /* selection-aware adjustment */
} madj_method;

/* EffectEstimate JSON:
 *   {"method": "...", "n_effective": n, "forced": bool,
 *    "distribution": {"scope": [...], "probabilities":
 *                     [{"value": [...], "p": ...}, ...]}}
 * force != 0 estimates even when the criterion rejects z; smooth >= 0 adds
 * that weight to every joint cell. */
madj_status madj_estimate(const madj_dataset* d, const madj_graph* g, madj_method method,
                          const char* x_assign, const char* y, const char* z, int force,
                          double smooth, char** out_json);

/* ---- simulation ---------------------------------------------------------- */

madj_status madj_scm_parse(const char* text, madj_scm** out);
madj_status madj_scm_read_file(const char* path, madj_scm** out);
/* n sampled rows as CSV. When has_seed is nonzero, seed replaces the model's
 * own seed for this call. */
madj_status madj_scm_sample_csv(const madj_scm* s, uint64_t n, int has_seed, uint64_t seed,
                                char** out_csv);
/* Exact interventional distribution, as the "distribution" object above. */
madj_status madj_scm_true_effect(const madj_scm* s, const char* x_assign, const char* y,
                                 char** out_json);
void madj_scm_free(madj_scm* s);

#ifdef __cplusplus
}
#endif

#endif /* MADJ_H */
