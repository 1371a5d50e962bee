#ifndef ZFORCE_H
#define ZFORCE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum ZfStatus {
  ZF_STATUS_OK = 0,
  ZF_STATUS_NULL_POINTER = 1,
  ZF_STATUS_INVALID_INPUT = 2,
  ZF_STATUS_BUDGET_EXCEEDED = 3,
  ZF_STATUS_TRAINING_ABORTED = 4,
  ZF_STATUS_BUFFER_TOO_SMALL = 5,
  ZF_STATUS_IO = 6,
  ZF_STATUS_INTERNAL = 7,
} ZfStatus;

/**
 * A pattern graph.
 */
typedef struct ZfGraph ZfGraph;

/**
 * Trained actor and critic parameters.
 */
typedef struct ZfModel ZfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next call on the same thread.
 */
const char *zf_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *zf_version(void);

/**
 * Parses an edge list (`n <count>` header, `src dst class` lines).
 *
 * # Safety
 * `src` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ZfStatus zf_graph_from_edge_list(const char *src, struct ZfGraph **out);

/**
 * Parses a pattern matrix in CSV form with tokens `0`, `*`, `?`.
 *
 * # Safety
 * `src` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ZfStatus zf_graph_from_pattern_csv(const char *src, struct ZfGraph **out);

/**
 * Random directed graph: each ordered pair is an edge with probability
 * `p`, drawn as `?` with probability `arbitrary_fraction`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ZfStatus zf_graph_generate_er(uintptr_t n,
                                   double p,
                                   uint64_t seed,
                                   double arbitrary_fraction,
                                   struct ZfGraph **out);

/**
 * Releases a graph. Null is ignored.
 *
 * # Safety
 * `g` must come from this library and not be used afterwards.
 */
void zf_graph_free(struct ZfGraph *g);

/**
 * Node count, 0 for a null graph.
 *
 * # Safety
 * `g` must be null or a live graph.
 */
uintptr_t zf_graph_node_count(const struct ZfGraph *g);

/**
 * Edge count including self-loops, 0 for a null graph.
 *
 * # Safety
 * `g` must be null or a live graph.
 */
uintptr_t zf_graph_edge_count(const struct ZfGraph *g);

/**
 * Whether `nodes` colors both the graph and its modified copy.
 *
 * # Safety
 * `nodes` must point to `len` ids (may be null when `len` is 0).
 */
enum ZfStatus zf_is_zfs(const struct ZfGraph *g, const uintptr_t *nodes, uintptr_t len, bool *out);

/**
 * Derived set of `nodes` in the graph: `black[v]` is set to 1 for black
 * nodes and 0 otherwise. `black_len` must be at least the node count.
 *
 * # Safety
 * `nodes` must point to `len` ids and `black` to `black_len` bytes.
 */
enum ZfStatus zf_derived_set(const struct ZfGraph *g,
                             const uintptr_t *nodes,
                             uintptr_t len,
                             uint8_t *black,
                             uintptr_t black_len);

/**
 * Degree-based greedy input set. The set size is always written to
 * `out_len`; ids are copied when `cap` is large enough.
 *
 * # Safety
 * `out` must point to `cap` writable ids and `out_len` be valid.
 */
enum ZfStatus zf_solve_greedy(const struct ZfGraph *g,
                              uintptr_t *out,
                              uintptr_t cap,
                              uintptr_t *out_len);

/**
 * Minimum input set by exhaustive search, within a node-count ceiling
 * and a time limit.
 *
 * # Safety
 * As for [`zf_solve_greedy`].
 */
enum ZfStatus zf_solve_exact(const struct ZfGraph *g,
                             uintptr_t max_nodes,
                             double time_limit_secs,
                             uintptr_t *out,
                             uintptr_t cap,
                             uintptr_t *out_len);

/**
 * Loads a checkpoint file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ZfStatus zf_model_load(const char *path, struct ZfModel **out);

/**
 * Writes a checkpoint file.
 *
 * # Safety
 * `m` must be a live model and `path` a NUL-terminated string.
 */
enum ZfStatus zf_model_save(const struct ZfModel *m, const char *path);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `m` must come from this library and not be used afterwards.
 */
void zf_model_free(struct ZfModel *m);

/**
 * Trains a model on `g`. `config_toml` may be null for the defaults. The
 * returned model is the one that produced the best set; `best_z` receives
 * its size, or 0 when no valid set was found.
 *
 * # Safety
 * `config_toml` must be null or NUL-terminated; `out` and `best_z` valid.
 */
enum ZfStatus zf_train(const struct ZfGraph *g,
                       const char *config_toml,
                       struct ZfModel **out,
                       uintptr_t *best_z);

/**
 * Greedy rollout of a trained policy.
 *
 * # Safety
 * As for [`zf_solve_greedy`]; `m` must be a live model.
 */
enum ZfStatus zf_solve_rl(const struct ZfGraph *g,
                          const struct ZfModel *m,
                          uintptr_t *out,
                          uintptr_t cap,
                          uintptr_t *out_len);

/**
 * Samples `trials` integer realizations with weights in `[lo, hi]` and
 * counts those whose controllability matrix has full rank.
 *
 * # Safety
 * `nodes` must point to `len` ids; output pointers must be valid.
 */
enum ZfStatus zf_kalman_check(const struct ZfGraph *g,
                              const uintptr_t *nodes,
                              uintptr_t len,
                              uintptr_t trials,
                              uint64_t seed,
                              int64_t lo,
                              int64_t hi,
                              uintptr_t *full_rank_count,
                              uintptr_t *min_rank);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZFORCE_H */
