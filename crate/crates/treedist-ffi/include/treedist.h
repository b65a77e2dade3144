#ifndef TREEDIST_H
#define TREEDIST_H

/* Generated from the treedist-ffi crate by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define TD_OK 0

/**
 * Input could not be parsed into trees.
 */
#define TD_ERR_PARSE 1

/**
 * Trees are over different leaf sets.
 */
#define TD_ERR_TAXA 2

/**
 * Brute-force chain enumeration exceeded the cap.
 */
#define TD_ERR_CAP 3

/**
 * Null pointer, bad index, bad algorithm id, or undersized buffer.
 */
#define TD_ERR_INVALID_ARG 4

/**
 * An internal panic was caught at the boundary.
 */
#define TD_ERR_PANIC 5

/**
 * Depth-first search over the lattice of closed sets.
 */
#define TD_ALG_DYNAMIC 0

/**
 * Minimal-class branching with memoization (the CLI default).
 */
#define TD_ALG_DIVIDE 1

/**
 * Exhaustive maximal-chain enumeration; bounded by the chain cap.
 */
#define TD_ALG_BRUTE 2

/**
 * Opaque collection of parsed trees sharing one taxa map.
 */
typedef struct TdTreeSet TdTreeSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a Newick file (one tree per line) into a new tree set.
 *
 * `default_length` is used for edges written without a length; pass a
 * negative or non-finite value to require explicit lengths. On success
 * writes the new handle to `out` and returns `TD_OK`; the handle must
 * be released with `td_treeset_free`.
 *
 * # Safety
 *
 * `text` must be a valid NUL-terminated string and `out` a valid
 * pointer.
 */
int32_t td_treeset_parse(const char *text, double default_length, struct TdTreeSet **out);

/**
 * Releases a tree set. Passing NULL is a no-op.
 *
 * # Safety
 *
 * `set` must be a pointer returned by `td_treeset_parse` that has not
 * been freed already.
 */
void td_treeset_free(struct TdTreeSet *set);

/**
 * Number of trees in the set, or -1 for NULL.
 *
 * # Safety
 *
 * `set` must be a live handle or NULL.
 */
ptrdiff_t td_treeset_len(const struct TdTreeSet *set);

/**
 * Number of leaves shared by the trees, or -1 for NULL or an empty
 * set.
 *
 * # Safety
 *
 * `set` must be a live handle or NULL.
 */
ptrdiff_t td_treeset_taxa_count(const struct TdTreeSet *set);

/**
 * Geodesic distance between trees `i` and `j` of the set.
 *
 * `algorithm` is one of the `TD_ALG_*` constants; `chain_cap` bounds
 * the brute-force enumeration and is ignored by the other algorithms.
 * Writes the distance to `out_distance` and returns `TD_OK`.
 *
 * # Safety
 *
 * `set` must be a live handle and `out_distance` a valid pointer.
 */
int32_t td_distance(const struct TdTreeSet *set,
                    size_t i,
                    size_t j,
                    int32_t algorithm,
                    bool include_leaves,
                    uint64_t chain_cap,
                    double *out_distance);

/**
 * Full pairwise distance matrix, written row-major into `out`.
 *
 * `out_len` must be at least `n * n` for `n` trees. The matrix is
 * symmetric with a zero diagonal.
 *
 * # Safety
 *
 * `set` must be a live handle and `out` must point to at least
 * `out_len` writable doubles.
 */
int32_t td_distance_matrix(const struct TdTreeSet *set,
                           int32_t algorithm,
                           bool include_leaves,
                           uint64_t chain_cap,
                           double *out,
                           size_t out_len);

/**
 * Message for the most recent error on this thread.
 *
 * The pointer stays valid until the next failing call from the same
 * thread. Never NULL; the message is empty when nothing failed yet.
 */
const char *td_last_error(void);

/**
 * Library version as a static string.
 */
const char *td_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TREEDIST_H */
