#ifndef HYPERCROSS_H
#define HYPERCROSS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HcStatus {
  HC_STATUS_OK = 0,
  HC_STATUS_NULL_POINTER = 1,
  HC_STATUS_INVALID_UTF8 = 2,
  HC_STATUS_INVALID_INPUT = 3,
  HC_STATUS_FAILED = 4,
  HC_STATUS_PANIC = 5,
} HcStatus;

/**
 * A crossratio table over a labelled ground set.
 */
typedef struct HcTable HcTable;

/**
 * A finite metric tree with rational edge lengths.
 */
typedef struct HcTree HcTree;

/**
 * Exact rational `num / den` with `den > 0`.
 */
typedef struct HcRational {
  int64_t num;
  int64_t den;
} HcRational;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next call into this library on the same thread.
 */
const char *hc_last_error(void);

/**
 * Library version as a static string.
 */
const char *hc_version(void);

/**
 * # Safety
 * `s` is null or a string returned by this library and not yet freed.
 */
void hc_string_free(char *s);

/**
 * Parses a tree from its JSON form.
 *
 * # Safety
 * `json` is a nul-terminated string; `out` is writable.
 */
enum HcStatus hc_tree_from_json(const char *json, struct HcTree **out);

/**
 * A random tree with `leaves` leaves and rational edge lengths.
 *
 * # Safety
 * `out` is writable.
 */
enum HcStatus hc_tree_random(size_t leaves, uint64_t seed, struct HcTree **out);

/**
 * # Safety
 * `tree` is null or a handle from this library not yet freed.
 */
void hc_tree_free(struct HcTree *tree);

/**
 * # Safety
 * `tree` is a live handle; `out` is writable.
 */
enum HcStatus hc_tree_to_json(const struct HcTree *tree, char **out);

/**
 * # Safety
 * `tree` is a live handle; `out` is writable.
 */
enum HcStatus hc_tree_leaf_count(const struct HcTree *tree, size_t *out);

/**
 * Distance between two named nodes.
 *
 * # Safety
 * `tree` is a live handle; `u` and `v` are nul-terminated; `out` is writable.
 */
enum HcStatus hc_tree_distance(const struct HcTree *tree,
                               const char *u,
                               const char *v,
                               struct HcRational *out);

/**
 * Crossratio table over the leaves of the tree.
 *
 * # Safety
 * `tree` is a live handle; `out` is writable.
 */
enum HcStatus hc_tree_leaf_table(const struct HcTree *tree, struct HcTable **out);

/**
 * Parses a crossratio table from its JSON form.
 *
 * # Safety
 * `json` is a nul-terminated string; `out` is writable.
 */
enum HcStatus hc_table_from_json(const char *json, struct HcTable **out);

/**
 * # Safety
 * `table` is null or a handle from this library not yet freed.
 */
void hc_table_free(struct HcTable *table);

/**
 * # Safety
 * `table` is a live handle; `out` is writable.
 */
enum HcStatus hc_table_to_json(const struct HcTable *table, char **out);

/**
 * # Safety
 * `table` is a live handle; `out` is writable.
 */
enum HcStatus hc_table_len(const struct HcTable *table, size_t *out);

/**
 * `(xy|zw)` by ground index. `infinite` is set when the entry is unbounded,
 * in which case `out` is left unchanged.
 *
 * # Safety
 * `table` is a live handle; `out` and `infinite` are writable.
 */
enum HcStatus hc_table_value(const struct HcTable *table,
                             size_t x,
                             size_t y,
                             size_t z,
                             size_t w,
                             struct HcRational *out,
                             bool *infinite);

/**
 * Least `k` for which the table is `k`-hyperbolic.
 *
 * # Safety
 * `table` is a live handle; `out` is writable.
 */
enum HcStatus hc_table_hyperbolicity(const struct HcTable *table, struct HcRational *out);

/**
 * Best-fitting tree for the table and its largest deviation.
 *
 * # Safety
 * `table` is a live handle; `tree_out` and `deviation` are writable.
 */
enum HcStatus hc_table_fit(const struct HcTable *table,
                           struct HcTree **tree_out,
                           struct HcRational *deviation);

/**
 * Runs a named property suite; the report is JSON lines ending in a
 * summary object.
 *
 * # Safety
 * `name` is nul-terminated; `report` and `pass` are writable.
 */
enum HcStatus hc_suite_run(const char *name, uint64_t seed, char **report, bool *pass);

/**
 * Whether PGL₂(F_q) acting on the projective line is sharply
 * `k`-transitive.
 *
 * # Safety
 * `out` is writable.
 */
enum HcStatus hc_pgl2_sharp(uint32_t q, size_t k, bool *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* HYPERCROSS_H */
