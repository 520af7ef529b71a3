#ifndef JEFFREYS_H
#define JEFFREYS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum JeffreysStatus {
  JEFFREYS_STATUS_OK = 0,
  JEFFREYS_STATUS_VALIDATION = 1,
  JEFFREYS_STATUS_NUMERIC = 2,
  JEFFREYS_STATUS_DOMAIN = 3,
  JEFFREYS_STATUS_DIMENSION_MISMATCH = 4,
  JEFFREYS_STATUS_NULL_POINTER = 5,
  JEFFREYS_STATUS_BUFFER_TOO_SMALL = 6,
  JEFFREYS_STATUS_PANIC = 7,
} JeffreysStatus;

typedef enum JeffreysCentroidMode {
  JEFFREYS_CENTROID_MODE_POSITIVE = 0,
  JEFFREYS_CENTROID_MODE_NORMALIZED_APPROX = 1,
  JEFFREYS_CENTROID_MODE_VELDHUIS = 2,
  JEFFREYS_CENTROID_MODE_FREQUENCY_BISECTION = 3,
  JEFFREYS_CENTROID_MODE_FREQUENCY_FIXEDPOINT = 4,
} JeffreysCentroidMode;

typedef enum JeffreysClusterMode {
  JEFFREYS_CLUSTER_MODE_POSITIVE = 0,
  JEFFREYS_CLUSTER_MODE_NORMALIZED_APPROX = 1,
  JEFFREYS_CLUSTER_MODE_FREQUENCY_FIXEDPOINT_ONE_STEP = 2,
  JEFFREYS_CLUSTER_MODE_FREQUENCY_EXACT = 3,
} JeffreysClusterMode;

/**
 * Result of a centroid computation.
 */
typedef struct JeffreysCentroid JeffreysCentroid;

/**
 * Result of a k-means run.
 */
typedef struct JeffreysClustering JeffreysClustering;

/**
 * Weighted set of positive histograms.
 */
typedef struct JeffreysSet JeffreysSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *jeffreys_last_error_message(void);

/**
 * Builds a set from `n` row-major histograms of `d` bins each.
 * `weights` may be null for uniform weights; otherwise `n` positive values
 * that are rescaled to sum to one.
 *
 * # Safety
 * `bins` must point to `n * d` doubles, `weights` to `n` doubles or be null,
 * and `out` must be writable.
 */
enum JeffreysStatus jeffreys_set_new(const double *bins,
                                     size_t n,
                                     size_t d,
                                     const double *weights,
                                     struct JeffreysSet **out);

/**
 * # Safety
 * `set` must be null or a handle from [`jeffreys_set_new`] not yet freed.
 */
void jeffreys_set_free(struct JeffreysSet *set);

/**
 * Number of histograms, or 0 for a null handle.
 *
 * # Safety
 * `set` must be null or a live handle.
 */
size_t jeffreys_set_len(const struct JeffreysSet *set);

/**
 * Number of bins, or 0 for a null handle.
 *
 * # Safety
 * `set` must be null or a live handle.
 */
size_t jeffreys_set_dim(const struct JeffreysSet *set);

/**
 * Computes a centroid. `tol <= 0` selects the solver default. Frequency
 * modes require every member to sum to one.
 *
 * # Safety
 * `set` must be a live handle and `out` writable.
 */
enum JeffreysStatus jeffreys_centroid(const struct JeffreysSet *set,
                                      enum JeffreysCentroidMode mode,
                                      double tol,
                                      struct JeffreysCentroid **out);

/**
 * # Safety
 * `c` must be null or a handle from [`jeffreys_centroid`] not yet freed.
 */
void jeffreys_centroid_free(struct JeffreysCentroid *c);

/**
 * # Safety
 * `c` must be null or a live handle.
 */
size_t jeffreys_centroid_dim(const struct JeffreysCentroid *c);

/**
 * Copies the centroid bins into `out`, which holds `len` doubles.
 *
 * # Safety
 * `c` must be a live handle and `out` must hold `len` doubles.
 */
enum JeffreysStatus jeffreys_centroid_bins(const struct JeffreysCentroid *c,
                                           double *out,
                                           size_t len);

/**
 * `sum_j pi_j J(h_j, c)`, or NaN for a null handle.
 *
 * # Safety
 * `c` must be null or a live handle.
 */
double jeffreys_centroid_objective(const struct JeffreysCentroid *c);

/**
 * Solver iterations (0 for closed forms).
 *
 * # Safety
 * `c` must be null or a live handle.
 */
uint32_t jeffreys_centroid_iterations(const struct JeffreysCentroid *c);

/**
 * Mass of the positive centroid; NaN when the mode does not define it.
 *
 * # Safety
 * `c` must be null or a live handle.
 */
double jeffreys_centroid_w_c(const struct JeffreysCentroid *c);

/**
 * Optimal multiplier; NaN when the mode does not define it.
 *
 * # Safety
 * `c` must be null or a live handle.
 */
double jeffreys_centroid_lambda(const struct JeffreysCentroid *c);

/**
 * Principal branch of Lambert W for finite `x >= 0`.
 *
 * # Safety
 * `out` must be writable.
 */
enum JeffreysStatus jeffreys_lambert_w0(double x, double *out);

/**
 * Jeffreys divergence between two `d`-bin positive histograms.
 *
 * # Safety
 * `p` and `q` must each point to `d` doubles and `out` must be writable.
 */
enum JeffreysStatus jeffreys_divergence(const double *p, const double *q, size_t d, double *out);

/**
 * Jeffreys k-means. `max_iterations == 0` selects the default budget.
 *
 * # Safety
 * `set` must be a live handle and `out` writable.
 */
enum JeffreysStatus jeffreys_kmeans(const struct JeffreysSet *set,
                                    size_t k,
                                    enum JeffreysClusterMode mode,
                                    uint64_t seed,
                                    uint32_t max_iterations,
                                    struct JeffreysClustering **out);

/**
 * # Safety
 * `c` must be null or a handle from [`jeffreys_kmeans`] not yet freed.
 */
void jeffreys_clustering_free(struct JeffreysClustering *c);

/**
 * # Safety
 * `c` must be null or a live handle.
 */
size_t jeffreys_clustering_k(const struct JeffreysClustering *c);

/**
 * # Safety
 * `c` must be null or a live handle.
 */
uint32_t jeffreys_clustering_iterations(const struct JeffreysClustering *c);

/**
 * Copies the cluster index of every input histogram into `out`.
 *
 * # Safety
 * `c` must be a live handle and `out` must hold `len` values.
 */
enum JeffreysStatus jeffreys_clustering_assignments(const struct JeffreysClustering *c,
                                                    size_t *out,
                                                    size_t len);

/**
 * Copies centroid `index` into `out`.
 *
 * # Safety
 * `c` must be a live handle and `out` must hold `len` doubles.
 */
enum JeffreysStatus jeffreys_clustering_centroid(const struct JeffreysClustering *c,
                                                 size_t index,
                                                 double *out,
                                                 size_t len);

/**
 * Length of the objective trace.
 *
 * # Safety
 * `c` must be null or a live handle.
 */
size_t jeffreys_clustering_trace_len(const struct JeffreysClustering *c);

/**
 * Copies the objective after each round into `out`.
 *
 * # Safety
 * `c` must be a live handle and `out` must hold `len` doubles.
 */
enum JeffreysStatus jeffreys_clustering_trace(const struct JeffreysClustering *c,
                                              double *out,
                                              size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JEFFREYS_H */
