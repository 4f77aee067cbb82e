#ifndef OSNLAB_H
#define OSNLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum OsnStatus {
  OSN_STATUS_OK = 0,
  OSN_STATUS_NULL_POINTER = 1,
  OSN_STATUS_INVALID_UTF8 = 2,
  OSN_STATUS_IO = 3,
  OSN_STATUS_PARSE = 4,
  OSN_STATUS_INVALID_ARGUMENT = 5,
  /**
   * The requested quantity does not exist for this input, e.g. the
   * effective diameter of a graph without edges.
   */
  OSN_STATUS_UNDEFINED = 6,
  OSN_STATUS_PANIC = 7,
  OSN_STATUS_BUFFER_TOO_SMALL = 8,
} OsnStatus;

/**
 * Opaque owned graph.
 */
typedef struct OsnGraph OsnGraph;

/**
 * Opaque owned metrics report.
 */
typedef struct OsnReport OsnReport;

/**
 * Scalar summary of a metrics report.
 */
typedef struct OsnMetricsSummary {
  uint64_t nodes;
  uint64_t edges;
  double avg_degree;
  uint64_t median_degree;
  uint64_t max_degree;
  /**
   * Only meaningful when `has_effective_diameter` is true.
   */
  double effective_diameter;
  bool has_effective_diameter;
  double avg_clustering;
  uint64_t components;
  double largest_component_fraction;
  double top_singular_value;
  bool spectral_converged;
} OsnMetricsSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `cap - 1` bytes. Returns the buffer
 * size needed for the full message including the terminator; `buf` may be
 * null to query that size. The message is empty after a successful call.
 *
 * # Safety
 * `buf` must be null or valid for `cap` bytes of writes.
 */
size_t osn_last_error_message(char *buf, size_t cap);

/**
 * Static NUL-terminated version string of the library.
 */
const char *osn_version(void);

/**
 * Loads a TAB-separated edge list. Duplicate lines are merged.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for a write.
 */
enum OsnStatus osn_graph_from_edge_list(const char *path, struct OsnGraph **out);

/**
 * Loads an undirected GraphML document.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for a write.
 */
enum OsnStatus osn_graph_from_graphml(const char *path, struct OsnGraph **out);

/**
 * Builds a graph from `n_edges` pairs stored flat in `pairs`
 * (`u0, v0, u1, v1, ...`). Self-loops are rejected; duplicates are merged.
 *
 * # Safety
 * `pairs` must be valid for `2 * n_edges` reads (it may be null when
 * `n_edges` is zero); `out` must be valid for a write.
 */
enum OsnStatus osn_graph_from_edges(const uint64_t *pairs, size_t n_edges, struct OsnGraph **out);

/**
 * Releases a graph. Null is ignored.
 *
 * # Safety
 * `g` must be null or a handle returned by this library and not yet freed.
 */
void osn_graph_free(struct OsnGraph *g);

/**
 * # Safety
 * `g` must be a live graph handle; `out` must be valid for a write.
 */
enum OsnStatus osn_graph_node_count(const struct OsnGraph *g, uint64_t *out);

/**
 * # Safety
 * `g` must be a live graph handle; `out` must be valid for a write.
 */
enum OsnStatus osn_graph_edge_count(const struct OsnGraph *g, uint64_t *out);

/**
 * Degree of node `id`; [`OsnStatus::InvalidArgument`] if it is absent.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be valid for a write.
 */
enum OsnStatus osn_graph_degree(const struct OsnGraph *g, uint64_t id, uint64_t *out);

/**
 * Writes the graph as GraphML.
 *
 * # Safety
 * `g` must be a live graph handle; `path` must be a NUL-terminated string.
 */
enum OsnStatus osn_graph_write_graphml(const struct OsnGraph *g, const char *path);

/**
 * Induced subgraph on all nodes within `radius` hops of `center`.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be valid for a write.
 */
enum OsnStatus osn_graph_ego(const struct OsnGraph *g,
                             uint64_t center,
                             uint32_t radius,
                             struct OsnGraph **out);

/**
 * 48-bit pseudonym of `len` bytes at `key`. `key` may be null when `len`
 * is zero.
 *
 * # Safety
 * `key` must be valid for `len` bytes of reads.
 */
uint64_t osn_aphash48(const uint8_t *key, size_t len);

/**
 * Pseudonym of the decimal rendering of a numeric ID.
 */
uint64_t osn_anonymize_id(uint64_t raw);

/**
 * Computes the full metrics suite. `q` is the effective-diameter quantile
 * in (0, 1]; `spectral_k >= 1` singular values are requested; `seed`
 * drives hop-plot sampling and the eigensolver.
 *
 * # Safety
 * `g` must be a live graph handle; `out` must be valid for a write.
 */
enum OsnStatus osn_metrics_compute(const struct OsnGraph *g,
                                   double q,
                                   size_t spectral_k,
                                   uint64_t seed,
                                   struct OsnReport **out);

/**
 * Releases a report. Null is ignored.
 *
 * # Safety
 * `r` must be null or a handle returned by this library and not yet freed.
 */
void osn_report_free(struct OsnReport *r);

/**
 * # Safety
 * `r` must be a live report handle; `out` must be valid for a write.
 */
enum OsnStatus osn_report_summary(const struct OsnReport *r, struct OsnMetricsSummary *out);

/**
 * Effective diameter, or [`OsnStatus::Undefined`] when the graph has no
 * connected pairs.
 *
 * # Safety
 * `r` must be a live report handle; `out` must be valid for a write.
 */
enum OsnStatus osn_report_effective_diameter(const struct OsnReport *r, double *out);

/**
 * Copies the descending singular values into `buf`. `*written` always
 * receives the number of values available; if that exceeds `cap` nothing
 * is copied and [`OsnStatus::BufferTooSmall`] is returned.
 *
 * # Safety
 * `r` must be a live report handle; `buf` must be valid for `cap` writes
 * (it may be null when `cap` is zero); `written` must be valid for a write.
 */
enum OsnStatus osn_report_singular_values(const struct OsnReport *r,
                                          double *buf,
                                          size_t cap,
                                          size_t *written);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OSNLAB_H */
