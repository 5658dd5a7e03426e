#ifndef VODART_H
#define VODART_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VodartStatus {
  VODART_STATUS_OK = 0,
  VODART_STATUS_NULL_POINTER = 1,
  VODART_STATUS_INVALID_ARGUMENT = 2,
  VODART_STATUS_DIMENSION_MISMATCH = 3,
  VODART_STATUS_ZERO_PATTERN = 4,
  VODART_STATUS_CAPACITY = 5,
  VODART_STATUS_IO = 6,
  VODART_STATUS_PARSE = 7,
  VODART_STATUS_PANIC = 8,
} VodartStatus;

/**
 * Opaque network handle.
 */
typedef struct VodartNetwork VodartNetwork;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *vodart_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *vodart_status_name(enum VodartStatus status);

/**
 * Creates an empty network. With `force_on_capacity` a full network
 * assigns to its most similar cluster instead of failing.
 *
 * # Safety
 * `out` must be valid for writing one pointer.
 */
enum VodartStatus vodart_network_new(size_t input_dim,
                                     double vigilance,
                                     size_t max_clusters,
                                     bool force_on_capacity,
                                     struct VodartNetwork **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `net` must come from this library and not be used afterwards.
 */
void vodart_network_free(struct VodartNetwork *net);

/**
 * Presents one binary pattern of `len` bytes and writes the chosen cluster.
 *
 * # Safety
 * `pattern` must point to `len` readable bytes and `out_cluster` to one
 * writable `size_t`.
 */
enum VodartStatus vodart_network_present(struct VodartNetwork *net,
                                         const uint8_t *pattern,
                                         size_t len,
                                         size_t *out_cluster);

/**
 * Trains on `count` patterns stored row-major in `patterns`, each
 * `input_dim` bytes long, until the assignment repeats or the epoch limit
 * is hit. Writes one cluster index per pattern. `out_converged` may be NULL.
 *
 * # Safety
 * `patterns` must hold `count * input_dim` bytes and `out_clusters`
 * room for `count` values.
 */
enum VodartStatus vodart_network_train(struct VodartNetwork *net,
                                       const uint8_t *patterns,
                                       size_t count,
                                       size_t input_dim,
                                       size_t *out_clusters,
                                       bool *out_converged);

/**
 * # Safety
 * `out` must be valid for writing one `size_t`.
 */
enum VodartStatus vodart_network_active_clusters(const struct VodartNetwork *net, size_t *out);

/**
 * # Safety
 * `out` must be valid for writing one `size_t`.
 */
enum VodartStatus vodart_network_input_dim(const struct VodartNetwork *net, size_t *out);

/**
 * Copies the top-down prototype of a committed cluster into `out`.
 *
 * # Safety
 * `out` must have room for `len` bytes; `len` must equal the input dimension.
 */
enum VodartStatus vodart_network_prototype(const struct VodartNetwork *net,
                                           size_t cluster,
                                           uint8_t *out,
                                           size_t len);

/**
 * Copies the bottom-up weights of a committed cluster into `out`.
 *
 * # Safety
 * `out` must have room for `len` doubles; `len` must equal the input dimension.
 */
enum VodartStatus vodart_network_bottom_up(const struct VodartNetwork *net,
                                           size_t cluster,
                                           double *out,
                                           size_t len);

/**
 * Fraction of the set bits of `pattern` that are also set in `prototype`.
 *
 * # Safety
 * Both inputs must point to `len` readable bytes and `out` to one double.
 */
enum VodartStatus vodart_similarity(const uint8_t *pattern,
                                    const uint8_t *prototype,
                                    size_t len,
                                    double *out);

/**
 * Writes the network to `path` in the text snapshot format.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum VodartStatus vodart_network_save(const struct VodartNetwork *net, const char *path);

/**
 * Reads a snapshot and returns a new handle through `out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` valid for one pointer.
 */
enum VodartStatus vodart_network_load(const char *path, struct VodartNetwork **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VODART_H */
