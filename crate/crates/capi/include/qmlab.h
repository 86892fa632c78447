#ifndef QMLAB_H
#define QMLAB_H

/* Generated by cbindgen from qmlab-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define QMLAB_OK 0

#define QMLAB_ERR_NULL 1

#define QMLAB_ERR_INVALID_ARG 2

#define QMLAB_ERR_PARSE 3

#define QMLAB_ERR_NUMERIC 4

#define QMLAB_ERR_BUFFER 5

// Opaque engine handle.
typedef struct QmlabEngine QmlabEngine;

// Message for the most recent error on this thread. Valid until the next
// failing call on the same thread.
const char *qmlab_last_error_message(void);

const char *qmlab_version(void);

// Create an engine over the standard genus-2 representation with the
// built-in demonstration connection. target: 0 = abelian, 1 = su2,
// 2 = heisenberg; mode: 0 = geodesic, 1 = homogeneous.
struct QmlabEngine *qmlab_engine_new(int target, int mode, double tol);

// # Safety
// `engine` must come from `qmlab_engine_new` and not be freed twice.
void qmlab_engine_free(struct QmlabEngine *engine);

// Coordinate dimension of engine values (how many doubles `qmlab_engine_value`
// writes per element).
//
// # Safety
// `engine` must be a live handle.
int qmlab_engine_dim(const struct QmlabEngine *engine);

// Evaluate q(word) and write its entries to `out` (capacity `out_len`).
//
// # Safety
// `engine` must be a live handle; `out` must point to at least `out_len`
// doubles.
int qmlab_engine_value(const struct QmlabEngine *engine,
                       const char *word,
                       double *out,
                       uintptr_t out_len);

// Defect d(q(xy), q(x) q(y)) in the bi-invariant metric.
//
// # Safety
// `engine` must be a live handle; `out` must be a valid double pointer.
int qmlab_engine_defect(const struct QmlabEngine *engine,
                        const char *x,
                        const char *y,
                        double *out);

// A-priori defect bound for the engine's connection.
//
// # Safety
// `engine` must be a live handle; `out` must be a valid double pointer.
int qmlab_engine_bound_estimate(const struct QmlabEngine *engine, double *out);

// Translation length of the hyperbolic isometry representing `word`
// (0 for the identity class).
int qmlab_translation_length(const char *word, double *out);

// Brooks counting functional h_w(g) on the free group over {a, b}.
int qmlab_brooks_h(const char *w, const char *g, int64_t *out);

#endif /* QMLAB_H */
