#ifndef SUNBLOCH_H
#define SUNBLOCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SbDrive {
  SB_DRIVE_PIECEWISE_CONSTANT = 0,
  SB_DRIVE_SINUSOIDAL = 1,
} SbDrive;

typedef enum SbGammaConvention {
  SB_GAMMA_CONVENTION_IN_OPERATOR = 0,
  SB_GAMMA_CONVENTION_SQUARED_RATE = 1,
  SB_GAMMA_CONVENTION_LINEAR_RATE = 2,
} SbGammaConvention;

/**
 * Result of every fallible call.
 */
typedef enum SbStatus {
  SB_STATUS_OK = 0,
  SB_STATUS_NULL_POINTER = 1,
  SB_STATUS_INVALID_ARGUMENT = 2,
  SB_STATUS_CONFIG = 3,
  SB_STATUS_NON_FINITE = 4,
  SB_STATUS_CACHE = 5,
  SB_STATUS_IO = 6,
  SB_STATUS_BUFFER_TOO_SMALL = 7,
  SB_STATUS_PANIC = 8,
} SbStatus;

/**
 * Opaque compiled system, ready to propagate.
 */
typedef struct SbCompiled SbCompiled;

/**
 * Opaque model handle.
 */
typedef struct SbModel SbModel;

/**
 * Dimer parameters. Fill with [`sb_dimer_params_reference`] and adjust.
 */
typedef struct SbDimerParams {
  size_t n;
  double j;
  double u;
  double e;
  double a;
  double period;
  double gamma;
  enum SbDrive drive;
  enum SbGammaConvention convention;
  /**
   * Fock level the run starts in.
   */
  size_t initial_fock;
} SbDimerParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Reference dimer parameters for `n` levels (J = -1, U = 1, E = 1,
 * A = 1.5, T = 2 pi, gamma = 0.1, piecewise drive, start in level 0).
 */
struct SbDimerParams sb_dimer_params_reference(size_t n);

/**
 * Builds a dimer model. On success `*out` owns a new handle.
 *
 * # Safety
 * `params` must point to a valid `SbDimerParams` and `out` to writable
 * storage for one pointer.
 */
enum SbStatus sb_dimer_model_new(const struct SbDimerParams *params, struct SbModel **out);

/**
 * Loads a model from a run configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum SbStatus sb_model_load(const char *path, struct SbModel **out);

/**
 * Number of levels of a model, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t sb_model_levels(const struct SbModel *model);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void sb_model_free(struct SbModel *model);

/**
 * Compiles a model into Bloch form. Assembly evaluates structure constants
 * on the fly; no cache files are touched.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum SbStatus sb_compile(const struct SbModel *model, struct SbCompiled **out);

/**
 * Length of the coherence vector, N^2 - 1, or 0 for a null handle.
 *
 * # Safety
 * `compiled` must be null or a live handle.
 */
size_t sb_compiled_dimension(const struct SbCompiled *compiled);

/**
 * Stored nonzeros across Q0, Q1 and R, or 0 for a null handle.
 *
 * # Safety
 * `compiled` must be null or a live handle.
 */
size_t sb_compiled_nnz(const struct SbCompiled *compiled);

/**
 * # Safety
 * `compiled` must be null or a handle not yet freed.
 */
void sb_compiled_free(struct SbCompiled *compiled);

/**
 * Propagates the model's initial state from t = 0 to `t_end` with step
 * `dt` and writes the final level populations into `probabilities`, which
 * must hold at least N values. `coherence` may be null; otherwise it
 * receives the final coherence vector and must hold N^2 - 1 values.
 *
 * # Safety
 * Buffers must be valid for writes of the stated lengths.
 */
enum SbStatus sb_propagate(const struct SbCompiled *compiled,
                           double dt,
                           double t_end,
                           double *probabilities,
                           size_t probabilities_len,
                           double *coherence,
                           size_t coherence_len);

/**
 * Closed-form nonzero counts of the f and d tensors of SU(N).
 *
 * # Safety
 * `nz_f_out` and `nz_d_out` must be writable.
 */
enum SbStatus sb_structure_counts(size_t n, uint64_t *nz_f_out, uint64_t *nz_d_out);

/**
 * Message for the most recent failure on this thread, or null if none.
 * Valid until the next failing call on the same thread.
 */
const char *sb_last_error_message(void);

/**
 * Static description of a status code.
 */
const char *sb_status_message(enum SbStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUNBLOCH_H */
