#ifndef SDLAB_H
#define SDLAB_H

/* Generated by cbindgen from sdlab-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum SdlabStatus {
  SdlabStatus_Ok = 0,
  SdlabStatus_NullPointer = 1,
  SdlabStatus_InvalidArgument = 2,
  SdlabStatus_NumericalError = 3,
  SdlabStatus_BufferTooSmall = 4,
  SdlabStatus_InternalError = 5,
} SdlabStatus;

/**
 * Classifier outcome codes for [`sdlab_classify`].
 */
typedef enum SdlabVerdict {
  SdlabVerdict_LocalWellPosed = 0,
  SdlabVerdict_GlobalWellPosed = 1,
  SdlabVerdict_NotCovered = 2,
} SdlabVerdict;

/**
 * Opaque simulator handle: one coupled state advanced by the split-step
 * integrator. Create with [`sdlab_sim_new`], release with
 * [`sdlab_sim_free`].
 */
typedef struct SdlabSim SdlabSim;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * ABI version of this header; bump on incompatible changes.
 */
uint32_t sdlab_abi_version(void);

/**
 * Create a simulator on `T^dim` with `modes_per_axis` points per axis and
 * zero initial data. `coupling_sign` is +1 or -1.
 *
 * # Safety
 * `out_sim` must be a valid pointer to a writable handle slot.
 */
enum SdlabStatus sdlab_sim_new(uint32_t dim,
                               uint32_t modes_per_axis,
                               double relaxation_k,
                               int32_t coupling_sign,
                               double alpha,
                               struct SdlabSim **out_sim);

/**
 * Release a simulator handle; a null pointer is ignored.
 *
 * # Safety
 * `sim` must have come from [`sdlab_sim_new`] and not be freed twice.
 */
void sdlab_sim_free(struct SdlabSim *sim);

/**
 * Number of grid samples per field (the length every buffer below must
 * have).
 *
 * # Safety
 * `sim` and `out_len` must be valid pointers.
 */
enum SdlabStatus sdlab_sim_point_count(const struct SdlabSim *sim, size_t *out_len);

/**
 * Load the coupled state (u complex as split re/im arrays, v real), all of
 * length `len = point_count`, in row-major grid order. Resets t to 0.
 *
 * # Safety
 * The three arrays must be readable for `len` doubles.
 */
enum SdlabStatus sdlab_sim_set_state(struct SdlabSim *sim,
                                     const double *u_re,
                                     const double *u_im,
                                     const double *v,
                                     size_t len);

/**
 * Advance the state by `steps` Strang steps of size `dt`. On a blow-up
 * abort the state keeps its last finite value and `NumericalError` is
 * returned.
 *
 * # Safety
 * `sim` must be a valid handle.
 */
enum SdlabStatus sdlab_sim_step(struct SdlabSim *sim, double dt, uint64_t steps);

/**
 * Current simulation time.
 *
 * # Safety
 * `sim` and `out_time` must be valid pointers.
 */
enum SdlabStatus sdlab_sim_time(const struct SdlabSim *sim, double *out_time);

/**
 * Copy u out as split re/im arrays of length `len = point_count`.
 *
 * # Safety
 * The arrays must be writable for `len` doubles.
 */
enum SdlabStatus sdlab_sim_get_u(const struct SdlabSim *sim,
                                 double *u_re,
                                 double *u_im,
                                 size_t len);

/**
 * Copy v out as a real array of length `len = point_count`.
 *
 * # Safety
 * The array must be writable for `len` doubles.
 */
enum SdlabStatus sdlab_sim_get_v(const struct SdlabSim *sim, double *v, size_t len);

/**
 * Norms of the current state: `||u||_2`, `||u||_{H^1}`, `||v||_2`.
 * Null output pointers are skipped.
 *
 * # Safety
 * Non-null output pointers must be writable.
 */
enum SdlabStatus sdlab_sim_norms(const struct SdlabSim *sim,
                                 double *l2_u,
                                 double *h1_u,
                                 double *l2_v);

/**
 * Well-posedness verdict for data in `H^s x H^s` on `T^dim` with
 * nonlinearity exponent `alpha`. `tag_buf` (optional, `tag_len` bytes)
 * receives the statement tag such as "A+E", or "-" when nothing applies.
 *
 * # Safety
 * `out_verdict` must be writable; `tag_buf` either null or writable for
 * `tag_len` bytes.
 */
enum SdlabStatus sdlab_classify(uint32_t dim,
                                double alpha,
                                double s,
                                enum SdlabVerdict *out_verdict,
                                char *tag_buf,
                                size_t tag_len);

/**
 * Exact count of integer solutions of `X^2 + 3Y^2 = A`.
 *
 * # Safety
 * `out_count` must be writable.
 */
enum SdlabStatus sdlab_eisenstein_count(uint64_t a, uint64_t *out_count);

/**
 * Copy the most recent error message on this thread into `buf`
 * (NUL-terminated, truncation reported as BufferTooSmall).
 *
 * # Safety
 * `buf` must be writable for `len` bytes.
 */
enum SdlabStatus sdlab_last_error(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SDLAB_H */
