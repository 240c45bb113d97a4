#ifndef GRAPHON_LAB_H
#define GRAPHON_LAB_H

/* Generated by cbindgen from graphon-lab-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum {
  GL_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  GL_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  GL_STATUS_INVALID_UTF8 = 2,
  /**
   * A parameter violated its precondition.
   */
  GL_STATUS_INVALID_ARGUMENT = 3,
  /**
   * The computation failed numerically (blow-up, no convergence).
   */
  GL_STATUS_NUMERICAL_FAILURE = 4,
  /**
   * File input could not be read or parsed.
   */
  GL_STATUS_IO_FAILURE = 5,
} GlStatus;

/**
 * Opaque time-dependent interaction kernel a(t,i,j).
 */
typedef struct GlKernel GlKernel;

/**
 * Opaque N×N sampled adjacency matrix.
 */
typedef struct GlMatrix GlMatrix;

/**
 * Opaque nonlinear communication kernel φ(r).
 */
typedef struct GlPhi GlPhi;

/**
 * Opaque integrated trajectory.
 */
typedef struct GlTrajectory GlTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Pointer to the message of the most recent error on this thread; owned by
 * the library, valid until the next failing call.
 */
const char *gl_last_error_message(void);

/**
 * Static version string of the library.
 */
const char *gl_version(void);

/**
 * Builds one of the builtin kernels (`leader`, `balanced_cycle`,
 * `symmetric_switch`, `half_connected`, `complete`, `two_block`).
 * `period` and `bands` parameterize the switching kernels and are ignored
 * by the stationary ones.
 *
 * # Safety
 * `name` must point to a NUL-terminated string and `out` must be a valid
 * pointer; the returned handle must be released with [`gl_kernel_free`].
 */
GlStatus gl_kernel_builtin(const char *name, double period, uint32_t bands, GlKernel **out);

/**
 * Loads a piecewise-constant kernel from a plain-text grid file
 * (`N <int> T_SAMPLES <int>` header, then T_SAMPLES blocks of N×N weights).
 *
 * # Safety
 * `path` must point to a NUL-terminated string and `out` must be valid.
 */
GlStatus gl_kernel_from_grid_file(const char *path, GlKernel **out);

/**
 * Evaluates a(t,i,j).
 *
 * # Safety
 * `kernel` must be a live handle and `out` a valid pointer.
 */
GlStatus gl_kernel_eval(const GlKernel *kernel, double t, double i, double j, double *out);

/**
 * # Safety
 * `kernel` must come from this library and not be freed twice.
 */
void gl_kernel_free(GlKernel *kernel);

/**
 * The linear kernel φ ≡ 1.
 *
 * # Safety
 * `out` must be a valid pointer; release with [`gl_phi_free`].
 */
GlStatus gl_phi_one(GlPhi **out);

/**
 * The Cucker-Smale kernel φ(r) = 1/(1+r)².
 *
 * # Safety
 * `out` must be a valid pointer; release with [`gl_phi_free`].
 */
GlStatus gl_phi_cucker_smale(GlPhi **out);

/**
 * γ_R = min of φ over [0, 2R].
 *
 * # Safety
 * `phi` must be a live handle and `out` valid.
 */
GlStatus gl_gamma_r(const GlPhi *phi, double radius, double *out);

/**
 * # Safety
 * `phi` must come from this library and not be freed twice.
 */
void gl_phi_free(GlPhi *phi);

/**
 * Samples the kernel at time `t` into an n×n matrix of cell averages with
 * an `order`×`order` midpoint rule per cell.
 *
 * # Safety
 * `kernel` must be a live handle and `out` valid; release the result with
 * [`gl_matrix_free`].
 */
GlStatus gl_sample_adjacency(const GlKernel *kernel,
                             double t,
                             uintptr_t n,
                             uintptr_t order,
                             GlMatrix **out);

/**
 * Dimension of a sampled matrix.
 *
 * # Safety
 * `matrix` must be a live handle.
 */
uintptr_t gl_matrix_n(const GlMatrix *matrix);

/**
 * Reads entry (i, j).
 *
 * # Safety
 * `matrix` must be a live handle and `out` valid.
 */
GlStatus gl_matrix_get(const GlMatrix *matrix, uintptr_t i, uintptr_t j, double *out);

/**
 * Scrambling coefficient η of a sampled matrix.
 *
 * # Safety
 * `matrix` must be a live handle and `out` valid.
 */
GlStatus gl_matrix_scrambling(const GlMatrix *matrix, double *out);

/**
 * Algebraic connectivity λ₂ of the sampled matrix's graph-Laplacian.
 *
 * # Safety
 * `matrix` must be a live handle and `out` valid.
 */
GlStatus gl_matrix_lambda2(const GlMatrix *matrix, double *out);

/**
 * Connectivity report of a sampled matrix as a JSON document
 * {eta, lambda2, lambda2_weighted, delta, n_components, perron, residual,
 * persistence}; release the string with [`gl_string_free`].
 *
 * # Safety
 * `matrix` must be a live handle and `out` valid.
 */
GlStatus gl_matrix_report_json(const GlMatrix *matrix, char **out);

/**
 * # Safety
 * `matrix` must come from this library and not be freed twice.
 */
void gl_matrix_free(GlMatrix *matrix);

/**
 * Integrates the dynamics ẋ = −L(t,x)x from the row-major initial state
 * `x0` (n agents × d coordinates) over [0, t_end] with fixed step `dt`,
 * recording every `record_stride` steps.
 *
 * # Safety
 * `kernel` and `phi` must be live handles, `x0` must point to n·d doubles,
 * and `out` must be valid; release the result with [`gl_trajectory_free`].
 */
GlStatus gl_integrate(const GlKernel *kernel,
                      const GlPhi *phi,
                      const double *x0,
                      uintptr_t n,
                      uintptr_t d,
                      double dt,
                      double t_end,
                      uintptr_t record_stride,
                      GlTrajectory **out);

/**
 * Number of recorded times.
 *
 * # Safety
 * `traj` must be a live handle.
 */
uintptr_t gl_trajectory_len(const GlTrajectory *traj);

/**
 * Recorded time at index `k`.
 *
 * # Safety
 * `traj` must be a live handle and `out` valid.
 */
GlStatus gl_trajectory_time(const GlTrajectory *traj, uintptr_t k, double *out);

/**
 * Copies the recorded state at index `k` into `buffer` (n·d doubles,
 * row-major by agent).
 *
 * # Safety
 * `traj` must be a live handle and `buffer` must point to at least
 * n·d doubles.
 */
GlStatus gl_trajectory_state(const GlTrajectory *traj, uintptr_t k, double *buffer);

/**
 * Diameter diagnostic at record `k`.
 *
 * # Safety
 * `traj` must be a live handle and `out` valid.
 */
GlStatus gl_trajectory_diameter(const GlTrajectory *traj, uintptr_t k, double *out);

/**
 * Standard deviation diagnostic at record `k`.
 *
 * # Safety
 * `traj` must be a live handle and `out` valid.
 */
GlStatus gl_trajectory_std_dev(const GlTrajectory *traj, uintptr_t k, double *out);

/**
 * Estimated consensus point (tail extrapolation of the barycenter
 * sequence), copied into `buffer` (d doubles).
 *
 * # Safety
 * `traj` must be a live handle and `buffer` must point to at least d
 * doubles.
 */
GlStatus gl_trajectory_consensus_estimate(const GlTrajectory *traj, double *buffer);

/**
 * # Safety
 * `traj` must come from this library and not be freed twice.
 */
void gl_trajectory_free(GlTrajectory *traj);

/**
 * # Safety
 * `s` must be a string returned by this library and not freed twice.
 */
void gl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRAPHON_LAB_H */
