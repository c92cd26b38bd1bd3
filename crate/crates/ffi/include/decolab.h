#ifndef DECOLAB_H
#define DECOLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DecolabStatus {
  DECOLAB_STATUS_OK = 0,
  DECOLAB_STATUS_NULL_POINTER = 1,
  DECOLAB_STATUS_INVALID_ARGUMENT = 2,
  DECOLAB_STATUS_INVALID_DENSITY = 3,
  DECOLAB_STATUS_NUMERICAL_FAILURE = 4,
  DECOLAB_STATUS_UNSUPPORTED = 5,
  DECOLAB_STATUS_PANIC = 6,
} DecolabStatus;

/**
 * Opaque handle to a validated density matrix.
 */
typedef struct DecolabDensity DecolabDensity;

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len` bytes). Returns the full message length excluding the
 * terminator, or 0 if there is none.
 *
 * # Safety
 * `buf` must be null or point to at least `len` writable bytes.
 */
size_t decolab_last_error(char *buf, size_t len);

/**
 * Creates a density matrix from `2·n·n` doubles holding interleaved real and
 * imaginary parts in row-major order. The matrix must be Hermitian, unit
 * trace and positive semidefinite within default tolerances.
 *
 * # Safety
 * `data` must point to `2·n·n` readable doubles and `out` to a writable pointer.
 */
enum DecolabStatus decolab_density_new(size_t n, const double *data, struct DecolabDensity **out);

/**
 * Releases a handle from [`decolab_density_new`]. Null is ignored.
 *
 * # Safety
 * `handle` must be null or a live handle not freed before.
 */
void decolab_density_free(struct DecolabDensity *handle);

/**
 * # Safety
 * `handle` must be a live handle and `out` writable.
 */
enum DecolabStatus decolab_density_dim(const struct DecolabDensity *handle, size_t *out);

/**
 * `tr ρ²`.
 *
 * # Safety
 * `handle` must be a live handle and `out` writable.
 */
enum DecolabStatus decolab_density_purity(const struct DecolabDensity *handle, double *out);

/**
 * `n/(n−1) (1 − tr ρ²)`; fails for `n = 1`.
 *
 * # Safety
 * `handle` must be a live handle and `out` writable.
 */
enum DecolabStatus decolab_density_decoherence(const struct DecolabDensity *handle, double *out);

/**
 * `1 − e^{−4γt}` for the dephasing qubit.
 *
 * # Safety
 * `out` must be writable.
 */
enum DecolabStatus decolab_spin_boson_de(double gamma, double t, double *out);

/**
 * `1 − 1/sqrt(1 + t/τ_D)` with `τ_D = 1/(8 m γ T σ²)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum DecolabStatus decolab_gaussian_position_de(double sigma,
                                                double mass,
                                                double temperature,
                                                double gamma,
                                                double t,
                                                double *out);

/**
 * Plane-wave erf closed form at `z = sqrt(2σ) L`.
 *
 * # Safety
 * `out` must be writable.
 */
enum DecolabStatus decolab_plane_wave_de_erf(double z, double *out);

/**
 * Exact plane-wave measure at `z = sqrt(2σ) L`.
 *
 * # Safety
 * `out` must be writable.
 */
enum DecolabStatus decolab_plane_wave_de_exact(double z, double *out);

/**
 * `2(1 − ρ11² − ρ22² − 2c²)` of a physical two-path state.
 *
 * # Safety
 * `out` must be writable.
 */
enum DecolabStatus decolab_two_path_de(double rho11, double rho22, double coherence, double *out);

#endif  /* DECOLAB_H */
