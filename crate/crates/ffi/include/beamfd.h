#ifndef BEAMFD_H
#define BEAMFD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every exported call.
typedef enum BeamfdStatus {
  BEAMFD_STATUS_OK = 0,
  // Null pointer, bad UTF-8, short buffer or similar misuse of the API.
  BEAMFD_STATUS_INVALID_ARGUMENT = 1,
  // Configuration or parameter validation failed.
  BEAMFD_STATUS_CONFIG = 2,
  // The solver failed (non-convergence, factorization breakdown).
  BEAMFD_STATUS_NUMERICAL = 3,
  BEAMFD_STATUS_IO = 4,
  // A Rust panic was caught at the boundary.
  BEAMFD_STATUS_PANIC = 5,
} BeamfdStatus;

// Memory kernel family selector for [`beamfd_weights`].
typedef enum BeamfdKernelFamily {
  BEAMFD_KERNEL_FAMILY_NONE = 0,
  BEAMFD_KERNEL_FAMILY_OSCILLATORY = 1,
  BEAMFD_KERNEL_FAMILY_NON_OSCILLATORY = 2,
} BeamfdKernelFamily;

// Opaque simulation handle.
typedef struct BeamfdSimulation BeamfdSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// NUL-terminated library version. The pointer is static.
const char *beamfd_version(void);

// Message for the last failed call on this thread, or null if the last call
// succeeded. Valid until the next call on the same thread.
const char *beamfd_last_error_message(void);

// Creates a simulation from a JSON configuration. The initial two time
// levels are set up; no steps are solved yet.
//
// # Safety
// `config_json` must be a NUL-terminated string and `out` a valid pointer.
enum BeamfdStatus beamfd_simulation_new(const char *config_json, struct BeamfdSimulation **out);

// Creates a simulation from a named built-in configuration.
//
// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum BeamfdStatus beamfd_simulation_from_preset(const char *name, struct BeamfdSimulation **out);

// Releases a simulation. Null is ignored.
//
// # Safety
// `sim` must come from this library and not be used afterwards.
void beamfd_simulation_free(struct BeamfdSimulation *sim);

// Solves up to `count` further steps, stopping at the configured final step.
//
// # Safety
// `sim` must be a live handle.
enum BeamfdStatus beamfd_simulation_step(struct BeamfdSimulation *sim, size_t count);

// Solves all remaining steps.
//
// # Safety
// `sim` must be a live handle.
enum BeamfdStatus beamfd_simulation_run(struct BeamfdSimulation *sim);

// Index of the latest solved time level and its time.
//
// # Safety
// `sim` must be a live handle; `level` and `time` valid pointers.
enum BeamfdStatus beamfd_simulation_progress(const struct BeamfdSimulation *sim,
                                             size_t *level,
                                             double *time);

// Number of interior nodes, i.e. the length of the solution vector.
//
// # Safety
// `sim` must be a live handle and `len` a valid pointer.
enum BeamfdStatus beamfd_simulation_solution_len(const struct BeamfdSimulation *sim, size_t *len);

// Copies the latest interior solution into `buf` (capacity `len`).
//
// # Safety
// `sim` must be a live handle and `buf` writable for `len` doubles.
enum BeamfdStatus beamfd_simulation_copy_solution(const struct BeamfdSimulation *sim,
                                                  double *buf,
                                                  size_t len);

// Writes the `n_steps` convolution weights for time step `dt` into `buf`
// (capacity `len`). `gamma` is ignored for the non-oscillatory family and
// all parameters are ignored for `None`, which yields zeros.
//
// # Safety
// `buf` must be writable for `len` doubles.
enum BeamfdStatus beamfd_weights(enum BeamfdKernelFamily family,
                                 double sigma,
                                 double gamma,
                                 double alpha,
                                 double dt,
                                 size_t n_steps,
                                 double *buf,
                                 size_t len);

// Temporal self-convergence error of the configured run: the final solution
// with `time.steps` steps against the one with half as many.
//
// # Safety
// `config_json` must be NUL-terminated and `out` a valid pointer.
enum BeamfdStatus beamfd_temporal_error(const char *config_json, double *out);

// Spatial self-convergence error of the configured run: the final solution
// on `grid.intervals` subintervals against the one on half as many.
//
// # Safety
// `config_json` must be NUL-terminated and `out` a valid pointer.
enum BeamfdStatus beamfd_spatial_error(const char *config_json, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BEAMFD_H */
