#ifndef CAVITRAJ_H
#define CAVITRAJ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum CavitrajStatus {
  CAVITRAJ_STATUS_OK = 0,
  CAVITRAJ_STATUS_NULL_POINTER = 1,
  CAVITRAJ_STATUS_INVALID_ARGUMENT = 2,
  CAVITRAJ_STATUS_CONFIG = 3,
  CAVITRAJ_STATUS_NUMERICAL = 4,
  CAVITRAJ_STATUS_BUFFER_TOO_SMALL = 5,
  CAVITRAJ_STATUS_PANIC = 6,
} CavitrajStatus;

// Recorded series selected by `which`.
typedef enum CavitrajSeries {
  CAVITRAJ_SERIES_TIME = 0,
  CAVITRAJ_SERIES_MEASUREMENT_RATE = 1,
  CAVITRAJ_SERIES_NORM = 2,
  CAVITRAJ_SERIES_Q1 = 3,
  CAVITRAJ_SERIES_DELTA_Q = 4,
  // Odd/even imbalance; NaN outside a lattice.
  CAVITRAJ_SERIES_IMBALANCE = 5,
} CavitrajSeries;

// Ground state with the model fields built for its grid.
typedef struct CavitrajGroundState CavitrajGroundState;

// Bogoliubov modes of a ground state.
typedef struct CavitrajModeSet CavitrajModeSet;

// Run configuration.
typedef struct CavitrajModel CavitrajModel;

// Recorded single trajectory.
typedef struct CavitrajTrajectory CavitrajTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *cavitraj_last_error(void);

// Library version as a static NUL-terminated string.
const char *cavitraj_version(void);

// # Safety
// `name` must be a NUL-terminated string and `out` a valid pointer.
enum CavitrajStatus cavitraj_model_from_preset(const char *name, struct CavitrajModel **out);

// Parses TOML configuration text.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum CavitrajStatus cavitraj_model_from_toml(const char *text, struct CavitrajModel **out);

// Replaces the grid.
//
// # Safety
// `model` must come from a `cavitraj_model_*` constructor.
enum CavitrajStatus cavitraj_model_set_grid(struct CavitrajModel *model,
                                            size_t n_points,
                                            double extent);

// # Safety
// `model` must be null or come from a `cavitraj_model_*` constructor, and
// must not be used afterwards.
void cavitraj_model_free(struct CavitrajModel *model);

// Ground state of the model's trap with the pump off.
//
// # Safety
// `model` must be a live model handle and `out` a valid pointer.
enum CavitrajStatus cavitraj_ground_state_solve(const struct CavitrajModel *model,
                                                struct CavitrajGroundState **out);

// # Safety
// `gs` must be a live ground-state handle and `mu` a valid pointer.
enum CavitrajStatus cavitraj_ground_state_mu(const struct CavitrajGroundState *gs, double *mu);

// Number of grid points, or 0 for a null handle.
//
// # Safety
// `gs` must be null or a live ground-state handle.
size_t cavitraj_ground_state_len(const struct CavitrajGroundState *gs);

// Copies the real unit-norm profile ψ0.
//
// # Safety
// `gs` must be a live handle and `out` point to `len` writable doubles.
enum CavitrajStatus cavitraj_ground_state_profile(const struct CavitrajGroundState *gs,
                                                  double *out,
                                                  size_t len);

// Copies the grid positions.
//
// # Safety
// `gs` must be a live handle and `out` point to `len` writable doubles.
enum CavitrajStatus cavitraj_ground_state_positions(const struct CavitrajGroundState *gs,
                                                    double *out,
                                                    size_t len);

// # Safety
// `gs` must be null or a live handle, not used afterwards.
void cavitraj_ground_state_free(struct CavitrajGroundState *gs);

// Lowest `n_modes` Bogoliubov modes of `gs`.
//
// # Safety
// `gs` must be a live handle and `out` a valid pointer.
enum CavitrajStatus cavitraj_modes_solve(const struct CavitrajGroundState *gs,
                                         size_t n_modes,
                                         struct CavitrajModeSet **out);

// Number of modes, or 0 for a null handle.
//
// # Safety
// `modes` must be null or a live handle.
size_t cavitraj_modes_len(const struct CavitrajModeSet *modes);

// Copies the mode energies (ascending, in ħω).
//
// # Safety
// `modes` must be a live handle and `out` point to `len` writable doubles.
enum CavitrajStatus cavitraj_modes_energies(const struct CavitrajModeSet *modes,
                                            double *out,
                                            size_t len);

// # Safety
// `modes` must be null or a live handle, not used afterwards.
void cavitraj_modes_free(struct CavitrajModeSet *modes);

// Runs one trajectory from √N ψ0 to `t_final`, recording every `stride`
// steps. `modes` may be null; when given, mode populations are recorded.
//
// # Safety
// `gs` must be a live handle, `modes` null or live, `out` valid.
enum CavitrajStatus cavitraj_trajectory_run(const struct CavitrajGroundState *gs,
                                            const struct CavitrajModeSet *modes,
                                            uint64_t seed,
                                            double t_final,
                                            size_t stride,
                                            struct CavitrajTrajectory **out);

// Number of records, or 0 for a null handle.
//
// # Safety
// `traj` must be null or a live handle.
size_t cavitraj_trajectory_len(const struct CavitrajTrajectory *traj);

// Copies one recorded series.
//
// # Safety
// `traj` must be a live handle and `out` point to `len` writable doubles.
enum CavitrajStatus cavitraj_trajectory_series(const struct CavitrajTrajectory *traj,
                                               enum CavitrajSeries which,
                                               double *out,
                                               size_t len);

// Copies |ψ|² at the final time.
//
// # Safety
// `traj` must be a live handle and `out` point to `len` writable doubles.
enum CavitrajStatus cavitraj_trajectory_final_density(const struct CavitrajTrajectory *traj,
                                                      double *out,
                                                      size_t len);

// # Safety
// `traj` must be null or a live handle, not used afterwards.
void cavitraj_trajectory_free(struct CavitrajTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAVITRAJ_H */
