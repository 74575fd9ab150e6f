#ifndef SOESN_H
#define SOESN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SoesnStatus {
  SOESN_STATUS_OK = 0,
  SOESN_STATUS_NULL_POINTER = 1,
  SOESN_STATUS_INVALID_INPUT = 2,
  SOESN_STATUS_DIMENSION = 3,
  SOESN_STATUS_NUMERIC = 4,
  SOESN_STATUS_UNDEFINED_METRIC = 5,
  SOESN_STATUS_IO = 6,
  SOESN_STATUS_PANIC = 7,
} SoesnStatus;

// A trained linear readout.
typedef struct SoesnReadout SoesnReadout;

// A reservoir with its weights, leak rates and current state.
typedef struct SoesnReservoir SoesnReservoir;

// Recorded states, `steps x n`, row-major.
typedef struct SoesnTrajectory SoesnTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// Valid until the next call on the same thread.
const char *soesn_last_error(void);

// Library version, a static string.
const char *soesn_version(void);

// # Safety
// `s` must be null or a string returned by this library.
void soesn_string_free(char *s);

// Largest eigenvalue modulus of the row-major `n x n` matrix `weights`.
//
// # Safety
// `weights` must point to `n * n` doubles and `out` to one.
enum SoesnStatus soesn_spectral_radius(size_t n, const double *weights, double *out);

// Reservoir from caller-supplied row-major weights, per-unit leak rates and
// initial state.
//
// # Safety
// `weights` must point to `n * n` doubles, `leak` and `state` to `n` each.
enum SoesnStatus soesn_reservoir_from_weights(size_t n,
                                              const double *weights,
                                              const double *leak,
                                              const double *state,
                                              struct SoesnReservoir **out);

// Reservoir built from a JSON topology description (fields `kind`, `n`,
// `sub_count`, `seed`, ...), scaled to `rho`, with scalar `leak` and a
// random initial state drawn from `state_seed`.
//
// # Safety
// `topology_json` must be a NUL-terminated string.
enum SoesnStatus soesn_reservoir_from_topology(const char *topology_json,
                                               double rho,
                                               double leak,
                                               uint64_t state_seed,
                                               struct SoesnReservoir **out);

// # Safety
// `r` must be a live reservoir handle.
size_t soesn_reservoir_size(const struct SoesnReservoir *r);

// Copies the current state into `out`, which has room for `capacity` values.
//
// # Safety
// `r` must be a live handle and `out` must point to `capacity` doubles.
enum SoesnStatus soesn_reservoir_state(const struct SoesnReservoir *r,
                                       double *out,
                                       size_t capacity);

// Advances the reservoir `tau` steps, recording `tau + 1` states.
//
// # Safety
// `r` must be a live handle.
enum SoesnStatus soesn_reservoir_run(struct SoesnReservoir *r,
                                     size_t tau,
                                     struct SoesnTrajectory **out);

// # Safety
// `r` must be null or a handle not yet freed.
void soesn_reservoir_free(struct SoesnReservoir *r);

// # Safety
// `t` must be a live trajectory handle.
size_t soesn_trajectory_steps(const struct SoesnTrajectory *t);

// # Safety
// `t` must be a live trajectory handle.
size_t soesn_trajectory_units(const struct SoesnTrajectory *t);

// Copies all states, row-major, into `out`.
//
// # Safety
// `t` must be a live handle and `out` must point to `capacity` doubles.
enum SoesnStatus soesn_trajectory_copy(const struct SoesnTrajectory *t,
                                       double *out,
                                       size_t capacity);

// Oscillation report over the trailing `window` steps, as JSON.
//
// # Safety
// `t` must be a live handle; `*out_json` receives a string to release with
// [`soesn_string_free`].
enum SoesnStatus soesn_trajectory_classify(const struct SoesnTrajectory *t,
                                           size_t window,
                                           char **out_json);

// # Safety
// `t` must be null or a handle not yet freed.
void soesn_trajectory_free(struct SoesnTrajectory *t);

// Ridge readout from the trajectory's states to `target`, a row-major
// `steps x dims` matrix aligned with the trajectory rows. The first
// `washout` rows are skipped.
//
// # Safety
// `t` must be a live handle and `target` must point to `steps * dims` doubles.
enum SoesnStatus soesn_readout_train(const struct SoesnTrajectory *t,
                                     const double *target,
                                     size_t steps,
                                     size_t dims,
                                     double lambda,
                                     size_t washout,
                                     struct SoesnReadout **out);

// # Safety
// `m` must be a live readout handle.
size_t soesn_readout_output_dim(const struct SoesnReadout *m);

// Readout applied to every row of `t`, written row-major to `out`.
//
// # Safety
// Both handles must be live and `out` must point to `capacity` doubles.
enum SoesnStatus soesn_readout_predict(const struct SoesnReadout *m,
                                       const struct SoesnTrajectory *t,
                                       double *out,
                                       size_t capacity);

// The trained model (`W_out`, `lambda`, `train_nrmse`) as JSON.
//
// # Safety
// `m` must be a live handle; `*out_json` receives a string to release with
// [`soesn_string_free`].
enum SoesnStatus soesn_readout_to_json(const struct SoesnReadout *m, char **out_json);

// # Safety
// `m` must be null or a handle not yet freed.
void soesn_readout_free(struct SoesnReadout *m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOESN_H */
