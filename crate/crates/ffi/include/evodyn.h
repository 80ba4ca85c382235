#ifndef EVODYN_H
#define EVODYN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EvodynStatus {
  EVODYN_STATUS_OK = 0,
  EVODYN_STATUS_NULL_POINTER = 1,
  EVODYN_STATUS_INVALID_UTF8 = 2,
  EVODYN_STATUS_CONFIG = 3,
  EVODYN_STATUS_INPUT = 4,
  EVODYN_STATUS_CONSTRUCTION = 5,
  EVODYN_STATUS_INTEGRATION = 6,
  EVODYN_STATUS_ANALYSIS = 7,
  EVODYN_STATUS_TIE = 8,
  EVODYN_STATUS_IO = 9,
  EVODYN_STATUS_OUT_OF_RANGE = 10,
  EVODYN_STATUS_PANIC = 11,
} EvodynStatus;

typedef enum EvodynGameFamily {
  // `F(x̄) = a·x̄ + b`.
  EVODYN_GAME_FAMILY_AFFINE = 0,
  // `F(x̄) = x̄ − c`.
  EVODYN_GAME_FAMILY_LINEAR_COORDINATION = 1,
} EvodynGameFamily;

typedef enum EvodynDistFamily {
  EVODYN_DIST_FAMILY_UNIFORM = 0,
  EVODYN_DIST_FAMILY_SQRT_SHIFT = 1,
  EVODYN_DIST_FAMILY_LOGISTIC = 2,
} EvodynDistFamily;

typedef enum EvodynProtocolKind {
  EVODYN_PROTOCOL_KIND_STANDARD = 0,
  EVODYN_PROTOCOL_KIND_POWER = 1,
  EVODYN_PROTOCOL_KIND_BOUNDED_POWER = 2,
} EvodynProtocolKind;

typedef enum EvodynStability {
  EVODYN_STABILITY_STABLE = 0,
  EVODYN_STABILITY_UNSTABLE = 1,
  EVODYN_STABILITY_SEMISTABLE = 2,
} EvodynStability;

typedef enum EvodynInitial {
  EVODYN_INITIAL_SORTED = 0,
  EVODYN_INITIAL_REVERSED = 1,
  EVODYN_INITIAL_RANDOM = 2,
} EvodynInitial;

typedef struct EvodynEquilibria EvodynEquilibria;

// Game, type distribution, protocol and grid size.
typedef struct EvodynModel EvodynModel;

typedef struct EvodynTrajectory EvodynTrajectory;

// Plain description of a model. Fields not used by the chosen families
// are ignored.
typedef struct EvodynModelSpec {
  enum EvodynGameFamily game;
  double a;
  double b;
  double c;
  enum EvodynDistFamily dist;
  double lo;
  double hi;
  double mu;
  double s;
  // Half-width of the truncated logistic in units of `s`; 0 selects the default.
  double tau;
  enum EvodynProtocolKind protocol;
  double k;
  double pisharp;
  // Number of grid nodes (at least 2).
  uintptr_t n;
} EvodynModelSpec;

typedef struct EvodynEquilibrium {
  double xbar;
  enum EvodynStability stability;
  double basin_lo;
  double basin_hi;
} EvodynEquilibrium;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next call into the library on this thread.
const char *evodyn_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *evodyn_version(void);

// Builds a model from a spec.
//
// # Safety
// `spec` must point to a valid spec and `out` to writable storage.
enum EvodynStatus evodyn_model_new(const struct EvodynModelSpec *spec, struct EvodynModel **out);

// Builds a model from the `[game]`, `[distribution]`, `[protocol]` and
// `[grid]` sections of a scenario file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum EvodynStatus evodyn_model_from_config(const char *path, struct EvodynModel **out);

// # Safety
// `model` must come from a model constructor, or be null.
void evodyn_model_free(struct EvodynModel *model);

// Aggregate equilibria of the model's game and distribution.
//
// # Safety
// `model` must be a live model and `out` writable.
enum EvodynStatus evodyn_equilibria_find(const struct EvodynModel *model,
                                         struct EvodynEquilibria **out);

// Number of equilibria, 0 for a null handle.
//
// # Safety
// `eq` must be a live handle or null.
uintptr_t evodyn_equilibria_len(const struct EvodynEquilibria *eq);

// # Safety
// `eq` must be a live handle and `out` writable.
enum EvodynStatus evodyn_equilibria_get(const struct EvodynEquilibria *eq,
                                        uintptr_t index,
                                        struct EvodynEquilibrium *out);

// # Safety
// `eq` must come from [`evodyn_equilibria_find`], or be null.
void evodyn_equilibria_free(struct EvodynEquilibria *eq);

// Integrates the heterogeneous dynamic from a sorted, reversed or seeded
// random composition with aggregate `xbar0`.
//
// # Safety
// `model` must be a live model and `out` writable.
enum EvodynStatus evodyn_simulate(const struct EvodynModel *model,
                                  enum EvodynInitial initial,
                                  double xbar0,
                                  double t_end,
                                  double dt,
                                  uint64_t seed,
                                  struct EvodynTrajectory **out);

// Number of recorded points, 0 for a null handle.
//
// # Safety
// `traj` must be a live handle or null.
uintptr_t evodyn_trajectory_len(const struct EvodynTrajectory *traj);

// Copies up to `capacity` points into `times` and `xbar`; `written`
// receives the number copied.
//
// # Safety
// `times` and `xbar` must hold `capacity` doubles each; `written` must be writable.
enum EvodynStatus evodyn_trajectory_copy(const struct EvodynTrajectory *traj,
                                         double *times,
                                         double *xbar,
                                         uintptr_t capacity,
                                         uintptr_t *written);

// # Safety
// `traj` must come from [`evodyn_simulate`], or be null.
void evodyn_trajectory_free(struct EvodynTrajectory *traj);

// Same as `evodyn <subcommand> --config <config> --out <out_dir>`.
// `subcommand` is one of `equilibria`, `simulate`, `critical-mass`,
// `select`, `flows`, `escape`.
//
// # Safety
// All arguments must be NUL-terminated strings.
enum EvodynStatus evodyn_run_config(const char *config,
                                    const char *subcommand,
                                    const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVODYN_H */
