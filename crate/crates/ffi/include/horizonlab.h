#ifndef HORIZONLAB_H
#define HORIZONLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum HlStatus {
  HL_STATUS_OK = 0,
  HL_STATUS_NULL_POINTER = 1,
  HL_STATUS_INVALID_ARGUMENT = 2,
  /*
   Parse or validation failure of a scenario.
   */
  HL_STATUS_CONFIG = 3,
  /*
   A numerical routine failed or an experiment missed its criterion.
   */
  HL_STATUS_NUMERICAL = 4,
  HL_STATUS_IO = 5,
  /*
   A Rust panic was caught at the boundary.
   */
  HL_STATUS_PANIC = 6,
} HlStatus;

/*
 Ergosphere and horizons of a metric.
 */
typedef struct HlHorizonReport HlHorizonReport;

/*
 A spacetime metric.
 */
typedef struct HlMetric HlMetric;

/*
 Wave solver on a polar annulus.
 */
typedef struct HlSolver HlSolver;

/*
 One horizon of a report.
 */
typedef struct HlCycle {
  double fixed_r;
  /*
   `+1` for the plus family, `-1` for the minus family.
   */
  int32_t family;
  /*
   `1` black hole, `2` white hole, `0` unclassified.
   */
  int32_t kind;
  /*
   Sign margin of the classification, NaN when unclassified.
   */
  double margin;
} HlCycle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Last error message of this thread, or null. The pointer stays valid
 until the next failing call on the same thread.
 */
const char *hl_last_error(void);

/*
 Library version as a static string.
 */
const char *hl_version(void);

/*
 Releases a string returned by this library.

 # Safety
 `s` must come from this library and not be freed twice.
 */
void hl_string_free(char *s);

/*
 Acoustic metric of the vortex `(A/r) r_hat + (B/r) theta_hat`.

 # Safety
 `out` must be a valid pointer.
 */
enum HlStatus hl_metric_vortex(double a, double b, struct HlMetric **out);

/*
 Metric of a scenario given as a built-in name, a file path, or TOML
 text.

 # Safety
 `scenario` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HlStatus hl_metric_from_scenario(const char *scenario, struct HlMetric **out);

/*
 # Safety
 `m` must come from this library and not be freed twice.
 */
void hl_metric_free(struct HlMetric *m);

/*
 Writes the 3x3 components `g^{jk}(x, y)` row-major into `out`.

 # Safety
 `m` must be a live handle and `out` must hold 9 doubles.
 */
enum HlStatus hl_metric_eval(const struct HlMetric *m, double x, double y, double *out);

/*
 Determinant of the spatial block; negative inside the ergoregion.

 # Safety
 `m` must be a live handle and `out` a valid pointer.
 */
enum HlStatus hl_metric_spatial_det(const struct HlMetric *m, double x, double y, double *out);

/*
 Ergosphere and classified horizons in the annulus `[r_min, r_max]`.

 # Safety
 `m` must be a live handle and `out` a valid pointer.
 */
enum HlStatus hl_horizon_report(const struct HlMetric *m,
                                double r_min,
                                double r_max,
                                struct HlHorizonReport **out);

/*
 # Safety
 `r` must come from this library and not be freed twice.
 */
void hl_report_free(struct HlHorizonReport *r);

/*
 Mean radius of the ergosphere locus.

 # Safety
 `r` must be a live handle and `out` a valid pointer.
 */
enum HlStatus hl_report_ergosphere_radius(const struct HlHorizonReport *r, double *out);

/*
 # Safety
 `r` must be a live handle and `out` a valid pointer.
 */
enum HlStatus hl_report_cycle_count(const struct HlHorizonReport *r, uintptr_t *out);

/*
 # Safety
 `r` must be a live handle and `out` a valid pointer.
 */
enum HlStatus hl_report_cycle(const struct HlHorizonReport *r,
                              uintptr_t index,
                              struct HlCycle *out);

/*
 Report as a JSON string; release it with [`hl_string_free`].

 # Safety
 `r` must be a live handle and `out` a valid pointer.
 */
enum HlStatus hl_report_to_json(const struct HlHorizonReport *r, char **out);

/*
 Wave solver for `m` on an `nr x ntheta` annular grid with default
 settings and zero initial data.

 # Safety
 `m` must be a live handle and `out` a valid pointer.
 */
enum HlStatus hl_solver_new(const struct HlMetric *m,
                            uintptr_t nr,
                            uintptr_t ntheta,
                            double r_min,
                            double r_max,
                            struct HlSolver **out);

/*
 # Safety
 `s` must come from this library and not be freed twice.
 */
void hl_solver_free(struct HlSolver *s);

/*
 Resets the state to a Gaussian displacement pulse at `(cx, cy)`.

 # Safety
 `s` must be a live handle.
 */
enum HlStatus hl_solver_set_pulse(struct HlSolver *s,
                                  double cx,
                                  double cy,
                                  double width,
                                  double amplitude);

/*
 Advances to `t_end`, recording energy every `record_interval`.

 # Safety
 `s` must be a live handle.
 */
enum HlStatus hl_solver_advance(struct HlSolver *s, double t_end, double record_interval);

/*
 Current time and total and exterior energies.

 # Safety
 `s` must be a live handle; output pointers may be null.
 */
enum HlStatus hl_solver_energy(const struct HlSolver *s,
                               double *t,
                               double *total,
                               double *exterior);

/*
 Copies the field `u` (ring-major, `(nr + 1) * ntheta` values) into
 `buf`. `written` receives the field length even when `len` is too
 small, in which case nothing is copied.

 # Safety
 `s` must be a live handle, `buf` must hold `len` doubles and `written`
 must be valid.
 */
enum HlStatus hl_solver_field(const struct HlSolver *s,
                              double *buf,
                              uintptr_t len,
                              uintptr_t *written);

/*
 Runs a scenario command (`horizon`, `wave`, ...; null selects the
 scenario's default) and writes its artifacts under `out_dir`.

 # Safety
 `scenario` and `out_dir` must be NUL-terminated strings; `command` may
 be null.
 */
enum HlStatus hl_run_scenario(const char *scenario, const char *command, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HORIZONLAB_H */
