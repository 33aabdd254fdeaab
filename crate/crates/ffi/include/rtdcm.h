#ifndef RTDCM_H
#define RTDCM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum RtdcmStatus {
  RTDCM_STATUS_OK = 0,
  RTDCM_STATUS_NULL_POINTER = 1,
  RTDCM_STATUS_INVALID_ARGUMENT = 2,
  RTDCM_STATUS_OUT_OF_BOUNDS = 3,
  RTDCM_STATUS_SOLVER_NOT_CONVERGED = 4,
  RTDCM_STATUS_CLUSTER_COUNT_MISMATCH = 5,
  RTDCM_STATUS_PARSE_ERROR = 6,
  RTDCM_STATUS_BUFFER_TOO_SMALL = 7,
  RTDCM_STATUS_INTERNAL = 8,
} RtdcmStatus;

/**
 * Manipulator geometry, material and mass parameters.
 */
typedef struct RtdcmConfig RtdcmConfig;

/**
 * Outcome of the sequential shape matcher.
 */
typedef struct RtdcmMatch RtdcmMatch;

/**
 * Equilibrium shape: base plate plus one center per disk.
 */
typedef struct RtdcmShape RtdcmShape;

/**
 * One torsion sign change. `direction` is +1 for negative-to-positive
 * and -1 for positive-to-negative.
 */
typedef struct RtdcmSignChange {
  double s_pos_mm;
  uint32_t nearest_disk;
  int32_t direction;
  double magnitude;
} RtdcmSignChange;

typedef struct RtdcmMetrics {
  double shape_rmse_cm;
  double curvature_rmse_per_cm;
  double tip_error_mm;
} RtdcmMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty after success).
 * The pointer stays valid until the next call on the same thread.
 */
const char *rtdcm_last_error(void);

/**
 * Default configuration. Release with [`rtdcm_config_free`].
 */
struct RtdcmConfig *rtdcm_config_default(void);

/**
 * Parses and validates a configuration from NUL-terminated JSON.
 *
 * # Safety
 * `json` must be a valid C string and `out` a writable pointer.
 */
enum RtdcmStatus rtdcm_config_from_json(const char *json, struct RtdcmConfig **out);

/**
 * Number of rotatable disks in the configuration (0 for null).
 *
 * # Safety
 * `config` must be null or a live handle.
 */
size_t rtdcm_config_disk_count(const struct RtdcmConfig *config);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void rtdcm_config_free(struct RtdcmConfig *config);

/**
 * Solves the equilibrium for a tendon displacement (mm) and one angle
 * (deg) per disk.
 *
 * # Safety
 * `angles_deg` must hold `n_angles` values; `out` must be writable.
 */
enum RtdcmStatus rtdcm_simulate(const struct RtdcmConfig *config,
                                double tendon_mm,
                                const double *angles_deg,
                                size_t n_angles,
                                struct RtdcmShape **out);

/**
 * Number of centers in the shape (base plate plus disks).
 *
 * # Safety
 * `shape` must be null or a live handle.
 */
size_t rtdcm_shape_center_count(const struct RtdcmShape *shape);

/**
 * Copies the centers as `x, y, z` triples into `out` (room for `capacity`
 * doubles).
 *
 * # Safety
 * `out` must hold `capacity` doubles.
 */
enum RtdcmStatus rtdcm_shape_centers(const struct RtdcmShape *shape, double *out, size_t capacity);

/**
 * # Safety
 * `shape` must be null or a handle not yet freed.
 */
void rtdcm_shape_free(struct RtdcmShape *shape);

/**
 * Torsion sign changes of a curve of `n_points` points. Writes up to
 * `capacity` entries and the total count to `n_found`.
 *
 * # Safety
 * `points` must hold `3 * n_points` doubles, `out` room for `capacity`
 * entries and `n_found` must be writable.
 */
enum RtdcmStatus rtdcm_analyze(const struct RtdcmConfig *config,
                               const double *points,
                               size_t n_points,
                               double threshold_rel,
                               struct RtdcmSignChange *out,
                               size_t capacity,
                               size_t *n_found);

/**
 * Runs the sequential matcher on a target curve.
 *
 * # Safety
 * `points` must hold `3 * n_points` doubles; `out` must be writable.
 */
enum RtdcmStatus rtdcm_match(const struct RtdcmConfig *config,
                             const double *points,
                             size_t n_points,
                             struct RtdcmMatch **out);

/**
 * Recovered tendon displacement (mm), NaN for null.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
double rtdcm_match_tendon_mm(const struct RtdcmMatch *m);

/**
 * Copies the recovered disk angles (deg) into `out`.
 *
 * # Safety
 * `out` must hold `capacity` doubles.
 */
enum RtdcmStatus rtdcm_match_angles(const struct RtdcmMatch *m, double *out, size_t capacity);

/**
 * # Safety
 * `out` must be writable.
 */
enum RtdcmStatus rtdcm_match_metrics(const struct RtdcmMatch *m, struct RtdcmMetrics *out);

/**
 * Full match report as JSON. Release with [`rtdcm_string_free`]; null on
 * failure.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
char *rtdcm_match_to_json(const struct RtdcmMatch *m);

/**
 * # Safety
 * `m` must be null or a handle not yet freed.
 */
void rtdcm_match_free(struct RtdcmMatch *m);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void rtdcm_string_free(char *s);

/**
 * DBSCAN over `n_points` points. Writes one cluster label per point
 * (-1 for noise) and the cluster count.
 *
 * # Safety
 * `points` must hold `3 * n_points` doubles, `labels` `n_points` values
 * and `n_clusters` must be writable.
 */
enum RtdcmStatus rtdcm_dbscan(const double *points,
                              size_t n_points,
                              double eps_mm,
                              size_t min_pts,
                              int64_t *labels,
                              size_t *n_clusters);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RTDCM_H */
