#ifndef MRSK_H
#define MRSK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MrskStatus {
  MRSK_STATUS_OK = 0,
  MRSK_STATUS_INVALID_ARGUMENT = 1,
  MRSK_STATUS_CAP_EXCEEDED = 2,
  MRSK_STATUS_NULL_POINTER = 3,
  MRSK_STATUS_UNSUPPORTED = 4,
  MRSK_STATUS_PANIC = 5,
} MrskStatus;

/**
 * Numeric scenario settings.
 */
typedef enum MrskParam {
  MRSK_PARAM_BIT_TIME = 0,
  MRSK_PARAM_REFERENCE_COUNT = 1,
  MRSK_PARAM_DISTANCE = 2,
  MRSK_PARAM_OMEGA = 3,
  MRSK_PARAM_MOLECULE_TYPES = 4,
  MRSK_PARAM_BITS_PER_RATIO = 5,
  MRSK_PARAM_RADIUS = 6,
  MRSK_PARAM_DIFFUSION = 7,
  MRSK_PARAM_MEMORY = 8,
} MrskParam;

typedef enum MrskDetector {
  MRSK_DETECTOR_FTD = 0,
  MRSK_DETECTOR_ADMC = 1,
  MRSK_DETECTOR_MLSD = 2,
} MrskDetector;

typedef enum MrskCoding {
  MRSK_CODING_BINARY = 0,
  MRSK_CODING_GRAY = 1,
} MrskCoding;

typedef enum MrskEngine {
  MRSK_ENGINE_STATISTICAL = 0,
  MRSK_ENGINE_BINOMIAL = 1,
  MRSK_ENGINE_PARTICLE = 2,
} MrskEngine;

/**
 * Opaque link scenario.
 */
typedef struct MrskScenario MrskScenario;

/**
 * Monte Carlo result with its 95% confidence interval.
 */
typedef struct MrskBerEstimate {
  uint64_t errors;
  uint64_t bits;
  double ber;
  double ci_low;
  double ci_high;
  uint64_t degenerate_frames;
} MrskBerEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * The pointer stays valid until the next call from the same thread.
 */
const char *mrsk_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *mrsk_version(void);

/**
 * Creates a scenario with the default parameters.
 *
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
enum MrskStatus mrsk_scenario_new(struct MrskScenario **out);

/**
 * Releases a scenario; null is ignored.
 *
 * # Safety
 * `s` must be null or a handle from [`mrsk_scenario_new`] not yet freed.
 */
void mrsk_scenario_free(struct MrskScenario *s);

/**
 * Sets one numeric parameter. The scenario is unchanged on failure.
 *
 * # Safety
 * `s` must be null or a live handle.
 */
enum MrskStatus mrsk_scenario_set(struct MrskScenario *s, enum MrskParam param, double value);

/**
 * # Safety
 * `s` must be null or a live handle.
 */
enum MrskStatus mrsk_scenario_set_detector(struct MrskScenario *s, enum MrskDetector detector);

/**
 * # Safety
 * `s` must be null or a live handle.
 */
enum MrskStatus mrsk_scenario_set_coding(struct MrskScenario *s, enum MrskCoding coding);

/**
 * Closed-form BER of fixed-threshold detection.
 *
 * # Safety
 * `s` must be null or a live handle; `out` null or writable.
 */
enum MrskStatus mrsk_ftd_ber(const struct MrskScenario *s, double *out);

/**
 * Monte Carlo BER with the scenario's detector.
 *
 * # Safety
 * `s` must be null or a live handle; `out` null or writable.
 */
enum MrskStatus mrsk_simulate(const struct MrskScenario *s,
                              uint64_t n_bits,
                              uint64_t seed,
                              enum MrskEngine engine,
                              struct MrskBerEstimate *out);

/**
 * Fraction of released molecules absorbed by time `t`.
 *
 * # Safety
 * `s` must be null or a live handle; `out` null or writable.
 */
enum MrskStatus mrsk_hit_fraction(const struct MrskScenario *s, double t, double *out);

/**
 * Solid-approximation CDF of a ratio of Gaussians with shape `p`, `q`, `r`.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum MrskStatus mrsk_solid_cdf(double eta0, double p, double q, double r, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MRSK_H */
