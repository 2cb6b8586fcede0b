#ifndef NOGO_H
#define NOGO_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NogoStatus {
  NOGO_STATUS_OK = 0,
  /**
   * Malformed input or a failed structural check.
   */
  NOGO_STATUS_VALIDATION = 2,
  /**
   * The global dimension would exceed the cap.
   */
  NOGO_STATUS_CAPACITY = 3,
  NOGO_STATUS_NULL_POINTER = 10,
  NOGO_STATUS_INVALID_UTF8 = 11,
  /**
   * A requested report field was not computed.
   */
  NOGO_STATUS_MISSING = 12,
  NOGO_STATUS_PANIC = 13,
} NogoStatus;

/**
 * Which executions `nogo_analyze` runs.
 */
typedef enum NogoMode {
  NOGO_MODE_PURIFIED = 0,
  NOGO_MODE_BRANCHES = 1,
  NOGO_MODE_BOTH = 2,
} NogoMode;

/**
 * Scalar fields of a report.
 */
typedef enum NogoMetric {
  NOGO_METRIC_CONCEALMENT = 0,
  NOGO_METRIC_EPSILON = 1,
  NOGO_METRIC_ATTACK_SUCCESS = 2,
  NOGO_METRIC_GLOBAL_OVERLAP = 3,
  NOGO_METRIC_CONC_STANDARD = 4,
  NOGO_METRIC_CONC_PRIME = 5,
  NOGO_METRIC_CHEAT_PRIME = 6,
  NOGO_METRIC_NOISELESS_GAP = 7,
  NOGO_METRIC_MODE_DEVIATION = 8,
  NOGO_METRIC_PRUNED_MASS = 9,
} NogoMetric;

/**
 * Opaque analysis report.
 */
typedef struct NogoReport NogoReport;

/**
 * Opaque protocol script.
 */
typedef struct NogoScript NogoScript;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into this library on the same thread.
 */
const char *nogo_last_error_message(void);

/**
 * Parses a protocol document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum NogoStatus nogo_script_from_json(const char *json, struct NogoScript **out);

/**
 * Builds a registered demo; `use_param = false` selects its default.
 *
 * # Safety
 * `id` must be a NUL-terminated string and `out` a writable pointer.
 */
enum NogoStatus nogo_script_from_demo(const char *id,
                                      bool use_param,
                                      double param,
                                      struct NogoScript **out);

/**
 * # Safety
 * `script` must come from this library and not be used afterwards.
 */
void nogo_script_free(struct NogoScript *script);

/**
 * Analyses a script with Bob as observer. `max_dim = 0` selects the
 * default dimension cap.
 *
 * # Safety
 * `script` must be a live handle and `out` a writable pointer.
 */
enum NogoStatus nogo_analyze(const struct NogoScript *script,
                             enum NogoMode mode,
                             size_t max_dim,
                             struct NogoReport **out);

/**
 * # Safety
 * `report` must be a live handle and `value` a writable pointer.
 */
enum NogoStatus nogo_report_metric(const struct NogoReport *report,
                                   enum NogoMetric metric,
                                   double *value);

/**
 * Whether the attack succeeds at least as well as the protocol conceals.
 *
 * # Safety
 * `report` must be a live handle and `holds` a writable pointer.
 */
enum NogoStatus nogo_report_nogo_holds(const struct NogoReport *report, bool *holds);

/**
 * Canonical JSON for a report; free with [`nogo_string_free`].
 *
 * # Safety
 * `report` must be a live handle and `out` a writable pointer.
 */
enum NogoStatus nogo_report_to_json(const struct NogoReport *report, char **out);

/**
 * # Safety
 * `report` must come from this library and not be used afterwards.
 */
void nogo_report_free(struct NogoReport *report);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void nogo_string_free(char *s);

/**
 * Writes `(b0, b1, c, x ⊕ b_c)` to `out[0..4]`.
 *
 * # Safety
 * `out` must point to four writable bytes.
 */
enum NogoStatus nogo_ot_gate(uint8_t b0, uint8_t b1, uint8_t choice, uint8_t x, uint8_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NOGO_H */
