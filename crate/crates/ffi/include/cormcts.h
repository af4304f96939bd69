#ifndef CORMCTS_H
#define CORMCTS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  CORMCTS_OUTCOME_IN_PROGRESS = 0,
  CORMCTS_OUTCOME_SUCCESS = 1,
  CORMCTS_OUTCOME_FAILURE = 2,
} CormctsOutcome;

typedef enum {
  CORMCTS_PLANNER_CORMCTS = 0,
  CORMCTS_PLANNER_FIXED = 1,
} CormctsPlanner;

/**
 * Result code of every fallible entry point.
 */
typedef enum {
  CORMCTS_STATUS_OK = 0,
  CORMCTS_STATUS_NULL_POINTER = 1,
  CORMCTS_STATUS_INVALID_UTF8 = 2,
  CORMCTS_STATUS_PARSE_ERROR = 3,
  CORMCTS_STATUS_VALIDATION_ERROR = 4,
  CORMCTS_STATUS_PLANNER_ERROR = 5,
  CORMCTS_STATUS_IO_ERROR = 6,
  CORMCTS_STATUS_PANIC = 7,
} CormctsStatus;

/**
 * Opaque scenario handle.
 */
typedef struct CormctsScenario CormctsScenario;

/**
 * Opaque closed-loop trace handle.
 */
typedef struct CormctsTrace CormctsTrace;

/**
 * Run settings. Zero or negative numeric fields keep the scenario value.
 */
typedef struct {
  CormctsPlanner planner;
  /**
   * Used only when `use_seed` is true.
   */
  uint64_t seed;
  bool use_seed;
  size_t max_nodes;
  /**
   * Wall-clock budget per planner call in milliseconds.
   */
  double budget_ms;
  /**
   * Ignore every wall-clock limit, which makes runs reproducible.
   */
  bool node_cap_only;
  bool no_pruning;
} CormctsRunOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default options: COR-MCTS with the scenario's own settings.
 */
CormctsRunOptions cormcts_run_options_default(void);

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *cormcts_last_error(void);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
CormctsStatus cormcts_scenario_from_file(const char *path, CormctsScenario **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
CormctsStatus cormcts_scenario_from_json(const char *json, CormctsScenario **out);

/**
 * # Safety
 * `scenario` must come from a `cormcts_scenario_from_*` call and not be
 * freed twice. Null is ignored.
 */
void cormcts_scenario_free(CormctsScenario *scenario);

/**
 * Runs the scenario in closed loop. `options` may be null for defaults.
 *
 * # Safety
 * Pointers must be valid; `out` receives a trace owned by the caller.
 */
CormctsStatus cormcts_run(const CormctsScenario *scenario,
                          const CormctsRunOptions *options,
                          CormctsTrace **out);

/**
 * # Safety
 * `trace` must be a live trace handle and `out` writable.
 */
CormctsStatus cormcts_trace_outcome(const CormctsTrace *trace, CormctsOutcome *out);

/**
 * # Safety
 * `trace` must be a live trace handle and `out` writable.
 */
CormctsStatus cormcts_trace_tick_count(const CormctsTrace *trace, size_t *out);

/**
 * Serializes the trace as line-delimited JSON. Release the string with
 * [`cormcts_string_free`].
 *
 * # Safety
 * `trace` must be a live trace handle and `out` writable.
 */
CormctsStatus cormcts_trace_to_jsonl(const CormctsTrace *trace, bool include_timing, char **out);

/**
 * # Safety
 * `trace` must come from [`cormcts_run`]. Null is ignored.
 */
void cormcts_trace_free(CormctsTrace *trace);

/**
 * # Safety
 * `s` must come from this library. Null is ignored.
 */
void cormcts_string_free(char *s);

/**
 * Plans one maneuver from the scenario's initial state. `out_action`
 * receives an index into the action order reported by
 * [`cormcts_action_name`].
 *
 * # Safety
 * Pointers must be valid; `options` may be null.
 */
CormctsStatus cormcts_plan(const CormctsScenario *scenario,
                           const CormctsRunOptions *options,
                           uint32_t *out_action);

/**
 * Static name of action `index`, or null when out of range.
 */
const char *cormcts_action_name(uint32_t index);

/**
 * Upper confidence bound of a child; infinite when `node_visits` is 0.
 */
double cormcts_ucb_value(double mean_u, uint64_t parent_visits, uint64_t node_visits, double c);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CORMCTS_H */
