/*
 * interceptsim — C interface to the augmented-LLM serving simulator.
 *
 * All objects are opaque handles created and destroyed through this API.
 * Functions returning isim_status report failures through the return code;
 * isim_last_error() gives a thread-local human-readable message for the most
 * recent failure on the calling thread. Strings returned through `char**`
 * outputs are owned by the caller and released with isim_string_free().
 *
 * Handles are immutable after creation, so sharing them across threads for
 * concurrent isim_run() calls is safe.
 */
#ifndef INTERCEPTSIM_H
#define INTERCEPTSIM_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct isim_trace isim_trace;
typedef struct isim_model isim_model;
typedef struct isim_result isim_result;

typedef enum isim_status {
  ISIM_OK = 0,
  ISIM_ERR_INVALID_ARG = 1,
  ISIM_ERR_CONFIG = 2,
  ISIM_ERR_IO = 3,
  ISIM_ERR_PARSE = 4,
  ISIM_ERR_VALIDATION = 5,
  ISIM_ERR_FIT = 6,
  ISIM_ERR_SIM = 7,
  ISIM_ERR_UNDEFINED_METRIC = 8,
  ISIM_ERR_INTERNAL = 9
} isim_status;

uint32_t isim_abi_version(void);
const char* isim_status_name(isim_status status);
const char* isim_last_error(void);
void isim_string_free(char* s);

/* --- traces ------------------------------------------------------------- */

/*
 * workload_json:
 * {
 *   "classes": [{"name":"Chatbot","weight":0.5, ...stat overrides}, ...],
 *   "request_count": 1000, "arrival_rate": 1.5, "seed": 7,
 *   "max_seq_len": 4096
 * }
 * Classes named Math/QA/VE/Chatbot/Image/TTS inherit built-in statistics;
 * any field may be overridden. Omitted weights split the remainder evenly.
 */
isim_status isim_trace_generate(const char* workload_json, isim_trace** out);
isim_status isim_trace_load(const char* path, isim_trace** out);
isim_status isim_trace_save(const isim_trace* trace, const char* path);
int64_t isim_trace_request_count(const isim_trace* trace);
/* Empirical per-class statistics (means/variances) as JSON. */
isim_status isim_trace_stats_json(const isim_trace* trace, char** out_json);
void isim_trace_free(isim_trace* trace);

/* --- cost models --------------------------------------------------------- */

isim_status isim_model_default(isim_model** out);
isim_status isim_model_from_json(const char* json_text, isim_model** out);
isim_status isim_model_load(const char* path, isim_model** out);
/*
 * Fit the forward-time curve from a `batch_tokens,seconds` CSV. base_json
 * (optional, may be NULL) supplies the non-fitted fields (memory, swap,
 * capacities); fitted t0/slopes/saturation point replace the base values.
 */
isim_status isim_model_fit_csv(const char* csv_path, const char* base_json, isim_model** out);
isim_status isim_model_to_json(const isim_model* model, char** out_json);
isim_status isim_model_save(const isim_model* model, const char* path);
double isim_model_t_fwd(const isim_model* model, double batch_tokens);
double isim_model_t_swap(const isim_model* model, double tokens);
void isim_model_free(isim_model* model);

/* --- simulation ----------------------------------------------------------- */

/*
 * run_json:
 * {
 *   "policy": "vanilla-discard|improved-discard|preserve|swap|infercept",
 *   "estimator": "oracle|profiled|dynamic",
 *   "max_sim_seconds": 86400,
 *   "event_log": "path.jsonl",          // optional per-iteration log
 *   "dump_ledger_every": 0,             // ledger snapshots into the event log
 *   "collect_iterations": false,        // keep per-iteration records in memory
 *   "check_invariants": false,
 *   // expert knobs for ablations:
 *   "chunked_recompute": bool, "budgeted_swap": bool,
 *   "preserve_mode": "never|heuristic|min-waste", "heuristic_threshold": 1.0
 * }
 */
isim_status isim_run(const isim_trace* trace, const isim_model* model, const char* run_json,
                     isim_result** out);

isim_status isim_result_summary_json(const isim_result* result, char** out_json);
isim_status isim_result_write_requests_csv(const isim_result* result, const char* path);
/*
 * Scalar metrics by name: norm_latency, throughput, ttft, waste_pct,
 * recompute_fraction, waste_preserve_gb_min, waste_recompute_gb_min,
 * waste_stall_gb_min, waste_total_gb_min, completed, requests, incomplete,
 * sim_wall, iterations. Metrics undefined for the run (e.g. norm_latency with
 * zero completions) return ISIM_ERR_UNDEFINED_METRIC.
 */
isim_status isim_result_metric(const isim_result* result, const char* name, double* out_value);
void isim_result_free(isim_result* result);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* INTERCEPTSIM_H */
