/* C interface to the compact-storage policy library and simulator.
 *
 * Every function returns an rcs_status. On failure the message is available
 * from rcs_last_error() on the same thread until the next call. Strings
 * handed out through char** parameters are owned by the caller and released
 * with rcs_string_free(). Handles are released with their _free function;
 * passing NULL to any _free function is a no-op.
 */
#ifndef RCS_RCS_H
#define RCS_RCS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define RCS_API __declspec(dllexport)
#else
#define RCS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rcs_status {
  RCS_OK = 0,
  RCS_E_VALIDATION = 1, /* rejected input (config, scenario, arguments) */
  RCS_E_DOMAIN = 2,     /* value outside a function's domain */
  RCS_E_CAPACITY = 3,   /* grid cannot hold the bins */
  RCS_E_PARSE = 4,      /* malformed JSON or CSV */
  RCS_E_IO = 5,         /* file system error */
  RCS_E_DEADLOCK = 6,   /* simulation could not make progress */
  RCS_E_ARGUMENT = 7,   /* NULL or otherwise unusable argument */
  RCS_E_INTERNAL = 8
} rcs_status;

typedef struct rcs_config rcs_config;
typedef struct rcs_run rcs_run;
typedef struct rcs_batch rcs_batch;

RCS_API const char* rcs_version(void);
RCS_API const char* rcs_status_name(rcs_status status);
RCS_API const char* rcs_last_error(void);
RCS_API void rcs_string_free(char* s);

/* Configuration */
RCS_API rcs_status rcs_config_default(rcs_config** out);
RCS_API rcs_status rcs_config_parse(const char* json, rcs_config** out);
RCS_API rcs_status rcs_config_load(const char* path, rcs_config** out);
/* Normalized JSON: every key present in a fixed order. */
RCS_API rcs_status rcs_config_to_json(const rcs_config* config, char** out);
/* policy: "lcp", "delayed" or "immediate". */
RCS_API rcs_status rcs_config_set_policy(rcs_config* config, const char* policy);
RCS_API rcs_status rcs_config_set_seed(rcs_config* config, uint64_t seed);
RCS_API rcs_status rcs_config_set_randomization(rcs_config* config, int percent);
RCS_API rcs_status rcs_config_set_horizon_requests(rcs_config* config, uint64_t requests);
RCS_API rcs_status rcs_config_set_horizon_hours(rcs_config* config, double hours);
RCS_API void rcs_config_free(rcs_config* config);

/* Optimal layout as JSON: chosen empty level, expected cost per candidate
 * empty level and the optimal configuration matrix (rows = layers). */
RCS_API rcs_status rcs_solve(const rcs_config* config, char** out_json);

/* Single simulation run with the config's policy, seed and randomization. */
RCS_API rcs_status rcs_simulate(const rcs_config* config, rcs_run** out);
RCS_API rcs_status rcs_run_events(const rcs_run* run, char** out_ndjson);
RCS_API rcs_status rcs_run_bundle_json(const rcs_run* run, char** out_json);
/* Writes events.ndjson, bundle.json and one CSV per metric into dir. */
RCS_API rcs_status rcs_run_write(const rcs_run* run, const char* dir);
RCS_API void rcs_run_free(rcs_run* run);

/* Every (policy, randomization, seed) cell of the config's batch section. */
RCS_API rcs_status rcs_batch_run(const rcs_config* config, rcs_batch** out);
RCS_API size_t rcs_batch_bundle_count(const rcs_batch* batch);
RCS_API size_t rcs_batch_failure_count(const rcs_batch* batch);
RCS_API rcs_status rcs_batch_aggregate_csv(const rcs_batch* batch, char** out_csv);
RCS_API rcs_status rcs_batch_write(const rcs_batch* batch, const char* dir);
RCS_API void rcs_batch_free(rcs_batch* batch);

/* Compares the bundle JSON files in dir against the reference policy. */
RCS_API rcs_status rcs_compare_dir(const char* dir, const char* reference, char** out_csv);

/* Placement-cost lookup table for heights 0..height-1, columns 1..max_layer. */
RCS_API rcs_status rcs_lut_csv(int height, int max_layer, char** out_csv);
/* Gripper cost of retrieving a bin at `layer` with `empty_level` empty
 * cells above every occupied stack. */
RCS_API rcs_status rcs_retrieval_cost(int layer, int empty_level, int64_t* out);
RCS_API rcs_status rcs_expected_transform_requests(const double* p, size_t n, double* out);

#ifdef __cplusplus
}
#endif

#endif /* RCS_RCS_H */
