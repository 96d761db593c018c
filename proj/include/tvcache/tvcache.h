#ifndef TVCACHE_TVCACHE_H
#define TVCACHE_TVCACHE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(TVCACHE_BUILDING)
#    define TVC_API __declspec(dllexport)
#  else
#    define TVC_API __declspec(dllimport)
#  endif
#else
#  define TVC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tvc_status {
    TVC_OK = 0,
    TVC_ERR_INVALID_ARGUMENT = 1,
    TVC_ERR_CONFIG = 2,
    TVC_ERR_IO = 3,
    TVC_ERR_NUMERIC = 4,
    TVC_ERR_INTERNAL = 5
} tvc_status;

/* Opaque scenario handle. */
typedef struct tvc_scenario tvc_scenario;

/* Message of the last failed call on this thread; never NULL. */
TVC_API const char* tvc_last_error(void);
/* Config key of the last TVC_ERR_CONFIG on this thread, "" otherwise. */
TVC_API const char* tvc_last_error_key(void);

TVC_API const char* tvc_version(void);

TVC_API tvc_status tvc_scenario_load_file(const char* path, tvc_scenario** out);
TVC_API tvc_status tvc_scenario_load_string(const char* json_text, tvc_scenario** out);
TVC_API tvc_status tvc_scenario_load_preset(const char* name, tvc_scenario** out);
TVC_API void tvc_scenario_free(tvc_scenario* scenario);

/* Writes the preset JSON into buf (NUL-terminated). *needed receives the
   full length including the terminator; a NULL or short buffer is filled
   as far as possible. */
TVC_API tvc_status tvc_preset_json(const char* name, char* buf, size_t buf_size, size_t* needed);
/* Newline-separated preset names, same buffer protocol. */
TVC_API tvc_status tvc_preset_names(char* buf, size_t buf_size, size_t* needed);
/* Full JSON of a loaded scenario, same buffer protocol. */
TVC_API tvc_status tvc_scenario_json(const tvc_scenario* scenario, char* buf, size_t buf_size, size_t* needed);

TVC_API tvc_status tvc_scenario_set_seed(tvc_scenario* scenario, uint64_t seed);
TVC_API tvc_status tvc_scenario_set_replications(tvc_scenario* scenario, uint32_t replications);
TVC_API tvc_status tvc_scenario_set_output_dir(tvc_scenario* scenario, const char* dir);
TVC_API tvc_status tvc_scenario_set_threads(tvc_scenario* scenario, uint32_t threads);
/* Replaces the bounds grid; any NULL array leaves that axis unchanged. */
TVC_API tvc_status tvc_scenario_set_bounds_grid(tvc_scenario* scenario, const int64_t* t, size_t n_t,
                                                const int64_t* T, size_t n_T, const double* delta, size_t n_delta);

/* Replaces the sweep's cache-size list. */
TVC_API tvc_status tvc_scenario_set_cache_sizes(tvc_scenario* scenario, const uint32_t* sizes, size_t n);

TVC_API tvc_status tvc_scenario_validate(const tvc_scenario* scenario);

/* Per-strategy aggregate, as written to summary.csv. */
typedef struct tvc_summary_row {
    char strategy[64];
    uint32_t cache_size;
    double mean_offloading_loss;
    double fetching_cost;
    double downloads_per_update;
    double updates_per_replication;
    uint32_t replications;
} tvc_summary_row;

/* Runs every configured strategy and writes results.csv, updates.csv and
   summary.csv into the output directory. `rows` may be NULL; otherwise up to
   `max_rows` summaries are copied and *n_rows receives the total count. */
TVC_API tvc_status tvc_run(const tvc_scenario* scenario, tvc_summary_row* rows, size_t max_rows, size_t* n_rows);

/* Writes sweep.csv (summary schema, one row per cache size and strategy). */
TVC_API tvc_status tvc_sweep(const tvc_scenario* scenario, tvc_summary_row* rows, size_t max_rows, size_t* n_rows);

/* Writes bounds.csv. *n_rows receives the row count, *n_infeasible the
   number of infeasible grid points. Either pointer may be NULL. */
TVC_API tvc_status tvc_bounds(const tvc_scenario* scenario, size_t* n_rows, size_t* n_infeasible);

/* Stateless numeric helpers on the scenario's system parameters. */
TVC_API tvc_status tvc_g(const tvc_scenario* scenario, double pi, double* out);
TVC_API tvc_status tvc_closed_form_loss(const tvc_scenario* scenario, const double* policy, const double* profile,
                                        size_t n, double* out);
/* Minimizes the closed-form loss for `profile`; writes the policy into
   `policy_out` (length n) and the objective into *objective. */
TVC_API tvc_status tvc_optimize_policy(const tvc_scenario* scenario, const double* profile, size_t n,
                                       uint64_t seed, double* policy_out, double* objective);

#ifdef __cplusplus
}
#endif

#endif
