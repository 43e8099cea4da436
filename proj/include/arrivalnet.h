/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface to the arrival-time forecasting engine. All functions return an
 * an_status; on failure an_last_error() carries a thread-local message.
 * Handles are opaque and must be released with the matching _free call.
 * Strings returned through char** are heap-allocated; free with
 * an_string_free.
 */
#ifndef ARRIVALNET_H
#define ARRIVALNET_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum an_status {
    AN_OK = 0,
    AN_ERR_INVALID_ARGUMENT = 1,
    AN_ERR_DIMENSION = 2,
    AN_ERR_CONTRACT = 3,
    AN_ERR_CONFIG = 4,
    AN_ERR_INDEX = 5,
    AN_ERR_IO = 6,
    AN_ERR_FORMAT = 7,
    AN_ERR_INTERNAL = 8
} an_status;

/* Message for the most recent failure on this thread; never NULL. */
const char* an_last_error(void);

void an_string_free(char* s);

/* ----- configuration ----- */

typedef struct an_config an_config;

an_status an_config_create(an_config** out);                        /* defaults */
an_status an_config_from_json(const char* json, an_config** out);   /* unknown keys rejected */
an_status an_config_to_json(const an_config* cfg, char** out_json);
void an_config_free(an_config* cfg);

/* ----- datasets (JSONL of trips) ----- */

typedef struct an_dataset an_dataset;

an_status an_dataset_load(const char* path, an_dataset** out);
an_status an_dataset_save(const an_dataset* ds, const char* path);
an_status an_dataset_size(const an_dataset* ds, size_t* out_trips);
/* Count of rejected input lines from the last load (0 for simulated sets). */
an_status an_dataset_rejects(const an_dataset* ds, size_t* out_rejects);
void an_dataset_free(an_dataset* ds);

/* Synthetic delay simulator. options_json may be NULL/"{}" for defaults;
 * recognized keys mirror the simulator options (n_routes, stops_per_route,
 * days, headway_s, profile, ...). */
an_status an_simulate(const char* options_json, uint64_t seed, an_dataset** out);

/* ----- models ----- */

typedef struct an_model an_model;

/* Trains on sliding windows of the dataset. train_options_json may be
 * NULL/"{}"; recognized keys: epochs, batch_size, patience, verbose.
 * out_log_json (optional) receives per-epoch losses and split sizes. */
an_status an_train(const an_config* cfg, const an_dataset* ds, uint64_t seed,
                   const char* train_options_json, an_model** out, char** out_log_json);

an_status an_model_save(const an_model* m, const char* path);
an_status an_model_load(const char* path, an_model** out);
an_status an_model_config_json(const an_model* m, char** out_json);
void an_model_free(an_model* m);

/* Predicted delays and arrival times for every window of the dataset,
 * as a JSON array of objects. */
an_status an_predict(const an_model* m, const an_dataset* ds, char** out_json);

/* ----- evaluation ----- */

typedef struct an_report an_report;

an_status an_evaluate(const an_model* m, const an_dataset* ds, an_report** out);
/* Persistence baseline (last observed delay carried forward); the config
 * supplies the window sizes. */
an_status an_evaluate_persistence(const an_config* cfg, const an_dataset* ds, an_report** out);
an_status an_report_to_csv(const an_report* r, char** out_csv);
an_status an_report_to_json(const an_report* r, char** out_json);
void an_report_free(an_report* r);

/* Dominant periods of the delay channel for one window, as JSON. */
an_status an_inspect_periods(const an_config* cfg, const an_dataset* ds, size_t window_index,
                             char** out_json);

/* Per-link mean ground-truth vs. predicted link delay, as CSV. */
an_status an_export_link_delays(const an_model* m, const an_dataset* ds, char** out_csv);

#ifdef __cplusplus
}
#endif

#endif /* ARRIVALNET_H */
