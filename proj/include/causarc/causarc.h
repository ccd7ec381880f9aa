#ifndef CAUSARC_H
#define CAUSARC_H

/* C interface to the causarc library. Every function returns a status code;
 * on failure causarc_last_error() describes the problem for the calling
 * thread. Strings returned through char** are heap-allocated and must be
 * released with causarc_string_free(). */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum causarc_status {
  CAUSARC_OK = 0,
  CAUSARC_ERR_INVALID_ARGUMENT = 1,
  CAUSARC_ERR_IO = 2,
  CAUSARC_ERR_NUMERIC = 3, /* training aborted on a non-finite loss */
  CAUSARC_ERR_INTERNAL = 4
} causarc_status;

typedef struct causarc_config causarc_config;
typedef struct causarc_dataset causarc_dataset;
typedef struct causarc_model causarc_model;

const char* causarc_version(void);
const char* causarc_last_error(void);
void causarc_string_free(char* s);

/* ---- configuration ---- */
causarc_status causarc_config_create(causarc_config** out);
causarc_status causarc_config_load(const char* path, causarc_config** out);
causarc_status causarc_config_save(const causarc_config* cfg, const char* path);
causarc_status causarc_config_set(causarc_config* cfg, const char* key, const char* value);
causarc_status causarc_config_get(const causarc_config* cfg, const char* key, char** out_value);
/* Writes a newline-separated problem list; empty string means valid. */
causarc_status causarc_config_validate(const causarc_config* cfg, char** out_problems);
void causarc_config_free(causarc_config* cfg);

/* ---- datasets ---- */
causarc_status causarc_dataset_generate(const causarc_config* cfg, int num_samples,
                                        double sarcasm_rate, uint64_t seed, causarc_dataset** out);
causarc_status causarc_dataset_load(const char* path, causarc_dataset** out);
causarc_status causarc_dataset_save(const causarc_dataset* ds, const char* path);
/* Loads precomputed features listed in a manifest.csv. Skipped-sample
 * problems are reported through out_errors (may be NULL). */
causarc_status causarc_dataset_ingest(const char* manifest_path, causarc_dataset** out,
                                      char** out_errors);
causarc_status causarc_dataset_size(const causarc_dataset* ds, size_t* out);
void causarc_dataset_free(causarc_dataset* ds);

/* ---- models ---- */
causarc_status causarc_model_create(const causarc_config* cfg, causarc_model** out);
causarc_status causarc_model_create_for_dataset(const causarc_config* cfg,
                                                const causarc_dataset* ds, causarc_model** out);
/* Checkpoints embed the configuration, all weights and, when present, the
 * optimizer and stream state needed for bit-exact resume. */
causarc_status causarc_model_load(const char* path, causarc_model** out);
causarc_status causarc_model_save(const causarc_model* m, const char* path);
void causarc_model_free(causarc_model* m);

/* ---- training and evaluation ---- */
/* epochs <= 0 uses the configured count. out_dir may be NULL (no files).
 * Training continues from the model's optimizer state when it was loaded
 * from a mid-run checkpoint. */
causarc_status causarc_train(causarc_model* m, const causarc_dataset* ds, int epochs,
                             const char* out_dir, int plot, int verbose, char** out_report_json);
/* mode: 0 = normal, 1 = do-E (ground-truth explanation), 2 = do-F (noise). */
causarc_status causarc_evaluate(const causarc_model* m, const causarc_dataset* ds, int mode,
                                uint64_t noise_seed, char** out_report_json);
causarc_status causarc_intervention_experiment(const causarc_model* m, const causarc_dataset* ds,
                                               uint64_t noise_seed, char** out_report_json);
causarc_status causarc_export_features(const causarc_model* m, const causarc_dataset* ds,
                                       const char* out_dir);
/* Keyframe selection over a feature matrix file (CSV or CAFM binary).
 * append_time 0 broadcasts the temporal weight, 1 appends it as an extra
 * coordinate. Returns the selected frame indices as a JSON array. */
causarc_status causarc_keyframes_file(const char* features_path, int k, int candidates,
                                      double alpha, uint64_t seed, int append_time,
                                      char** out_indices_json);
/* Renders the loss curve of a report.json produced by causarc_train. */
causarc_status causarc_plot_report(const char* report_json_path, const char* svg_path);

#ifdef __cplusplus
}
#endif

#endif /* CAUSARC_H */
