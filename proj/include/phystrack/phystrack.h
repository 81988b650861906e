#ifndef PHYSTRACK_H
#define PHYSTRACK_H

#include <stddef.h>
#include <stdint.h>

#if defined(PHYSTRACK_BUILDING_LIBRARY)
#define PT_API __attribute__((visibility("default")))
#else
#define PT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every function returns PT_OK or an error; pt_last_error() then holds a
 * message for the calling thread until its next failing call. */
typedef enum pt_status {
  PT_OK = 0,
  PT_ERR_INVALID_ARGUMENT = 1,
  PT_ERR_DOMAIN = 2,
  PT_ERR_PARSE = 3,
  PT_ERR_IO = 4,
  PT_ERR_NUMERICAL = 5,
  PT_ERR_SEQUENCE = 6,
  PT_ERR_EVALUATION = 7,
  PT_ERR_CONFIG = 8,
  PT_ERR_ALIGNMENT = 9,
  PT_ERR_INTERNAL = 10
} pt_status;

typedef enum pt_config_kind {
  PT_CONFIG_PIPELINE = 0, /* tracker, association, noise, band, line keys */
  PT_CONFIG_SCENE = 1,
  PT_CONFIG_NOISE = 2
} pt_config_kind;

PT_API const char* pt_version(void);
PT_API const char* pt_status_string(pt_status status);
PT_API const char* pt_last_error(void);
/* Releases strings returned through char** out-parameters. */
PT_API void pt_free_string(char* s);

/* ---- configuration: an unvalidated key=value set ---------------------- */

typedef struct pt_config pt_config;

PT_API pt_status pt_config_create(pt_config** out);
PT_API void pt_config_destroy(pt_config* cfg);
/* Merges a key=value file; its keys replace existing ones. */
PT_API pt_status pt_config_load(pt_config* cfg, const char* path);
PT_API pt_status pt_config_set(pt_config* cfg, const char* key, const char* value);
/* Applies PHYSTRACK_<KEY> environment variables for the keys of `kind`. */
PT_API pt_status pt_config_apply_env(pt_config* cfg, pt_config_kind kind);
/* Checks keys and values against `kind`. */
PT_API pt_status pt_config_validate(const pt_config* cfg, pt_config_kind kind);
/* Resolved value (defaults filled in) as text; *out is freed with pt_free_string. */
PT_API pt_status pt_config_get(const pt_config* cfg, pt_config_kind kind, const char* key, char** out);

/* ---- streaming tracker ------------------------------------------------ */

typedef struct pt_camera {
  double fx, fy, cx, cy;
  double image_width, image_height;
} pt_camera;

/* Center-based head box; a = width / height. */
typedef struct pt_detection {
  double x, y, a, h;
  double confidence;
  const double* embedding; /* unit norm, or NULL */
  size_t embedding_dim;
} pt_detection;

typedef struct pt_track_output {
  int id;
  double x, y, a, h;
  int confirmed;
  int predicted; /* box from the filter, no detection this frame */
} pt_track_output;

typedef struct pt_counts {
  int left, right, total;
} pt_counts;

typedef struct pt_tracker pt_tracker;

/* cfg may be NULL for defaults. */
PT_API pt_status pt_tracker_create(const pt_config* cfg, const pt_camera* cam, pt_tracker** out);
PT_API void pt_tracker_destroy(pt_tracker* tracker);
/* Frames must strictly increase. *num_outputs receives the number of tracks
 * reported for this frame; read them with pt_tracker_output. */
PT_API pt_status pt_tracker_step(pt_tracker* tracker, int frame, const pt_detection* detections, size_t count,
                                 size_t* num_outputs);
PT_API pt_status pt_tracker_output(const pt_tracker* tracker, size_t index, pt_track_output* out);

typedef struct pt_ledger pt_ledger;

PT_API pt_status pt_ledger_create(const pt_config* cfg, pt_ledger** out);
PT_API void pt_ledger_destroy(pt_ledger* ledger);
/* Feeds the tracker's latest frame to the band counter. */
PT_API pt_status pt_ledger_observe(pt_ledger* ledger, const pt_tracker* tracker);
/* finalize != 0 applies end-of-video compensation. */
PT_API pt_status pt_ledger_counts(const pt_ledger* ledger, int finalize, pt_counts* out);

typedef struct pt_count_report {
  double mae, rmse, mape, me;
  int n;
} pt_count_report;

PT_API pt_status pt_count_metrics(const double* predicted, const double* truth, size_t n, pt_count_report* out);

/* ---- file-level operations (each writes manifest.json) ---------------- */

/* seed < 0 keeps the scene's seed. benchmark > 0 writes that many benchmark
 * scenes; scripted != 0 writes the scripted scenarios. */
PT_API pt_status pt_simulate(const pt_config* scene, const pt_config* noise, const char* out_dir, int64_t seed,
                             int benchmark, int scripted, int jobs);
/* emb may be NULL when use_appearance=false; seqinfo and counts_path may be NULL. */
PT_API pt_status pt_track(const pt_config* cfg, const char* calib, const char* det, const char* emb,
                          const char* seqinfo, const char* out, const char* counts_path, pt_counts* band_counts);
/* truth_count <= 0 reads truth_path. Either counts_path or calib must be set.
 * table_text (may be NULL) receives the aligned table. */
PT_API pt_status pt_evaluate(const pt_config* cfg, const char* gt, const char* res, int truth_count,
                             const char* truth_path, const char* counts_path, const char* calib, const char* seqinfo,
                             const char* out_dir, char** table_text);
/* Empty grids select the defaults. */
PT_API pt_status pt_sweep(const pt_config* cfg, const char* sequences, const char* out_dir, const double* starts,
                          size_t num_starts, const double* ends, size_t num_ends, int jobs, char** table_text);
/* models: comma-separated list, e.g. "cv8d,ca12d,phys3d". */
PT_API pt_status pt_benchmark(const pt_config* cfg, const char* sequences, const char* out_dir, const char* models,
                              int jobs);
PT_API pt_status pt_report(const char* runs_dir, const char* out_dir, char** table_text);
PT_API pt_status pt_rerun(const char* manifest_path);

#ifdef __cplusplus
}
#endif

#endif /* PHYSTRACK_H */
