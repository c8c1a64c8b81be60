/* C interface to the topoforge library. All objects are opaque and owned by the caller once
 * returned; every function reports failure through tf_status and tf_last_error(). */
#ifndef TOPOFORGE_H
#define TOPOFORGE_H

#include <stddef.h>

#if defined(_WIN32)
#define TF_API __declspec(dllexport)
#else
#define TF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tf_status {
  TF_OK = 0,
  TF_ERR_INVALID_ARGUMENT = 1,
  TF_ERR_DOMAIN = 2,
  TF_ERR_SINGULAR_GEOMETRY = 3,
  TF_ERR_SINGULAR_SYSTEM = 4,
  TF_ERR_PARSE = 5,
  TF_ERR_IO = 6,
  TF_ERR_NUMERIC = 7,
  TF_ERR_INFEASIBLE = 8,
  TF_ERR_INTERNAL = 99
} tf_status;

typedef struct tf_config tf_config;
typedef struct tf_result tf_result;

typedef struct tf_record {
  int iter;
  double compliance;
  double volume;
  int n0;
  int n1;
  double c_top0;
  double c_top1;
  int topology_active;
  int freeze_active;
  int frozen;
  double max_change;
} tf_record;

typedef struct tf_summary {
  int iterations; /* updates performed; history holds iterations + 1 records */
  double compliance;
  double volume;
  int n0;
  int n1;
  int converged;
  int topology_satisfied;
  int volume_satisfied;
} tf_summary;

typedef struct tf_analysis {
  int width;
  int height;
  int n0; /* persistence count of solid components at the threshold */
  int n1; /* enclosed void components at the threshold */
  int betti0;
  int betti1;
} tf_analysis;

typedef void (*tf_progress_fn)(const tf_record* record, void* user);

TF_API const char* tf_version(void);

/* Message of the last failure on the calling thread; empty after success. */
TF_API const char* tf_last_error(void);

TF_API tf_status tf_config_from_file(const char* path, tf_config** out);
TF_API tf_status tf_config_from_preset(const char* preset, tf_config** out);
TF_API tf_status tf_config_set(tf_config* config, const char* key, const char* value);
/* The returned text is released with tf_string_free. */
TF_API tf_status tf_config_serialize(const tf_config* config, char** text);
TF_API void tf_config_free(tf_config* config);
TF_API void tf_string_free(char* text);

/* Runs the optimization. out_dir may be NULL (no files written); progress may be NULL. */
TF_API tf_status tf_optimize(const tf_config* config, const char* out_dir, tf_progress_fn progress, void* user,
                             tf_result** out);
TF_API tf_status tf_result_summary(const tf_result* result, tf_summary* summary);
TF_API size_t tf_result_history_size(const tf_result* result);
TF_API tf_status tf_result_record(const tf_result* result, size_t index, tf_record* record);
TF_API void tf_result_free(tf_result* result);

/* Topology of a grey PGM at a density threshold. The diagram paths may be NULL. */
TF_API tf_status tf_analyze_pgm(const char* path, double threshold, const char* pd_solid_csv,
                                const char* pd_void_csv, tf_analysis* out);

#ifdef __cplusplus
}
#endif

#endif
