// Copyright 2026 The trajmode Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TRAJMODE_TRAJMODE_H_
#define TRAJMODE_TRAJMODE_H_

/* C interface to the trajmode library. Every fallible call returns a
 * tm_status; on failure tm_last_error() describes the problem for the calling
 * thread until its next failing call. Handles are opaque and owned by the
 * caller once returned; release each with its matching *_free function. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TM_API __declspec(dllexport)
#else
#define TM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tm_status {
  TM_OK = 0,
  TM_ERR_USAGE = 1,
  TM_ERR_DATA = 2,
  TM_ERR_DIVERGED = 3,
  TM_ERR_INTERNAL = 4
} tm_status;

enum { TM_NUM_MODES = 4, TM_NUM_CHANNELS = 5 };

typedef struct tm_config tm_config;
typedef struct tm_segments tm_segments;
typedef struct tm_model tm_model;

TM_API const char* tm_version(void);
TM_API const char* tm_last_error(void);
TM_API const char* tm_mode_name(int mode_index);

/* 0 quiet, 1 warnings, 2 progress, 3 debug. */
TM_API tm_status tm_set_log_level(int level);

/* ---- configuration ---- */
TM_API tm_status tm_config_default(tm_config** out);
TM_API tm_status tm_config_parse(const char* json_text, tm_config** out);
TM_API tm_status tm_config_load(const char* path, tm_config** out);
TM_API void tm_config_free(tm_config* config);
TM_API tm_status tm_config_set_seed(tm_config* config, uint64_t seed);
TM_API tm_status tm_config_set_jobs(tm_config* config, size_t jobs);
/* Writes the effective configuration as JSON. *needed receives the size
 * including the terminator; the output is truncated when capacity is short. */
TM_API tm_status tm_config_to_json(const tm_config* config, char* buffer, size_t capacity, size_t* needed);

/* ---- pipeline commands ---- */
TM_API tm_status tm_run_synth(const tm_config* config);
TM_API tm_status tm_run_preprocess(const tm_config* config, size_t* n_segments);
TM_API tm_status tm_run_train(const tm_config* config);
TM_API tm_status tm_run_ensemble(const tm_config* config);
/* accuracy receives the overall accuracy of the configured combiner. */
TM_API tm_status tm_run_evaluate(const tm_config* config, double* accuracy);
TM_API tm_status tm_run_predict(const tm_config* config, size_t* n_segments);

/* ---- geodesy (degrees, metres) ---- */
TM_API double tm_haversine_m(double lat1, double lon1, double lat2, double lon2);
TM_API double tm_bearing_deg(double lat1, double lon1, double lat2, double lon2);
/* wrap = 0: |b2 - b1|; wrap != 0: the smaller of that and 360 minus it. */
TM_API double tm_bearing_rate_deg(double b1, double b2, int wrap);

/* ---- metrics ----
 * counts is row-major 4x4, rows actual, columns predicted. Outputs are
 * fractions; any output pointer may be NULL. */
TM_API tm_status tm_metrics_from_confusion(const uint64_t counts[16], double precision[4], double recall[4],
                                           double f_score[4], double* accuracy);

/* ---- segment datasets ---- */
TM_API tm_status tm_segments_load(const char* path, tm_segments** out);
TM_API void tm_segments_free(tm_segments* segments);
TM_API size_t tm_segments_count(const tm_segments* segments);
TM_API size_t tm_segments_length(const tm_segments* segments);
/* values receives length x 5 row-major doubles; label is -1 when absent. */
TM_API tm_status tm_segments_get(const tm_segments* segments, size_t index, double* values, size_t capacity,
                                 int* label, size_t* n_valid);

/* ---- level-0 models ---- */
TM_API tm_status tm_model_load(const char* path, tm_model** out);
TM_API void tm_model_free(tm_model* model);
TM_API const char* tm_model_name(const tm_model* model);
TM_API size_t tm_model_param_count(const tm_model* model);
TM_API tm_status tm_model_predict(const tm_model* model, const tm_segments* segments, size_t index,
                                  double probs[4]);

#ifdef __cplusplus
}
#endif

#endif /* TRAJMODE_TRAJMODE_H_ */
