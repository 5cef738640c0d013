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

#include "trajmode/trajmode.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "trajmode/channels.hpp"
#include "trajmode/eval.hpp"
#include "trajmode/geo.hpp"
#include "trajmode/learner.hpp"
#include "trajmode/log.hpp"
#include "trajmode/nn.hpp"
#include "trajmode/pipeline.hpp"

struct tm_config {
  trajmode::PipelineConfig value;
};
struct tm_segments {
  std::vector<trajmode::Segment> value;
};
struct tm_model {
  trajmode::nn::ModelFile value;
};

namespace {

thread_local std::string g_last_error;

tm_status set_error(tm_status s, const std::string& what) {
  g_last_error = what;
  return s;
}

// Runs fn, mapping exceptions to status codes.
template <class F>
tm_status guarded(F&& fn) {
  try {
    fn();
    return TM_OK;
  } catch (const trajmode::Error& e) {
    return set_error(static_cast<tm_status>(static_cast<int>(e.kind())), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(TM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(TM_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(TM_ERR_INTERNAL, "unknown failure");
  }
}

tm_status null_arg(const char* what) { return set_error(TM_ERR_USAGE, std::string(what) + " is NULL"); }

}  // namespace

extern "C" {

const char* tm_version(void) { return "1.0.0"; }
const char* tm_last_error(void) { return g_last_error.c_str(); }

const char* tm_mode_name(int mode_index) {
  if (mode_index < 0 || mode_index >= trajmode::kNumModes) return "";
  return trajmode::kModeNames[static_cast<std::size_t>(mode_index)].data();
}

tm_status tm_set_log_level(int level) {
  if (level < 0 || level > 3) return set_error(TM_ERR_USAGE, "log level must be 0..3");
  trajmode::set_log_level(static_cast<trajmode::LogLevel>(level));
  return TM_OK;
}

tm_status tm_config_default(tm_config** out) {
  if (!out) return null_arg("out");
  return guarded([&] { *out = new tm_config{}; });
}

tm_status tm_config_parse(const char* json_text, tm_config** out) {
  if (!json_text || !out) return null_arg("argument");
  return guarded([&] { *out = new tm_config{trajmode::parse_config(json_text)}; });
}

tm_status tm_config_load(const char* path, tm_config** out) {
  if (!path || !out) return null_arg("argument");
  return guarded([&] { *out = new tm_config{trajmode::load_config(path)}; });
}

void tm_config_free(tm_config* config) { delete config; }

tm_status tm_config_set_seed(tm_config* config, uint64_t seed) {
  if (!config) return null_arg("config");
  config->value.seed = seed;
  return TM_OK;
}

tm_status tm_config_set_jobs(tm_config* config, size_t jobs) {
  if (!config) return null_arg("config");
  if (jobs == 0) return set_error(TM_ERR_USAGE, "jobs must be at least 1");
  config->value.jobs = jobs;
  return TM_OK;
}

tm_status tm_config_to_json(const tm_config* config, char* buffer, size_t capacity, size_t* needed) {
  if (!config) return null_arg("config");
  return guarded([&] {
    const auto text = trajmode::config_to_json(config->value);
    if (needed) *needed = text.size() + 1;
    if (buffer && capacity > 0) {
      const auto n = std::min(capacity - 1, text.size());
      std::memcpy(buffer, text.data(), n);
      buffer[n] = '\0';
    }
  });
}

tm_status tm_run_synth(const tm_config* config) {
  if (!config) return null_arg("config");
  return guarded([&] { trajmode::cmd_synth(config->value); });
}

tm_status tm_run_preprocess(const tm_config* config, size_t* n_segments) {
  if (!config) return null_arg("config");
  return guarded([&] {
    const auto ds = trajmode::cmd_preprocess(config->value);
    if (n_segments) *n_segments = ds.segments.size();
  });
}

tm_status tm_run_train(const tm_config* config) {
  if (!config) return null_arg("config");
  return guarded([&] { trajmode::cmd_train(config->value); });
}

tm_status tm_run_ensemble(const tm_config* config) {
  if (!config) return null_arg("config");
  return guarded([&] { trajmode::cmd_ensemble(config->value); });
}

tm_status tm_run_evaluate(const tm_config* config, double* accuracy) {
  if (!config) return null_arg("config");
  return guarded([&] {
    const auto r = trajmode::cmd_evaluate(config->value);
    if (accuracy) *accuracy = trajmode::eval::precision_recall_f1(r.cm).accuracy;
  });
}

tm_status tm_run_predict(const tm_config* config, size_t* n_segments) {
  if (!config) return null_arg("config");
  return guarded([&] {
    const auto n = trajmode::cmd_predict(config->value);
    if (n_segments) *n_segments = n;
  });
}

double tm_haversine_m(double lat1, double lon1, double lat2, double lon2) {
  return trajmode::haversine_distance({0, lat1, lon1}, {0, lat2, lon2});
}

double tm_bearing_deg(double lat1, double lon1, double lat2, double lon2) {
  return trajmode::bearing({0, lat1, lon1}, {0, lat2, lon2}).degrees();
}

double tm_bearing_rate_deg(double b1, double b2, int wrap) {
  return trajmode::bearing_rate(trajmode::Angle(b1), trajmode::Angle(b2),
                                wrap ? trajmode::BearingRateMode::wrap : trajmode::BearingRateMode::literal);
}

tm_status tm_metrics_from_confusion(const uint64_t counts[16], double precision[4], double recall[4],
                                    double f_score[4], double* accuracy) {
  if (!counts) return null_arg("counts");
  return guarded([&] {
    trajmode::eval::ConfusionMatrix cm;
    for (int a = 0; a < 4; ++a)
      for (int p = 0; p < 4; ++p) cm.counts[a][p] = counts[a * 4 + p];
    const auto m = trajmode::eval::precision_recall_f1(cm);
    for (int c = 0; c < 4; ++c) {
      if (precision) precision[c] = m.per_class[c].precision;
      if (recall) recall[c] = m.per_class[c].recall;
      if (f_score) f_score[c] = m.per_class[c].f_score;
    }
    if (accuracy) *accuracy = m.accuracy;
  });
}

tm_status tm_segments_load(const char* path, tm_segments** out) {
  if (!path || !out) return null_arg("argument");
  return guarded([&] { *out = new tm_segments{trajmode::load_segments(path)}; });
}

void tm_segments_free(tm_segments* segments) { delete segments; }

size_t tm_segments_count(const tm_segments* segments) { return segments ? segments->value.size() : 0; }

size_t tm_segments_length(const tm_segments* segments) {
  return segments && !segments->value.empty() ? segments->value.front().length : 0;
}

tm_status tm_segments_get(const tm_segments* segments, size_t index, double* values, size_t capacity, int* label,
                          size_t* n_valid) {
  if (!segments) return null_arg("segments");
  if (index >= segments->value.size()) return set_error(TM_ERR_USAGE, "segment index out of range");
  const auto& s = segments->value[index];
  if (values) {
    if (capacity < s.values.size()) return set_error(TM_ERR_USAGE, "values buffer too small");
    std::memcpy(values, s.values.data(), s.values.size() * sizeof(double));
  }
  if (label) *label = s.label ? trajmode::mode_index(*s.label) : -1;
  if (n_valid) *n_valid = s.n_valid;
  return TM_OK;
}

tm_status tm_model_load(const char* path, tm_model** out) {
  if (!path || !out) return null_arg("argument");
  return guarded([&] { *out = new tm_model{trajmode::nn::load_model(path)}; });
}

void tm_model_free(tm_model* model) { delete model; }

const char* tm_model_name(const tm_model* model) { return model ? model->value.name.c_str() : ""; }

size_t tm_model_param_count(const tm_model* model) { return model ? model->value.network.num_params() : 0; }

tm_status tm_model_predict(const tm_model* model, const tm_segments* segments, size_t index, double probs[4]) {
  if (!model || !segments || !probs) return null_arg("argument");
  if (index >= segments->value.size()) return set_error(TM_ERR_USAGE, "segment index out of range");
  return guarded([&] {
    const std::size_t idx[] = {index};
    const auto pm = trajmode::predict_learner(model->value, segments->value, idx);
    for (int c = 0; c < 4; ++c) probs[c] = pm.rows[0][static_cast<std::size_t>(c)];
  });
}

}  // extern "C"
