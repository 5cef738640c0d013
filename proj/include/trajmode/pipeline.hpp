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

#pragma once

// End-to-end commands driven by one flat JSON configuration. Every command
// reads and writes artifacts under paths.output_dir and records the full
// effective configuration in a JSON manifest next to its outputs.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trajmode/channels.hpp"
#include "trajmode/eval.hpp"
#include "trajmode/gps_io.hpp"
#include "trajmode/trip_breaking.hpp"

namespace trajmode {

struct PipelineConfig {
  struct Paths {
    std::string input;           // labeled GPS CSV (synth writes here)
    std::string infrastructure;  // optional name,lat,lon,kind CSV
    std::string output_dir = "trajmode_out";
    std::string predict_input;   // GPS CSV to label; defaults to input
    std::string predictions;     // defaults to <output_dir>/predictions.csv
  } paths;

  std::size_t segment_length = kDefaultSegmentLength;
  std::string segment_format = "binary";  // binary | csv
  BearingRateMode bearing_mode = BearingRateMode::literal;
  TripBreakConfig trip_breaking;
  double max_metro_travel_s = 1800.0;
  FilterConfig filters;

  /// Master seed; any sub-seed left unset derives from it.
  std::uint64_t seed = 2026;

  struct Library {
    std::size_t size = 8;
    std::optional<std::uint64_t> master_seed;
    std::size_t width_divisor = 1;
  } library;

  struct Training {
    std::size_t batch = 16;
    std::optional<std::size_t> epochs;  // unset: per-model catalog value
    std::size_t patience = 5;
    double learning_rate = 1e-4;
    double valid_fraction = 0.1;
  } training;

  struct Ensemble {
    std::string method = "stack";  // average | majority | weights | stack | all
    std::size_t k_folds = 5;
    std::optional<std::uint64_t> fold_seed;
    std::size_t meta_trees = 800;
    std::size_t meta_max_features = 8;
    std::size_t meta_min_node = 1;
  } ensemble;

  struct Eval {
    double test_fraction = 0.2;
    std::optional<std::uint64_t> seed;
    bool balance = false;
    bool baselines = true;
  } eval;

  struct Synth {
    std::size_t trips_per_mode = 200;
    std::optional<std::uint64_t> seed;
    std::size_t min_points = 40;
    std::size_t max_points = 140;
  } synth;

  std::size_t jobs = 1;

  std::uint64_t library_seed() const;
  std::uint64_t fold_seed() const;
  std::uint64_t eval_seed() const;
  std::uint64_t synth_seed() const;
};

/// Parses JSON text; unknown keys and out-of-range values are usage errors.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::string& path);
/// Effective configuration with every default and derived seed spelled out.
std::string config_to_json(const PipelineConfig& config);
void validate_config(const PipelineConfig& config);

/// Segment plus where it came from.
struct SegmentOrigin {
  std::string user_id;
  std::size_t trip = 0;     // per-user trip index after breaking
  std::size_t segment = 0;  // window index within the trip
  std::int64_t start_timestamp = 0;
  std::int64_t end_timestamp = 0;
};

struct SegmentDataset {
  std::vector<Segment> segments;
  std::vector<SegmentOrigin> origins;
  std::size_t trips_total = 0;
  std::size_t trips_rejected = 0;
};

/// Ingest: group by user, break trips, label by majority point mode, filter,
/// derive channels and cut segments.
SegmentDataset build_dataset(const std::vector<GpsRecord>& records, const TransitInfrastructure& infra,
                             const PipelineConfig& config);

std::string segments_path(const PipelineConfig& config);

struct EvaluationResult {
  std::vector<eval::ReportRow> rows;
  std::string cm_method;
  eval::ConfusionMatrix cm;
  std::vector<std::pair<std::string, double>> weights;
};

// Commands. Each throws trajmode::Error on failure.
void cmd_synth(const PipelineConfig& config);
SegmentDataset cmd_preprocess(const PipelineConfig& config);
void cmd_train(const PipelineConfig& config);
void cmd_ensemble(const PipelineConfig& config);
EvaluationResult cmd_evaluate(const PipelineConfig& config);
std::size_t cmd_predict(const PipelineConfig& config);

}  // namespace trajmode
