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

#include "trajmode/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "trajmode/architectures.hpp"
#include "trajmode/ensemble.hpp"
#include "trajmode/features.hpp"
#include "trajmode/learner.hpp"
#include "trajmode/log.hpp"
#include "trajmode/parallel.hpp"
#include "trajmode/rng.hpp"
#include "trajmode/stacking.hpp"
#include "trajmode/synthgen.hpp"

namespace trajmode {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Configuration

std::uint64_t PipelineConfig::library_seed() const { return library.master_seed.value_or(derive_seed(seed, 1)); }
std::uint64_t PipelineConfig::fold_seed() const { return ensemble.fold_seed.value_or(derive_seed(seed, 2)); }
std::uint64_t PipelineConfig::eval_seed() const { return eval.seed.value_or(derive_seed(seed, 3)); }
std::uint64_t PipelineConfig::synth_seed() const { return synth.seed.value_or(derive_seed(seed, 4)); }

namespace {

// Consumes keys from one JSON object; leftovers are reported as unknown.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(ErrorKind::usage, "config: " + where_ + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  void get(const char* key, std::string& out) {
    if (!take(key)) return;
    if (!j_.at(key).is_string()) bad(key, "a string");
    out = j_.at(key).get<std::string>();
  }
  void get(const char* key, double& out) {
    if (!take(key)) return;
    if (!j_.at(key).is_number()) bad(key, "a number");
    out = j_.at(key).get<double>();
  }
  void get(const char* key, bool& out) {
    if (!take(key)) return;
    if (!j_.at(key).is_boolean()) bad(key, "a boolean");
    out = j_.at(key).get<bool>();
  }
  template <class U>
    requires std::is_unsigned_v<U>
  void get(const char* key, U& out) {
    if (!take(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) bad(key, "a non-negative integer");
    out = static_cast<U>(v.get<std::uint64_t>());
  }
  void get(const char* key, std::int64_t& out) {
    if (!take(key)) return;
    if (!j_.at(key).is_number_integer()) bad(key, "an integer");
    out = j_.at(key).get<std::int64_t>();
  }
  template <class T>
  void get(const char* key, std::optional<T>& out) {
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      seen_.push_back(key);
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  /// Accepts `key` only when it repeats the built-in value.
  void fixed(const char* key, const json& expected) {
    if (take(key) && j_.at(key) != expected)
      fail(ErrorKind::usage, "config: " + where_ + "." + key + " is fixed at " + expected.dump());
  }

  std::optional<Section> sub(const char* key) {
    if (!take(key)) return std::nullopt;
    return Section(j_.at(key), where_ + "." + key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        fail(ErrorKind::usage, "config: unknown key " + where_ + "." + it.key());
  }

 private:
  bool take(const char* key) {
    if (!j_.contains(key)) return false;
    seen_.push_back(key);
    return !j_.at(key).is_null();
  }
  [[noreturn]] void bad(const char* key, const char* what) const {
    fail(ErrorKind::usage, "config: " + where_ + "." + key + " must be " + what);
  }

  const json& j_;
  std::string where_;
  std::vector<std::string> seen_;
};

// Training constants recorded in manifests; not configurable.
const json& fixed_training_keys() {
  static const json keys = {{"dropout", 0.5}, {"leaky_slope", 0.01}, {"optimizer", "adam(0.9, 0.999, 1e-8)"}};
  return keys;
}

template <class T>
json opt_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

json config_json(const PipelineConfig& c) {
  json j;
  j["paths"] = {{"input", c.paths.input},
                {"infrastructure", c.paths.infrastructure},
                {"output_dir", c.paths.output_dir},
                {"predict_input", c.paths.predict_input},
                {"predictions", c.paths.predictions}};
  j["segment_length"] = c.segment_length;
  j["segment_format"] = c.segment_format;
  j["bearing_mode"] = c.bearing_mode == BearingRateMode::wrap ? "wrap" : "literal";
  j["trip_breaking"] = {{"gap_s", c.trip_breaking.gap_s},
                        {"metro_radius_m", c.trip_breaking.metro_radius_m},
                        {"intersection_radius_m", c.trip_breaking.intersection_radius_m},
                        {"extended_gap_s", c.trip_breaking.extended_gap_s},
                        {"max_bridge_speed_mps", c.trip_breaking.max_bridge_speed_mps},
                        {"max_metro_travel_s", c.max_metro_travel_s}};
  j["filters"] = {{"min_points", c.filters.min_points},
                  {"max_speed", c.filters.max_speed_mps},
                  {"max_accel", c.filters.max_accel_mps2}};
  j["seed"] = c.seed;
  j["library"] = {{"size", c.library.size}, {"master_seed", c.library_seed()}, {"width_divisor", c.library.width_divisor}};
  j["training"] = {{"batch", c.training.batch},
                   {"epochs", opt_json(c.training.epochs)},
                   {"patience", c.training.patience},
                   {"learning_rate", c.training.learning_rate},
                   {"valid_fraction", c.training.valid_fraction}};
  j["training"].update(fixed_training_keys());
  j["ensemble"] = {{"method", c.ensemble.method},
                   {"k_folds", c.ensemble.k_folds},
                   {"fold_seed", c.fold_seed()},
                   {"meta_trees", c.ensemble.meta_trees},
                   {"meta_max_features", c.ensemble.meta_max_features},
                   {"meta_min_node", c.ensemble.meta_min_node}};
  j["eval"] = {{"test_fraction", c.eval.test_fraction},
               {"seed", c.eval_seed()},
               {"balance", c.eval.balance},
               {"baselines", c.eval.baselines}};
  j["synth"] = {{"trips_per_mode", c.synth.trips_per_mode},
                {"seed", c.synth_seed()},
                {"min_points", c.synth.min_points},
                {"max_points", c.synth.max_points}};
  j["jobs"] = c.jobs;
  return j;
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::usage, std::string("config: invalid JSON: ") + e.what());
  }
  PipelineConfig c;
  Section top(root, "config");
  if (auto s = top.sub("paths")) {
    s->get("input", c.paths.input);
    s->get("infrastructure", c.paths.infrastructure);
    s->get("output_dir", c.paths.output_dir);
    s->get("predict_input", c.paths.predict_input);
    s->get("predictions", c.paths.predictions);
    s->finish();
  }
  top.get("segment_length", c.segment_length);
  top.get("segment_format", c.segment_format);
  std::string bearing = "literal";
  top.get("bearing_mode", bearing);
  if (bearing == "wrap") c.bearing_mode = BearingRateMode::wrap;
  else if (bearing != "literal") fail(ErrorKind::usage, "config: bearing_mode must be literal or wrap");
  if (auto s = top.sub("trip_breaking")) {
    s->get("gap_s", c.trip_breaking.gap_s);
    s->get("metro_radius_m", c.trip_breaking.metro_radius_m);
    s->get("intersection_radius_m", c.trip_breaking.intersection_radius_m);
    s->get("extended_gap_s", c.trip_breaking.extended_gap_s);
    s->get("max_bridge_speed_mps", c.trip_breaking.max_bridge_speed_mps);
    s->get("max_metro_travel_s", c.max_metro_travel_s);
    s->finish();
  }
  if (auto s = top.sub("filters")) {
    s->get("min_points", c.filters.min_points);
    s->get("max_speed", c.filters.max_speed_mps);
    s->get("max_accel", c.filters.max_accel_mps2);
    s->finish();
  }
  top.get("seed", c.seed);
  if (auto s = top.sub("library")) {
    s->get("size", c.library.size);
    s->get("master_seed", c.library.master_seed);
    s->get("width_divisor", c.library.width_divisor);
    s->finish();
  }
  if (auto s = top.sub("training")) {
    s->get("batch", c.training.batch);
    s->get("epochs", c.training.epochs);
    s->get("patience", c.training.patience);
    s->get("learning_rate", c.training.learning_rate);
    s->get("valid_fraction", c.training.valid_fraction);
    for (auto it = fixed_training_keys().begin(); it != fixed_training_keys().end(); ++it)
      s->fixed(it.key().c_str(), it.value());
    s->finish();
  }
  if (auto s = top.sub("ensemble")) {
    s->get("method", c.ensemble.method);
    s->get("k_folds", c.ensemble.k_folds);
    s->get("fold_seed", c.ensemble.fold_seed);
    s->get("meta_trees", c.ensemble.meta_trees);
    s->get("meta_max_features", c.ensemble.meta_max_features);
    s->get("meta_min_node", c.ensemble.meta_min_node);
    s->finish();
  }
  if (auto s = top.sub("eval")) {
    s->get("test_fraction", c.eval.test_fraction);
    s->get("seed", c.eval.seed);
    s->get("balance", c.eval.balance);
    s->get("baselines", c.eval.baselines);
    s->finish();
  }
  if (auto s = top.sub("synth")) {
    s->get("trips_per_mode", c.synth.trips_per_mode);
    s->get("seed", c.synth.seed);
    s->get("min_points", c.synth.min_points);
    s->get("max_points", c.synth.max_points);
    s->finish();
  }
  top.get("jobs", c.jobs);
  top.finish();
  validate_config(c);
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::usage, "cannot read config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const PipelineConfig& config) { return config_json(config).dump(2) + "\n"; }

void validate_config(const PipelineConfig& c) {
  require(c.segment_length == 70 || c.segment_length == 120, "config: segment_length must be 70 or 120");
  require(c.segment_format == "binary" || c.segment_format == "csv", "config: segment_format must be binary or csv");
  require(c.trip_breaking.gap_s > 0 && c.trip_breaking.extended_gap_s > 0, "config: trip_breaking gaps must be positive");
  require(c.trip_breaking.metro_radius_m >= 0 && c.trip_breaking.intersection_radius_m >= 0,
          "config: trip_breaking radii must be non-negative");
  require(c.trip_breaking.max_bridge_speed_mps > 0 && c.max_metro_travel_s > 0,
          "config: trip_breaking speed and travel bounds must be positive");
  require(c.filters.min_points >= 3, "config: filters.min_points must be at least 3");
  require(c.filters.max_speed_mps > 0 && c.filters.max_accel_mps2 > 0, "config: filter bounds must be positive");
  require(c.library.size >= 6, "config: library.size must be at least 6 (models A-F come first)");
  require(c.library.width_divisor >= 1, "config: library.width_divisor must be at least 1");
  require(c.training.batch >= 1, "config: training.batch must be at least 1");
  require(!c.training.epochs || *c.training.epochs >= 1, "config: training.epochs must be at least 1");
  require(c.training.learning_rate > 0, "config: training.learning_rate must be positive");
  require(c.training.valid_fraction >= 0 && c.training.valid_fraction < 1, "config: training.valid_fraction in [0, 1)");
  const auto& m = c.ensemble.method;
  require(m == "average" || m == "majority" || m == "weights" || m == "stack" || m == "all",
          "config: ensemble.method must be average, majority, weights, stack or all");
  require(c.ensemble.k_folds >= 2, "config: ensemble.k_folds must be at least 2");
  require(c.ensemble.meta_trees >= 1 && c.ensemble.meta_max_features >= 1 && c.ensemble.meta_min_node >= 1,
          "config: meta forest parameters must be positive");
  require(c.eval.test_fraction > 0 && c.eval.test_fraction < 1, "config: eval.test_fraction must be in (0, 1)");
  require(c.synth.trips_per_mode >= 1, "config: synth.trips_per_mode must be at least 1");
  require(c.synth.min_points >= 10 && c.synth.max_points >= c.synth.min_points,
          "config: synth point range must satisfy 10 <= min_points <= max_points");
  require(c.jobs >= 1, "config: jobs must be at least 1");
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

fs::path out_dir(const PipelineConfig& c) { return fs::path(c.paths.output_dir); }
fs::path models_dir(const PipelineConfig& c) { return out_dir(c) / "models"; }
fs::path split_path(const PipelineConfig& c) { return out_dir(c) / "split.txt"; }
fs::path library_path(const PipelineConfig& c) { return out_dir(c) / "library.tsv"; }
fs::path weights_path(const PipelineConfig& c) { return out_dir(c) / "ensemble" / "weights.tsv"; }
fs::path stack_dir(const PipelineConfig& c) { return out_dir(c) / "ensemble" / "stack"; }

void need(const fs::path& p, const char* producer) {
  if (!fs::exists(p))
    fail(ErrorKind::data, "missing artifact " + p.string() + " (run `" + producer + "` first)");
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::binary);
  os << text;
  if (!os) fail(ErrorKind::data, "cannot write " + p.string());
}

void write_manifest_file(const PipelineConfig& c, const std::string& command, json body) {
  json j;
  j["command"] = command;
  j["config"] = config_json(c);
  for (auto it = body.begin(); it != body.end(); ++it) j[it.key()] = it.value();
  write_text(out_dir(c) / (command + ".json"), j.dump(2) + "\n");
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<GpsRecord> read_input(const std::string& path) {
  if (path.empty()) fail(ErrorKind::usage, "config: paths.input is not set");
  if (!fs::exists(path)) fail(ErrorKind::data, "missing input " + path);
  return read_gps_csv(path);
}

TransitInfrastructure read_infra(const PipelineConfig& c) {
  TransitInfrastructure infra;
  if (!c.paths.infrastructure.empty()) {
    if (!fs::exists(c.paths.infrastructure)) fail(ErrorKind::data, "missing infrastructure " + c.paths.infrastructure);
    infra = read_infrastructure_csv(c.paths.infrastructure);
  }
  infra.max_metro_travel_s = c.max_metro_travel_s;
  return infra;
}

std::vector<Segment> load_dataset_segments(const PipelineConfig& c) {
  need(segments_path(c), "preprocess");
  return load_segments(segments_path(c));
}

struct SplitIndices {
  std::vector<std::size_t> train, test;
};

void save_split(const fs::path& p, const SplitIndices& s) {
  std::ostringstream os;
  os << "train";
  for (auto i : s.train) os << ' ' << i;
  os << "\ntest";
  for (auto i : s.test) os << ' ' << i;
  os << '\n';
  write_text(p, os.str());
}

SplitIndices load_split(const PipelineConfig& c, std::size_t n_segments) {
  need(split_path(c), "train");
  std::ifstream is(split_path(c));
  SplitIndices s;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    auto& dst = tag == "train" ? s.train : s.test;
    if (tag != "train" && tag != "test") fail(ErrorKind::data, "malformed split file " + split_path(c).string());
    std::size_t v;
    while (ls >> v) {
      if (v >= n_segments) fail(ErrorKind::data, "split index out of range; rerun `train` after `preprocess`");
      dst.push_back(v);
    }
  }
  if (s.train.empty() || s.test.empty()) fail(ErrorKind::data, "split file has an empty partition");
  return s;
}

std::vector<NetworkCatalogEntry> load_library(const PipelineConfig& c) {
  need(library_path(c), "train");
  std::ifstream is(library_path(c));
  return read_manifest(is);
}

fs::path model_path(const PipelineConfig& c, std::size_t i) {
  return models_dir(c) / ("model_" + std::to_string(i) + ".mnet");
}

std::vector<nn::ModelFile> load_models(const PipelineConfig& c, std::size_t n) {
  std::vector<nn::ModelFile> models;
  for (std::size_t i = 0; i < n; ++i) {
    need(model_path(c, i), "train");
    models.push_back(nn::load_model(model_path(c, i).string()));
  }
  return models;
}

std::vector<std::pair<std::string, double>> load_weights(const PipelineConfig& c) {
  need(weights_path(c), "ensemble");
  std::ifstream is(weights_path(c));
  std::string line;
  std::getline(is, line);  // header
  std::vector<std::pair<std::string, double>> w;
  while (std::getline(is, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) fail(ErrorKind::data, "malformed weights file");
    w.emplace_back(line.substr(0, tab), std::stod(line.substr(tab + 1)));
  }
  return w;
}

LearnerOptions learner_options(const PipelineConfig& c) {
  LearnerOptions o;
  o.batch_size = c.training.batch;
  o.patience = c.training.patience;
  o.learning_rate = c.training.learning_rate;
  o.epochs = c.training.epochs;
  o.valid_fraction = c.training.valid_fraction;
  o.width_divisor = c.library.width_divisor;
  return o;
}

std::vector<ProbMatrix> parallel_probs(const std::vector<nn::ModelFile>& models, const std::vector<Segment>& segs,
                                       std::span<const std::size_t> idx, std::size_t jobs) {
  std::vector<ProbMatrix> out(models.size());
  parallel_for(models.size(), jobs, [&](std::size_t i) { out[i] = predict_learner(models[i], segs, idx); });
  return out;
}

std::vector<ProbMatrix> select_by_name(const std::vector<ProbMatrix>& probs,
                                       const std::vector<std::pair<std::string, double>>& weights,
                                       std::vector<double>& w_out) {
  std::vector<ProbMatrix> sel;
  for (const auto& [name, w] : weights) {
    const auto it = std::find_if(probs.begin(), probs.end(), [&](const ProbMatrix& p) { return p.learner_id == name; });
    if (it == probs.end()) fail(ErrorKind::data, "weights refer to unknown learner " + name);
    sel.push_back(*it);
    w_out.push_back(w);
  }
  return sel;
}

VoteResult majority_result(const std::vector<ProbMatrix>& probs) {
  std::vector<std::vector<int>> labels;
  for (const auto& p : probs) labels.push_back(argmax_labels(p));
  VoteResult r = average_vote(probs);
  r.labels = majority_vote(labels, probs);
  r.combined.learner_id = "majority";
  return r;
}

const char* method_title(const std::string& m) {
  if (m == "average") return "Average vote";
  if (m == "majority") return "Majority vote";
  if (m == "weights") return "Optimal weights";
  return "Stacking (RF)";
}

// Combined prediction of one method over the given segments.
VoteResult predict_with(const PipelineConfig& c, const std::string& method, const std::vector<Segment>& segs,
                        std::span<const std::size_t> idx) {
  if (method == "stack") {
    need(stack_dir(c) / "index.txt", "ensemble");
    return predict_stack(load_stack(stack_dir(c).string()), segs, idx);
  }
  const auto library = load_library(c);
  const auto probs = parallel_probs(load_models(c, library.size()), segs, idx, c.jobs);
  if (method == "average") return average_vote(probs);
  if (method == "majority") return majority_result(probs);
  std::vector<double> w;
  const auto sel = select_by_name(probs, load_weights(c), w);
  return weighted_vote(sel, w);
}

}  // namespace

std::string segments_path(const PipelineConfig& c) {
  return (out_dir(c) / (c.segment_format == "csv" ? "segments.csv" : "segments.seg")).string();
}

// ---------------------------------------------------------------------------
// Ingest

SegmentDataset build_dataset(const std::vector<GpsRecord>& records, const TransitInfrastructure& infra,
                             const PipelineConfig& c) {
  SegmentDataset ds;
  ChannelConfig ccfg;
  ccfg.bearing_mode = c.bearing_mode;
  for (const auto& stream : group_by_user(records)) {
    auto trips = break_trips(stream.points, infra, c.trip_breaking, stream.user_id);
    for (std::size_t t = 0; t < trips.size(); ++t) {
      ++ds.trips_total;
      trips[t].mode = majority_point_label(stream, trips[t]);
      const auto kept = filter_trajectory(trips[t], c.filters);
      if (!kept) {
        ++ds.trips_rejected;
        continue;
      }
      auto segs = build_segments(*kept, c.segment_length, ccfg);
      for (std::size_t s = 0; s < segs.size(); ++s) {
        const std::size_t first = s * c.segment_length;
        SegmentOrigin o{stream.user_id, t, s, kept->points[first].timestamp,
                        kept->points[first + segs[s].n_valid - 1].timestamp};
        ds.origins.push_back(std::move(o));
        ds.segments.push_back(std::move(segs[s]));
      }
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_synth(const PipelineConfig& c) {
  validate_config(c);
  if (c.paths.input.empty()) fail(ErrorKind::usage, "config: paths.input is not set (synth writes there)");
  DatasetOptions opt;
  opt.min_points = c.synth.min_points;
  opt.max_points = c.synth.max_points;
  const auto trips = generate_dataset(default_profiles(), c.synth.trips_per_mode, c.synth_seed(), opt);
  std::ostringstream os;
  write_gps_csv(os, trips);
  write_text(c.paths.input, os.str());
  std::size_t points = 0;
  for (const auto& t : trips) points += t.points.size();
  json profiles = json::array();
  for (const auto& p : default_profiles())
    profiles.push_back({{"mode", std::string(mode_name(p.mode))},
                        {"speed_mps", {p.speed_lo_mps, p.speed_hi_mps}},
                        {"accel_std_mps2", p.accel_std_mps2},
                        {"heading_change_std_deg", p.heading_change_std_deg},
                        {"stop_probability", p.stop_probability},
                        {"sample_interval_s", {p.interval_lo_s, p.interval_hi_s}}});
  write_manifest_file(c, "synth", {{"outputs", {{"gps_csv", c.paths.input}}},
                                   {"trips", trips.size()},
                                   {"points", points},
                                   {"profiles", profiles}});
  log_info("synth: wrote " + std::to_string(trips.size()) + " trips to " + c.paths.input);
}

SegmentDataset cmd_preprocess(const PipelineConfig& c) {
  validate_config(c);
  const auto records = read_input(c.paths.input);
  const auto ds = build_dataset(records, read_infra(c), c);
  if (ds.segments.empty()) fail(ErrorKind::data, "zero surviving segments in " + c.paths.input);
  fs::create_directories(out_dir(c));
  save_segments(segments_path(c), ds.segments);

  std::ostringstream meta;
  meta << "index,user_id,trip,segment,start_timestamp,end_timestamp,n_valid,label\n";
  std::array<std::size_t, kNumModes> per{};
  std::size_t unlabeled = 0;
  for (std::size_t i = 0; i < ds.segments.size(); ++i) {
    const auto& s = ds.segments[i];
    const auto& o = ds.origins[i];
    meta << i << ',' << o.user_id << ',' << o.trip << ',' << o.segment << ',' << o.start_timestamp << ','
         << o.end_timestamp << ',' << s.n_valid << ',' << (s.label ? mode_name(*s.label) : "") << '\n';
    if (s.label) ++per[static_cast<std::size_t>(mode_index(*s.label))];
    else ++unlabeled;
  }
  write_text(out_dir(c) / "segments_meta.csv", meta.str());
  json counts;
  for (int m = 0; m < kNumModes; ++m) counts[std::string(kModeNames[m])] = per[static_cast<std::size_t>(m)];
  counts["unlabeled"] = unlabeled;
  write_manifest_file(c, "preprocess", {{"outputs", {{"segments", segments_path(c)},
                                                     {"segment_origins", (out_dir(c) / "segments_meta.csv").string()}}},
                                        {"gps_points", records.size()},
                                        {"trips", ds.trips_total},
                                        {"trips_rejected", ds.trips_rejected},
                                        {"segments", ds.segments.size()},
                                        {"segments_per_mode", counts}});
  log_info("preprocess: " + std::to_string(ds.segments.size()) + " segments from " + std::to_string(ds.trips_total) +
           " trips");
  return ds;
}

void cmd_train(const PipelineConfig& c) {
  validate_config(c);
  const auto segs = load_dataset_segments(c);
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < segs.size(); ++i)
    if (segs[i].label) labeled.push_back(i);
  if (labeled.size() < segs.size())
    log_warn(std::to_string(segs.size() - labeled.size()) + " unlabeled segments ignored for training");
  if (labeled.empty()) fail(ErrorKind::data, "no labeled segments to train on");
  if (c.eval.balance) {
    const auto keep = eval::balance_classes(segment_labels(segs, labeled), derive_seed(c.eval_seed(), 1));
    std::vector<std::size_t> b;
    for (auto p : keep) b.push_back(labeled[p]);
    labeled = std::move(b);
  }
  const auto split = eval::stratified_split(segment_labels(segs, labeled), c.eval.test_fraction, c.eval_seed());
  SplitIndices s;
  for (auto p : split.train) s.train.push_back(labeled[p]);
  for (auto p : split.test) s.test.push_back(labeled[p]);

  const auto library = enumerate_library(LibraryGrid{}, c.library.size, c.library_seed());
  const auto opt = learner_options(c);
  std::vector<nn::ModelFile> models(library.size());
  std::vector<nn::TrainHistory> hist(library.size());
  parallel_for(library.size(), c.jobs, [&](std::size_t i) {
    log_info("train: " + library[i].name + " " + nn::to_string(scale_widths(library[i].spec, opt.width_divisor)));
    try {
      models[i] = fit_learner(library[i], segs, s.train, opt, 0, &hist[i]);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::diverged) fail(ErrorKind::diverged, "learner " + library[i].name + ": " + e.what());
      throw;
    }
  });

  save_split(split_path(c), s);
  {
    std::ostringstream os;
    write_manifest(os, library);
    write_text(library_path(c), os.str());
  }
  fs::create_directories(models_dir(c));
  json learners = json::array();
  for (std::size_t i = 0; i < library.size(); ++i) {
    nn::save_model(model_path(c, i).string(), models[i]);
    const auto& h = hist[i];
    const auto best = std::find_if(h.epochs.begin(), h.epochs.end(),
                                   [&](const nn::EpochRecord& r) { return r.epoch == h.best_epoch; });
    learners.push_back({{"name", library[i].name},
                        {"file", model_path(c, i).string()},
                        {"layers", nn::to_string(models[i].network.layers())},
                        {"parameters", models[i].network.params().size()},
                        {"epochs_run", h.epochs.size()},
                        {"best_epoch", h.best_epoch},
                        {"best_valid_accuracy", best == h.epochs.end() ? 0.0 : best->valid_accuracy},
                        {"stopped_early", h.stopped_early}});
  }
  write_manifest_file(c, "train", {{"outputs", {{"split", split_path(c).string()},
                                                {"library", library_path(c).string()}}},
                                   {"train_segments", s.train.size()},
                                   {"test_segments", s.test.size()},
                                   {"learners", learners}});
}

void cmd_ensemble(const PipelineConfig& c) {
  validate_config(c);
  const auto segs = load_dataset_segments(c);
  const auto split = load_split(c, segs.size());
  const auto library = load_library(c);
  const auto models = load_models(c, library.size());
  const auto& method = c.ensemble.method;
  const bool want_weights = method == "weights" || method == "all";
  const bool want_stack = method == "stack" || method == "all";
  json body;
  body["method"] = method;
  if (!want_weights && !want_stack) {
    body["fitted"] = "nothing (combiner has no parameters)";
    write_manifest_file(c, "ensemble", body);
    return;
  }

  StackingOptions so;
  so.k_folds = c.ensemble.k_folds;
  so.fold_seed = c.fold_seed();
  so.learner = learner_options(c);
  so.meta.n_trees = c.ensemble.meta_trees;
  so.meta.max_features = c.ensemble.meta_max_features;
  so.meta.min_node_size = c.ensemble.meta_min_node;
  so.meta.seed = derive_seed(c.fold_seed(), 17);
  so.jobs = c.jobs;
  const auto folds = make_folds(segs, split.train, so.k_folds, so.fold_seed);
  const auto oof = out_of_fold_probabilities(library, segs, split.train, folds, so);
  const auto y = segment_labels(segs, split.train);
  json retained = json::array();
  for (auto li : oof.learners) retained.push_back(library[li].name);
  body["retained_learners"] = retained;

  if (want_weights) {
    const auto fit = fit_optimal_weights(oof.probs, y);
    std::ostringstream os;
    os << "learner\tweight\n";
    for (std::size_t i = 0; i < fit.weights.size(); ++i)
      os << oof.probs[i].learner_id << '\t' << format_real(fit.weights[i]) << '\n';
    write_text(weights_path(c), os.str());
    body["weights"] = {{"file", weights_path(c).string()},
                       {"values", fit.weights},
                       {"oof_mse", fit.mse},
                       {"uniform_oof_mse", fit.uniform_mse},
                       {"iterations", fit.iterations}};
  }
  if (want_stack) {
    StackedModel sm;
    sm.meta = fit_meta_forest(oof, y, so);
    sm.folds = folds;
    sm.fold_seed = so.fold_seed;
    sm.segment_length = c.segment_length;
    for (auto li : oof.learners) {
      sm.library.push_back(library[li]);
      sm.base.push_back(models[li]);
    }
    fs::remove_all(stack_dir(c));
    save_stack(stack_dir(c).string(), sm);
    body["stack"] = {{"dir", stack_dir(c).string()},
                     {"meta_features", 4 * sm.base.size()},
                     {"meta_config", {{"trees", so.meta.n_trees},
                                      {"max_features", so.meta.max_features},
                                      {"min_node_size", so.meta.min_node_size},
                                      {"seed", so.meta.seed}}}};
  }
  write_manifest_file(c, "ensemble", body);
}

EvaluationResult cmd_evaluate(const PipelineConfig& c) {
  validate_config(c);
  const auto segs = load_dataset_segments(c);
  const auto split = load_split(c, segs.size());
  const auto library = load_library(c);
  const auto models = load_models(c, library.size());
  const auto y = segment_labels(segs, split.test);
  const std::string cm_method = c.ensemble.method == "all" ? "stack" : c.ensemble.method;

  EvaluationResult res;
  res.cm_method = cm_method;
  std::map<std::string, std::vector<int>> predictions;

  if (c.eval.baselines) {
    const auto xtr = handcrafted_matrix(segs, split.train);
    const auto xte = handcrafted_matrix(segs, split.test);
    const auto ytr = segment_labels(segs, split.train);
    auto dt = decision_tree_baseline(derive_seed(c.eval_seed(), 21));
    auto rf = random_forest_baseline(derive_seed(c.eval_seed(), 22));
    rf.jobs = dt.jobs = c.jobs;
    const auto pdt = forest::predict_forest(forest::train_forest(xtr, ytr, dt), xte);
    const auto prf = forest::predict_forest(forest::train_forest(xtr, ytr, rf), xte);
    res.rows.push_back({"DT", eval::accuracy(y, pdt.labels)});
    res.rows.push_back({"RF", eval::accuracy(y, prf.labels)});
  }

  const auto probs = parallel_probs(models, segs, split.test, c.jobs);
  for (const auto& p : probs) {
    const auto labels = argmax_labels(p);
    res.rows.push_back({p.learner_id, eval::accuracy(y, labels)});
  }
  predictions["average"] = average_vote(probs).labels;
  predictions["majority"] = majority_result(probs).labels;
  res.rows.push_back({method_title("average"), eval::accuracy(y, predictions["average"])});
  res.rows.push_back({method_title("majority"), eval::accuracy(y, predictions["majority"])});
  const bool need_weights = cm_method == "weights" || c.ensemble.method == "all";
  if (need_weights || fs::exists(weights_path(c))) {
    res.weights = load_weights(c);
    std::vector<double> w;
    const auto sel = select_by_name(probs, res.weights, w);
    predictions["weights"] = weighted_vote(sel, w).labels;
    res.rows.push_back({method_title("weights"), eval::accuracy(y, predictions["weights"])});
  }
  const bool need_stack = cm_method == "stack";
  if (need_stack || fs::exists(stack_dir(c) / "index.txt")) {
    need(stack_dir(c) / "index.txt", "ensemble");
    predictions["stack"] = predict_stack(load_stack(stack_dir(c).string()), segs, split.test).labels;
    res.rows.push_back({method_title("stack"), eval::accuracy(y, predictions["stack"])});
  }
  res.cm = eval::confusion_matrix(y, predictions.at(cm_method));

  std::ostringstream txt;
  eval::write_text_report(txt, res.rows, method_title(cm_method), res.cm);
  if (!res.weights.empty()) {
    txt << "\nOPTIMAL WEIGHTS\nLearner\tWeight\n";
    double sum = 0.0;
    char buf[32];
    for (const auto& [name, w] : res.weights) {
      std::snprintf(buf, sizeof buf, "%.6f", w);
      txt << name << '\t' << buf << '\n';
      sum += w;
    }
    std::snprintf(buf, sizeof buf, "%.6f", sum);
    txt << "Sum\t" << buf << '\n';
  }
  write_text(out_dir(c) / "report.txt", txt.str());
  std::ostringstream csv;
  eval::write_csv_report(csv, res.rows, res.cm);
  write_text(out_dir(c) / "report.csv", csv.str());

  std::ostringstream pc;
  pc << "segment,actual";
  for (const auto& [m, _] : predictions) pc << ',' << m;
  pc << '\n';
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    pc << split.test[i] << ',' << kModeNames[static_cast<std::size_t>(y[i])];
    for (const auto& [_, labels] : predictions) pc << ',' << kModeNames[static_cast<std::size_t>(labels[i])];
    pc << '\n';
  }
  write_text(out_dir(c) / "test_predictions.csv", pc.str());

  json acc = json::object();
  for (const auto& r : res.rows) acc[r.name] = r.accuracy;
  json weights = json::array();
  for (const auto& [name, w] : res.weights) weights.push_back({{"learner", name}, {"weight", w}});
  json features = json::array();
  for (auto n : kHandcraftedFeatureNames) features.push_back(std::string(n));
  write_manifest_file(c, "evaluate", {{"outputs", {{"report_text", (out_dir(c) / "report.txt").string()},
                                                   {"report_csv", (out_dir(c) / "report.csv").string()},
                                                   {"test_predictions", (out_dir(c) / "test_predictions.csv").string()}}},
                                      {"test_segments", split.test.size()},
                                      {"accuracy", acc},
                                      {"confusion_method", cm_method},
                                      {"weights", weights},
                                      {"baseline_features", features},
                                      {"baseline_config", {{"dt_min_node_size", 20}, {"rf_trees", 1000}}}});
  return res;
}

std::size_t cmd_predict(const PipelineConfig& c) {
  validate_config(c);
  const std::string input = c.paths.predict_input.empty() ? c.paths.input : c.paths.predict_input;
  const auto ds = build_dataset(read_input(input), read_infra(c), c);
  if (ds.segments.empty()) fail(ErrorKind::data, "zero surviving segments in " + input);
  const std::string method = c.ensemble.method == "all" ? "stack" : c.ensemble.method;
  const auto idx = all_indices(ds.segments.size());
  const auto res = predict_with(c, method, ds.segments, idx);

  std::ostringstream os;
  os << "user_id,trip,segment,start_timestamp,end_timestamp,n_valid,label";
  for (auto n : kModeNames) os << ",p_" << n;
  os << '\n';
  char buf[24];
  for (std::size_t i = 0; i < ds.segments.size(); ++i) {
    const auto& o = ds.origins[i];
    os << o.user_id << ',' << o.trip << ',' << o.segment << ',' << o.start_timestamp << ',' << o.end_timestamp << ','
       << ds.segments[i].n_valid << ',' << kModeNames[static_cast<std::size_t>(res.labels[i])];
    for (double p : res.combined.rows[i]) {
      std::snprintf(buf, sizeof buf, "%.6f", p);
      os << ',' << buf;
    }
    os << '\n';
  }
  const fs::path outp = c.paths.predictions.empty() ? out_dir(c) / "predictions.csv" : fs::path(c.paths.predictions);
  write_text(outp, os.str());
  write_manifest_file(c, "predict", {{"outputs", {{"predictions", outp.string()}}},
                                     {"input", input},
                                     {"method", method},
                                     {"segments", ds.segments.size()}});
  return ds.segments.size();
}

}  // namespace trajmode
