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

// Command-line front end. Talks to the library only through the C interface.

#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "trajmode/trajmode.h"

namespace {

struct Options {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<size_t> jobs;
  bool verbose = false;
  bool quiet = false;
};

int report(tm_status s) {
  if (s != TM_OK) std::fprintf(stderr, "trajmode: %s\n", tm_last_error());
  return static_cast<int>(s);
}

tm_status open_config(const Options& o, tm_config** cfg) {
  tm_status s = o.config.empty() ? tm_config_default(cfg) : tm_config_load(o.config.c_str(), cfg);
  if (s == TM_OK && o.seed) s = tm_config_set_seed(*cfg, *o.seed);
  if (s == TM_OK && o.jobs) s = tm_config_set_jobs(*cfg, *o.jobs);
  return s;
}

int run(const std::string& name, const Options& o) {
  tm_set_log_level(o.quiet ? 0 : (o.verbose ? 2 : 1));
  tm_config* cfg = nullptr;
  tm_status s = open_config(o, &cfg);
  if (s == TM_OK) {
    size_t n = 0;
    double acc = 0.0;
    if (name == "synth") {
      s = tm_run_synth(cfg);
    } else if (name == "preprocess") {
      s = tm_run_preprocess(cfg, &n);
      if (s == TM_OK) std::printf("%zu segments\n", n);
    } else if (name == "train") {
      s = tm_run_train(cfg);
    } else if (name == "ensemble") {
      s = tm_run_ensemble(cfg);
    } else if (name == "evaluate") {
      s = tm_run_evaluate(cfg, &acc);
      if (s == TM_OK) std::printf("accuracy %.1f%%\n", 100.0 * acc);
    } else if (name == "predict") {
      s = tm_run_predict(cfg, &n);
      if (s == TM_OK) std::printf("%zu segments labeled\n", n);
    }
  }
  tm_config_free(cfg);
  return report(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transportation-mode inference from GPS trajectories"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* a) {
    a->add_option("--config", o.config, "JSON configuration file");
    a->add_option("--seed", o.seed, "Master seed (overrides the config)");
    a->add_option("--jobs", o.jobs, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
    a->add_flag("-v,--verbose", o.verbose, "Progress logging");
    a->add_flag("-q,--quiet", o.quiet, "Errors only");
  };
  add_common(&app);
  const char* commands[][2] = {
      {"synth", "Write a seeded synthetic labeled GPS CSV to paths.input"},
      {"preprocess", "Break trips, filter, and cut segments"},
      {"train", "Split the data and train the level-0 library"},
      {"ensemble", "Fit the configured level-1 combiner"},
      {"evaluate", "Write accuracy and confusion-matrix reports"},
      {"predict", "Label an unlabeled GPS CSV"},
  };
  for (const auto& c : commands) add_common(app.add_subcommand(c[0], c[1]));
  app.fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return TM_ERR_USAGE;
  }
  for (auto* sub : app.get_subcommands()) return run(sub->get_name(), o);
  return TM_ERR_USAGE;
}
