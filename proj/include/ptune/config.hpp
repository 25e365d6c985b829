// Copyright 2026 The Prompt Tuner Authors
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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptune/objective.hpp"
#include "ptune/prompter.hpp"
#include "ptune/zo_optim.hpp"

namespace ptune {

struct OracleSpec {
  std::string kind = "builtin";  // builtin | remote
  std::size_t source_per_class = 60;
  std::size_t fit_iterations = 300;
  double fit_step = 2.0;
  std::size_t downsample = 16;
  std::string endpoint;
  std::size_t max_in_flight = 4;

  bool operator==(const OracleSpec&) const = default;
};

struct DatasetSpec {
  std::string kind = "biased";  // biased | loc | idx
  double rho = 0.9;
  std::string ratio = "1:1";
  std::size_t n_per_class = 40;
  std::size_t test_per_class = 40;
  std::string idx_images;
  std::string idx_labels;
  std::string idx_test_images;
  std::string idx_test_labels;

  bool operator==(const DatasetSpec&) const = default;
};

struct SpsaSpec {
  std::size_t samples = 5;
  double beta = 0.9;
  std::string dist = "segmented_uniform";
  bool gradient_surgery = true;
  std::size_t workers = 1;

  bool operator==(const SpsaSpec&) const = default;
};

/// Everything a run depends on. `seed` fixes data generation, oracle fitting,
/// few-shot sampling, initialization and perturbations.
struct RunConfig {
  Geometry geometry{224, 224, 0, 0, 56, 56, 3};  // resized 0: pick from the data
  DecoderConfig decoder;
  OracleSpec oracle;
  DatasetSpec dataset;
  std::size_t shots_train = 16;
  std::size_t shots_val = 4;
  std::size_t iterations = 200;
  std::size_t batch_size = 0;  // 0: full train set if K * shots <= 512, else 128
  zo::Schedule schedule{0.03, -1.0, 0.602, 0.01, 0.101};  // A < 0: 10% of iterations
  SpsaSpec spsa;
  bool use_prototypes = true;
  objective::LossWeights loss_weights;
  std::size_t eval_every = 50;
  std::string eval_mode = "refined";
  std::uint64_t seed = 0;
  std::string output_dir = "run";
  std::size_t query_chunk = 32;

  bool operator==(const RunConfig&) const = default;

  /// Throws ConfigError on inconsistent values.
  void validate() const;

  /// Schedule with A resolved.
  zo::Schedule resolved_schedule() const;
};

nlohmann::json to_json(const RunConfig& config);

/// Reads a (possibly partial) config; missing keys keep their defaults,
/// unknown keys and type mismatches raise ConfigError.
RunConfig config_from_json(const nlohmann::json& j);

RunConfig load_config(const std::filesystem::path& path);

/// Applies "a.b.c=value". The value is parsed as JSON when possible, else
/// taken as a string, and must match the type of the existing field.
void apply_override(nlohmann::json& config, const std::string& assignment);

/// Defaults + file + overrides + PROMPT_TUNER_SEED, validated.
RunConfig resolve_config(const nlohmann::json& base, const std::vector<std::string>& overrides);

}  // namespace ptune
