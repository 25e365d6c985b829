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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptune/checkpoint.hpp"
#include "ptune/config.hpp"
#include "ptune/datagen.hpp"
#include "ptune/oracle.hpp"
#include "ptune/prompter.hpp"

namespace ptune {

enum class SplitName { train, val, test };
enum class EvalMode { raw, refined, posthoc };

SplitName parse_split_name(const std::string& s);
EvalMode parse_eval_mode(const std::string& s);
std::string to_string(SplitName s);
std::string to_string(EvalMode m);

/// Seed streams derived from RunConfig::seed.
namespace streams {
inline constexpr std::uint64_t kTrainData = 1;
inline constexpr std::uint64_t kTestData = 2;
inline constexpr std::uint64_t kOracleSource = 3;
inline constexpr std::uint64_t kOracleInit = 4;
inline constexpr std::uint64_t kFewShot = 5;
inline constexpr std::uint64_t kParamsInit = 6;
inline constexpr std::uint64_t kTraining = 7;
}  // namespace streams

/// Data, oracle and resized-image caches for one configuration. Building a
/// session generates (or loads) the datasets, draws the few-shot split and,
/// for a builtin oracle, fits it on clean glyphs.
class Session {
 public:
  /// `oracle` overrides the one described by the config (used by tests).
  explicit Session(const RunConfig& config, std::unique_ptr<Oracle> oracle = nullptr);

  const RunConfig& config() const { return config_; }
  const Geometry& geometry() const { return config_.geometry; }
  std::size_t num_classes() const { return num_classes_; }
  Oracle& oracle() { return *oracle_; }

  /// Resized images of a split, ready for PromptApplier::apply_resized.
  std::span<const ImageTensor> images(SplitName split) const;
  std::span<const int> labels(SplitName split) const;

  /// Oracle probabilities for prompted images, queried in chunks.
  ProbRows predict(const PromptApplier& applier, SplitName split);
  ProbRows predict(const PromptApplier& applier, SplitName split,
                   std::span<const std::size_t> indices);

 private:
  RunConfig config_;
  std::size_t num_classes_ = 0;
  std::unique_ptr<Oracle> oracle_;
  std::vector<ImageTensor> resized_[3];
  std::vector<int> labels_[3];
};

/// Query and call counts of one training run.
struct TrainStats {
  std::uint64_t queries_init = 0;   // zero-prompt pass for prototype initialization
  std::uint64_t queries_train = 0;  // 2S x batch per step
  std::uint64_t queries_eval = 0;   // periodic validation
  std::uint64_t simplex_calls = 0;  // refine / kl_kmeans / prototype updates
  std::size_t steps = 0;
  std::size_t non_finite = 0;
};

struct TrainResult {
  Checkpoint checkpoint;
  TrainStats stats;
  std::vector<nlohmann::json> metrics;  // header first, then one object per iteration
};

/// Runs (or resumes) the optimization loop. `run` may differ from the session
/// config only in training fields (iterations, schedule, spsa, loss weights,
/// use_prototypes, eval cadence, output_dir). Files are written to
/// run.output_dir unless it is empty.
TrainResult train(Session& session, const RunConfig& run,
                  const std::optional<Checkpoint>& resume = std::nullopt);

/// Convenience: builds a session from the config and trains.
TrainResult train(const RunConfig& run);

struct EvalResult {
  SplitName split = SplitName::val;
  EvalMode mode = EvalMode::refined;
  double accuracy = 0.0;
  std::vector<double> per_class;
  std::vector<std::size_t> per_class_count;
  std::size_t n = 0;

  nlohmann::json to_json() const;
};

EvalResult evaluate(Session& session, const Checkpoint& ckpt, SplitName split, EvalMode mode);

/// Accuracy of the oracle on unprompted (resized and padded) images.
EvalResult zero_prompt_accuracy(Session& session, SplitName split);

struct AblationRow {
  int variant = 0;
  std::string name;
  EvalMode mode = EvalMode::raw;
  double accuracy = 0.0;
  std::uint64_t simplex_calls = 0;
  std::uint64_t queries_train = 0;
};

/// The five cumulative variants: (1) hybrid prompting, (2) + posthoc
/// refinement, (3) + auxiliary prototypes, (4) + intra-class relation loss,
/// (5) + gradient surgery. Variant 2 reuses variant 1's training run.
std::vector<AblationRow> ablation_matrix(Session& session, const RunConfig& base,
                                         SplitName split = SplitName::test);

nlohmann::json to_json(const std::vector<AblationRow>& rows);

}  // namespace ptune
