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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ptune/error.hpp"
#include "ptune/rng.hpp"

namespace ptune::zo {

/// Step-size and perturbation-size decay:
///   a_t = a0 / (t + 1 + A)^alpha,   c_t = c0 / (t + 1)^gamma.
struct Schedule {
  double a0 = 0.03;
  double A = 0.0;
  double alpha = 0.602;
  double c0 = 0.01;
  double gamma = 0.101;

  void validate() const;
  double learning_rate(std::size_t t) const;
  double perturbation(std::size_t t) const;

  /// Defaults with A set to 10% of the iteration budget.
  static Schedule for_iterations(std::size_t iterations);

  bool operator==(const Schedule&) const = default;
};

enum class Distribution { rademacher, segmented_uniform };

Distribution parse_distribution(const std::string& name);
std::string to_string(Distribution d);

enum class Side { plus, minus };

/// Identifies one of the 2S loss evaluations in a step.
struct Probe {
  std::size_t sample = 0;
  Side side = Side::plus;
};

/// Loss evaluated at a perturbed parameter vector. The probe tag lets callers
/// keep side outputs (such as the predictions behind each loss) per evaluation.
using ProbeLoss = std::function<double(std::span<const double>, Probe)>;

/// Adapt a plain objective.
ProbeLoss ignore_probe(std::function<double(std::span<const double>)> loss);

/// Non-finite loss at one of the perturbed points.
class EstimationError : public Error {
 public:
  EstimationError(const std::string& what, Probe probe) : Error(what), probe_(probe) {}
  Probe probe() const { return probe_; }

 private:
  Probe probe_;
};

/// rademacher: +-1. segmented_uniform: magnitude uniform on [0.5, 1.5], random sign.
std::vector<double> sample_perturbation(std::size_t dim, Distribution dist, Rng& rng);

struct SpsaSample {
  std::vector<double> gradient;
  double loss_plus = 0.0;
  double loss_minus = 0.0;
  /// The side with the smaller loss (plus on ties).
  Side winner = Side::plus;
};

/// S two-sided estimates
///   g_s = [L(phi + c D_s) - L(phi - c D_s)] / (2c) * D_s^{-1}
/// using exactly 2S loss evaluations. All perturbations are drawn before any
/// evaluation; with `workers` > 1 the evaluations run concurrently and are
/// collected by index.
std::vector<SpsaSample> spsa_gradients(const ProbeLoss& loss, std::span<const double> phi,
                                       double c, std::size_t samples, Distribution dist, Rng& rng,
                                       std::size_t workers = 1);

/// Projects each estimate off the normal plane of every other original estimate
/// it conflicts with (negative dot product), in index order. Pairs whose
/// partner is the zero vector are skipped.
std::vector<std::vector<double>> gradient_surgery(std::vector<std::vector<double>> estimates);

/// Momentum state of SPSA with gradient correction. Parameters and momentum
/// are kept as 32-bit floats so a checkpoint captures them exactly.
struct OptimizerState {
  std::size_t t = 0;
  std::vector<float> params;
  std::vector<float> momentum;
  double beta = 0.9;
  std::size_t samples = 5;
  Distribution dist = Distribution::segmented_uniform;
  bool surgery = true;
  std::size_t workers = 1;

  void validate() const;
  static OptimizerState start(std::span<const double> params);
};

struct StepReport {
  std::vector<SpsaSample> samples;
  std::vector<double> gradient;  // averaged, after surgery
  double learning_rate = 0.0;
  double perturbation = 0.0;
};

/// One update: look ahead to phi + beta m, estimate there, (optionally) apply
/// surgery, average, then m <- beta m - a_t g and phi <- phi + m. On an
/// estimation error the state is left untouched.
StepReport step(OptimizerState& state, const Schedule& schedule, const ProbeLoss& loss, Rng& rng);

}  // namespace ptune::zo
