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

#include <array>
#include <cmath>
#include <vector>

#include "ptune/rng.hpp"
#include "ptune/zo_optim.hpp"

namespace testing {

inline constexpr std::array<double, 2> kTarget{0.0, 0.0};
inline constexpr std::uint64_t kTrajectorySeed = 2024;
inline constexpr std::size_t kTrajectorySteps = 300;

inline double quadratic(std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - kTarget[i]) * (x[i] - kTarget[i]);
  return s;
}

// SPSA-GC at default settings on ||x - x*||^2 from (3, 3); returns the iterate
// after every step.
inline std::vector<std::array<float, 2>> quadratic_trajectory(std::uint64_t seed,
                                                              std::size_t steps = kTrajectorySteps) {
  const std::vector<double> start{3.0, 3.0};
  ptune::zo::OptimizerState state = ptune::zo::OptimizerState::start(start);
  const ptune::zo::Schedule schedule = ptune::zo::Schedule::for_iterations(steps);
  ptune::Rng rng(seed);
  const auto loss = ptune::zo::ignore_probe(quadratic);
  std::vector<std::array<float, 2>> out;
  for (std::size_t t = 0; t < steps; ++t) {
    ptune::zo::step(state, schedule, loss, rng);
    out.push_back({state.params[0], state.params[1]});
  }
  return out;
}

inline double distance_to_target(const std::array<float, 2>& p) {
  return std::hypot(static_cast<double>(p[0]) - kTarget[0], static_cast<double>(p[1]) - kTarget[1]);
}

}  // namespace testing
