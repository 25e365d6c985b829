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


#include "ptune/zo_optim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace ptune::zo {

void Schedule::validate() const {
  if (!(a0 > 0.0) || !(c0 > 0.0)) throw ConfigError("schedule: a0 and c0 must be positive");
  if (!(alpha > 0.0 && alpha <= 1.0) || !(gamma > 0.0 && gamma <= 1.0)) {
    throw ConfigError("schedule: alpha and gamma must lie in (0, 1]");
  }
  if (A < 0.0) throw ConfigError("schedule: A must be non-negative");
}

double Schedule::learning_rate(std::size_t t) const {
  return a0 / std::pow(static_cast<double>(t) + 1.0 + A, alpha);
}

double Schedule::perturbation(std::size_t t) const {
  return c0 / std::pow(static_cast<double>(t) + 1.0, gamma);
}

Schedule Schedule::for_iterations(std::size_t iterations) {
  Schedule s;
  s.A = 0.1 * static_cast<double>(iterations);
  return s;
}

Distribution parse_distribution(const std::string& name) {
  if (name == "rademacher") return Distribution::rademacher;
  if (name == "segmented_uniform") return Distribution::segmented_uniform;
  throw ConfigError("unknown perturbation distribution '" + name + "'");
}

std::string to_string(Distribution d) {
  return d == Distribution::rademacher ? "rademacher" : "segmented_uniform";
}

ProbeLoss ignore_probe(std::function<double(std::span<const double>)> loss) {
  return [loss = std::move(loss)](std::span<const double> x, Probe) { return loss(x); };
}

std::vector<double> sample_perturbation(std::size_t dim, Distribution dist, Rng& rng) {
  std::vector<double> delta(dim);
  for (double& d : delta) {
    if (dist == Distribution::rademacher) {
      d = rng.sign();
    } else {
      const double magnitude = rng.uniform(0.5, 1.5);
      d = rng.sign() * magnitude;
    }
  }
  return delta;
}

std::vector<SpsaSample> spsa_gradients(const ProbeLoss& loss, std::span<const double> phi,
                                       double c, std::size_t samples, Distribution dist, Rng& rng,
                                       std::size_t workers) {
  if (samples == 0) throw InvalidInput("spsa_gradients: need at least one perturbation");
  if (!(c > 0.0)) throw InvalidInput("spsa_gradients: perturbation size must be positive");

  std::vector<std::vector<double>> deltas;
  deltas.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) deltas.push_back(sample_perturbation(phi.size(), dist, rng));

  std::vector<double> losses(2 * samples, 0.0);
  auto evaluate = [&](std::size_t job) {
    const std::size_t s = job / 2;
    const double sign = job % 2 == 0 ? 1.0 : -1.0;
    std::vector<double> x(phi.begin(), phi.end());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += sign * c * deltas[s][i];
    losses[job] = loss(x, Probe{s, job % 2 == 0 ? Side::plus : Side::minus});
  };

  const std::size_t jobs = 2 * samples;
  if (workers <= 1) {
    for (std::size_t job = 0; job < jobs; ++job) evaluate(job);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, jobs); ++w) {
      pool.emplace_back([&] {
        for (std::size_t job = next++; job < jobs; job = next++) {
          try {
            evaluate(job);
          } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<SpsaSample> out(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const double lp = losses[2 * s];
    const double lm = losses[2 * s + 1];
    if (!std::isfinite(lp)) throw EstimationError("spsa: non-finite loss on + side", {s, Side::plus});
    if (!std::isfinite(lm)) throw EstimationError("spsa: non-finite loss on - side", {s, Side::minus});
    SpsaSample& sample = out[s];
    sample.loss_plus = lp;
    sample.loss_minus = lm;
    sample.winner = lm < lp ? Side::minus : Side::plus;
    const double scale = (lp - lm) / (2.0 * c);
    sample.gradient.resize(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) sample.gradient[i] = scale / deltas[s][i];
  }
  return out;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

std::vector<std::vector<double>> gradient_surgery(std::vector<std::vector<double>> estimates) {
  const std::vector<std::vector<double>> original = estimates;
  std::vector<double> norms;
  norms.reserve(original.size());
  for (const auto& g : original) norms.push_back(dot(g, g));
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    auto& gi = estimates[i];
    for (std::size_t j = 0; j < original.size(); ++j) {
      if (i == j || norms[j] == 0.0) continue;
      const double d = dot(gi, original[j]);
      if (d >= 0.0) continue;
      const double coef = d / norms[j];
      for (std::size_t k = 0; k < gi.size(); ++k) gi[k] -= coef * original[j][k];
    }
  }
  return estimates;
}

void OptimizerState::validate() const {
  if (params.size() != momentum.size()) {
    throw ConfigError("optimizer: params and momentum lengths differ");
  }
  if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("optimizer: beta must lie in [0, 1)");
  if (samples == 0) throw ConfigError("optimizer: need at least one perturbation per step");
}

OptimizerState OptimizerState::start(std::span<const double> params) {
  OptimizerState s;
  s.params.assign(params.begin(), params.end());
  s.momentum.assign(params.size(), 0.0f);
  return s;
}

StepReport step(OptimizerState& state, const Schedule& schedule, const ProbeLoss& loss, Rng& rng) {
  state.validate();
  const std::size_t n = state.params.size();
  std::vector<double> lookahead(n);
  for (std::size_t i = 0; i < n; ++i) {
    lookahead[i] = static_cast<double>(state.params[i]) +
                   state.beta * static_cast<double>(state.momentum[i]);
  }

  StepReport report;
  report.learning_rate = schedule.learning_rate(state.t);
  report.perturbation = schedule.perturbation(state.t);
  report.samples = spsa_gradients(loss, lookahead, report.perturbation, state.samples, state.dist,
                                  rng, state.workers);

  std::vector<std::vector<double>> grads;
  grads.reserve(report.samples.size());
  for (const auto& s : report.samples) grads.push_back(s.gradient);
  if (state.surgery) grads = gradient_surgery(std::move(grads));

  report.gradient.assign(n, 0.0);
  for (const auto& g : grads) {
    for (std::size_t i = 0; i < n; ++i) report.gradient[i] += g[i];
  }
  for (double& g : report.gradient) g /= static_cast<double>(grads.size());

  for (std::size_t i = 0; i < n; ++i) {
    const double m = state.beta * static_cast<double>(state.momentum[i]) -
                     report.learning_rate * report.gradient[i];
    state.momentum[i] = static_cast<float>(m);
    state.params[i] = static_cast<float>(static_cast<double>(state.params[i]) +
                                         static_cast<double>(state.momentum[i]));
  }
  ++state.t;
  return report;
}

}  // namespace ptune::zo
