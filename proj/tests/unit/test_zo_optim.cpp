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


#include <doctest.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

#include <nlohmann/json.hpp>

#include "quadratic.hpp"
#include "ptune/error.hpp"
#include "ptune/rng.hpp"
#include "ptune/zo_optim.hpp"

using namespace ptune;
using namespace ptune::zo;

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

double sum_squares(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double anisotropic(std::span<const double> x) { return x[0] * x[0] + 10.0 * x[1] * x[1]; }

}  // namespace

TEST_CASE("schedule") {
  const Schedule s = Schedule::for_iterations(300);
  CHECK(s.A == doctest::Approx(30.0));
  CHECK(s.learning_rate(0) == doctest::Approx(s.a0 / std::pow(31.0, 0.602)));
  CHECK(s.perturbation(4) == doctest::Approx(s.c0 / std::pow(5.0, 0.101)));
  for (std::size_t t = 1; t < 100; ++t) {
    CHECK(s.learning_rate(t) <= s.learning_rate(t - 1));
    CHECK(s.perturbation(t) <= s.perturbation(t - 1));
  }
  Schedule bad;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(parse_distribution("rademacher") == Distribution::rademacher);
  CHECK_THROWS_AS(parse_distribution("gaussian"), ConfigError);
}

TEST_CASE("perturbation distributions") {
  Rng rng(1);
  for (double v : sample_perturbation(1000, Distribution::rademacher, rng)) CHECK(std::abs(v) == 1.0);
  const auto seg = sample_perturbation(100000, Distribution::segmented_uniform, rng);
  double mean = 0.0;
  for (double v : seg) {
    CHECK_FALSE((std::abs(v) < 0.5 || std::abs(v) > 1.5));
    mean += v;
  }
  CHECK(std::abs(mean / 100000.0) < 0.01);
  Rng a(77);
  Rng b(77);
  CHECK(sample_perturbation(64, Distribution::segmented_uniform, a) ==
        sample_perturbation(64, Distribution::segmented_uniform, b));
}

TEST_CASE("one-dimensional Rademacher estimates are exact on x^2") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> x{rng.uniform(-5.0, 5.0)};
    const auto est = spsa_gradients(ignore_probe(sum_squares), x, 0.01, 4, Distribution::rademacher, rng);
    for (const auto& s : est) CHECK(std::abs(s.gradient[0] - 2.0 * x[0]) < 1e-9);
  }
}

TEST_CASE("single estimates on a quadratic follow the closed form") {
  // For ||x||^2 the central difference is exact: g_i = 2 (x . D) / D_i.
  Rng rng(6);
  const std::vector<double> x{0.3, -1.2, 2.0, 0.7};
  Rng replay = rng;
  const auto est = spsa_gradients(ignore_probe(sum_squares), x, 0.05, 8, Distribution::rademacher, rng);
  for (const auto& s : est) {
    const auto d = sample_perturbation(x.size(), Distribution::rademacher, replay);
    const double xd = dot(x, d);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(s.gradient[i] - 2.0 * xd / d[i]) < 1e-9);
  }
}

TEST_CASE("constant loss gives zero estimates and no movement") {
  Rng rng(2);
  const std::vector<double> x{1.0, 2.0, 3.0};
  for (const auto& s : spsa_gradients(ignore_probe([](std::span<const double>) { return 4.0; }), x, 0.1,
                                      3, Distribution::segmented_uniform, rng)) {
    for (double g : s.gradient) CHECK(g == 0.0);
  }
  OptimizerState st = OptimizerState::start(x);
  step(st, Schedule{}, ignore_probe([](std::span<const double>) { return 1.0; }), rng);
  CHECK(st.params == std::vector<float>{1.0f, 2.0f, 3.0f});
  CHECK(st.t == 1);
}

TEST_CASE("averaged estimates are unbiased on an anisotropic quadratic") {
  Rng rng(8);
  const std::vector<double> x{1.0, 1.0};
  const auto est = spsa_gradients(ignore_probe(anisotropic), x, 0.01, 10000, Distribution::segmented_uniform, rng);
  std::vector<double> mean(2, 0.0);
  for (const auto& s : est) {
    mean[0] += s.gradient[0] / 10000.0;
    mean[1] += s.gradient[1] / 10000.0;
  }
  const std::vector<double> truth{2.0, 20.0};
  const std::vector<double> err{mean[0] - truth[0], mean[1] - truth[1]};
  CHECK(norm(err) / norm(truth) < 0.05);
}

TEST_CASE("exactly 2S evaluations, tagged by sample and side") {
  Rng rng(3);
  std::vector<int> seen(10, 0);
  const ProbeLoss loss = [&](std::span<const double> x, Probe p) {
    ++seen[2 * p.sample + (p.side == Side::minus ? 1 : 0)];
    return sum_squares(x);
  };
  const auto est = spsa_gradients(loss, std::vector<double>{1.0, 2.0}, 0.1, 5, Distribution::rademacher, rng);
  CHECK(est.size() == 5);
  for (int n : seen) CHECK(n == 1);
  for (const auto& s : est) {
    CHECK(s.winner == (s.loss_minus < s.loss_plus ? Side::minus : Side::plus));
  }
}

TEST_CASE("concurrent evaluation gives the same estimates") {
  const std::vector<double> x{0.5, -0.5, 1.5};
  Rng a(10);
  Rng b(10);
  const auto serial = spsa_gradients(ignore_probe(anisotropic), x, 0.02, 6, Distribution::segmented_uniform, a, 1);
  const auto parallel = spsa_gradients(ignore_probe(anisotropic), x, 0.02, 6, Distribution::segmented_uniform, b, 4);
  for (std::size_t s = 0; s < 6; ++s) {
    CHECK(serial[s].gradient == parallel[s].gradient);
    CHECK(serial[s].winner == parallel[s].winner);
  }
}

TEST_CASE("non-finite loss aborts the step without changing state") {
  Rng rng(4);
  OptimizerState st = OptimizerState::start(std::vector<double>{1.0, 1.0});
  st.momentum = {0.5f, -0.5f};
  const OptimizerState before = st;
  std::atomic<int> calls{0};
  const ProbeLoss loss = [&](std::span<const double>, Probe p) {
    ++calls;
    return p.sample == 1 && p.side == Side::minus ? std::numeric_limits<double>::quiet_NaN() : 1.0;
  };
  try {
    step(st, Schedule{}, loss, rng);
    FAIL("expected an estimation error");
  } catch (const EstimationError& e) {
    CHECK(e.probe().sample == 1);
    CHECK(e.probe().side == Side::minus);
  }
  CHECK(st.params == before.params);
  CHECK(st.momentum == before.momentum);
  CHECK(st.t == before.t);
}

TEST_CASE("gradient surgery examples") {
  CHECK(gradient_surgery({{1.0, 0.0}, {0.0, 2.0}}) == std::vector<std::vector<double>>{{1.0, 0.0}, {0.0, 2.0}});
  const auto opposite = gradient_surgery({{1.0, -2.0}, {-1.0, 2.0}});
  for (double v : opposite[0]) CHECK(std::abs(v) < 1e-15);
  const auto tilted = gradient_surgery({{1.0, 1.0}, {-1.0, 0.0}});
  CHECK(tilted[0][0] == doctest::Approx(0.0));
  CHECK(tilted[0][1] == doctest::Approx(1.0));
  CHECK(dot(tilted[0], {-1.0, 0.0}) == doctest::Approx(0.0));
  CHECK(gradient_surgery({{3.0, -1.0}}) == std::vector<std::vector<double>>{{3.0, -1.0}});
  const auto with_zero = gradient_surgery({{0.0, 0.0}, {1.0, 1.0}});
  CHECK(with_zero[0] == std::vector<double>{0.0, 0.0});
  CHECK(with_zero[1] == std::vector<double>{1.0, 1.0});
}

TEST_CASE("gradient surgery property sweep") {
  Rng rng(99);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(trial % 6);
    std::vector<double> a(d);
    std::vector<double> b(d);
    for (double& v : a) v = rng.normal();
    for (double& v : b) v = rng.normal();
    const auto out = gradient_surgery({a, b});
    const double ab = dot(a, b);
    const bool projected0 = out[0] != a;
    const bool projected1 = out[1] != b;
    if (projected0 != (ab < 0.0) || projected1 != (ab < 0.0)) FAIL("projection trigger mismatch");
    CHECK(dot(out[0], b) >= -1e-9 * norm(out[0]) * norm(b));
    CHECK(dot(out[1], a) >= -1e-9 * norm(out[1]) * norm(a));
    // Non-conflicting sets are fixed points.
    const auto again = gradient_surgery(out);
    if (dot(out[0], out[1]) >= 0.0 && again != out) FAIL("surgery not idempotent");
  }
}

TEST_CASE("plain SPSA descent decreases a quadratic") {
  Rng rng(12);
  OptimizerState st = OptimizerState::start(std::vector<double>{2.0, -1.0, 0.5});
  st.beta = 0.0;
  st.samples = 1;
  st.surgery = false;
  st.dist = Distribution::rademacher;
  Schedule sched;
  sched.a0 = 0.01;
  double prev = sum_squares(std::vector<double>(st.params.begin(), st.params.end()));
  for (int i = 0; i < 50; ++i) {
    step(st, sched, ignore_probe(sum_squares), rng);
    const double now = sum_squares(std::vector<double>(st.params.begin(), st.params.end()));
    CHECK(now <= prev + 1e-12);
    prev = now;
  }
}

TEST_CASE("averaged surgical gradient points along the true gradient") {
  Rng rng(31);
  for (const auto& x : {std::vector<double>{3.0, 3.0}, std::vector<double>{1.0, -0.5}}) {
    const auto est = spsa_gradients(ignore_probe(testing::quadratic), x, 0.01, 400,
                                    Distribution::segmented_uniform, rng);
    std::vector<std::vector<double>> grads;
    for (const auto& s : est) grads.push_back(s.gradient);
    grads = gradient_surgery(std::move(grads));
    std::vector<double> mean(2, 0.0);
    for (const auto& g : grads) {
      mean[0] += g[0];
      mean[1] += g[1];
    }
    const std::vector<double> truth{2.0 * (x[0] - testing::kTarget[0]), 2.0 * (x[1] - testing::kTarget[1])};
    const double cosine = dot(mean, truth) / (norm(mean) * norm(truth));
    CHECK(std::acos(std::min(1.0, cosine)) * 180.0 / std::numbers::pi < 15.0);
  }
}

TEST_CASE("SPSA-GC converges on the 2-D quadratic and matches the recorded trajectory") {
  const auto traj = testing::quadratic_trajectory(testing::kTrajectorySeed);
  CHECK(testing::distance_to_target(traj.back()) < 1e-2);

  std::ifstream in(PTUNE_FIXTURE_DIR "/spsa_gc_trajectory.json");
  REQUIRE(in.good());
  const auto golden = nlohmann::json::parse(in).at("trajectory").get<std::vector<std::array<float, 2>>>();
  REQUIRE(golden.size() == traj.size());
  for (std::size_t t = 0; t < traj.size(); ++t) {
    if (golden[t] != traj[t]) FAIL("trajectory diverges at step " << t);
  }
}
