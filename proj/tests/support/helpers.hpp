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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <unistd.h>
#include <string>
#include <utility>
#include <vector>

#include "ptune/config.hpp"
#include "ptune/rng.hpp"
#include "ptune/tensor.hpp"

namespace testing {

// Direct double sum of the orthonormal DCT-II definition.
inline ptune::Matrix brute_dct2(const ptune::Matrix& x) {
  const std::size_t h = x.rows();
  const std::size_t w = x.cols();
  const auto alpha = [](std::size_t u, std::size_t n) {
    return u == 0 ? std::sqrt(1.0 / static_cast<double>(n)) : std::sqrt(2.0 / static_cast<double>(n));
  };
  ptune::Matrix out(h, w);
  for (std::size_t u = 0; u < h; ++u) {
    for (std::size_t v = 0; v < w; ++v) {
      double sum = 0.0;
      for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
          sum += x(i, j) *
                 std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) * static_cast<double>(u) /
                          (2.0 * static_cast<double>(h))) *
                 std::cos(std::numbers::pi * (2.0 * static_cast<double>(j) + 1.0) * static_cast<double>(v) /
                          (2.0 * static_cast<double>(w)));
        }
      }
      out(u, v) = alpha(u, h) * alpha(v, w) * sum;
    }
  }
  return out;
}

inline ptune::Matrix random_matrix(std::size_t h, std::size_t w, ptune::Rng& rng) {
  ptune::Matrix m(h, w);
  for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

inline ptune::ImageTensor random_image(std::size_t c, std::size_t h, std::size_t w, ptune::Rng& rng) {
  ptune::ImageTensor img(c, h, w);
  for (float& v : img.data()) v = static_cast<float>(rng.uniform());
  return img;
}

inline double max_abs_diff(const ptune::Matrix& a, const ptune::Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  }
  return worst;
}

inline std::vector<double> dirichlet(const std::vector<double>& alpha, std::mt19937_64& gen) {
  std::vector<double> out(alpha.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = std::gamma_distribution<double>(alpha[i], 1.0)(gen);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

// Adjusted Rand index from the pair-counting contingency table.
inline double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> rows;
  std::map<std::size_t, double> cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  const auto c2 = [](double n) { return n * (n - 1.0) / 2.0; };
  double index = 0.0;
  for (const auto& [k, n] : joint) index += c2(n);
  double sum_a = 0.0;
  double sum_b = 0.0;
  for (const auto& [k, n] : rows) sum_a += c2(n);
  for (const auto& [k, n] : cols) sum_b += c2(n);
  const double expected = sum_a * sum_b / c2(static_cast<double>(a.size()));
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

// Small geometry and data sizes so end-to-end tests stay fast.
inline ptune::RunConfig small_config() {
  ptune::RunConfig c;
  c.geometry = {56, 56, 28, 28, 14, 14, 3};
  c.dataset.n_per_class = 24;
  c.dataset.test_per_class = 10;
  c.oracle.source_per_class = 20;
  c.oracle.fit_iterations = 100;
  c.iterations = 6;
  c.eval_every = 3;
  c.spsa.samples = 2;
  c.seed = 11;
  c.output_dir = "";
  return c;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    ptune::Rng rng(std::hash<std::string>{}(tag) ^ static_cast<std::uint64_t>(::getpid()));
    path_ = std::filesystem::temp_directory_path() / ("ptune_" + tag + "_" + std::to_string(rng.next() % 1000000));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
