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
#include <optional>
#include <span>
#include <vector>

namespace ptune::simplex {

/// Length-K probability vector (non-negative, sums to 1).
using SimplexVector = std::vector<double>;

inline constexpr double kDefaultEps = 1e-6;

bool on_simplex(std::span<const double> p, double tol = 1e-9);

/// Divide by the L1 norm. A zero vector maps to the uniform distribution.
SimplexVector l1_normalize(std::span<const double> v);

/// Add eps to every entry and renormalize.
SimplexVector smooth(std::span<const double> p, double eps = kDefaultEps);

/// K class anchors; anchor k belongs to class k.
class PrototypeSet {
 public:
  PrototypeSet() = default;
  explicit PrototypeSet(std::vector<SimplexVector> anchors);

  std::size_t size() const { return anchors_.size(); }
  bool empty() const { return anchors_.empty(); }
  std::size_t dim() const { return anchors_.empty() ? 0 : anchors_.front().size(); }
  const SimplexVector& operator[](std::size_t k) const { return anchors_[k]; }
  const std::vector<SimplexVector>& anchors() const { return anchors_; }

  bool valid(double tol = 1e-9) const;
  bool operator==(const PrototypeSet&) const = default;

 private:
  std::vector<SimplexVector> anchors_;
};

/// KL(p~ || q~) on eps-smoothed, renormalized inputs.
double kl_divergence(std::span<const double> p, std::span<const double> q,
                     double eps = kDefaultEps);

struct KMeansResult {
  PrototypeSet means;
  std::vector<std::size_t> assignments;
  /// Sum of point-to-assigned-mean KL after each assignment pass.
  std::vector<double> objective_trace;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Lloyd iterations with KL(point || mean) assignments and arithmetic-mean
/// updates. Cluster k keeps index k throughout, so seeding with per-class
/// means preserves the class correspondence. An emptied cluster is re-seeded
/// with the point farthest (in KL) from its current mean.
KMeansResult kl_kmeans(std::span<const SimplexVector> points, const PrototypeSet& init,
                       std::size_t max_iter, double eps = kDefaultEps);

/// Same, seeded with K distinct points drawn by KL-weighted (k-means++ style)
/// sampling.
KMeansResult kl_kmeans(std::span<const SimplexVector> points, std::size_t k, std::uint64_t seed,
                       std::size_t max_iter, double eps = kDefaultEps);

/// Softmax over -KL(p || anchor_k).
SimplexVector refine(std::span<const double> p, const PrototypeSet& anchors,
                     double eps = kDefaultEps);

/// Index of the anchor with the smallest KL(p || anchor).
std::size_t nearest_anchor(std::span<const double> p, const PrototypeSet& anchors,
                           double eps = kDefaultEps);

/// Per-class means of labeled predictions, refined by kl_kmeans seeded from
/// those means. Every class must be present.
PrototypeSet init_prototypes(std::span<const SimplexVector> probs, std::span<const int> labels,
                             std::size_t k, std::size_t max_iter = 100);

/// a_k <- L1(0.9 a_k + 0.1 p_k) for classes with a batch mean; others unchanged.
PrototypeSet update_prototypes(const PrototypeSet& current,
                               std::span<const std::optional<SimplexVector>> class_means,
                               double momentum = 0.9);

/// Order-independent L1-normalized average of the selected rows.
SimplexVector mean_of(std::span<const SimplexVector> points, std::span<const std::size_t> members);

}  // namespace ptune::simplex
