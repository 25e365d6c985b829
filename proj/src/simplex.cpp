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


#include "ptune/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ptune/error.hpp"
#include "ptune/rng.hpp"

namespace ptune::simplex {

bool on_simplex(std::span<const double> p, double tol) {
  if (p.empty()) return false;
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

SimplexVector l1_normalize(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += std::abs(x);
  SimplexVector out(v.size());
  if (sum <= 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(v.size()));
    return out;
  }
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::abs(v[i]) / sum;
  return out;
}

SimplexVector smooth(std::span<const double> p, double eps) {
  const double total = std::accumulate(p.begin(), p.end(), 0.0) + eps * static_cast<double>(p.size());
  SimplexVector out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = (p[i] + eps) / total;
  return out;
}

PrototypeSet::PrototypeSet(std::vector<SimplexVector> anchors) : anchors_(std::move(anchors)) {
  for (const auto& a : anchors_) {
    if (a.size() != anchors_.front().size()) {
      throw DimensionError("PrototypeSet: anchors of unequal length");
    }
  }
}

bool PrototypeSet::valid(double tol) const {
  if (anchors_.empty()) return false;
  return std::all_of(anchors_.begin(), anchors_.end(),
                     [&](const SimplexVector& a) { return on_simplex(a, tol); });
}

double kl_divergence(std::span<const double> p, std::span<const double> q, double eps) {
  if (p.size() != q.size()) {
    throw DimensionError("kl_divergence: lengths " + std::to_string(p.size()) + " and " +
                         std::to_string(q.size()));
  }
  if (!(eps > 0.0)) throw InvalidInput("kl_divergence: eps must be positive");
  const double k_eps = eps * static_cast<double>(p.size());
  const double sp = std::accumulate(p.begin(), p.end(), 0.0) + k_eps;
  const double sq = std::accumulate(q.begin(), q.end(), 0.0) + k_eps;
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pi = (p[i] + eps) / sp;
    const double qi = (q[i] + eps) / sq;
    kl += pi * std::log(pi / qi);
  }
  return std::max(kl, 0.0);
}

SimplexVector mean_of(std::span<const SimplexVector> points, std::span<const std::size_t> members) {
  if (members.empty()) throw InvalidInput("mean_of: no members");
  // Summing in a canonical (lexicographic) order makes the result independent
  // of how the points were ordered by the caller.
  std::vector<std::size_t> order(members.begin(), members.end());
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(points[a].begin(), points[a].end(), points[b].begin(),
                                        points[b].end());
  });
  SimplexVector sum(points[order.front()].size(), 0.0);
  for (std::size_t i : order) {
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += points[i][j];
  }
  return l1_normalize(sum);
}

namespace {

void check_points(std::span<const SimplexVector> points, std::size_t k) {
  if (k == 0) throw InvalidInput("kl_kmeans: K must be positive");
  if (points.size() < k) {
    throw InvalidInput("kl_kmeans: need at least K points (N=" + std::to_string(points.size()) +
                       ", K=" + std::to_string(k) + ")");
  }
  for (const auto& p : points) {
    if (p.size() != points.front().size()) throw DimensionError("kl_kmeans: ragged points");
  }
}

}  // namespace

std::size_t nearest_anchor(std::span<const double> p, const PrototypeSet& anchors, double eps) {
  std::size_t best = 0;
  double best_kl = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    const double kl = kl_divergence(p, anchors[k], eps);
    if (kl < best_kl) {
      best_kl = kl;
      best = k;
    }
  }
  return best;
}

KMeansResult kl_kmeans(std::span<const SimplexVector> points, const PrototypeSet& init,
                       std::size_t max_iter, double eps) {
  const std::size_t k = init.size();
  check_points(points, k);
  if (max_iter == 0) throw InvalidInput("kl_kmeans: max_iter must be at least 1");
  if (init.dim() != points.front().size()) {
    throw DimensionError("kl_kmeans: seed dimension differs from points");
  }

  std::vector<SimplexVector> means = init.anchors();
  std::vector<std::size_t> assign(points.size(), 0);
  std::vector<double> dist(points.size(), 0.0);
  KMeansResult result;

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    std::vector<std::size_t> next(points.size(), 0);
    double objective = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best_kl = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double kl = kl_divergence(points[i], means[c], eps);
        if (kl < best_kl) {
          best_kl = kl;
          next[i] = c;
        }
      }
      dist[i] = best_kl;
      objective += best_kl;
    }
    result.objective_trace.push_back(objective);
    result.iterations = iter + 1;
    const bool unchanged = iter > 0 && next == assign;
    assign = std::move(next);
    if (unchanged) {
      result.converged = true;
      break;
    }
    if (iter + 1 == max_iter) break;

    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < points.size(); ++i) members[assign[i]].push_back(i);
    for (std::size_t c = 0; c < k; ++c) {
      if (!members[c].empty()) means[c] = mean_of(points, members[c]);
    }
    // Re-seed emptied clusters from the worst-fit points of clusters that can
    // spare one, so every class keeps an anchor.
    std::vector<bool> taken(points.size(), false);
    for (std::size_t c = 0; c < k; ++c) {
      if (!members[c].empty()) continue;
      std::size_t pick = points.size();
      double worst = -1.0;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (taken[i] || members[assign[i]].size() < 2) continue;
        const double d = kl_divergence(points[i], means[assign[i]], eps);
        if (d > worst) {
          worst = d;
          pick = i;
        }
      }
      if (pick == points.size()) continue;
      taken[pick] = true;
      auto& donor = members[assign[pick]];
      donor.erase(std::find(donor.begin(), donor.end(), pick));
      members[c].push_back(pick);
      assign[pick] = c;
      means[c] = points[pick];
    }
  }

  result.means = PrototypeSet(std::move(means));
  result.assignments = std::move(assign);
  return result;
}

KMeansResult kl_kmeans(std::span<const SimplexVector> points, std::size_t k, std::uint64_t seed,
                       std::size_t max_iter, double eps) {
  check_points(points, k);
  Rng rng(seed);
  std::vector<std::size_t> chosen{static_cast<std::size_t>(rng.below(points.size()))};
  std::vector<bool> used(points.size(), false);
  used[chosen.front()] = true;
  while (chosen.size() < k) {
    std::vector<double> weight(points.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (used[i]) continue;
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t c : chosen) d = std::min(d, kl_divergence(points[i], points[c], eps));
      weight[i] = d;
      total += d;
    }
    std::size_t pick = points.size();
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (weight[i] <= 0.0) continue;
        pick = i;
        r -= weight[i];
        if (r < 0.0) break;
      }
    } else {
      // Remaining points duplicate chosen ones; take any unused index.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (!used[i]) free.push_back(i);
      }
      pick = free[rng.below(free.size())];
    }
    used[pick] = true;
    chosen.push_back(pick);
  }
  std::vector<SimplexVector> seeds;
  for (std::size_t c : chosen) seeds.push_back(points[c]);
  return kl_kmeans(points, PrototypeSet(std::move(seeds)), max_iter, eps);
}

SimplexVector refine(std::span<const double> p, const PrototypeSet& anchors, double eps) {
  if (anchors.empty()) throw InvalidInput("refine: no anchors");
  if (anchors.dim() != p.size()) {
    throw DimensionError("refine: prediction length " + std::to_string(p.size()) +
                         " vs anchor length " + std::to_string(anchors.dim()));
  }
  SimplexVector logits(anchors.size());
  for (std::size_t k = 0; k < anchors.size(); ++k) logits[k] = -kl_divergence(p, anchors[k], eps);
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return logits;
}

PrototypeSet init_prototypes(std::span<const SimplexVector> probs, std::span<const int> labels,
                             std::size_t k, std::size_t max_iter) {
  if (probs.size() != labels.size()) {
    throw DimensionError("init_prototypes: " + std::to_string(probs.size()) +
                         " predictions but " + std::to_string(labels.size()) + " labels");
  }
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw InvalidInput("init_prototypes: label out of range");
    }
    members[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<SimplexVector> seeds;
  for (std::size_t c = 0; c < k; ++c) {
    if (members[c].empty()) {
      throw InvalidDataset("init_prototypes: class " + std::to_string(c) + " has no examples");
    }
    seeds.push_back(mean_of(probs, members[c]));
  }
  return kl_kmeans(probs, PrototypeSet(std::move(seeds)), max_iter).means;
}

PrototypeSet update_prototypes(const PrototypeSet& current,
                               std::span<const std::optional<SimplexVector>> class_means,
                               double momentum) {
  if (class_means.size() != current.size()) {
    throw DimensionError("update_prototypes: " + std::to_string(class_means.size()) +
                         " class means for " + std::to_string(current.size()) + " anchors");
  }
  std::vector<SimplexVector> next = current.anchors();
  for (std::size_t k = 0; k < next.size(); ++k) {
    if (!class_means[k]) continue;
    const SimplexVector& p = *class_means[k];
    if (p.size() != next[k].size()) throw DimensionError("update_prototypes: length mismatch");
    SimplexVector blend(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      blend[i] = momentum * next[k][i] + (1.0 - momentum) * p[i];
    }
    next[k] = l1_normalize(blend);
  }
  return PrototypeSet(std::move(next));
}

}  // namespace ptune::simplex
