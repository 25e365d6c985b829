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


#include "ptune/objective.hpp"

#include <algorithm>
#include <cmath>

#include "ptune/error.hpp"

namespace ptune::objective {

double cross_entropy(std::span<const simplex::SimplexVector> rows, std::span<const int> labels) {
  if (rows.size() != labels.size()) {
    throw DimensionError("cross_entropy: " + std::to_string(rows.size()) + " rows but " +
                         std::to_string(labels.size()) + " labels");
  }
  if (rows.empty()) throw InvalidInput("cross_entropy: empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= rows[i].size()) {
      throw InvalidInput("cross_entropy: label " + std::to_string(labels[i]) + " out of range");
    }
    sum -= std::log(rows[i][static_cast<std::size_t>(labels[i])] + 1e-9);
  }
  return sum / static_cast<double>(rows.size());
}

IntraRelation intra_class_relation(std::span<const simplex::SimplexVector> raw,
                                   std::span<const simplex::SimplexVector> refined) {
  if (raw.size() != refined.size()) {
    throw DimensionError("intra_class_relation: batch sizes differ");
  }
  IntraRelation out;
  if (raw.size() < 2) {
    out.degenerate = true;
    return out;
  }
  const std::size_t k = raw.front().size();
  const double n = static_cast<double>(raw.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i].size() != k || refined[i].size() != k) {
        throw DimensionError("intra_class_relation: ragged rows");
      }
      mx += raw[i][c];
      my += refined[i][c];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const double dx = raw[i][c] - mx;
      const double dy = refined[i][c] - my;
      sxx += dx * dx;
      syy += dy * dy;
      sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) continue;
    const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    sum += 1.0 - r;
    ++out.columns_used;
  }
  if (out.columns_used == 0) {
    out.degenerate = true;
    return out;
  }
  out.value = sum / static_cast<double>(out.columns_used);
  return out;
}

LossBreakdown total_loss(const BatchPredictions& batch, const LossWeights& weights) {
  LossBreakdown out;
  out.cls = weights.cls * cross_entropy(batch.raw, batch.labels);
  if (!batch.refined.empty()) {
    out.aux = weights.aux * cross_entropy(batch.refined, batch.labels);
    if (weights.intra != 0.0) {
      const IntraRelation rel = intra_class_relation(batch.raw, batch.refined);
      out.intra = weights.intra * rel.value;
      out.intra_degenerate = rel.degenerate;
    }
  }
  out.total = out.cls + out.aux + out.intra;
  return out;
}

}  // namespace ptune::objective
