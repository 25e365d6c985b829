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

#include <span>
#include <vector>

#include "ptune/simplex.hpp"

namespace ptune::objective {

using Rows = std::vector<simplex::SimplexVector>;

struct BatchPredictions {
  Rows raw;       // oracle probabilities
  Rows refined;   // prototype-refined probabilities; empty when refinement is off
  std::vector<int> labels;
};

struct LossWeights {
  double cls = 1.0;
  double aux = 1.0;
  double intra = 1.0;

  bool operator==(const LossWeights&) const = default;
};

/// Mean of -ln(row[label] + 1e-9).
double cross_entropy(std::span<const simplex::SimplexVector> rows, std::span<const int> labels);

struct IntraRelation {
  double value = 0.0;
  std::size_t columns_used = 0;
  /// Set when the batch has fewer than two rows or every column is constant.
  bool degenerate = false;
};

/// Mean over classes of (1 - Pearson correlation) between the raw and refined
/// probability columns across the batch. Constant columns are skipped.
IntraRelation intra_class_relation(std::span<const simplex::SimplexVector> raw,
                                   std::span<const simplex::SimplexVector> refined);

struct LossBreakdown {
  double total = 0.0;
  double cls = 0.0;    // weighted contributions; total = cls + aux + intra
  double aux = 0.0;
  double intra = 0.0;
  bool intra_degenerate = false;
};

/// Weighted sum of the raw cross-entropy, the refined cross-entropy and the
/// intra-class relation term. Terms needing refined rows are zero when
/// `batch.refined` is empty.
LossBreakdown total_loss(const BatchPredictions& batch, const LossWeights& weights = {});

}  // namespace ptune::objective
