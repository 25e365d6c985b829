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

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptune/simplex.hpp"
#include "ptune/tensor.hpp"

namespace ptune {

using ProbRows = std::vector<simplex::SimplexVector>;

/// A frozen classifier seen only through images in and probabilities out.
/// Every query flows through predict_batch, which validates geometry and
/// counts images sent.
class Oracle {
 public:
  virtual ~Oracle() = default;
  Oracle() = default;
  Oracle(const Oracle&) = delete;
  Oracle& operator=(const Oracle&) = delete;

  virtual std::size_t num_classes() const = 0;
  virtual Shape3 input_shape() const = 0;
  virtual std::string kind() const = 0;

  /// One probability row per image. Safe to call concurrently.
  ProbRows predict_batch(std::span<const ImageTensor> images);

  std::uint64_t query_count() const { return queries_.load(); }

 protected:
  virtual ProbRows predict_impl(std::span<const ImageTensor> images) = 0;

 private:
  std::atomic<std::uint64_t> queries_{0};
};

/// Multinomial logistic regression on box-downsampled pixels:
/// softmax(W f(x) + b), where f averages each channel over a grid x grid
/// partition of the image.
class LinearSoftmaxModel {
 public:
  LinearSoftmaxModel() = default;
  LinearSoftmaxModel(Shape3 shape, std::size_t num_classes, std::size_t grid = 16);

  std::size_t num_classes() const { return num_classes_; }
  std::size_t feature_dim() const { return shape_.channels * grid_ * grid_; }
  std::size_t grid() const { return grid_; }
  const Shape3& input_shape() const { return shape_; }

  std::vector<double> features(const ImageTensor& image) const;
  simplex::SimplexVector predict(std::span<const double> features) const;
  simplex::SimplexVector predict(const ImageTensor& image) const { return predict(features(image)); }

  std::vector<double>& weights() { return weights_; }  // K x D, row-major
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }

  /// {"W": K x D, "b": K, "downsample": grid, "shape": [c, h, w]}
  nlohmann::json to_json() const;
  static LinearSoftmaxModel from_json(const nlohmann::json& j);

  bool operator==(const LinearSoftmaxModel&) const = default;

 private:
  Shape3 shape_{};
  std::size_t num_classes_ = 0;
  std::size_t grid_ = 16;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

/// In-process oracle around a frozen LinearSoftmaxModel.
class BuiltinOracle final : public Oracle {
 public:
  explicit BuiltinOracle(LinearSoftmaxModel model) : model_(std::move(model)) {}

  std::size_t num_classes() const override { return model_.num_classes(); }
  Shape3 input_shape() const override { return model_.input_shape(); }
  std::string kind() const override { return "builtin"; }

  /// Read-only access for weight export; the trainer never calls this.
  const LinearSoftmaxModel& model() const { return model_; }

 protected:
  ProbRows predict_impl(std::span<const ImageTensor> images) override;

 private:
  const LinearSoftmaxModel model_;
};

struct OracleFitOptions {
  std::size_t grid = 16;
  std::size_t iterations = 300;
  double step = 2.0;
  double init_scale = 0.01;
};

/// Fit a linear-softmax model by full-batch gradient descent on images that
/// already have the oracle's input geometry. Weights start from a seeded
/// N(0, init_scale^2) draw.
LinearSoftmaxModel fit_linear_softmax(const Dataset& source, std::size_t num_classes,
                                      std::uint64_t seed, const OracleFitOptions& options = {});

std::unique_ptr<BuiltinOracle> train_builtin_oracle(const Dataset& source, std::size_t num_classes,
                                                     std::uint64_t seed,
                                                     const OracleFitOptions& options = {});

/// Fraction of rows whose argmax equals the label.
double accuracy(std::span<const simplex::SimplexVector> rows, std::span<const int> labels);

std::size_t argmax(std::span<const double> row);

// Wire format shared by the remote client and any server implementation.
namespace wire {

/// {"shape":[n,c,h,w],"pixels":[...]}, pixels in image order then channel-major.
nlohmann::json encode_predict_request(std::span<const ImageTensor> images);
std::vector<ImageTensor> decode_predict_request(const nlohmann::json& body);

/// {"probs":[[...], ...]}
nlohmann::json encode_predict_response(const ProbRows& rows);
ProbRows decode_predict_response(const nlohmann::json& body);

/// {"num_classes":K,"shape":[c,h,w]}
nlohmann::json encode_meta(std::size_t num_classes, const Shape3& shape);

}  // namespace wire

}  // namespace ptune
