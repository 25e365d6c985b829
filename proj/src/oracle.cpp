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


#include "ptune/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "ptune/error.hpp"
#include "ptune/rng.hpp"

namespace ptune {

ProbRows Oracle::predict_batch(std::span<const ImageTensor> images) {
  if (images.empty()) throw InvalidInput("predict_batch: empty batch");
  const Shape3 want = input_shape();
  for (const auto& img : images) {
    if (img.shape() != want) {
      throw InvalidInput("predict_batch: image " + img.shape().str() + " does not match oracle input " +
                         want.str());
    }
  }
  queries_ += images.size();
  return predict_impl(images);
}

LinearSoftmaxModel::LinearSoftmaxModel(Shape3 shape, std::size_t num_classes, std::size_t grid)
    : shape_(shape), num_classes_(num_classes), grid_(grid) {
  if (grid_ == 0 || grid_ > shape.height || grid_ > shape.width) {
    throw ConfigError("LinearSoftmaxModel: downsample grid must fit the input");
  }
  weights_.assign(num_classes_ * feature_dim(), 0.0);
  bias_.assign(num_classes_, 0.0);
}

std::vector<double> LinearSoftmaxModel::features(const ImageTensor& image) const {
  if (image.shape() != shape_) throw InvalidInput("features: image shape mismatch");
  std::vector<double> f(feature_dim(), 0.0);
  for (std::size_t c = 0; c < shape_.channels; ++c) {
    for (std::size_t gy = 0; gy < grid_; ++gy) {
      const std::size_t y0 = gy * shape_.height / grid_;
      const std::size_t y1 = (gy + 1) * shape_.height / grid_;
      for (std::size_t gx = 0; gx < grid_; ++gx) {
        const std::size_t x0 = gx * shape_.width / grid_;
        const std::size_t x1 = (gx + 1) * shape_.width / grid_;
        double sum = 0.0;
        for (std::size_t y = y0; y < y1; ++y) {
          for (std::size_t x = x0; x < x1; ++x) sum += image.at(c, y, x);
        }
        f[(c * grid_ + gy) * grid_ + gx] = sum / static_cast<double>((y1 - y0) * (x1 - x0));
      }
    }
  }
  return f;
}

simplex::SimplexVector LinearSoftmaxModel::predict(std::span<const double> features) const {
  const std::size_t d = feature_dim();
  if (features.size() != d) throw DimensionError("predict: feature length mismatch");
  simplex::SimplexVector logits(num_classes_);
  for (std::size_t k = 0; k < num_classes_; ++k) {
    double acc = bias_[k];
    const double* w = weights_.data() + k * d;
    for (std::size_t j = 0; j < d; ++j) acc += w[j] * features[j];
    logits[k] = acc;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - top);
    sum += v;
  }
  for (double& v : logits) v /= sum;
  return logits;
}

nlohmann::json LinearSoftmaxModel::to_json() const {
  nlohmann::json w = nlohmann::json::array();
  const std::size_t d = feature_dim();
  for (std::size_t k = 0; k < num_classes_; ++k) {
    w.push_back(std::vector<double>(weights_.begin() + static_cast<std::ptrdiff_t>(k * d),
                                    weights_.begin() + static_cast<std::ptrdiff_t>((k + 1) * d)));
  }
  return {{"W", w},
          {"b", bias_},
          {"downsample", grid_},
          {"shape", {shape_.channels, shape_.height, shape_.width}}};
}

LinearSoftmaxModel LinearSoftmaxModel::from_json(const nlohmann::json& j) {
  try {
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 3) throw ConfigError("weights: shape must have 3 entries");
    const auto bias = j.at("b").get<std::vector<double>>();
    LinearSoftmaxModel m(Shape3{shape[0], shape[1], shape[2]}, bias.size(),
                         j.at("downsample").get<std::size_t>());
    const auto rows = j.at("W").get<std::vector<std::vector<double>>>();
    if (rows.size() != bias.size()) throw ConfigError("weights: W and b disagree on K");
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].size() != m.feature_dim()) throw ConfigError("weights: W row has wrong length");
      std::copy(rows[k].begin(), rows[k].end(),
                m.weights_.begin() + static_cast<std::ptrdiff_t>(k * m.feature_dim()));
    }
    m.bias_ = bias;
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("weights: ") + e.what());
  }
}

ProbRows BuiltinOracle::predict_impl(std::span<const ImageTensor> images) {
  ProbRows rows;
  rows.reserve(images.size());
  for (const auto& img : images) rows.push_back(model_.predict(img));
  return rows;
}

LinearSoftmaxModel fit_linear_softmax(const Dataset& source, std::size_t num_classes,
                                      std::uint64_t seed, const OracleFitOptions& options) {
  if (source.images.empty()) throw InvalidDataset("fit_linear_softmax: empty source dataset");
  std::vector<std::size_t> per_class(num_classes, 0);
  for (int y : source.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw InvalidDataset("fit_linear_softmax: label out of range");
    }
    ++per_class[static_cast<std::size_t>(y)];
  }
  for (std::size_t k = 0; k < num_classes; ++k) {
    if (per_class[k] == 0) {
      throw InvalidDataset("fit_linear_softmax: class " + std::to_string(k) + " has no examples");
    }
  }

  LinearSoftmaxModel model(source.images.front().shape(), num_classes, options.grid);
  Rng rng(seed);
  for (double& w : model.weights()) w = options.init_scale * rng.normal();

  const std::size_t n = source.size();
  const std::size_t d = model.feature_dim();
  std::vector<std::vector<double>> feats;
  feats.reserve(n);
  for (const auto& img : source.images) feats.push_back(model.features(img));

  std::vector<double> grad_w(num_classes * d);
  std::vector<double> grad_b(num_classes);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    std::fill(grad_b.begin(), grad_b.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      auto p = model.predict(feats[i]);
      p[static_cast<std::size_t>(source.labels[i])] -= 1.0;
      for (std::size_t k = 0; k < num_classes; ++k) {
        grad_b[k] += p[k];
        double* g = grad_w.data() + k * d;
        for (std::size_t j = 0; j < d; ++j) g[j] += p[k] * feats[i][j];
      }
    }
    const double scale = options.step / static_cast<double>(n);
    for (std::size_t j = 0; j < grad_w.size(); ++j) model.weights()[j] -= scale * grad_w[j];
    for (std::size_t k = 0; k < num_classes; ++k) model.bias()[k] -= scale * grad_b[k];
  }
  return model;
}

std::unique_ptr<BuiltinOracle> train_builtin_oracle(const Dataset& source, std::size_t num_classes,
                                                     std::uint64_t seed,
                                                     const OracleFitOptions& options) {
  return std::make_unique<BuiltinOracle>(fit_linear_softmax(source, num_classes, seed, options));
}

std::size_t argmax(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

double accuracy(std::span<const simplex::SimplexVector> rows, std::span<const int> labels) {
  if (rows.size() != labels.size()) throw DimensionError("accuracy: rows/labels mismatch");
  if (rows.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int>(argmax(rows[i])) == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rows.size());
}

namespace wire {

nlohmann::json encode_predict_request(std::span<const ImageTensor> images) {
  if (images.empty()) throw InvalidInput("encode_predict_request: empty batch");
  const Shape3 s = images.front().shape();
  std::vector<float> pixels;
  pixels.reserve(images.size() * s.size());
  for (const auto& img : images) {
    if (img.shape() != s) throw DimensionError("encode_predict_request: mixed shapes");
    pixels.insert(pixels.end(), img.data().begin(), img.data().end());
  }
  return {{"shape", {images.size(), s.channels, s.height, s.width}}, {"pixels", pixels}};
}

std::vector<ImageTensor> decode_predict_request(const nlohmann::json& body) {
  try {
    const auto shape = body.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 4) throw InvalidInput("predict request: shape must be [n,c,h,w]");
    const auto pixels = body.at("pixels").get<std::vector<float>>();
    const std::size_t per = shape[1] * shape[2] * shape[3];
    if (pixels.size() != shape[0] * per) {
      throw InvalidInput("predict request: pixel count does not match shape");
    }
    std::vector<ImageTensor> images;
    for (std::size_t i = 0; i < shape[0]; ++i) {
      ImageTensor img(shape[1], shape[2], shape[3]);
      std::copy_n(pixels.begin() + static_cast<std::ptrdiff_t>(i * per), per, img.data().begin());
      images.push_back(std::move(img));
    }
    return images;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("predict request: ") + e.what());
  }
}

nlohmann::json encode_predict_response(const ProbRows& rows) { return {{"probs", rows}}; }

ProbRows decode_predict_response(const nlohmann::json& body) {
  try {
    return body.at("probs").get<ProbRows>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("predict response: ") + e.what());
  }
}

nlohmann::json encode_meta(std::size_t num_classes, const Shape3& shape) {
  return {{"num_classes", num_classes}, {"shape", {shape.channels, shape.height, shape.width}}};
}

}  // namespace wire

}  // namespace ptune
