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
#include <span>
#include <string>
#include <vector>

namespace ptune {

struct Shape3 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return channels * height * width; }
  bool operator==(const Shape3&) const = default;
  std::string str() const;
};

/// Channel-major (c, h, w) image with float pixels, nominally in [0, 1].
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(std::size_t channels, std::size_t height, std::size_t width, float fill = 0.0f);
  explicit ImageTensor(Shape3 shape, float fill = 0.0f)
      : ImageTensor(shape.channels, shape.height, shape.width, fill) {}

  std::size_t channels() const { return shape_.channels; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  const Shape3& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(std::size_t c, std::size_t y, std::size_t x) {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return data_[(c * shape_.height + y) * shape_.width + x];
  }

  std::span<float> plane(std::size_t c) {
    return {data_.data() + c * shape_.height * shape_.width, shape_.height * shape_.width};
  }
  std::span<const float> plane(std::size_t c) const {
    return {data_.data() + c * shape_.height * shape_.width, shape_.height * shape_.width};
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  bool operator==(const ImageTensor&) const = default;

 private:
  Shape3 shape_{};
  std::vector<float> data_;
};

/// Dense row-major real matrix used for per-channel spectral work.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Extract channel `c` of an image as a double matrix.
Matrix channel_matrix(const ImageTensor& image, std::size_t c);

/// Write a matrix into channel `c` of an image (shapes must agree).
void set_channel(ImageTensor& image, std::size_t c, const Matrix& m);

/// Clamp every pixel into [0, 1].
void clamp_unit(ImageTensor& image);

/// Bilinear resampling with half-pixel centers (align_corners = false).
ImageTensor resize_bilinear(const ImageTensor& image, std::size_t height, std::size_t width);

/// Copy `image` into the center of a zero canvas of the given size.
ImageTensor pad_center(const ImageTensor& image, std::size_t height, std::size_t width);

/// Labeled image collection.
struct Dataset {
  std::vector<ImageTensor> images;
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return images.size(); }
  Dataset subset(std::span<const std::size_t> indices) const;
};

}  // namespace ptune
