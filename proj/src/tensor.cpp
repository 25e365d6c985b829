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


#include "ptune/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "ptune/error.hpp"

namespace ptune {

std::string Shape3::str() const {
  return "(" + std::to_string(channels) + ", " + std::to_string(height) + ", " +
         std::to_string(width) + ")";
}

ImageTensor::ImageTensor(std::size_t channels, std::size_t height, std::size_t width, float fill)
    : shape_{channels, height, width}, data_(channels * height * width, fill) {}

Matrix channel_matrix(const ImageTensor& image, std::size_t c) {
  Matrix m(image.height(), image.width());
  auto src = image.plane(c);
  std::copy(src.begin(), src.end(), m.data().begin());
  return m;
}

void set_channel(ImageTensor& image, std::size_t c, const Matrix& m) {
  if (m.rows() != image.height() || m.cols() != image.width()) {
    throw DimensionError("set_channel: matrix " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + " does not fit image " + image.shape().str());
  }
  auto dst = image.plane(c);
  auto src = m.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(src[i]);
}

void clamp_unit(ImageTensor& image) {
  for (float& v : image.data()) v = std::clamp(v, 0.0f, 1.0f);
}

namespace {

struct Tap {
  std::size_t lo, hi;
  float w_hi;
};

std::vector<Tap> bilinear_taps(std::size_t src, std::size_t dst) {
  std::vector<Tap> taps(dst);
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  for (std::size_t i = 0; i < dst; ++i) {
    double s = (static_cast<double>(i) + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    auto lo = static_cast<std::size_t>(std::floor(s));
    std::size_t hi = std::min(lo + 1, src - 1);
    taps[i] = {lo, hi, static_cast<float>(s - static_cast<double>(lo))};
  }
  return taps;
}

}  // namespace

ImageTensor resize_bilinear(const ImageTensor& image, std::size_t height, std::size_t width) {
  if (image.empty() || height == 0 || width == 0) {
    throw DimensionError("resize_bilinear: empty source or target");
  }
  if (image.height() == height && image.width() == width) return image;
  const auto ty = bilinear_taps(image.height(), height);
  const auto tx = bilinear_taps(image.width(), width);
  ImageTensor out(image.channels(), height, width);
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t y = 0; y < height; ++y) {
      const auto [y0, y1, wy] = ty[y];
      for (std::size_t x = 0; x < width; ++x) {
        const auto [x0, x1, wx] = tx[x];
        const float top = image.at(c, y0, x0) * (1.0f - wx) + image.at(c, y0, x1) * wx;
        const float bot = image.at(c, y1, x0) * (1.0f - wx) + image.at(c, y1, x1) * wx;
        out.at(c, y, x) = top * (1.0f - wy) + bot * wy;
      }
    }
  }
  return out;
}

ImageTensor pad_center(const ImageTensor& image, std::size_t height, std::size_t width) {
  if (image.height() > height || image.width() > width) {
    throw DimensionError("pad_center: image " + image.shape().str() + " larger than canvas");
  }
  ImageTensor out(image.channels(), height, width);
  const std::size_t oy = (height - image.height()) / 2;
  const std::size_t ox = (width - image.width()) / 2;
  for (std::size_t c = 0; c < image.channels(); ++c) {
    for (std::size_t y = 0; y < image.height(); ++y) {
      auto src = image.plane(c).subspan(y * image.width(), image.width());
      std::copy(src.begin(), src.end(), &out.at(c, oy + y, ox));
    }
  }
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  out.images.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    out.images.push_back(images.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

}  // namespace ptune
