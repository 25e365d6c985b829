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


#include "ptune/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "ptune/error.hpp"

namespace ptune::spectral {

namespace {

void require_finite(const Matrix& m, const char* op) {
  if (m.rows() == 0 || m.cols() == 0) {
    throw InvalidInput(std::string(op) + ": empty matrix");
  }
  for (double v : m.data()) {
    if (!std::isfinite(v)) throw InvalidInput(std::string(op) + ": non-finite entry");
  }
}

// out = a * b
Matrix multiply(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) row[j] += aik * brow[j];
    }
  }
  return out;
}

// out = a * b^T
Matrix multiply_bt(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
      out(i, j) = acc;
    }
  }
  return out;
}

// out = a^T * b
Matrix multiply_at(const Matrix& a, const Matrix& b) {
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* brow = b.row(k);
    // Embedded low-frequency grids are mostly zero rows.
    if (std::all_of(brow, brow + b.cols(), [](double v) { return v == 0.0; })) continue;
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* row = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) row[j] += aki * brow[j];
    }
  }
  return out;
}

}  // namespace

const Matrix& dct_basis(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::unique_ptr<const Matrix>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    auto basis = std::make_unique<Matrix>(n, n);
    const double nn = static_cast<double>(n);
    for (std::size_t u = 0; u < n; ++u) {
      const double alpha = u == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
      for (std::size_t x = 0; x < n; ++x) {
        (*basis)(u, x) = alpha * std::cos((2.0 * static_cast<double>(x) + 1.0) *
                                          static_cast<double>(u) * std::numbers::pi / (2.0 * nn));
      }
    }
    slot = std::move(basis);
  }
  return *slot;
}

CoeffGrid dct2(const Matrix& channel) {
  require_finite(channel, "dct2");
  const Matrix& ch = dct_basis(channel.rows());
  const Matrix& cw = dct_basis(channel.cols());
  return multiply_bt(multiply(ch, channel), cw);
}

Matrix idct2(const CoeffGrid& coeffs) {
  require_finite(coeffs, "idct2");
  const Matrix& ch = dct_basis(coeffs.rows());
  const Matrix& cw = dct_basis(coeffs.cols());
  return multiply(multiply_at(ch, coeffs), cw);
}

CoeffGrid embed_low_frequency(const CoeffGrid& small, std::size_t height, std::size_t width) {
  if (small.rows() > height || small.cols() > width) {
    throw DimensionError("embed_low_frequency: block " + std::to_string(small.rows()) + "x" +
                         std::to_string(small.cols()) + " exceeds target " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
  CoeffGrid out(height, width);
  for (std::size_t r = 0; r < small.rows(); ++r) {
    for (std::size_t c = 0; c < small.cols(); ++c) out(r, c) = small(r, c);
  }
  return out;
}

}  // namespace ptune::spectral
