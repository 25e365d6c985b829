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

#include "ptune/tensor.hpp"

// Orthonormal 2D DCT-II over single channels.
//
//   D(u, v) = a(u) a(v) sum_x sum_y f(x, y) cos[(2x+1) u pi / 2n_h] cos[(2y+1) v pi / 2n_w]
//
// with a(0) = sqrt(1/n) and a(k > 0) = sqrt(2/n) per axis. Low frequencies sit
// in the top-left corner of the coefficient grid.
namespace ptune::spectral {

/// Frequency coefficients of one channel; same shape as the source matrix.
using CoeffGrid = Matrix;

/// Forward transform, applied separably (columns then rows) as two matrix
/// products with a cached cosine basis.
CoeffGrid dct2(const Matrix& channel);

/// Inverse of dct2.
Matrix idct2(const CoeffGrid& coeffs);

/// Zero-pad `small` on the bottom and right so it occupies the low-frequency
/// corner of a (height, width) grid.
CoeffGrid embed_low_frequency(const CoeffGrid& small, std::size_t height, std::size_t width);

/// The n x n orthonormal DCT-II basis, row u holding a(u) cos((2x+1) u pi / 2n).
const Matrix& dct_basis(std::size_t n);

}  // namespace ptune::spectral
