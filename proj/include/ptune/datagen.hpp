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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ptune/tensor.hpp"

namespace ptune::datagen {

inline constexpr std::size_t kDigits = 10;

/// A seven-segment digit drawn on a square canvas. Segment boxes scale with
/// the canvas; (dx, dy) shifts the whole glyph.
struct GlyphSpec {
  int digit = 0;
  std::size_t canvas = 28;
  std::size_t thickness = 3;
  int dx = 0;
  int dy = 0;
};

/// Segments a..g (top, upper right, lower right, bottom, lower left, upper
/// left, middle) lit for `digit`.
std::array<bool, 7> segments(int digit);

/// Binary single-channel rendering.
ImageTensor render_glyph(const GlyphSpec& spec);

using Color = std::array<float, 3>;

/// Background color per class. Minimum pairwise RGB distance is sqrt(0.5).
const std::array<Color, kDigits>& palette();

/// Documented lower bound on pairwise palette distance.
inline constexpr double kPaletteFloor = 0.5;

enum class Split { train, test };
enum class ShiftKind { biased, loc };
enum class LocRatio { one_to_one, one_to_four };

struct ShiftSpec {
  ShiftKind kind = ShiftKind::biased;
  double rho = 0.9;
  LocRatio ratio = LocRatio::one_to_one;
  Split split = Split::train;
  std::size_t n_per_class = 100;
  std::uint64_t seed = 0;
};

/// Per-sample metadata the generators record for statistics and tests.
struct SampleInfo {
  int color = -1;        // biased: palette index of the background
  int edge = -1;         // loc: 0 top, 1 bottom, 2 left, 3 right
  int distractor = -1;   // loc: digit drawn in the middle
};

struct GeneratedSet {
  Dataset data;
  std::vector<SampleInfo> info;
};

/// White glyph on a black 3-channel canvas with per-sample jitter (stroke 2-4,
/// shift +-2 px). This is the source distribution for the builtin oracle.
GeneratedSet clean_dataset(std::size_t n_per_class, std::uint64_t seed, std::size_t canvas = 28);

/// Colored-background glyphs. On the train split the background takes the
/// class color with probability rho, otherwise one of the other nine colors
/// uniformly; the test split uses 1 - rho.
GeneratedSet biased_dataset(const ShiftSpec& spec);

/// 112 x 112 canvas, target glyph centered along a uniformly chosen edge, a
/// different random digit in the middle at 1x or 4x the target's size.
GeneratedSet loc_dataset(const ShiftSpec& spec);

inline constexpr std::size_t kLocCanvas = 112;
inline constexpr std::size_t kLocGlyph = 16;

GeneratedSet generate(const ShiftSpec& spec);

struct FewShotSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> remainder;
};

/// Class-balanced, disjoint, seeded sampling without replacement.
FewShotSplit few_shot_split(const Dataset& data, std::size_t shots_train, std::size_t shots_val,
                            std::uint64_t seed);

/// Read an IDX image/label file pair (magic 0x00000803 / 0x00000801).
/// Pixels are scaled to [0, 1]; images are single-channel.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

/// Write NNNNNN.bin (raw little-endian float32, channel-major) per sample plus
/// manifest.json {"n":..,"shape":[c,h,w],"labels":[...]}.
void export_dataset(const Dataset& data, const std::filesystem::path& dir);
Dataset import_dataset(const std::filesystem::path& dir);

ShiftKind parse_kind(const std::string& s);
LocRatio parse_ratio(const std::string& s);
Split parse_split(const std::string& s);

}  // namespace ptune::datagen
