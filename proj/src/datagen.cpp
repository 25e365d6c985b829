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


#include "ptune/datagen.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ptune/error.hpp"
#include "ptune/rng.hpp"

namespace ptune::datagen {

std::array<bool, 7> segments(int digit) {
  //                                      a      b      c      d      e      f      g
  static constexpr std::array<std::array<bool, 7>, 10> kTable{{
      {true, true, true, true, true, true, false},       // 0
      {false, true, true, false, false, false, false},   // 1
      {true, true, false, true, true, false, true},      // 2
      {true, true, true, true, false, false, true},      // 3
      {false, true, true, false, false, true, true},     // 4
      {true, false, true, true, false, true, true},      // 5
      {true, false, true, true, true, true, true},       // 6
      {true, true, true, false, false, false, false},    // 7
      {true, true, true, true, true, true, true},        // 8
      {true, true, true, true, false, true, true},       // 9
  }};
  if (digit < 0 || digit > 9) throw InvalidInput("digit " + std::to_string(digit) + " out of range");
  return kTable[static_cast<std::size_t>(digit)];
}

ImageTensor render_glyph(const GlyphSpec& spec) {
  const auto lit = segments(spec.digit);
  if (spec.canvas < 8 || spec.thickness == 0) {
    throw InvalidInput("render_glyph: canvas must be >= 8 and thickness positive");
  }
  const auto n = static_cast<double>(spec.canvas);
  const auto left = static_cast<long>(std::lround(0.25 * n));
  const auto right = static_cast<long>(std::lround(0.75 * n));
  const auto top = static_cast<long>(std::lround(0.15 * n));
  const auto bottom = static_cast<long>(std::lround(0.85 * n));
  const long mid = (top + bottom) / 2;
  const auto t = static_cast<long>(spec.thickness);

  struct Box {
    long y0, y1, x0, x1;
  };
  const std::array<Box, 7> boxes{{
      {top, top + t, left, right},                      // a
      {top, mid, right - t, right},                     // b
      {mid, bottom, right - t, right},                  // c
      {bottom - t, bottom, left, right},                // d
      {mid, bottom, left, left + t},                    // e
      {top, mid, left, left + t},                       // f
      {mid - t / 2, mid - t / 2 + t, left, right},      // g
  }};

  ImageTensor out(1, spec.canvas, spec.canvas);
  const auto size = static_cast<long>(spec.canvas);
  for (std::size_t s = 0; s < 7; ++s) {
    if (!lit[s]) continue;
    const Box& b = boxes[s];
    for (long y = b.y0 + spec.dy; y < b.y1 + spec.dy; ++y) {
      if (y < 0 || y >= size) continue;
      for (long x = b.x0 + spec.dx; x < b.x1 + spec.dx; ++x) {
        if (x < 0 || x >= size) continue;
        out.at(0, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = 1.0f;
      }
    }
  }
  return out;
}

const std::array<Color, kDigits>& palette() {
  static const std::array<Color, kDigits> kPalette{{
      {0.0f, 0.0f, 0.0f},
      {1.0f, 0.0f, 0.0f},
      {0.0f, 1.0f, 0.0f},
      {0.0f, 0.0f, 1.0f},
      {1.0f, 1.0f, 0.0f},
      {1.0f, 0.0f, 1.0f},
      {0.0f, 1.0f, 1.0f},
      {0.5f, 0.5f, 0.0f},
      {0.5f, 0.0f, 0.5f},
      {0.0f, 0.5f, 0.5f},
  }};
  return kPalette;
}

namespace {

GlyphSpec jittered(int digit, std::size_t canvas, Rng& rng) {
  GlyphSpec g;
  g.digit = digit;
  g.canvas = canvas;
  g.thickness = 2 + static_cast<std::size_t>(rng.below(3));
  g.dx = static_cast<int>(rng.below(5)) - 2;
  g.dy = static_cast<int>(rng.below(5)) - 2;
  return g;
}

ImageTensor colorize(const ImageTensor& glyph, const Color& background) {
  ImageTensor out(3, glyph.height(), glyph.width());
  for (std::size_t c = 0; c < 3; ++c) {
    auto dst = out.plane(c);
    auto src = glyph.plane(0);
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] > 0.5f ? 1.0f : background[c];
  }
  return out;
}

void blit_max(ImageTensor& canvas, const ImageTensor& glyph, std::size_t y0, std::size_t x0,
              std::size_t scale) {
  for (std::size_t y = 0; y < glyph.height() * scale; ++y) {
    for (std::size_t x = 0; x < glyph.width() * scale; ++x) {
      const float v = glyph.at(0, y / scale, x / scale);
      for (std::size_t c = 0; c < canvas.channels(); ++c) {
        float& dst = canvas.at(c, y0 + y, x0 + x);
        dst = std::max(dst, v);
      }
    }
  }
}

}  // namespace

GeneratedSet clean_dataset(std::size_t n_per_class, std::uint64_t seed, std::size_t canvas) {
  Rng rng(seed);
  GeneratedSet out;
  out.data.num_classes = kDigits;
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (int d = 0; d < static_cast<int>(kDigits); ++d) {
      out.data.images.push_back(colorize(render_glyph(jittered(d, canvas, rng)), palette()[0]));
      out.data.labels.push_back(d);
      out.info.push_back({0, -1, -1});
    }
  }
  return out;
}

GeneratedSet biased_dataset(const ShiftSpec& spec) {
  if (!(spec.rho >= 0.0 && spec.rho <= 1.0)) throw InvalidInput("biased_dataset: rho outside [0, 1]");
  const double match = spec.split == Split::train ? spec.rho : 1.0 - spec.rho;
  Rng rng(spec.seed);
  GeneratedSet out;
  out.data.num_classes = kDigits;
  for (std::size_t i = 0; i < spec.n_per_class; ++i) {
    for (int d = 0; d < static_cast<int>(kDigits); ++d) {
      int color = d;
      if (rng.uniform() >= match) {
        color = static_cast<int>(rng.below(kDigits - 1));
        if (color >= d) ++color;
      }
      const GlyphSpec g = jittered(d, 28, rng);
      out.data.images.push_back(colorize(render_glyph(g), palette()[static_cast<std::size_t>(color)]));
      out.data.labels.push_back(d);
      out.info.push_back({color, -1, -1});
    }
  }
  return out;
}

GeneratedSet loc_dataset(const ShiftSpec& spec) {
  const std::size_t scale = spec.ratio == LocRatio::one_to_four ? 4 : 1;
  Rng rng(spec.seed);
  GeneratedSet out;
  out.data.num_classes = kDigits;
  const std::size_t far = kLocCanvas - kLocGlyph;
  const std::size_t centered = far / 2;
  for (std::size_t i = 0; i < spec.n_per_class; ++i) {
    for (int d = 0; d < static_cast<int>(kDigits); ++d) {
      ImageTensor canvas(3, kLocCanvas, kLocCanvas);
      const int edge = static_cast<int>(rng.below(4));
      int distractor = static_cast<int>(rng.below(kDigits - 1));
      if (distractor >= d) ++distractor;

      const ImageTensor target = render_glyph({d, kLocGlyph, 2, 0, 0});
      const std::array<std::pair<std::size_t, std::size_t>, 4> corner{{
          {0, centered}, {far, centered}, {centered, 0}, {centered, far}}};
      blit_max(canvas, target, corner[static_cast<std::size_t>(edge)].first,
               corner[static_cast<std::size_t>(edge)].second, 1);

      const ImageTensor fake = render_glyph({distractor, kLocGlyph, 2, 0, 0});
      const std::size_t offset = (kLocCanvas - kLocGlyph * scale) / 2;
      blit_max(canvas, fake, offset, offset, scale);

      out.data.images.push_back(std::move(canvas));
      out.data.labels.push_back(d);
      out.info.push_back({-1, edge, distractor});
    }
  }
  return out;
}

GeneratedSet generate(const ShiftSpec& spec) {
  return spec.kind == ShiftKind::biased ? biased_dataset(spec) : loc_dataset(spec);
}

FewShotSplit few_shot_split(const Dataset& data, std::size_t shots_train, std::size_t shots_val,
                            std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(data.num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int y = data.labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= data.num_classes) {
      throw InvalidDataset("few_shot_split: label out of range");
    }
    by_class[static_cast<std::size_t>(y)].push_back(i);
  }
  Rng rng(seed);
  FewShotSplit out;
  for (std::size_t k = 0; k < by_class.size(); ++k) {
    auto& idx = by_class[k];
    if (idx.size() < shots_train + shots_val) {
      throw InvalidDataset("few_shot_split: class " + std::to_string(k) + " has " +
                           std::to_string(idx.size()) + " examples, need " +
                           std::to_string(shots_train + shots_val));
    }
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
      std::swap(idx[i], idx[static_cast<std::size_t>(rng.below(i + 1))]);
    }
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(shots_train));
    out.val.insert(out.val.end(), idx.begin() + static_cast<std::ptrdiff_t>(shots_train),
                   idx.begin() + static_cast<std::ptrdiff_t>(shots_train + shots_val));
    out.remainder.insert(out.remainder.end(),
                         idx.begin() + static_cast<std::ptrdiff_t>(shots_train + shots_val), idx.end());
  }
  return out;
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::string& file) {
  if (bytes.size() < offset + 4) {
    throw FormatError(file + ": truncated header", bytes.size());
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);
  const std::string iname = images_path.filename().string();
  const std::string lname = labels_path.filename().string();

  if (read_be32(img, 0, iname) != 0x00000803u) throw FormatError(iname + ": bad image magic", 0);
  if (read_be32(lab, 0, lname) != 0x00000801u) throw FormatError(lname + ": bad label magic", 0);
  const std::size_t n = read_be32(img, 4, iname);
  const std::size_t rows = read_be32(img, 8, iname);
  const std::size_t cols = read_be32(img, 12, iname);
  const std::size_t n_labels = read_be32(lab, 4, lname);
  if (n != n_labels) {
    throw FormatError(lname + ": " + std::to_string(n_labels) + " labels for " +
                      std::to_string(n) + " images", 4);
  }
  if (img.size() < 16 + n * rows * cols) {
    throw FormatError(iname + ": truncated pixel payload", img.size());
  }
  if (lab.size() < 8 + n) throw FormatError(lname + ": truncated label payload", lab.size());

  Dataset out;
  int max_label = -1;
  for (std::size_t i = 0; i < n; ++i) {
    ImageTensor t(1, rows, cols);
    const unsigned char* src = img.data() + 16 + i * rows * cols;
    auto dst = t.data();
    for (std::size_t p = 0; p < rows * cols; ++p) dst[p] = static_cast<float>(src[p]) / 255.0f;
    out.images.push_back(std::move(t));
    out.labels.push_back(static_cast<int>(lab[8 + i]));
    max_label = std::max(max_label, out.labels.back());
  }
  out.num_classes = static_cast<std::size_t>(std::max(max_label + 1, 0));
  return out;
}

void export_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  if (data.images.empty()) throw InvalidDataset("export_dataset: empty dataset");
  const Shape3 shape = data.images.front().shape();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.images[i].shape() != shape) throw DimensionError("export_dataset: mixed shapes");
    std::ostringstream name;
    name << std::setw(6) << std::setfill('0') << i << ".bin";
    std::ofstream out(dir / name.str(), std::ios::binary);
    for (float v : data.images[i].data()) {
      auto bits = std::bit_cast<std::uint32_t>(v);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    if (!out) throw InvalidInput("export_dataset: write failed for " + name.str());
  }
  const nlohmann::json manifest = {{"n", data.size()},
                                   {"shape", {shape.channels, shape.height, shape.width}},
                                   {"labels", data.labels}};
  std::ofstream(dir / "manifest.json") << manifest.dump() << '\n';
}

Dataset import_dataset(const std::filesystem::path& dir) {
  std::ifstream mf(dir / "manifest.json");
  if (!mf) throw InvalidInput("import_dataset: no manifest in " + dir.string());
  const auto manifest = nlohmann::json::parse(mf);
  const auto shape = manifest.at("shape").get<std::vector<std::size_t>>();
  Dataset out;
  out.labels = manifest.at("labels").get<std::vector<int>>();
  const auto n = manifest.at("n").get<std::size_t>();
  int max_label = -1;
  for (std::size_t i = 0; i < n; ++i) {
    std::ostringstream name;
    name << std::setw(6) << std::setfill('0') << i << ".bin";
    const auto bytes = read_file(dir / name.str());
    ImageTensor t(shape.at(0), shape.at(1), shape.at(2));
    if (bytes.size() != t.size() * 4) throw FormatError(name.str() + ": wrong size", bytes.size());
    auto dst = t.data();
    for (std::size_t p = 0; p < dst.size(); ++p) {
      std::uint32_t bits;
      std::memcpy(&bits, bytes.data() + 4 * p, 4);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      dst[p] = std::bit_cast<float>(bits);
    }
    out.images.push_back(std::move(t));
  }
  for (int y : out.labels) max_label = std::max(max_label, y);
  out.num_classes = static_cast<std::size_t>(max_label + 1);
  return out;
}

ShiftKind parse_kind(const std::string& s) {
  if (s == "biased") return ShiftKind::biased;
  if (s == "loc") return ShiftKind::loc;
  throw ConfigError("unknown dataset kind '" + s + "'");
}

LocRatio parse_ratio(const std::string& s) {
  if (s == "1:1") return LocRatio::one_to_one;
  if (s == "1:4") return LocRatio::one_to_four;
  throw ConfigError("unknown loc ratio '" + s + "' (expected 1:1 or 1:4)");
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split '" + s + "'");
}

}  // namespace ptune::datagen
