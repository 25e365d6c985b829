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


#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

#include "helpers.hpp"
#include "ptune/datagen.hpp"
#include "ptune/error.hpp"

using namespace ptune;
using namespace ptune::datagen;

namespace {

std::size_t lit(const ImageTensor& t) {
  return static_cast<std::size_t>(std::count_if(t.data().begin(), t.data().end(), [](float v) { return v > 0.5f; }));
}

double match_rate(const GeneratedSet& set) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < set.info.size(); ++i) hits += set.info[i].color == set.data.labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(set.info.size());
}

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<unsigned char>(v >> s));
}

void write_bytes(const std::filesystem::path& p, const std::vector<unsigned char>& bytes) {
  std::ofstream(p, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                           static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("seven-segment table") {
  const auto eight = segments(8);
  CHECK(std::all_of(eight.begin(), eight.end(), [](bool b) { return b; }));
  const auto one = segments(1);
  CHECK(one == std::array<bool, 7>{false, true, true, false, false, false, false});
  CHECK_THROWS_AS(segments(10), InvalidInput);
  CHECK_THROWS_AS(render_glyph({-1}), InvalidInput);
}

TEST_CASE("glyphs are binary and pairwise distinct") {
  std::vector<ImageTensor> glyphs;
  for (int d = 0; d < 10; ++d) {
    glyphs.push_back(render_glyph({d}));
    for (float v : glyphs.back().data()) CHECK((v == 0.0f || v == 1.0f));
    CHECK(render_glyph({d}) == glyphs.back());
  }
  for (int a = 0; a < 10; ++a) {
    for (int b = a + 1; b < 10; ++b) {
      std::size_t hamming = 0;
      for (std::size_t i = 0; i < glyphs[static_cast<std::size_t>(a)].size(); ++i) {
        hamming += glyphs[static_cast<std::size_t>(a)].data()[i] != glyphs[static_cast<std::size_t>(b)].data()[i];
      }
      CHECK(hamming > 0);
    }
  }
  // The lit pixels of 1 all lie in the right half.
  const ImageTensor one = glyphs[1];
  for (std::size_t y = 0; y < 28; ++y) {
    for (std::size_t x = 0; x < 14; ++x) CHECK(one.at(0, y, x) == 0.0f);
  }
}

TEST_CASE("palette separation") {
  const auto& pal = palette();
  double closest = 1e9;
  for (std::size_t a = 0; a < pal.size(); ++a) {
    for (std::size_t b = a + 1; b < pal.size(); ++b) {
      double d = 0.0;
      for (int c = 0; c < 3; ++c) d += (pal[a][c] - pal[b][c]) * (pal[a][c] - pal[b][c]);
      closest = std::min(closest, std::sqrt(d));
    }
  }
  CHECK(closest > kPaletteFloor);
}

TEST_CASE("biased backgrounds follow rho") {
  ShiftSpec spec;
  spec.rho = 1.0;
  spec.n_per_class = 20;
  const auto full = biased_dataset(spec);
  CHECK(full.data.size() == 200);
  for (std::size_t i = 0; i < full.data.size(); ++i) {
    const auto& col = palette()[static_cast<std::size_t>(full.data.labels[i])];
    CHECK(full.info[i].color == full.data.labels[i]);
    for (int c = 0; c < 3; ++c) CHECK(full.data.images[i].at(static_cast<std::size_t>(c), 0, 0) == col[static_cast<std::size_t>(c)]);
  }

  spec.rho = 0.9;
  spec.n_per_class = 1000;
  spec.seed = 3;
  const auto train = biased_dataset(spec);
  CHECK(std::abs(match_rate(train) - 0.9) <= 0.02);
  spec.split = Split::test;
  const auto test = biased_dataset(spec);
  CHECK(std::abs(match_rate(test) - 0.1) <= 0.02);
  for (std::size_t i = 0; i < test.info.size(); i += 97) {
    const auto& col = palette()[static_cast<std::size_t>(test.info[i].color)];
    CHECK(test.data.images[i].at(1, 0, 0) == col[1]);
  }
  for (const auto& img : test.data.images) {
    for (float v : img.data()) {
      if (v < 0.0f || v > 1.0f) FAIL("pixel out of range");
    }
  }
}

TEST_CASE("generators are pure functions of their inputs") {
  ShiftSpec spec;
  spec.n_per_class = 5;
  spec.seed = 42;
  CHECK(generate(spec).data.images == generate(spec).data.images);
  spec.kind = ShiftKind::loc;
  CHECK(generate(spec).data.images == generate(spec).data.images);
  spec.seed = 43;
  ShiftSpec other = spec;
  other.seed = 44;
  CHECK_FALSE(generate(spec).data.images == generate(other).data.images);
}

TEST_CASE("loc placement") {
  ShiftSpec spec;
  spec.kind = ShiftKind::loc;
  spec.n_per_class = 3;
  for (LocRatio ratio : {LocRatio::one_to_one, LocRatio::one_to_four}) {
    spec.ratio = ratio;
    const std::size_t scale = ratio == LocRatio::one_to_four ? 4 : 1;
    const auto set = loc_dataset(spec);
    for (std::size_t i = 0; i < set.data.size(); ++i) {
      const ImageTensor& img = set.data.images[i];
      const SampleInfo& info = set.info[i];
      CHECK(img.shape() == Shape3{3, kLocCanvas, kLocCanvas});
      CHECK(info.distractor != set.data.labels[i]);
      CHECK((info.edge >= 0 && info.edge < 4));
      // Distractor footprint: the scaled glyph, centered.
      const ImageTensor fake = render_glyph({info.distractor, kLocGlyph, 2});
      const std::size_t off = (kLocCanvas - kLocGlyph * scale) / 2;
      std::size_t center_lit = 0;
      for (std::size_t y = 0; y < kLocGlyph * scale; ++y) {
        for (std::size_t x = 0; x < kLocGlyph * scale; ++x) {
          center_lit += img.at(0, off + y, off + x) > 0.5f ? 1 : 0;
          CHECK(img.at(0, off + y, off + x) >= fake.at(0, y / scale, x / scale));
        }
      }
      CHECK(center_lit == lit(fake) * scale * scale);
      // Target glyph at the recorded edge.
      const ImageTensor target = render_glyph({set.data.labels[i], kLocGlyph, 2});
      const std::size_t far = kLocCanvas - kLocGlyph;
      const std::size_t mid = far / 2;
      const std::size_t ys[4] = {0, far, mid, mid};
      const std::size_t xs[4] = {mid, mid, 0, far};
      const auto e = static_cast<std::size_t>(info.edge);
      for (std::size_t y = 0; y < kLocGlyph; ++y) {
        for (std::size_t x = 0; x < kLocGlyph; ++x) {
          if (target.at(0, y, x) > 0.5f) CHECK(img.at(2, ys[e] + y, xs[e] + x) == 1.0f);
        }
      }
    }
  }
}

TEST_CASE("loc edges are uniform") {
  std::array<double, 4> counts{};
  ShiftSpec spec;
  spec.kind = ShiftKind::loc;
  spec.n_per_class = 20;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    spec.seed = seed;
    for (const auto& info : loc_dataset(spec).info) counts[static_cast<std::size_t>(info.edge)] += 1.0;
  }
  const double expected = 10000.0 / 4.0;
  double stat = 0.0;
  for (double c : counts) stat += (c - expected) * (c - expected) / expected;
  const double p = boost::math::cdf(boost::math::complement(boost::math::chi_squared(3.0), stat));
  CHECK(p > 0.01);
}

TEST_CASE("few-shot split") {
  ShiftSpec spec;
  spec.n_per_class = 25;
  const auto data = biased_dataset(spec).data;
  const auto split = few_shot_split(data, 16, 4, 7);
  CHECK(split.train.size() == 160);
  CHECK(split.val.size() == 40);
  CHECK(split.remainder.size() == 50);
  std::set<std::size_t> all(split.train.begin(), split.train.end());
  all.insert(split.val.begin(), split.val.end());
  all.insert(split.remainder.begin(), split.remainder.end());
  CHECK(all.size() == 250);
  std::array<int, 10> per{};
  for (std::size_t i : split.train) ++per[static_cast<std::size_t>(data.labels[i])];
  for (int n : per) CHECK(n == 16);
  const auto again = few_shot_split(data, 16, 4, 7);
  CHECK(again.train == split.train);
  CHECK(again.val == split.val);
  CHECK_FALSE(few_shot_split(data, 16, 4, 8).train == split.train);
  CHECK_THROWS_AS(few_shot_split(data, 20, 6, 7), InvalidDataset);
}

TEST_CASE("IDX parsing") {
  testing::TempDir dir("idx");
  const auto img_path = dir.path() / "images.idx";
  const auto lab_path = dir.path() / "labels.idx";
  std::vector<unsigned char> images;
  put_be32(images, 0x00000803);
  put_be32(images, 2);
  put_be32(images, 2);
  put_be32(images, 3);
  for (unsigned char v : {0, 255, 51, 102, 0, 0}) images.push_back(v);
  for (unsigned char v : {255, 255, 255, 0, 0, 0}) images.push_back(v);
  std::vector<unsigned char> labels;
  put_be32(labels, 0x00000801);
  put_be32(labels, 2);
  labels.push_back(7);
  labels.push_back(3);
  write_bytes(img_path, images);
  write_bytes(lab_path, labels);

  const Dataset d = load_idx(img_path, lab_path);
  REQUIRE(d.size() == 2);
  CHECK(d.images[0].shape() == Shape3{1, 2, 3});
  CHECK(d.images[0].at(0, 0, 1) == 1.0f);
  CHECK(d.images[0].at(0, 0, 2) == doctest::Approx(0.2f));
  CHECK(d.images[0].at(0, 1, 0) == doctest::Approx(0.4f));
  CHECK(d.images[1].at(0, 0, 2) == 1.0f);
  CHECK(d.images[1].at(0, 1, 2) == 0.0f);
  CHECK(d.labels == std::vector<int>{7, 3});

  SUBCASE("bad magic") {
    auto bad = images;
    bad[2] = 0;
    bad[3] = 0;
    write_bytes(img_path, bad);
    try {
      load_idx(img_path, lab_path);
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(e.offset() == 0);
    }
  }
  SUBCASE("count mismatch") {
    auto more = labels;
    more[7] = 3;
    more.push_back(1);
    write_bytes(lab_path, more);
    CHECK_THROWS_AS(load_idx(img_path, lab_path), FormatError);
  }
  SUBCASE("truncated payload") {
    auto cut = images;
    cut.pop_back();
    write_bytes(img_path, cut);
    try {
      load_idx(img_path, lab_path);
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(e.offset() == cut.size());
    }
  }
}

TEST_CASE("export and import round trip") {
  testing::TempDir dir("export");
  ShiftSpec spec;
  spec.n_per_class = 2;
  const auto data = biased_dataset(spec).data;
  export_dataset(data, dir.path());
  CHECK(std::filesystem::exists(dir.path() / "manifest.json"));
  CHECK(std::filesystem::exists(dir.path() / "000019.bin"));
  CHECK(std::filesystem::file_size(dir.path() / "000000.bin") == 3 * 28 * 28 * 4);
  const Dataset back = import_dataset(dir.path());
  CHECK(back.images == data.images);
  CHECK(back.labels == data.labels);
}
