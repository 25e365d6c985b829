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
#include <vector>

#include "ptune/rng.hpp"
#include "ptune/tensor.hpp"

namespace ptune {

/// Canvas sizes for prompting. The oracle sees (channels, full_h, full_w); the
/// input image is resized to (resized_h, resized_w) and centered inside it; the
/// frequency prompt covers the top-left (freq_h, freq_w) block of the DCT grid.
struct Geometry {
  std::size_t full_h = 224;
  std::size_t full_w = 224;
  std::size_t resized_h = 192;
  std::size_t resized_w = 192;
  std::size_t freq_h = 56;
  std::size_t freq_w = 56;
  std::size_t channels = 3;

  /// Throws ConfigError unless freq <= resized < full and full - resized is even.
  void validate() const;

  Shape3 full_shape() const { return {channels, full_h, full_w}; }
  Shape3 resized_shape() const { return {channels, resized_h, resized_w}; }
  Shape3 freq_shape() const { return {channels, freq_h, freq_w}; }

  /// Resize target by source resolution: 192 when the smaller side is at least
  /// 160 pixels, otherwise 112. Applied to the default 224 canvas.
  static std::size_t resize_target_for(std::size_t min_side);

  bool operator==(const Geometry&) const = default;
};

/// Shape of the upsampling decoder. The trunk starts from a grid x grid map
/// with 2 * grid_channels channels (both trigger vectors) and doubles its
/// resolution once per block until it covers the full canvas; `widths[b]` is
/// the output width of block b.
struct DecoderConfig {
  std::size_t grid = 7;
  std::size_t grid_channels = 8;
  std::vector<std::size_t> widths{12, 8, 8, 4, 2};

  std::size_t trigger_length() const { return grid * grid * grid_channels; }
  bool operator==(const DecoderConfig&) const = default;
};

/// Resolved layer layout for one (Geometry, DecoderConfig) pair.
struct DecoderLayout {
  std::size_t blocks = 0;       // upsample-conv blocks in the trunk
  std::size_t tap_block = 0;    // block whose output feeds the frequency head
  std::size_t trunk_size = 0;   // spatial size after the last block
  std::size_t decoder_params = 0;

  static DecoderLayout resolve(const Geometry& geom, const DecoderConfig& cfg);
};

/// Every trainable scalar of the prompter.
struct PrompterParams {
  std::vector<double> decoder;
  std::vector<double> trigger_main;
  std::vector<double> trigger_spatial;
  double freq_scale = -5.0;

  bool operator==(const PrompterParams&) const = default;
};

std::size_t parameter_count(const Geometry& geom, const DecoderConfig& cfg);

/// Segment sizes in flatten order: decoder, trigger_main, trigger_spatial, freq_scale.
std::vector<std::size_t> parameter_shape(const Geometry& geom, const DecoderConfig& cfg);

std::vector<double> flatten(const PrompterParams& params);
PrompterParams unflatten(std::span<const double> flat, const Geometry& geom,
                         const DecoderConfig& cfg);

/// All-zero parameters; both prompts decode to zero.
PrompterParams zero_params(const Geometry& geom, const DecoderConfig& cfg);

/// He-scaled random convolution weights, small output heads, unit-normal
/// triggers and freq_scale = -5.
PrompterParams init_params(const Geometry& geom, const DecoderConfig& cfg, Rng& rng);

struct PromptPair {
  ImageTensor freq_vp;     // (channels, freq_h, freq_w)
  ImageTensor spatial_vp;  // (channels, full_h, full_w)
};

/// Deterministic decoder forward pass. Both outputs lie in [-1, 1].
PromptPair decode(const PrompterParams& params, const Geometry& geom, const DecoderConfig& cfg);

double sigmoid(double x);

/// Per channel: idct2(dct2(resized) + sigmoid(freq_scale) * pad(dct2(freq_vp))),
/// clamped to [0, 1].
ImageTensor apply_frequency_prompt(const ImageTensor& resized, const ImageTensor& freq_vp,
                                   double freq_scale);

/// Zero-pad `prompted_resized` to the full canvas and add `spatial_vp` with its
/// center (the resized footprint) masked out; clamped to [0, 1].
ImageTensor apply_spatial_prompt(const ImageTensor& prompted_resized,
                                 const ImageTensor& spatial_vp, const Geometry& geom);

/// Full pipeline for one image of any spatial size.
ImageTensor prompt(const PrompterParams& params, const Geometry& geom, const DecoderConfig& cfg,
                   const ImageTensor& image);

/// Resize + center pad, no prompt. This is what the oracle sees at zero prompt.
ImageTensor place_unprompted(const ImageTensor& image, const Geometry& geom);

/// Decodes once and applies the same prompts to many images. The frequency
/// prompt is image-independent, so its pixel-space contribution
/// sigmoid(s) * idct2(pad(dct2(V_f))) is precomputed; by linearity of the
/// transform the result matches apply_frequency_prompt up to rounding.
class PromptApplier {
 public:
  PromptApplier(const PrompterParams& params, const Geometry& geom, const DecoderConfig& cfg);

  /// `resized` must already be (channels, resized_h, resized_w).
  ImageTensor apply_resized(const ImageTensor& resized) const;
  ImageTensor apply(const ImageTensor& image) const;

  const PromptPair& prompts() const { return prompts_; }
  const ImageTensor& frequency_delta() const { return freq_delta_; }

 private:
  Geometry geom_;
  PromptPair prompts_;
  ImageTensor freq_delta_;
  ImageTensor frame_;
};

}  // namespace ptune
