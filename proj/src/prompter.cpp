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


#include "ptune/prompter.hpp"

#include <algorithm>
#include <cmath>

#include "ptune/error.hpp"
#include "ptune/spectral.hpp"

namespace ptune {

void Geometry::validate() const {
  if (channels == 0 || freq_h == 0 || freq_w == 0) {
    throw ConfigError("geometry: channels and frequency block must be positive");
  }
  if (freq_h > resized_h || freq_w > resized_w) {
    throw ConfigError("geometry: frequency block larger than resized image");
  }
  if (resized_h >= full_h || resized_w >= full_w) {
    throw ConfigError("geometry: resized image must be smaller than the full canvas");
  }
  if ((full_h - resized_h) % 2 != 0 || (full_w - resized_w) % 2 != 0) {
    throw ConfigError("geometry: full - resized must be even for centered padding");
  }
}

std::size_t Geometry::resize_target_for(std::size_t min_side) {
  return min_side >= 160 ? 192 : 112;
}

DecoderLayout DecoderLayout::resolve(const Geometry& geom, const DecoderConfig& cfg) {
  if (cfg.grid == 0 || cfg.grid_channels == 0) {
    throw ConfigError("decoder: grid and grid_channels must be positive");
  }
  DecoderLayout layout;
  const std::size_t full = std::max(geom.full_h, geom.full_w);
  const std::size_t freq = std::max(geom.freq_h, geom.freq_w);
  std::size_t size = cfg.grid;
  while (size < full) {
    size *= 2;
    ++layout.blocks;
  }
  if (layout.blocks == 0) throw ConfigError("decoder: grid already covers the full canvas");
  if (cfg.widths.size() < layout.blocks) {
    throw ConfigError("decoder: " + std::to_string(layout.blocks) + " blocks needed but only " +
                      std::to_string(cfg.widths.size()) + " widths configured");
  }
  layout.trunk_size = size;
  size = cfg.grid;
  layout.tap_block = 0;
  for (std::size_t b = 0; b < layout.blocks; ++b) {
    size *= 2;
    if (size >= freq) {
      layout.tap_block = b;
      break;
    }
  }

  std::size_t in = 2 * cfg.grid_channels;
  std::size_t count = 0;
  for (std::size_t b = 0; b < layout.blocks; ++b) {
    const std::size_t out = cfg.widths[b];
    if (out == 0) throw ConfigError("decoder: zero block width");
    count += out * in * 9 + out;
    in = out;
  }
  count += geom.channels * in * 9 + geom.channels;                          // final conv
  count += geom.channels * cfg.widths[layout.tap_block] + geom.channels;    // 1x1 frequency head
  layout.decoder_params = count;
  return layout;
}

std::size_t parameter_count(const Geometry& geom, const DecoderConfig& cfg) {
  return DecoderLayout::resolve(geom, cfg).decoder_params + 2 * cfg.trigger_length() + 1;
}

std::vector<std::size_t> parameter_shape(const Geometry& geom, const DecoderConfig& cfg) {
  const std::size_t l = cfg.trigger_length();
  return {DecoderLayout::resolve(geom, cfg).decoder_params, l, l, 1};
}

std::vector<double> flatten(const PrompterParams& params) {
  std::vector<double> flat;
  flat.reserve(params.decoder.size() + params.trigger_main.size() +
               params.trigger_spatial.size() + 1);
  flat.insert(flat.end(), params.decoder.begin(), params.decoder.end());
  flat.insert(flat.end(), params.trigger_main.begin(), params.trigger_main.end());
  flat.insert(flat.end(), params.trigger_spatial.begin(), params.trigger_spatial.end());
  flat.push_back(params.freq_scale);
  return flat;
}

PrompterParams unflatten(std::span<const double> flat, const Geometry& geom,
                         const DecoderConfig& cfg) {
  const auto shape = parameter_shape(geom, cfg);
  const std::size_t expected = shape[0] + shape[1] + shape[2] + shape[3];
  if (flat.size() != expected) {
    throw ConfigError("unflatten: got " + std::to_string(flat.size()) + " values, expected " +
                      std::to_string(expected));
  }
  PrompterParams p;
  auto it = flat.begin();
  p.decoder.assign(it, it + static_cast<std::ptrdiff_t>(shape[0]));
  it += static_cast<std::ptrdiff_t>(shape[0]);
  p.trigger_main.assign(it, it + static_cast<std::ptrdiff_t>(shape[1]));
  it += static_cast<std::ptrdiff_t>(shape[1]);
  p.trigger_spatial.assign(it, it + static_cast<std::ptrdiff_t>(shape[2]));
  it += static_cast<std::ptrdiff_t>(shape[2]);
  p.freq_scale = *it;
  return p;
}

PrompterParams zero_params(const Geometry& geom, const DecoderConfig& cfg) {
  const auto shape = parameter_shape(geom, cfg);
  PrompterParams p;
  p.decoder.assign(shape[0], 0.0);
  p.trigger_main.assign(shape[1], 0.0);
  p.trigger_spatial.assign(shape[2], 0.0);
  p.freq_scale = 0.0;
  return p;
}

PrompterParams init_params(const Geometry& geom, const DecoderConfig& cfg, Rng& rng) {
  const auto layout = DecoderLayout::resolve(geom, cfg);
  PrompterParams p = zero_params(geom, cfg);
  std::size_t pos = 0;
  auto fill = [&](std::size_t n_weights, std::size_t n_bias, double stddev) {
    for (std::size_t i = 0; i < n_weights; ++i) p.decoder[pos++] = stddev * rng.normal();
    pos += n_bias;
  };
  std::size_t in = 2 * cfg.grid_channels;
  for (std::size_t b = 0; b < layout.blocks; ++b) {
    const std::size_t out = cfg.widths[b];
    fill(out * in * 9, out, std::sqrt(2.0 / static_cast<double>(in * 9)));
    in = out;
  }
  // Output heads start small so the initial prompts are mild.
  fill(geom.channels * in * 9, geom.channels, 0.1 * std::sqrt(1.0 / static_cast<double>(in * 9)));
  const std::size_t tap_width = cfg.widths[layout.tap_block];
  fill(geom.channels * tap_width, geom.channels,
       0.1 * std::sqrt(1.0 / static_cast<double>(tap_width)));
  for (double& v : p.trigger_main) v = rng.normal();
  for (double& v : p.trigger_spatial) v = rng.normal();
  p.freq_scale = -5.0;
  return p;
}

namespace {

struct FeatureMap {
  std::size_t channels = 0;
  std::size_t size = 0;
  std::vector<float> data;

  FeatureMap(std::size_t c, std::size_t s) : channels(c), size(s), data(c * s * s, 0.0f) {}
  float* plane(std::size_t c) { return data.data() + c * size * size; }
  const float* plane(std::size_t c) const { return data.data() + c * size * size; }
};

FeatureMap upsample2(const FeatureMap& in) {
  FeatureMap out(in.channels, in.size * 2);
  for (std::size_t c = 0; c < in.channels; ++c) {
    const float* src = in.plane(c);
    float* dst = out.plane(c);
    for (std::size_t y = 0; y < out.size; ++y) {
      const float* srow = src + (y / 2) * in.size;
      float* drow = dst + y * out.size;
      for (std::size_t x = 0; x < out.size; ++x) drow[x] = srow[x / 2];
    }
  }
  return out;
}

// 3x3 convolution, zero padding, stride 1. `w` is [out][in][3][3] followed by
// `out` biases.
FeatureMap conv3x3(const FeatureMap& in, std::size_t out_channels, const float* w) {
  const std::size_t s = in.size;
  const float* bias = w + out_channels * in.channels * 9;
  FeatureMap out(out_channels, s);
  for (std::size_t o = 0; o < out_channels; ++o) {
    float* dst = out.plane(o);
    std::fill(dst, dst + s * s, bias[o]);
    for (std::size_t i = 0; i < in.channels; ++i) {
      const float* src = in.plane(i);
      const float* k = w + (o * in.channels + i) * 9;
      for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const float kv = k[ky * 3 + kx];
          if (kv == 0.0f) continue;
          const std::size_t y_lo = ky == 0 ? 1 : 0;
          const std::size_t y_hi = ky == 2 ? s - 1 : s;
          const std::size_t x_lo = kx == 0 ? 1 : 0;
          const std::size_t x_hi = kx == 2 ? s - 1 : s;
          for (std::size_t y = y_lo; y < y_hi; ++y) {
            const float* srow = src + (y + ky - 1) * s;
            float* drow = dst + y * s;
            for (std::size_t x = x_lo; x < x_hi; ++x) drow[x] += kv * srow[x + kx - 1];
          }
        }
      }
    }
  }
  return out;
}

FeatureMap conv1x1(const FeatureMap& in, std::size_t out_channels, const float* w) {
  const std::size_t n = in.size * in.size;
  const float* bias = w + out_channels * in.channels;
  FeatureMap out(out_channels, in.size);
  for (std::size_t o = 0; o < out_channels; ++o) {
    float* dst = out.plane(o);
    std::fill(dst, dst + n, bias[o]);
    for (std::size_t i = 0; i < in.channels; ++i) {
      const float kv = w[o * in.channels + i];
      const float* src = in.plane(i);
      for (std::size_t p = 0; p < n; ++p) dst[p] += kv * src[p];
    }
  }
  return out;
}

void leaky_relu(FeatureMap& m) {
  for (float& v : m.data) v = v > 0.0f ? v : 0.2f * v;
}

ImageTensor tanh_crop(const FeatureMap& m, std::size_t h, std::size_t w) {
  const std::size_t oy = (m.size - h) / 2;
  const std::size_t ox = (m.size - w) / 2;
  ImageTensor out(m.channels, h, w);
  for (std::size_t c = 0; c < m.channels; ++c) {
    const float* src = m.plane(c);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        out.at(c, y, x) = std::tanh(src[(oy + y) * m.size + ox + x]);
      }
    }
  }
  return out;
}

void check_shape(const ImageTensor& t, const Shape3& want, const char* what) {
  if (t.shape() != want) {
    throw DimensionError(std::string(what) + ": expected " + want.str() + ", got " +
                         t.shape().str());
  }
}

}  // namespace

PromptPair decode(const PrompterParams& params, const Geometry& geom, const DecoderConfig& cfg) {
  geom.validate();
  const auto layout = DecoderLayout::resolve(geom, cfg);
  const std::size_t l = cfg.trigger_length();
  if (params.decoder.size() != layout.decoder_params || params.trigger_main.size() != l ||
      params.trigger_spatial.size() != l) {
    throw ConfigError("decode: parameter count does not match geometry/decoder config");
  }
  const std::vector<float> w(params.decoder.begin(), params.decoder.end());

  FeatureMap x(2 * cfg.grid_channels, cfg.grid);
  std::copy(params.trigger_main.begin(), params.trigger_main.end(), x.data.begin());
  std::copy(params.trigger_spatial.begin(), params.trigger_spatial.end(),
            x.data.begin() + static_cast<std::ptrdiff_t>(l));

  const float* cursor = w.data();
  std::size_t in = x.channels;
  PromptPair out;
  for (std::size_t b = 0; b < layout.blocks; ++b) {
    const std::size_t width = cfg.widths[b];
    x = conv3x3(upsample2(x), width, cursor);
    leaky_relu(x);
    cursor += width * in * 9 + width;
    in = width;
    if (b == layout.tap_block) {
      // Frequency head weights are stored after the final conv.
      const float* head = w.data() + layout.decoder_params -
                          (geom.channels * width + geom.channels);
      out.freq_vp = tanh_crop(conv1x1(x, geom.channels, head), geom.freq_h, geom.freq_w);
    }
  }
  out.spatial_vp = tanh_crop(conv3x3(x, geom.channels, cursor), geom.full_h, geom.full_w);
  return out;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

ImageTensor apply_frequency_prompt(const ImageTensor& resized, const ImageTensor& freq_vp,
                                   double freq_scale) {
  if (freq_vp.channels() != resized.channels() || freq_vp.height() > resized.height() ||
      freq_vp.width() > resized.width()) {
    throw DimensionError("apply_frequency_prompt: prompt " + freq_vp.shape().str() +
                         " incompatible with image " + resized.shape().str());
  }
  const double scale = sigmoid(freq_scale);
  ImageTensor out(resized.shape());
  for (std::size_t c = 0; c < resized.channels(); ++c) {
    spectral::CoeffGrid coeffs = spectral::dct2(channel_matrix(resized, c));
    const spectral::CoeffGrid prompt = spectral::embed_low_frequency(
        spectral::dct2(channel_matrix(freq_vp, c)), resized.height(), resized.width());
    auto dst = coeffs.data();
    auto src = prompt.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
    set_channel(out, c, spectral::idct2(coeffs));
  }
  clamp_unit(out);
  return out;
}

ImageTensor apply_spatial_prompt(const ImageTensor& prompted_resized,
                                 const ImageTensor& spatial_vp, const Geometry& geom) {
  check_shape(prompted_resized, geom.resized_shape(), "apply_spatial_prompt (image)");
  check_shape(spatial_vp, geom.full_shape(), "apply_spatial_prompt (prompt)");
  ImageTensor out = spatial_vp;
  const std::size_t oy = (geom.full_h - geom.resized_h) / 2;
  const std::size_t ox = (geom.full_w - geom.resized_w) / 2;
  for (std::size_t c = 0; c < geom.channels; ++c) {
    for (std::size_t y = 0; y < geom.resized_h; ++y) {
      auto src = prompted_resized.plane(c).subspan(y * geom.resized_w, geom.resized_w);
      std::copy(src.begin(), src.end(), &out.at(c, oy + y, ox));
    }
  }
  clamp_unit(out);
  return out;
}

ImageTensor place_unprompted(const ImageTensor& image, const Geometry& geom) {
  if (image.channels() != geom.channels) {
    throw DimensionError("place_unprompted: image has " + std::to_string(image.channels()) +
                         " channels, geometry expects " + std::to_string(geom.channels));
  }
  return pad_center(resize_bilinear(image, geom.resized_h, geom.resized_w), geom.full_h,
                    geom.full_w);
}

ImageTensor prompt(const PrompterParams& params, const Geometry& geom, const DecoderConfig& cfg,
                   const ImageTensor& image) {
  if (image.channels() != geom.channels) {
    throw DimensionError("prompt: image has " + std::to_string(image.channels()) +
                         " channels, geometry expects " + std::to_string(geom.channels));
  }
  const PromptPair vps = decode(params, geom, cfg);
  const ImageTensor resized = resize_bilinear(image, geom.resized_h, geom.resized_w);
  return apply_spatial_prompt(apply_frequency_prompt(resized, vps.freq_vp, params.freq_scale),
                              vps.spatial_vp, geom);
}

PromptApplier::PromptApplier(const PrompterParams& params, const Geometry& geom,
                             const DecoderConfig& cfg)
    : geom_(geom), prompts_(decode(params, geom, cfg)),
      freq_delta_(geom.channels, geom.resized_h, geom.resized_w) {
  const double scale = sigmoid(params.freq_scale);
  for (std::size_t c = 0; c < geom.channels; ++c) {
    Matrix delta = spectral::idct2(spectral::embed_low_frequency(
        spectral::dct2(channel_matrix(prompts_.freq_vp, c)), geom.resized_h, geom.resized_w));
    for (double& v : delta.data()) v *= scale;
    set_channel(freq_delta_, c, delta);
  }
  // The frame never changes; mask and clamp it once so apply_resized only
  // fills in the center.
  frame_ = prompts_.spatial_vp;
  clamp_unit(frame_);
  const std::size_t oy = (geom.full_h - geom.resized_h) / 2;
  const std::size_t ox = (geom.full_w - geom.resized_w) / 2;
  for (std::size_t c = 0; c < geom.channels; ++c) {
    for (std::size_t y = 0; y < geom.resized_h; ++y) {
      std::fill_n(&frame_.at(c, oy + y, ox), geom.resized_w, 0.0f);
    }
  }
}

ImageTensor PromptApplier::apply_resized(const ImageTensor& resized) const {
  check_shape(resized, geom_.resized_shape(), "PromptApplier");
  ImageTensor out = frame_;
  const std::size_t oy = (geom_.full_h - geom_.resized_h) / 2;
  const std::size_t ox = (geom_.full_w - geom_.resized_w) / 2;
  for (std::size_t c = 0; c < geom_.channels; ++c) {
    auto src = resized.plane(c);
    auto delta = freq_delta_.plane(c);
    for (std::size_t y = 0; y < geom_.resized_h; ++y) {
      float* dst = &out.at(c, oy + y, ox);
      const std::size_t row = y * geom_.resized_w;
      for (std::size_t x = 0; x < geom_.resized_w; ++x) {
        dst[x] = std::clamp(src[row + x] + delta[row + x], 0.0f, 1.0f);
      }
    }
  }
  return out;
}

ImageTensor PromptApplier::apply(const ImageTensor& image) const {
  if (image.channels() != geom_.channels) {
    throw DimensionError("PromptApplier: channel mismatch");
  }
  return apply_resized(resize_bilinear(image, geom_.resized_h, geom_.resized_w));
}

}  // namespace ptune
