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


#include "ptune/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <openssl/evp.h>

#include "ptune/error.hpp"

namespace ptune {

using nlohmann::json;

std::string encode_floats(std::span<const float> values) {
  std::vector<unsigned char> raw(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) raw[4 * i + static_cast<std::size_t>(b)] = static_cast<unsigned char>(bits >> (8 * b));
  }
  std::string out(4 * ((raw.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), raw.data(),
                                static_cast<int>(raw.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<float> decode_floats(const std::string& b64) {
  if (b64.size() % 4 != 0) throw FormatError("base64 payload length is not a multiple of 4", b64.size());
  std::vector<unsigned char> raw(3 * (b64.size() / 4));
  const int n = EVP_DecodeBlock(raw.data(), reinterpret_cast<const unsigned char*>(b64.data()),
                                static_cast<int>(b64.size()));
  if (n < 0) throw FormatError("invalid base64 payload", 0);
  // EVP_DecodeBlock keeps the zero bytes behind '=' padding.
  std::size_t len = static_cast<std::size_t>(n);
  if (!b64.empty() && b64.back() == '=') --len;
  if (b64.size() >= 2 && b64[b64.size() - 2] == '=') --len;
  if (len % 4 != 0) throw FormatError("base64 payload is not whole float32 values", len);
  std::vector<float> out(len / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= std::uint32_t{raw[4 * i + static_cast<std::size_t>(b)]} << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

json to_json(const Checkpoint& ckpt) {
  return {{"version", Checkpoint::kVersion},
          {"config", to_json(ckpt.config)},
          {"params_shape", ckpt.params_shape},
          {"params_b64", encode_floats(ckpt.params)},
          {"momentum_b64", encode_floats(ckpt.momentum)},
          {"prototypes", ckpt.prototypes.anchors()},
          {"iter", ckpt.iter},
          {"rng", ckpt.rng},
          {"a0_halved", ckpt.a0_halved}};
}

Checkpoint checkpoint_from_json(const json& j) {
  try {
    const int version = j.at("version").get<int>();
    if (version != Checkpoint::kVersion) {
      throw FormatError("unsupported checkpoint version " + std::to_string(version), 0);
    }
    Checkpoint c;
    c.config = config_from_json(j.at("config"));
    c.params_shape = j.at("params_shape").get<std::vector<std::size_t>>();
    c.params = decode_floats(j.at("params_b64").get<std::string>());
    c.momentum = decode_floats(j.at("momentum_b64").get<std::string>());
    c.prototypes = simplex::PrototypeSet(j.at("prototypes").get<std::vector<simplex::SimplexVector>>());
    c.iter = j.at("iter").get<std::size_t>();
    c.rng = j.at("rng").get<std::string>();
    c.a0_halved = j.value("a0_halved", false);

    std::size_t total = 0;
    for (auto n : c.params_shape) total += n;
    if (total != c.params.size() || c.momentum.size() != c.params.size()) {
      throw ConfigError("checkpoint: params_shape does not match the stored vectors");
    }
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp);
    out << to_json(ckpt).dump() << '\n';
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint " + path.string());
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("checkpoint " + path.string() + " is not valid JSON");
  return checkpoint_from_json(j);
}

}  // namespace ptune
