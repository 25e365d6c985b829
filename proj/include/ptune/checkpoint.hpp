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
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ptune/config.hpp"
#include "ptune/simplex.hpp"

namespace ptune {

/// Training state sufficient to resume bit-exactly.
struct Checkpoint {
  static constexpr int kVersion = 1;

  RunConfig config;
  std::vector<std::size_t> params_shape;
  std::vector<float> params;
  std::vector<float> momentum;
  simplex::PrototypeSet prototypes;  // empty when training without prototypes
  std::size_t iter = 0;
  std::string rng;
  bool a0_halved = false;

  bool operator==(const Checkpoint&) const = default;
};

nlohmann::json to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Little-endian float32 payload, base64 encoded.
std::string encode_floats(std::span<const float> values);
std::vector<float> decode_floats(const std::string& b64);

}  // namespace ptune
