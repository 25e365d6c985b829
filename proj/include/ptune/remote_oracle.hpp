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

#include <chrono>
#include <cstddef>
#include <semaphore>
#include <string>

#include "ptune/oracle.hpp"

namespace ptune {

struct RemoteOptions {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
  std::size_t max_in_flight = 4;
  std::chrono::seconds timeout{30};
};

/// HTTP client for the prediction protocol:
///   GET  /v1/meta     -> {"num_classes":K,"shape":[c,h,w]}
///   POST /v1/predict  {"shape":[n,c,h,w],"pixels":[...]} -> {"probs":[[...]...]}
/// Connection failures and HTTP 503 are retried with doubling backoff; HTTP
/// 400 is reported immediately as invalid input.
class RemoteOracle final : public Oracle {
 public:
  /// Fetches /v1/meta; throws QueryError if the service is unreachable.
  explicit RemoteOracle(std::string endpoint, RemoteOptions options = {});

  std::size_t num_classes() const override { return num_classes_; }
  Shape3 input_shape() const override { return shape_; }
  std::string kind() const override { return "remote"; }
  const std::string& endpoint() const { return endpoint_; }

 protected:
  ProbRows predict_impl(std::span<const ImageTensor> images) override;

 private:
  std::string endpoint_;
  RemoteOptions options_;
  std::size_t num_classes_ = 0;
  Shape3 shape_{};
  std::counting_semaphore<1024> in_flight_;
};

}  // namespace ptune
