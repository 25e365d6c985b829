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


#include "ptune/remote_oracle.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>

#include "ptune/error.hpp"

namespace ptune {

namespace {

struct Response {
  int status = 0;
  std::string body;
};

// Runs `call` up to `attempts` times. Transport errors and 503 are retried.
template <typename Call>
Response with_retries(const RemoteOptions& opt, const std::string& what, Call&& call) {
  auto backoff = opt.initial_backoff;
  std::string last_error = "no attempt made";
  for (int attempt = 1; attempt <= opt.attempts; ++attempt) {
    httplib::Result res = call();
    if (res && res->status != 503) return {res->status, res->body};
    last_error = res ? "HTTP 503 from " + what : what + ": " + httplib::to_string(res.error());
    if (attempt < opt.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw QueryError(last_error, opt.attempts, true);
}

void configure(httplib::Client& cli, const RemoteOptions& opt) {
  cli.set_connection_timeout(opt.timeout);
  cli.set_read_timeout(opt.timeout);
  cli.set_write_timeout(opt.timeout);
}

}  // namespace

RemoteOracle::RemoteOracle(std::string endpoint, RemoteOptions options)
    : endpoint_(std::move(endpoint)), options_(options),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(options.max_in_flight, 1, 1024))) {
  if (options_.attempts < 1) throw ConfigError("remote oracle: attempts must be at least 1");
  httplib::Client cli(endpoint_);
  configure(cli, options_);
  const Response r = with_retries(options_, "GET /v1/meta", [&] { return cli.Get("/v1/meta"); });
  if (r.status != 200) {
    throw QueryError("GET /v1/meta returned HTTP " + std::to_string(r.status), 1, false);
  }
  try {
    const auto meta = nlohmann::json::parse(r.body);
    num_classes_ = meta.at("num_classes").get<std::size_t>();
    const auto shape = meta.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 3) throw InvalidInput("meta: shape must be [c,h,w]");
    shape_ = {shape[0], shape[1], shape[2]};
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("meta: ") + e.what());
  }
}

ProbRows RemoteOracle::predict_impl(std::span<const ImageTensor> images) {
  const std::string body = wire::encode_predict_request(images).dump();
  in_flight_.acquire();
  Response r;
  try {
    httplib::Client cli(endpoint_);
    configure(cli, options_);
    r = with_retries(options_, "POST /v1/predict",
                     [&] { return cli.Post("/v1/predict", body, "application/json"); });
  } catch (...) {
    in_flight_.release();
    throw;
  }
  in_flight_.release();

  if (r.status == 400) throw InvalidInput("remote oracle rejected request: " + r.body);
  if (r.status != 200) {
    throw QueryError("POST /v1/predict returned HTTP " + std::to_string(r.status), 1, false);
  }
  ProbRows rows;
  try {
    rows = wire::decode_predict_response(nlohmann::json::parse(r.body));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("predict response: ") + e.what());
  }
  if (rows.size() != images.size()) {
    throw InvalidInput("predict response: expected " + std::to_string(images.size()) +
                       " rows, got " + std::to_string(rows.size()));
  }
  for (const auto& row : rows) {
    if (row.size() != num_classes_) throw InvalidInput("predict response: row length != K");
  }
  return rows;
}

}  // namespace ptune
