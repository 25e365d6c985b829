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

#include <atomic>
#include <cmath>
#include <thread>

#include <httplib.h>

#include "helpers.hpp"
#include "ptune/datagen.hpp"
#include "ptune/error.hpp"
#include "ptune/oracle.hpp"
#include "ptune/prompter.hpp"
#include "ptune/remote_oracle.hpp"

using namespace ptune;

namespace {

LinearSoftmaxModel random_model(Shape3 shape, std::size_t k, std::size_t grid, std::uint64_t seed) {
  LinearSoftmaxModel m(shape, k, grid);
  Rng rng(seed);
  for (double& w : m.weights()) w = rng.normal();
  for (double& b : m.bias()) b = rng.normal();
  return m;
}

// In-process server speaking the prediction protocol.
class MockServer {
 public:
  explicit MockServer(LinearSoftmaxModel model) : oracle_(std::move(model)) {
    server_.Get("/v1/meta", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(wire::encode_meta(oracle_.num_classes(), oracle_.input_shape()).dump(),
                      "application/json");
    });
    server_.Post("/v1/predict", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      const int now = ++in_flight_;
      int seen = max_in_flight.load();
      while (now > seen && !max_in_flight.compare_exchange_weak(seen, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      --in_flight_;
      if (fail_next > 0) {
        --fail_next;
        res.status = 503;
        return;
      }
      try {
        const auto images = wire::decode_predict_request(nlohmann::json::parse(req.body));
        res.set_content(wire::encode_predict_response(oracle_.predict_batch(images)).dump(),
                        "application/json");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::atomic<int> fail_next{0};
  std::atomic<int> requests{0};
  std::atomic<int> max_in_flight{0};
  int delay_ms = 0;

 private:
  BuiltinOracle oracle_;
  httplib::Server server_;
  std::atomic<int> in_flight_{0};
  int port_ = 0;
  std::thread thread_;
};

RemoteOptions fast_retry() {
  RemoteOptions o;
  o.initial_backoff = std::chrono::milliseconds(5);
  o.timeout = std::chrono::seconds(5);
  return o;
}

}  // namespace

TEST_CASE("box features average each cell") {
  const LinearSoftmaxModel m(Shape3{1, 4, 4}, 2, 2);
  ImageTensor img(1, 4, 4);
  img.at(0, 0, 0) = 1.0f;
  img.at(0, 3, 3) = 0.5f;
  img.at(0, 3, 2) = 0.5f;
  const auto f = m.features(img);
  REQUIRE(f.size() == 4);
  CHECK(f[0] == doctest::Approx(0.25));
  CHECK(f[1] == 0.0);
  CHECK(f[2] == 0.0);
  CHECK(f[3] == doctest::Approx(0.25));
}

TEST_CASE("zero image predicts softmax of the bias") {
  const LinearSoftmaxModel m = random_model({3, 16, 16}, 4, 8, 2);
  const auto p = m.predict(ImageTensor(3, 16, 16));
  double z = 0.0;
  for (double b : m.bias()) z += std::exp(b);
  for (std::size_t k = 0; k < 4; ++k) CHECK(p[k] == doctest::Approx(std::exp(m.bias()[k]) / z));
}

TEST_CASE("weights round trip through JSON") {
  const LinearSoftmaxModel m = random_model({3, 32, 32}, 5, 16, 8);
  const auto j = m.to_json();
  CHECK(j.at("downsample") == 16);
  CHECK(j.at("W").size() == 5);
  CHECK(j.at("W")[0].size() == 3 * 16 * 16);
  CHECK(LinearSoftmaxModel::from_json(j) == m);
  auto broken = j;
  broken["W"][1].erase(0);
  CHECK_THROWS_AS(LinearSoftmaxModel::from_json(broken), ConfigError);
}

TEST_CASE("oracle validates geometry and counts queries") {
  BuiltinOracle oracle(random_model({3, 16, 16}, 3, 8, 1));
  std::vector<ImageTensor> batch(4, ImageTensor(3, 16, 16));
  const auto rows = oracle.predict_batch(batch);
  CHECK(rows.size() == 4);
  for (const auto& r : rows) CHECK(simplex::on_simplex(r, 1e-9));
  CHECK(oracle.query_count() == 4);
  std::vector<ImageTensor> wrong{ImageTensor(3, 15, 16)};
  CHECK_THROWS_AS(oracle.predict_batch(wrong), InvalidInput);
  CHECK_THROWS_AS(oracle.predict_batch({}), InvalidInput);
  CHECK(oracle.query_count() == 4);
}

TEST_CASE("fitted oracle separates clean glyphs") {
  const Geometry g{56, 56, 28, 28, 14, 14, 3};
  const auto clean = datagen::clean_dataset(20, 5);
  Dataset source;
  source.num_classes = 10;
  for (std::size_t i = 0; i < clean.data.size(); ++i) {
    source.images.push_back(place_unprompted(clean.data.images[i], g));
    source.labels.push_back(clean.data.labels[i]);
  }
  OracleFitOptions opt;
  opt.iterations = 150;
  auto oracle = train_builtin_oracle(source, 10, 1, opt);
  const auto held = datagen::clean_dataset(10, 99);
  std::vector<ImageTensor> imgs;
  for (const auto& img : held.data.images) imgs.push_back(place_unprompted(img, g));
  CHECK(accuracy(oracle->predict_batch(imgs), held.data.labels) > 0.9);

  // Same seed, same weights.
  CHECK(train_builtin_oracle(source, 10, 1, opt)->model() == oracle->model());

  Dataset missing = source;
  for (auto& y : missing.labels) y = y == 7 ? 6 : y;
  CHECK_THROWS_AS(fit_linear_softmax(missing, 10, 1, opt), InvalidDataset);
}

TEST_CASE("wire format golden bytes") {
  ImageTensor img(1, 1, 2);
  img.at(0, 0, 0) = 0.5f;
  img.at(0, 0, 1) = 0.25f;
  const std::vector<ImageTensor> batch{img};
  CHECK(wire::encode_predict_request(batch).dump() == R"({"pixels":[0.5,0.25],"shape":[1,1,1,2]})");
  CHECK(wire::encode_predict_response({{0.25, 0.75}}).dump() == R"({"probs":[[0.25,0.75]]})");
  CHECK(wire::encode_meta(10, {3, 224, 224}).dump() == R"({"num_classes":10,"shape":[3,224,224]})");

  const auto decoded = wire::decode_predict_request(nlohmann::json::parse(R"({"pixels":[0.5,0.25],"shape":[1,1,1,2]})"));
  REQUIRE(decoded.size() == 1);
  CHECK(decoded[0] == img);
  CHECK_THROWS_AS(wire::decode_predict_request(nlohmann::json::parse(R"({"pixels":[0.5],"shape":[1,1,1,2]})")),
                  InvalidInput);
  CHECK_THROWS_AS(wire::decode_predict_response(nlohmann::json::parse(R"({"p":[]})")), InvalidInput);
}

TEST_CASE("remote oracle matches the builtin model") {
  const LinearSoftmaxModel model = random_model({3, 16, 16}, 4, 8, 3);
  MockServer server(model);
  RemoteOracle remote(server.endpoint(), fast_retry());
  CHECK(remote.num_classes() == 4);
  CHECK(remote.input_shape() == Shape3{3, 16, 16});

  Rng rng(4);
  std::vector<ImageTensor> imgs;
  for (int i = 0; i < 50; ++i) imgs.push_back(testing::random_image(3, 16, 16, rng));
  const auto got = remote.predict_batch(imgs);
  REQUIRE(got.size() == 50);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto want = model.predict(imgs[i]);
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(got[i][k] - want[k]) < 1e-5);
  }
  CHECK(remote.query_count() == 50);
}

TEST_CASE("remote oracle retries 503 and gives up after three attempts") {
  MockServer server(random_model({1, 8, 8}, 2, 4, 1));
  RemoteOracle remote(server.endpoint(), fast_retry());
  const std::vector<ImageTensor> one{ImageTensor(1, 8, 8)};

  server.fail_next = 2;
  server.requests = 0;
  CHECK(remote.predict_batch(one).size() == 1);
  CHECK(server.requests == 3);

  server.fail_next = 5;
  server.requests = 0;
  try {
    remote.predict_batch(one);
    FAIL("expected a QueryError");
  } catch (const QueryError& e) {
    CHECK(e.attempts() == 3);
    CHECK(e.retryable());
  }
  CHECK(server.requests == 3);
}

TEST_CASE("remote oracle reports rejected input and unreachable hosts") {
  MockServer server(random_model({1, 8, 8}, 2, 4, 1));
  RemoteOracle remote(server.endpoint(), fast_retry());
  CHECK_THROWS_AS(remote.predict_batch(std::vector<ImageTensor>{ImageTensor(1, 4, 4)}), InvalidInput);

  // Port 1 on localhost is reserved and closed.
  CHECK_THROWS_AS(RemoteOracle("http://127.0.0.1:1", fast_retry()), QueryError);
}

TEST_CASE("remote oracle bounds in-flight requests") {
  MockServer server(random_model({1, 8, 8}, 2, 4, 1));
  server.delay_ms = 30;
  RemoteOptions opt = fast_retry();
  opt.max_in_flight = 2;
  RemoteOracle remote(server.endpoint(), opt);
  std::vector<std::thread> threads;
  for (int i = 0; i < 6; ++i) {
    threads.emplace_back([&] { remote.predict_batch(std::vector<ImageTensor>{ImageTensor(1, 8, 8)}); });
  }
  for (auto& t : threads) t.join();
  CHECK(server.max_in_flight.load() <= 2);
  CHECK(server.max_in_flight.load() >= 1);
  CHECK(remote.query_count() == 6);
}
