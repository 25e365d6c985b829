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

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "ptune/cli.hpp"
#include "ptune/config.hpp"

using namespace ptune;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "prompt-tuner");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("gen-data writes a dataset") {
  testing::TempDir dir("gen");
  const auto r = cli({"gen-data", "--kind", "biased", "--rho", "1", "--n", "10", "--out", dir.path().string()});
  REQUIRE(r.code == kExitOk);
  std::size_t bins = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir.path())) bins += e.path().extension() == ".bin";
  CHECK(bins == 100);
  std::ifstream m(dir.path() / "manifest.json");
  const json manifest = json::parse(m);
  CHECK(manifest["n"] == 100);
  CHECK(json::parse(r.out)["n"] == 100);
  CHECK(cli({"gen-data", "--rho", "2", "--out", dir.path().string()}).code == kExitConfig);
  CHECK(cli({"gen-data", "--kind", "mnist", "--out", dir.path().string()}).code == kExitConfig);
}

TEST_CASE("train then eval") {
  testing::TempDir dir("cli_train");
  RunConfig c = testing::small_config();
  c.iterations = 0;
  c.output_dir = dir.path().string();
  const auto cfg = dir.path() / "run.json";
  std::ofstream(cfg) << to_json(c).dump();
  const auto t = cli({"train", "--config", cfg.string(), "--set", "iterations=1", "--set", "eval_every=1"});
  REQUIRE(t.code == kExitOk);
  CHECK(json::parse(t.out)["iterations"] == 1);
  const auto ckpt = (dir.path() / "checkpoint.json").string();
  CHECK(std::filesystem::exists(ckpt));

  const auto e = cli({"eval", "--checkpoint", ckpt, "--split", "val", "--mode", "raw"});
  REQUIRE(e.code == kExitOk);
  const json res = json::parse(e.out);
  CHECK(res["split"] == "val");
  CHECK(res["mode"] == "raw");
  CHECK(res["n"] == 40);

  CHECK(cli({"eval", "--checkpoint", ckpt, "--split", "holdout"}).code == kExitConfig);
  CHECK(cli({"eval", "--checkpoint", (dir.path() / "nope.json").string()}).code == kExitConfig);
  const auto more = cli({"train", "--resume", ckpt, "--set", "iterations=2"});
  REQUIRE(more.code == kExitOk);
  CHECK(json::parse(more.out)["iterations"] == 2);
}

TEST_CASE("argument and config errors exit with code 1") {
  testing::TempDir dir("cli_err");
  CHECK(cli({}).code == kExitConfig);
  CHECK(cli({"train", "--bogus"}).code == kExitConfig);
  const auto bad = cli({"train", "--set", "spsa.nonsense=3"});
  CHECK(bad.code == kExitConfig);
  CHECK(bad.err.find("spsa.nonsense") != std::string::npos);
  const auto cfg = dir.path() / "bad.json";
  std::ofstream(cfg) << "{ not json";
  CHECK(cli({"train", "--config", cfg.string()}).code == kExitConfig);
  CHECK(cli({"eval"}).code == kExitConfig);
}

TEST_CASE("remote oracle failures are runtime errors") {
  const auto r = cli({"probe-oracle", "--endpoint", "http://127.0.0.1:1"});
  CHECK(r.code == kExitRuntime);
}
