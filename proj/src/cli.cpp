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


#include "ptune/cli.hpp"

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ptune/checkpoint.hpp"
#include "ptune/config.hpp"
#include "ptune/datagen.hpp"
#include "ptune/error.hpp"
#include "ptune/remote_oracle.hpp"
#include "ptune/trainer.hpp"

namespace ptune {

using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError(path + " is not valid JSON");
  return j;
}

RunConfig config_for(const std::string& path, const std::vector<std::string>& overrides) {
  return resolve_config(path.empty() ? json::object() : read_json_file(path), overrides);
}

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::string resume;
  std::string checkpoint;
  std::string split = "val";
  std::string mode = "refined";
  std::string kind = "biased";
  double rho = 0.9;
  std::string ratio = "1:1";
  std::string data_split = "train";
  std::size_t n = 100;
  std::uint64_t seed = 0;
  std::string out;
  std::string endpoint;
  std::string export_weights;
};

int cmd_train(const Options& o, std::ostream& out) {
  RunConfig cfg;
  std::optional<Checkpoint> resume;
  if (!o.resume.empty()) {
    resume = load_checkpoint(o.resume);
    cfg = resolve_config(to_json(resume->config), o.overrides);
  } else {
    cfg = config_for(o.config, o.overrides);
  }
  Session session(cfg);
  const TrainResult r = train(session, cfg, resume);
  out << json{{"iterations", r.checkpoint.iter},
              {"output_dir", cfg.output_dir},
              {"queries_init", r.stats.queries_init},
              {"queries_train", r.stats.queries_train},
              {"queries_eval", r.stats.queries_eval},
              {"non_finite", r.stats.non_finite}}
             .dump()
      << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(o.checkpoint);
  const SplitName split = parse_split_name(o.split);
  const EvalMode mode = parse_eval_mode(o.mode);
  Session session(ckpt.config);
  out << evaluate(session, ckpt, split, mode).to_json().dump() << '\n';
  return kExitOk;
}

int cmd_gen_data(const Options& o, std::ostream& out) {
  datagen::ShiftSpec spec;
  spec.kind = datagen::parse_kind(o.kind);
  spec.rho = o.rho;
  if (!(spec.rho >= 0.0 && spec.rho <= 1.0)) throw ConfigError("--rho must lie in [0, 1]");
  spec.ratio = datagen::parse_ratio(o.ratio);
  spec.split = datagen::parse_split(o.data_split);
  spec.n_per_class = o.n;
  spec.seed = o.seed;
  const auto set = datagen::generate(spec);
  datagen::export_dataset(set.data, o.out);
  out << json{{"n", set.data.size()}, {"out", o.out}, {"kind", o.kind}}.dump() << '\n';
  return kExitOk;
}

int cmd_ablate(const Options& o, std::ostream& out) {
  const RunConfig cfg = config_for(o.config, o.overrides);
  Session session(cfg);
  const auto rows = ablation_matrix(session, session.config(), parse_split_name(o.split));
  out << json{{"split", o.split}, {"rows", to_json(rows)}}.dump() << '\n';
  return kExitOk;
}

int cmd_probe(const Options& o, std::ostream& out) {
  std::unique_ptr<Session> session;
  std::unique_ptr<RemoteOracle> remote;
  Oracle* oracle = nullptr;
  if (!o.endpoint.empty()) {
    remote = std::make_unique<RemoteOracle>(o.endpoint);
    oracle = remote.get();
  } else {
    session = std::make_unique<Session>(config_for(o.config, o.overrides));
    oracle = &session->oracle();
  }
  if (!o.export_weights.empty()) {
    const auto* builtin = dynamic_cast<const BuiltinOracle*>(oracle);
    if (builtin == nullptr) throw ConfigError("--export-weights needs the builtin oracle");
    std::ofstream f(o.export_weights);
    f << builtin->model().to_json().dump() << '\n';
    if (!f) throw Error("cannot write " + o.export_weights);
  }
  const Shape3 shape = oracle->input_shape();
  const std::vector<ImageTensor> probe{ImageTensor(shape.channels, shape.height, shape.width)};
  const ProbRows rows = oracle->predict_batch(probe);
  out << json{{"kind", oracle->kind()},
              {"num_classes", oracle->num_classes()},
              {"shape", {shape.channels, shape.height, shape.width}},
              {"probs", rows.front()}}
             .dump()
      << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Black-box visual prompt tuning", "prompt-tuner"};
  app.require_subcommand(1);
  Options o;

  auto* train_cmd = app.add_subcommand("train", "Train prompts and prototypes");
  train_cmd->add_option("--config", o.config, "Run configuration (JSON)");
  train_cmd->add_option("--set", o.overrides, "Override a config key: a.b=value");
  train_cmd->add_option("--resume", o.resume, "Continue from a checkpoint");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--split", o.split, "train | val | test");
  eval_cmd->add_option("--mode", o.mode, "raw | refined | posthoc");

  auto* gen_cmd = app.add_subcommand("gen-data", "Write a synthetic dataset");
  gen_cmd->add_option("--kind", o.kind, "biased | loc");
  gen_cmd->add_option("--rho", o.rho, "Color correlation (biased)");
  gen_cmd->add_option("--ratio", o.ratio, "1:1 | 1:4 (loc)");
  gen_cmd->add_option("--split", o.data_split, "train | test");
  gen_cmd->add_option("--n", o.n, "Samples per class");
  gen_cmd->add_option("--seed", o.seed, "Generator seed");
  gen_cmd->add_option("--out", o.out, "Output directory")->required();

  auto* ablate_cmd = app.add_subcommand("ablate", "Run the five-variant ablation");
  ablate_cmd->add_option("--config", o.config, "Run configuration (JSON)");
  ablate_cmd->add_option("--set", o.overrides, "Override a config key: a.b=value");
  ablate_cmd->add_option("--split", o.split, "Evaluation split")->default_val("test");

  auto* probe_cmd = app.add_subcommand("probe-oracle", "Query an oracle once");
  probe_cmd->add_option("--endpoint", o.endpoint, "Remote oracle base URL");
  probe_cmd->add_option("--config", o.config, "Run configuration for the builtin oracle");
  probe_cmd->add_option("--set", o.overrides, "Override a config key: a.b=value");
  probe_cmd->add_option("--export-weights", o.export_weights, "Write builtin oracle weights");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitConfig;
  }

  try {
    if (*train_cmd) return cmd_train(o, out);
    if (*eval_cmd) return cmd_eval(o, out);
    if (*gen_cmd) return cmd_gen_data(o, out);
    if (*ablate_cmd) return cmd_ablate(o, out);
    if (*probe_cmd) return cmd_probe(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace ptune
