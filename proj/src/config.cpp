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


#include "ptune/config.hpp"

#include <cstdlib>
#include <fstream>

#include "ptune/error.hpp"

namespace ptune {

using nlohmann::json;

void RunConfig::validate() const {
  if (geometry.resized_h != 0 || geometry.resized_w != 0) geometry.validate();
  if (shots_train == 0) throw ConfigError("shots_train must be positive");
  if (query_chunk == 0) throw ConfigError("query_chunk must be positive");
  if (eval_every == 0) throw ConfigError("eval_every must be positive");
  if (eval_mode != "raw" && eval_mode != "refined" && eval_mode != "posthoc") {
    throw ConfigError("eval_mode must be raw, refined or posthoc");
  }
  if (eval_mode == "refined" && !use_prototypes) {
    throw ConfigError("eval_mode refined needs use_prototypes");
  }
  if (oracle.kind != "builtin" && oracle.kind != "remote") {
    throw ConfigError("oracle.kind must be builtin or remote");
  }
  if (oracle.kind == "remote" && oracle.endpoint.empty()) {
    throw ConfigError("oracle.endpoint is required for a remote oracle");
  }
  if (dataset.kind != "biased" && dataset.kind != "loc" && dataset.kind != "idx") {
    throw ConfigError("dataset.kind must be biased, loc or idx");
  }
  if (dataset.kind == "idx" && (dataset.idx_images.empty() || dataset.idx_labels.empty())) {
    throw ConfigError("dataset.idx_images and dataset.idx_labels are required for idx data");
  }
  if (!(dataset.rho >= 0.0 && dataset.rho <= 1.0)) throw ConfigError("dataset.rho outside [0, 1]");
  if (dataset.ratio != "1:1" && dataset.ratio != "1:4") {
    throw ConfigError("dataset.ratio must be 1:1 or 1:4");
  }
  if (spsa.samples == 0) throw ConfigError("spsa.samples must be positive");
  if (!(spsa.beta >= 0.0 && spsa.beta < 1.0)) throw ConfigError("spsa.beta must lie in [0, 1)");
  zo::parse_distribution(spsa.dist);
  resolved_schedule().validate();
  if (loss_weights.cls < 0.0 || loss_weights.aux < 0.0 || loss_weights.intra < 0.0) {
    throw ConfigError("loss weights must be non-negative");
  }
}

zo::Schedule RunConfig::resolved_schedule() const {
  zo::Schedule s = schedule;
  if (s.A < 0.0) s.A = 0.1 * static_cast<double>(iterations);
  return s;
}

json to_json(const RunConfig& c) {
  const Geometry& g = c.geometry;
  return {
      {"geometry",
       {{"full_h", g.full_h}, {"full_w", g.full_w}, {"resized_h", g.resized_h},
        {"resized_w", g.resized_w}, {"freq_h", g.freq_h}, {"freq_w", g.freq_w},
        {"channels", g.channels}}},
      {"decoder",
       {{"grid", c.decoder.grid}, {"grid_channels", c.decoder.grid_channels},
        {"widths", c.decoder.widths}}},
      {"oracle",
       {{"kind", c.oracle.kind}, {"source_per_class", c.oracle.source_per_class},
        {"fit_iterations", c.oracle.fit_iterations}, {"fit_step", c.oracle.fit_step},
        {"downsample", c.oracle.downsample}, {"endpoint", c.oracle.endpoint},
        {"max_in_flight", c.oracle.max_in_flight}}},
      {"dataset",
       {{"kind", c.dataset.kind}, {"rho", c.dataset.rho}, {"ratio", c.dataset.ratio},
        {"n_per_class", c.dataset.n_per_class}, {"test_per_class", c.dataset.test_per_class},
        {"idx_images", c.dataset.idx_images}, {"idx_labels", c.dataset.idx_labels},
        {"idx_test_images", c.dataset.idx_test_images},
        {"idx_test_labels", c.dataset.idx_test_labels}}},
      {"shots_train", c.shots_train},
      {"shots_val", c.shots_val},
      {"iterations", c.iterations},
      {"batch_size", c.batch_size},
      {"schedule",
       {{"a0", c.schedule.a0}, {"A", c.schedule.A}, {"alpha", c.schedule.alpha},
        {"c0", c.schedule.c0}, {"gamma", c.schedule.gamma}}},
      {"spsa",
       {{"samples", c.spsa.samples}, {"beta", c.spsa.beta}, {"dist", c.spsa.dist},
        {"gradient_surgery", c.spsa.gradient_surgery}, {"workers", c.spsa.workers}}},
      {"use_prototypes", c.use_prototypes},
      {"loss_weights",
       {{"cls", c.loss_weights.cls}, {"aux", c.loss_weights.aux},
        {"intra", c.loss_weights.intra}}},
      {"eval_every", c.eval_every},
      {"eval_mode", c.eval_mode},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"query_chunk", c.query_chunk},
  };
}

namespace {

// The default document is the schema: a value may replace a default only if
// it has a compatible type.
void check_type(const json& expected, const json& value, const std::string& key) {
  bool ok = false;
  switch (expected.type()) {
    case json::value_t::number_float:
      ok = value.is_number();
      break;
    case json::value_t::number_unsigned:
      ok = value.is_number_unsigned() ||
           (value.is_number_integer() && value.get<std::int64_t>() >= 0) ||
           (value.is_number_float() && value.get<double>() >= 0.0 &&
            value.get<double>() == static_cast<double>(static_cast<std::uint64_t>(value.get<double>())));
      break;
    case json::value_t::number_integer:
      ok = value.is_number_integer();
      break;
    case json::value_t::boolean:
      ok = value.is_boolean();
      break;
    case json::value_t::string:
      ok = value.is_string();
      break;
    case json::value_t::array:
      ok = value.is_array();
      break;
    case json::value_t::object:
      ok = value.is_object();
      break;
    default:
      break;
  }
  if (!ok) {
    throw ConfigError("config key '" + key + "' expects " + std::string(expected.type_name()) +
                      ", got " + value.type_name());
  }
}

void merge_checked(json& base, const json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    json& slot = base[key];
    check_type(slot, value, path);
    if (slot.is_object()) {
      merge_checked(slot, value, path);
    } else if (slot.is_number_unsigned() && value.is_number_float()) {
      slot = static_cast<std::uint64_t>(value.get<double>());
    } else if (slot.is_number_unsigned()) {
      slot = value.get<std::uint64_t>();
    } else {
      slot = value;
    }
  }
}

}  // namespace

RunConfig config_from_json(const json& j) {
  json full = to_json(RunConfig{});
  merge_checked(full, j, "");
  try {
    RunConfig c;
    const json& g = full["geometry"];
    c.geometry = {g["full_h"], g["full_w"], g["resized_h"], g["resized_w"],
                  g["freq_h"], g["freq_w"], g["channels"]};
    const json& d = full["decoder"];
    c.decoder.grid = d["grid"];
    c.decoder.grid_channels = d["grid_channels"];
    c.decoder.widths = d["widths"].get<std::vector<std::size_t>>();
    const json& o = full["oracle"];
    c.oracle = {o["kind"], o["source_per_class"], o["fit_iterations"], o["fit_step"],
                o["downsample"], o["endpoint"], o["max_in_flight"]};
    const json& ds = full["dataset"];
    c.dataset = {ds["kind"],       ds["rho"],        ds["ratio"],
                 ds["n_per_class"], ds["test_per_class"], ds["idx_images"],
                 ds["idx_labels"], ds["idx_test_images"], ds["idx_test_labels"]};
    c.shots_train = full["shots_train"];
    c.shots_val = full["shots_val"];
    c.iterations = full["iterations"];
    c.batch_size = full["batch_size"];
    const json& s = full["schedule"];
    c.schedule = {s["a0"], s["A"], s["alpha"], s["c0"], s["gamma"]};
    const json& sp = full["spsa"];
    c.spsa = {sp["samples"], sp["beta"], sp["dist"], sp["gradient_surgery"], sp["workers"]};
    c.use_prototypes = full["use_prototypes"];
    const json& w = full["loss_weights"];
    c.loss_weights = {w["cls"], w["aux"], w["intra"]};
    c.eval_every = full["eval_every"];
    c.eval_mode = full["eval_mode"];
    c.seed = full["seed"];
    c.output_dir = full["output_dir"];
    c.query_chunk = full["query_chunk"];
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return config_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
}

namespace {

// "a.b.c", v -> {"a":{"b":{"c":v}}}
json nest(const std::string& key, json value) {
  std::size_t end = key.size();
  while (true) {
    const auto dot = end == 0 ? std::string::npos : key.rfind('.', end - 1);
    const std::size_t begin = dot == std::string::npos ? 0 : dot + 1;
    if (begin == end) throw ConfigError("override key '" + key + "' is malformed");
    value = json{{key.substr(begin, end - begin), std::move(value)}};
    if (dot == std::string::npos) return value;
    end = dot;
  }
}

}  // namespace

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json full = to_json(config_from_json(config));
  try {
    merge_checked(full, nest(key, value), "");
  } catch (const ConfigError&) {
    // A string field given text that happens to parse as JSON, e.g. dist=1.
    if (value.is_string()) throw;
    merge_checked(full, nest(key, text), "");
  }
  config = std::move(full);
}

RunConfig resolve_config(const json& base, const std::vector<std::string>& overrides) {
  json doc = to_json(config_from_json(base));
  for (const auto& o : overrides) apply_override(doc, o);
  if (const char* env = std::getenv("PROMPT_TUNER_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const unsigned long long seed = std::stoull(env, &used);
      if (used != std::string(env).size()) throw std::invalid_argument(env);
      doc["seed"] = seed;
    } catch (const std::exception&) {
      throw ConfigError(std::string("PROMPT_TUNER_SEED is not an unsigned integer: ") + env);
    }
  }
  RunConfig c = config_from_json(doc);
  c.validate();
  return c;
}

}  // namespace ptune
