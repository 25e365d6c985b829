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


#include "ptune/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>

#include "ptune/error.hpp"
#include "ptune/objective.hpp"
#include "ptune/remote_oracle.hpp"
#include "ptune/rng.hpp"
#include "ptune/simplex.hpp"
#include "ptune/zo_optim.hpp"

namespace ptune {

using nlohmann::json;

SplitName parse_split_name(const std::string& s) {
  if (s == "train") return SplitName::train;
  if (s == "val") return SplitName::val;
  if (s == "test") return SplitName::test;
  throw ConfigError("unknown split '" + s + "' (expected train, val or test)");
}

EvalMode parse_eval_mode(const std::string& s) {
  if (s == "raw") return EvalMode::raw;
  if (s == "refined") return EvalMode::refined;
  if (s == "posthoc") return EvalMode::posthoc;
  throw ConfigError("unknown eval mode '" + s + "' (expected raw, refined or posthoc)");
}

std::string to_string(SplitName s) {
  switch (s) {
    case SplitName::train: return "train";
    case SplitName::val: return "val";
    case SplitName::test: return "test";
  }
  return "?";
}

std::string to_string(EvalMode m) {
  switch (m) {
    case EvalMode::raw: return "raw";
    case EvalMode::refined: return "refined";
    case EvalMode::posthoc: return "posthoc";
  }
  return "?";
}

namespace {

std::size_t index_of(SplitName s) { return static_cast<std::size_t>(s); }

struct RawData {
  Dataset train;
  Dataset test;
};

ImageTensor match_channels(ImageTensor img, std::size_t channels) {
  if (img.channels() == channels) return img;
  if (img.channels() != 1 && channels != 1) {
    throw InvalidInput("images have " + std::to_string(img.channels()) +
                       " channels, geometry expects " + std::to_string(channels));
  }
  // Grey to color replicates; color to grey keeps the first channel.
  ImageTensor out(channels, img.height(), img.width());
  for (std::size_t c = 0; c < channels; ++c) {
    std::copy(img.plane(0).begin(), img.plane(0).end(), out.plane(c).begin());
  }
  return out;
}

Dataset to_channels(Dataset data, std::size_t channels) {
  for (auto& img : data.images) img = match_channels(std::move(img), channels);
  return data;
}

RawData load_data(const RunConfig& cfg) {
  const DatasetSpec& d = cfg.dataset;
  RawData out;
  if (d.kind == "idx") {
    out.train = datagen::load_idx(d.idx_images, d.idx_labels);
    if (!d.idx_test_images.empty()) {
      out.test = datagen::load_idx(d.idx_test_images, d.idx_test_labels);
      out.test.num_classes = std::max(out.test.num_classes, out.train.num_classes);
    }
    out.train.num_classes = std::max(out.train.num_classes, out.test.num_classes);
    return out;
  }
  datagen::ShiftSpec spec;
  spec.kind = datagen::parse_kind(d.kind);
  spec.rho = d.rho;
  spec.ratio = datagen::parse_ratio(d.ratio);
  spec.split = datagen::Split::train;
  spec.n_per_class = d.n_per_class;
  spec.seed = derive_seed(cfg.seed, streams::kTrainData);
  out.train = datagen::generate(spec).data;
  spec.split = datagen::Split::test;
  spec.n_per_class = d.test_per_class;
  spec.seed = derive_seed(cfg.seed, streams::kTestData);
  out.test = datagen::generate(spec).data;
  return out;
}

Geometry resolve_geometry(Geometry g, const Dataset& data) {
  if (g.resized_h == 0 || g.resized_w == 0) {
    if (g.full_h != 224 || g.full_w != 224) {
      throw ConfigError("geometry: automatic resize target needs the 224 canvas; set resized_h/w");
    }
    std::size_t min_side = SIZE_MAX;
    for (const auto& img : data.images) min_side = std::min({min_side, img.height(), img.width()});
    const std::size_t target = Geometry::resize_target_for(min_side);
    if (g.resized_h == 0) g.resized_h = target;
    if (g.resized_w == 0) g.resized_w = target;
  }
  g.validate();
  return g;
}

std::unique_ptr<Oracle> build_oracle(const RunConfig& cfg, std::size_t num_classes) {
  if (cfg.oracle.kind == "remote") {
    RemoteOptions opt;
    opt.max_in_flight = cfg.oracle.max_in_flight;
    return std::make_unique<RemoteOracle>(cfg.oracle.endpoint, opt);
  }
  // Source distribution: clean white-on-black glyphs as the oracle sees them
  // at zero prompt.
  const auto clean = datagen::clean_dataset(cfg.oracle.source_per_class,
                                            derive_seed(cfg.seed, streams::kOracleSource));
  Dataset source;
  source.num_classes = num_classes;
  for (std::size_t i = 0; i < clean.data.size(); ++i) {
    source.images.push_back(
        place_unprompted(match_channels(clean.data.images[i], cfg.geometry.channels), cfg.geometry));
    source.labels.push_back(clean.data.labels[i]);
  }
  OracleFitOptions fit;
  fit.grid = cfg.oracle.downsample;
  fit.iterations = cfg.oracle.fit_iterations;
  fit.step = cfg.oracle.fit_step;
  return train_builtin_oracle(source, num_classes, derive_seed(cfg.seed, streams::kOracleInit), fit);
}

}  // namespace

Session::Session(const RunConfig& config, std::unique_ptr<Oracle> oracle) : config_(config) {
  config_.validate();
  RawData data = load_data(config_);
  config_.geometry = resolve_geometry(config_.geometry, data.train);
  data.train = to_channels(std::move(data.train), config_.geometry.channels);
  data.test = to_channels(std::move(data.test), config_.geometry.channels);
  num_classes_ = data.train.num_classes;
  if (num_classes_ < 2) throw InvalidDataset("need at least two classes");

  const auto split = datagen::few_shot_split(data.train, config_.shots_train, config_.shots_val,
                                             derive_seed(config_.seed, streams::kFewShot));
  const auto cache = [&](const Dataset& src, std::span<const std::size_t> idx, SplitName name) {
    auto& imgs = resized_[index_of(name)];
    auto& labs = labels_[index_of(name)];
    for (std::size_t i : idx) {
      imgs.push_back(resize_bilinear(src.images[i], config_.geometry.resized_h,
                                     config_.geometry.resized_w));
      labs.push_back(src.labels[i]);
    }
  };
  cache(data.train, split.train, SplitName::train);
  cache(data.train, split.val, SplitName::val);
  std::vector<std::size_t> all(data.test.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  cache(data.test, all, SplitName::test);

  oracle_ = oracle ? std::move(oracle) : build_oracle(config_, num_classes_);
  if (oracle_->num_classes() != num_classes_) {
    throw InvalidInput("oracle reports " + std::to_string(oracle_->num_classes()) +
                       " classes, dataset has " + std::to_string(num_classes_));
  }
  if (oracle_->input_shape() != config_.geometry.full_shape()) {
    throw InvalidInput("oracle input " + oracle_->input_shape().str() + " does not match geometry " +
                       config_.geometry.full_shape().str());
  }
}

std::span<const ImageTensor> Session::images(SplitName split) const {
  return resized_[index_of(split)];
}

std::span<const int> Session::labels(SplitName split) const { return labels_[index_of(split)]; }

ProbRows Session::predict(const PromptApplier& applier, SplitName split) {
  std::vector<std::size_t> all(images(split).size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return predict(applier, split, all);
}

ProbRows Session::predict(const PromptApplier& applier, SplitName split,
                          std::span<const std::size_t> indices) {
  const auto imgs = images(split);
  ProbRows out;
  out.reserve(indices.size());
  std::vector<ImageTensor> chunk;
  for (std::size_t start = 0; start < indices.size(); start += config_.query_chunk) {
    const std::size_t end = std::min(indices.size(), start + config_.query_chunk);
    chunk.clear();
    for (std::size_t i = start; i < end; ++i) chunk.push_back(applier.apply_resized(imgs[indices[i]]));
    auto rows = oracle_->predict_batch(chunk);
    for (auto& r : rows) out.push_back(std::move(r));
  }
  return out;
}

namespace {

void check_compatible(const RunConfig& session, const RunConfig& run) {
  const bool same = session.dataset == run.dataset && session.oracle == run.oracle &&
                    session.seed == run.seed && session.shots_train == run.shots_train &&
                    session.shots_val == run.shots_val && session.decoder == run.decoder &&
                    session.geometry.full_h == run.geometry.full_h &&
                    session.geometry.full_w == run.geometry.full_w &&
                    session.geometry.freq_h == run.geometry.freq_h &&
                    session.geometry.freq_w == run.geometry.freq_w &&
                    session.geometry.channels == run.geometry.channels;
  if (!same) throw ConfigError("training config does not match the session's data and oracle");
}

std::vector<std::size_t> sample_batch(std::span<const int> labels, std::size_t num_classes,
                                      std::size_t batch, Rng& rng) {
  std::vector<std::size_t> all(labels.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  if (batch == 0) batch = labels.size() <= 512 ? labels.size() : 128;
  if (batch >= labels.size()) return all;

  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i : all) by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  for (auto& members : by_class) {
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[static_cast<std::size_t>(rng.below(i))]);
    }
  }
  std::vector<std::size_t> order(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) order[k] = k;
  for (std::size_t i = num_classes; i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
  }
  std::vector<std::size_t> out;
  for (std::size_t round = 0; out.size() < batch; ++round) {
    for (std::size_t k : order) {
      if (round < by_class[k].size() && out.size() < batch) out.push_back(by_class[k][round]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> gather(std::span<const int> labels, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(labels[i]);
  return out;
}

double accuracy_of(const ProbRows& rows, std::span<const int> labels) {
  return accuracy(rows, labels);
}

ProbRows refine_all(const ProbRows& rows, const simplex::PrototypeSet& anchors) {
  ProbRows out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(simplex::refine(r, anchors));
  return out;
}

class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& dir, bool append) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    out_.open(std::filesystem::path(dir) / "metrics.jsonl",
              append ? std::ios::app : std::ios::trunc);
    if (!out_) throw Error("cannot open metrics file in " + dir);
  }
  void write(const json& line) {
    if (out_.is_open()) out_ << line.dump() << '\n' << std::flush;
  }

 private:
  std::ofstream out_;
};

}  // namespace

TrainResult train(Session& session, const RunConfig& run_in,
                  const std::optional<Checkpoint>& resume) {
  RunConfig run = run_in;
  run.validate();
  check_compatible(session.config(), run);
  run.geometry = session.geometry();
  const Geometry& geom = run.geometry;
  const DecoderConfig& dec = run.decoder;
  const std::size_t K = session.num_classes();

  TrainResult result;
  TrainStats& stats = result.stats;
  std::atomic<std::uint64_t> simplex_calls{0};

  zo::Schedule schedule = run.resolved_schedule();
  zo::OptimizerState opt;
  simplex::PrototypeSet prototypes;
  Rng rng(derive_seed(run.seed, streams::kTraining));
  bool a0_halved = false;

  if (resume) {
    if (resume->params.size() != parameter_count(geom, dec)) {
      throw ConfigError("checkpoint parameter count does not match the configuration");
    }
    opt.params = resume->params;
    opt.momentum = resume->momentum;
    opt.t = resume->iter;
    prototypes = resume->prototypes;
    rng.set_state(resume->rng);
    a0_halved = resume->a0_halved;
    if (a0_halved) schedule.a0 *= 0.5;
    if (run.use_prototypes && prototypes.size() != K) {
      throw ConfigError("checkpoint has no prototypes but the run uses them");
    }
  } else {
    Rng init_rng(derive_seed(run.seed, streams::kParamsInit));
    opt = zo::OptimizerState::start(flatten(init_params(geom, dec, init_rng)));
    if (run.use_prototypes) {
      const PromptApplier zero(zero_params(geom, dec), geom, dec);
      const auto before = session.oracle().query_count();
      const ProbRows probs = session.predict(zero, SplitName::train);
      stats.queries_init = session.oracle().query_count() - before;
      prototypes = simplex::init_prototypes(probs, session.labels(SplitName::train), K);
      ++simplex_calls;
    }
  }
  opt.beta = run.spsa.beta;
  opt.samples = run.spsa.samples;
  opt.dist = zo::parse_distribution(run.spsa.dist);
  opt.surgery = run.spsa.gradient_surgery;
  opt.workers = std::max<std::size_t>(1, run.spsa.workers);
  opt.validate();

  const auto snapshot = [&] {
    Checkpoint c;
    c.config = run;
    c.params_shape = parameter_shape(geom, dec);
    c.params = opt.params;
    c.momentum = opt.momentum;
    c.prototypes = prototypes;
    c.iter = opt.t;
    c.rng = rng.state();
    c.a0_halved = a0_halved;
    return c;
  };
  const std::filesystem::path out_dir = run.output_dir;
  const auto save = [&](const Checkpoint& c, bool periodic) {
    if (run.output_dir.empty()) return;
    if (periodic) save_checkpoint(c, out_dir / ("checkpoint_" + std::to_string(c.iter) + ".json"));
    save_checkpoint(c, out_dir / "checkpoint.json");
  };

  MetricsWriter writer(run.output_dir, resume.has_value());
  const json header = {{"header", true},
                       {"config", to_json(run)},
                       {"num_params", opt.params.size()},
                       {"start_iter", opt.t}};
  writer.write(header);
  result.metrics.push_back(header);

  const auto train_labels = session.labels(SplitName::train);
  const std::size_t S = opt.samples;

  while (opt.t < run.iterations) {
    const std::vector<std::size_t> batch = sample_batch(train_labels, K, run.batch_size, rng);
    const std::vector<int> batch_labels = gather(train_labels, batch);
    const simplex::PrototypeSet fixed = prototypes;

    struct ProbeRecord {
      ProbRows raw;
      objective::LossBreakdown loss;
    };
    std::vector<ProbeRecord> records(2 * S);
    std::atomic<std::uint64_t> queries{0};

    const zo::ProbeLoss loss = [&](std::span<const double> phi, zo::Probe probe) -> double {
      for (double v : phi) {
        if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
      }
      const PromptApplier applier(unflatten(phi, geom, dec), geom, dec);
      objective::BatchPredictions bp;
      bp.raw = session.predict(applier, SplitName::train, batch);
      queries += bp.raw.size();
      bp.labels = batch_labels;
      if (run.use_prototypes) {
        bp.refined = refine_all(bp.raw, fixed);
        simplex_calls += bp.raw.size();
      }
      const objective::LossBreakdown breakdown = objective::total_loss(bp, run.loss_weights);
      const double total = breakdown.total;
      ProbeRecord rec{std::move(bp.raw), breakdown};
      records[2 * probe.sample + (probe.side == zo::Side::minus ? 1 : 0)] = std::move(rec);
      return total;
    };

    zo::StepReport report;
    try {
      report = zo::step(opt, schedule, loss, rng);
    } catch (const zo::EstimationError& e) {
      stats.queries_train += queries.load();
      ++stats.non_finite;
      if (a0_halved) {
        save(snapshot(), false);
        throw Error(std::string("non-finite loss after halving a0, aborting: ") + e.what());
      }
      a0_halved = true;
      schedule.a0 *= 0.5;
      std::cerr << "iteration " << opt.t + 1 << ": non-finite loss, halving a0 to " << schedule.a0
                << '\n';
      continue;
    }
    stats.queries_train += queries.load();
    ++stats.steps;

    json line = {{"iter", opt.t}};
    double loss_sum = 0.0, cls = 0.0, aux = 0.0, intra = 0.0;
    for (const auto& r : records) {
      loss_sum += r.loss.total;
      cls += r.loss.cls;
      aux += r.loss.aux;
      intra += r.loss.intra;
    }
    const double n = static_cast<double>(records.size());
    line["loss"] = loss_sum / n;
    line["loss_cls"] = cls / n;
    line["loss_aux"] = aux / n;
    line["loss_intra"] = intra / n;
    line["sigma_phi_s"] = sigmoid(static_cast<double>(opt.params.back()));

    if (run.use_prototypes) {
      // Pool the winning side of every sample by class.
      std::vector<simplex::SimplexVector> pooled;
      std::vector<std::vector<std::size_t>> members(K);
      for (std::size_t s = 0; s < S; ++s) {
        const auto& rec = records[2 * s + (report.samples[s].winner == zo::Side::minus ? 1 : 0)];
        for (std::size_t i = 0; i < rec.raw.size(); ++i) {
          members[static_cast<std::size_t>(batch_labels[i])].push_back(pooled.size());
          pooled.push_back(rec.raw[i]);
        }
      }
      std::vector<std::optional<simplex::SimplexVector>> means(K);
      for (std::size_t k = 0; k < K; ++k) {
        if (!members[k].empty()) means[k] = simplex::mean_of(pooled, members[k]);
      }
      prototypes = simplex::update_prototypes(prototypes, means);
      ++simplex_calls;
    }

    const bool eval_point = opt.t % run.eval_every == 0 || opt.t == run.iterations;
    if (eval_point) {
      if (!session.labels(SplitName::val).empty()) {
        const auto before = session.oracle().query_count();
        const PromptApplier applier(unflatten(std::vector<double>(opt.params.begin(), opt.params.end()),
                                              geom, dec),
                                    geom, dec);
        const ProbRows probs = session.predict(applier, SplitName::val);
        stats.queries_eval += session.oracle().query_count() - before;
        const auto val_labels = session.labels(SplitName::val);
        line["acc_raw"] = accuracy_of(probs, val_labels);
        if (run.use_prototypes) {
          line["acc_refined"] = accuracy_of(refine_all(probs, prototypes), val_labels);
          simplex_calls += probs.size();
        }
      }
      save(snapshot(), true);
      std::clog << "iter " << opt.t << " loss " << line["loss"].get<double>();
      if (line.contains("acc_raw")) std::clog << " acc_raw " << line["acc_raw"].get<double>();
      if (line.contains("acc_refined")) std::clog << " acc_refined " << line["acc_refined"].get<double>();
      std::clog << '\n';
    }
    writer.write(line);
    result.metrics.push_back(std::move(line));
  }

  result.checkpoint = snapshot();
  save(result.checkpoint, false);
  stats.simplex_calls = simplex_calls.load();
  return result;
}

TrainResult train(const RunConfig& run) {
  Session session(run);
  return train(session, session.config());
}

json EvalResult::to_json() const {
  return {{"split", to_string(split)},         {"mode", to_string(mode)},
          {"accuracy", accuracy},              {"per_class", per_class},
          {"per_class_count", per_class_count}, {"n", n}};
}

namespace {

EvalResult score(const ProbRows& rows, std::span<const int> labels, std::size_t K, SplitName split,
                 EvalMode mode) {
  EvalResult r;
  r.split = split;
  r.mode = mode;
  r.n = rows.size();
  r.per_class.assign(K, 0.0);
  r.per_class_count.assign(K, 0);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    ++r.per_class_count[y];
    if (argmax(rows[i]) == y) {
      ++hits;
      r.per_class[y] += 1.0;
    }
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (r.per_class_count[k] > 0) r.per_class[k] /= static_cast<double>(r.per_class_count[k]);
  }
  r.accuracy = rows.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(rows.size());
  return r;
}

}  // namespace

EvalResult evaluate(Session& session, const Checkpoint& ckpt, SplitName split, EvalMode mode) {
  const Geometry& geom = session.geometry();
  const DecoderConfig& dec = session.config().decoder;
  if (ckpt.params.size() != parameter_count(geom, dec)) {
    throw InvalidInput("checkpoint parameters do not match the session geometry");
  }
  if (session.images(split).empty()) throw InvalidInput("split " + to_string(split) + " is empty");
  const PromptApplier applier(unflatten(std::vector<double>(ckpt.params.begin(), ckpt.params.end()),
                                        geom, dec),
                              geom, dec);
  const ProbRows probs = session.predict(applier, split);
  const auto labels = session.labels(split);
  const std::size_t K = session.num_classes();

  switch (mode) {
    case EvalMode::raw:
      return score(probs, labels, K, split, mode);
    case EvalMode::refined:
      if (ckpt.prototypes.size() != K) {
        throw ConfigError("refined evaluation needs trained prototypes in the checkpoint");
      }
      return score(refine_all(probs, ckpt.prototypes), labels, K, split, mode);
    case EvalMode::posthoc: {
      simplex::PrototypeSet seed = ckpt.prototypes;
      if (seed.size() != K) {
        const ProbRows train_probs = session.predict(applier, SplitName::train);
        seed = simplex::init_prototypes(train_probs, session.labels(SplitName::train), K);
      }
      const auto clusters = simplex::kl_kmeans(probs, seed, 100);
      return score(refine_all(probs, clusters.means), labels, K, split, mode);
    }
  }
  throw ConfigError("unknown evaluation mode");
}

EvalResult zero_prompt_accuracy(Session& session, SplitName split) {
  const Geometry& geom = session.geometry();
  const DecoderConfig& dec = session.config().decoder;
  const PromptApplier zero(zero_params(geom, dec), geom, dec);
  return score(session.predict(zero, split), session.labels(split), session.num_classes(), split,
               EvalMode::raw);
}

std::vector<AblationRow> ablation_matrix(Session& session, const RunConfig& base, SplitName split) {
  std::vector<AblationRow> rows;
  const auto variant_dir = [&](int v) {
    return base.output_dir.empty()
               ? std::string()
               : (std::filesystem::path(base.output_dir) / ("variant_" + std::to_string(v))).string();
  };
  const auto configure = [&](int v, bool prototypes, double intra, bool surgery) {
    RunConfig c = base;
    c.use_prototypes = prototypes;
    c.loss_weights.aux = prototypes ? base.loss_weights.aux : 0.0;
    c.loss_weights.intra = intra;
    c.spsa.gradient_surgery = surgery;
    c.eval_mode = prototypes ? "refined" : "raw";
    c.output_dir = variant_dir(v);
    return c;
  };

  const TrainResult plain = train(session, configure(1, false, 0.0, false));
  rows.push_back({1, "hybrid prompting", EvalMode::raw,
                  evaluate(session, plain.checkpoint, split, EvalMode::raw).accuracy,
                  plain.stats.simplex_calls, plain.stats.queries_train});
  rows.push_back({2, "+ posthoc refinement", EvalMode::posthoc,
                  evaluate(session, plain.checkpoint, split, EvalMode::posthoc).accuracy,
                  plain.stats.simplex_calls, plain.stats.queries_train});

  const struct {
    int v;
    const char* name;
    double intra;
    bool surgery;
  } rest[] = {{3, "+ auxiliary prototypes", 0.0, false},
              {4, "+ intra-class relation", base.loss_weights.intra, false},
              {5, "+ gradient surgery", base.loss_weights.intra, true}};
  for (const auto& r : rest) {
    const TrainResult res = train(session, configure(r.v, true, r.intra, r.surgery));
    rows.push_back({r.v, r.name, EvalMode::refined,
                    evaluate(session, res.checkpoint, split, EvalMode::refined).accuracy,
                    res.stats.simplex_calls, res.stats.queries_train});
  }
  return rows;
}

json to_json(const std::vector<AblationRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"variant", r.variant},
                   {"name", r.name},
                   {"mode", to_string(r.mode)},
                   {"accuracy", r.accuracy},
                   {"simplex_calls", r.simplex_calls},
                   {"queries_train", r.queries_train}});
  }
  return out;
}

}  // namespace ptune
