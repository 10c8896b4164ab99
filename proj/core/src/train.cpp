// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0

#include "tabmixer/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "tabmixer/checkpoint.hpp"
#include "tabmixer/errors.hpp"
#include "tabmixer/ops.hpp"
#include "tabmixer/optim.hpp"
#include "tabmixer/random.hpp"

namespace tabmixer {

namespace fs = std::filesystem;
using nlohmann::json;

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !(lr_min >= 0.0) || lr_min > lr) {
    throw ValidationError("learning rates must satisfy 0 <= lr_min <= lr, lr > 0");
  }
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be non-negative");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (epochs == 0) throw ValidationError("epochs must be positive");
  split.validate();
}

void to_json(json& j, const TrainConfig& cfg) {
  j = cfg.model;
  j["lr"] = cfg.lr;
  j["lr_min"] = cfg.lr_min;
  j["weight_decay"] = cfg.weight_decay;
  j["batch_size"] = cfg.batch_size;
  j["epochs"] = cfg.epochs;
  j["max_steps"] = cfg.max_steps;
  j["seed"] = cfg.seed;
  j["split"] = {{"train", cfg.split.train}, {"val", cfg.split.val}, {"test", cfg.split.test}};
  j["bin_edges"] = cfg.bin_edges;
  j["select_features"] = cfg.preprocess.select_features;
  j["alpha"] = cfg.preprocess.alpha;
  j["standardize_target"] = cfg.standardize_target;
}

void from_json(const json& j, TrainConfig& cfg) {
  if (!j.is_object()) throw ValidationError("training config must be a JSON object");
  TrainConfig out;
  out.model = j.get<ModelConfig>();
  out.video_dims_from_data = !j.contains("backbone") || !j.at("backbone").contains("frames");
  try {
    out.lr = j.value("lr", out.lr);
    out.lr_min = j.value("lr_min", out.lr_min);
    out.weight_decay = j.value("weight_decay", out.weight_decay);
    out.batch_size = j.value("batch_size", out.batch_size);
    out.epochs = j.value("epochs", out.epochs);
    out.max_steps = j.value("max_steps", out.max_steps);
    out.seed = j.value("seed", out.seed);
    if (j.contains("split")) {
      const auto& s = j.at("split");
      out.split = {s.at("train").get<double>(), s.at("val").get<double>(),
                   s.at("test").get<double>()};
    }
    out.bin_edges = j.value("bin_edges", out.bin_edges);
    out.preprocess.select_features = j.value("select_features", out.preprocess.select_features);
    out.preprocess.alpha = j.value("alpha", out.preprocess.alpha);
    out.standardize_target = j.value("standardize_target", out.standardize_target);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid training config: ") + e.what());
  }
  out.validate();
  cfg = std::move(out);
}

SplitSamples split_samples(const Dataset& dataset, const TrainConfig& cfg) {
  std::vector<double> edges = cfg.bin_edges;
  if (edges.empty()) edges = dataset.bin_edges;
  if (edges.empty()) edges = {20.0, 25.0, 30.0};
  const DatasetSplit split =
      stratified_patient_split(dataset.samples, cfg.split, edges, cfg.seed);
  SplitSamples out;
  for (std::size_t i : split.train) out.train.push_back(dataset.samples[i]);
  for (std::size_t i : split.val) out.val.push_back(dataset.samples[i]);
  for (std::size_t i : split.test) out.test.push_back(dataset.samples[i]);
  return out;
}

std::vector<PreparedSample> TrainedRun::prepare(
    const std::vector<MultimodalSample>& samples) const {
  const DType dtype = config.model.dtype;
  std::vector<PreparedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    out.push_back({s.id, s.video.to(dtype), schema.transform(s.tabular, dtype), s.target});
  }
  return out;
}

double TrainedRun::predict(const PreparedSample& sample) const {
  NoGradGuard guard;
  return scaler.inverse(model->forward(sample.video, sample.tab).item());
}

namespace {

using Snapshot = std::vector<std::vector<double>>;

Snapshot snapshot(const ParamRegistry& registry) {
  Snapshot out;
  for (const auto& e : registry.entries()) {
    const auto v = e.tensor.values();
    out.emplace_back(v.begin(), v.end());
  }
  return out;
}

void restore(ParamRegistry& registry, const Snapshot& snap) {
  const auto& entries = registry.entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    Tensor t = entries[k].tensor;
    std::copy(snap[k].begin(), snap[k].end(), t.mutable_values().begin());
  }
}

std::vector<std::string> ids_of(const std::vector<MultimodalSample>& samples) {
  std::vector<std::string> out;
  for (const auto& s : samples) out.push_back(s.id);
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

TrainedRun train(const TrainConfig& cfg_in, const std::vector<FeatureSpec>& features,
                 const SplitSamples& data, const EpochCallback& on_epoch) {
  cfg_in.validate();
  if (data.train.empty()) throw ValidationError("training split is empty");

  TrainedRun run;
  run.config = cfg_in;
  TrainConfig& cfg = run.config;
  if (cfg.video_dims_from_data) {
    const Shape& v = data.train.front().video.shape();
    if (v.size() == 4) {
      cfg.model.backbone.frames = v[1];
      cfg.model.backbone.height = v[2];
      cfg.model.backbone.width = v[3];
    }
    cfg.video_dims_from_data = false;
  }

  run.schema = TabularSchema::fit(data.train, features, cfg.preprocess);
  cfg.model.tab_dim = run.schema.width();
  std::vector<double> targets;
  for (const auto& s : data.train) targets.push_back(s.target);
  run.scaler = cfg.standardize_target ? TargetScaler::fit(targets) : TargetScaler{};
  run.train_ids = ids_of(data.train);
  run.val_ids = ids_of(data.val);
  run.test_ids = ids_of(data.test);
  run.model = std::make_unique<MultimodalModel>(cfg.model, cfg.seed);

  const std::vector<PreparedSample> train_set = run.prepare(data.train);
  const std::vector<PreparedSample> val_set = run.prepare(data.val);
  const DType dtype = cfg.model.dtype;
  ParamRegistry& params = run.model->params();
  AdamW optimizer(params, AdamWOptions{cfg.weight_decay});

  const std::size_t n = train_set.size();
  const std::size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  std::size_t total = cfg.epochs * batches;
  if (cfg.max_steps > 0) total = std::min(total, cfg.max_steps);

  Snapshot best = snapshot(params);
  Snapshot last_good = best;
  double best_mae = std::numeric_limits<double>::infinity();
  std::size_t step = 0;

  try {
    for (std::size_t epoch = 0; epoch < cfg.epochs && step < total; ++epoch) {
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      Pcg32 rng = Pcg32::keyed(cfg.seed + epoch, "shuffle");
      shuffle(order, rng);

      double loss_sum = 0.0;
      std::size_t loss_count = 0;
      EpochLog entry;
      entry.epoch = epoch;
      for (std::size_t start = 0; start < n && step < total; start += cfg.batch_size) {
        const std::size_t end = std::min(n, start + cfg.batch_size);
        params.zero_grad();
        std::vector<Tensor> preds;
        std::vector<double> batch_targets;
        for (std::size_t k = start; k < end; ++k) {
          const PreparedSample& s = train_set[order[k]];
          preds.push_back(run.model->forward(s.video, s.tab));
          batch_targets.push_back(run.scaler.forward(s.target));
        }
        const std::size_t batch = batch_targets.size();
        const Tensor target({batch}, std::move(batch_targets), dtype);
        Tensor loss = mse_loss(concat(preds), target);
        loss.backward();
        // Steps 0..total-1 span the schedule, so the last update uses lr_min.
        const double lr = total > 1 ? cosine_lr(step, total - 1, cfg.lr, cfg.lr_min) : cfg.lr;
        optimizer.step(lr);
        ++step;
        run.steps = step;
        run.final_lr = lr;
        entry.lr = lr;
        loss_sum += loss.item();
        ++loss_count;
      }
      entry.train_loss = loss_sum / static_cast<double>(loss_count);
      entry.val_mae = std::numeric_limits<double>::quiet_NaN();
      if (!val_set.empty()) entry.val_mae = evaluate(run, val_set).metrics.mae;
      last_good = snapshot(params);
      if (val_set.empty() || entry.val_mae < best_mae) {
        best_mae = val_set.empty() ? best_mae : entry.val_mae;
        best = last_good;
        run.best_epoch = epoch;
      }
      run.log.push_back(entry);
      if (on_epoch) on_epoch(entry);
    }
  } catch (const NumericalError& e) {
    run.diverged = true;
    run.divergence = e.what();
  }

  restore(params, run.log.empty() ? last_good : best);
  params.zero_grad();
  return run;
}

TrainedRun train(const TrainConfig& cfg, const Dataset& dataset, const EpochCallback& on_epoch) {
  return train(cfg, dataset.features, split_samples(dataset, cfg), on_epoch);
}

Evaluation evaluate(const TrainedRun& run, const std::vector<PreparedSample>& samples,
                    std::size_t workers) {
  if (samples.empty()) throw ValidationError("cannot evaluate an empty split");
  Evaluation out;
  out.predictions.assign(samples.size(), 0.0);
  workers = std::max<std::size_t>(1, std::min(workers, samples.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) out.predictions[i] = run.predict(samples[i]);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < samples.size(); i += workers) {
            out.predictions[i] = run.predict(samples[i]);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  for (const auto& s : samples) {
    out.ids.push_back(s.id);
    out.targets.push_back(s.target);
  }
  out.metrics = compute_metrics(out.predictions, out.targets);
  return out;
}

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

std::string run_hash(const TrainConfig& cfg) { return config_hash(json(cfg).dump()); }

}  // namespace

void save_run(const TrainedRun& run, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  write_file(dir / "config.json",
             json{{"train", run.config}, {"data", run.data_path}}.dump(2) + "\n");
  write_file(dir / "split.json",
             json{{"train", run.train_ids}, {"val", run.val_ids}, {"test", run.test_ids}}.dump(2) +
                 "\n");
  write_file(dir / "preprocess.json",
             json{{"schema", run.schema}, {"target_scaler", run.scaler}}.dump(2) + "\n");
  std::string log = "epoch,train_loss,val_mae,lr\n";
  for (const auto& e : run.log) {
    log += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," +
           format_double(e.val_mae) + "," + format_double(e.lr) + "\n";
  }
  write_file(dir / "log.csv", log);
  write_file(dir / "summary.json", json{{"steps", run.steps},
                                        {"final_lr", run.final_lr},
                                        {"best_epoch", run.best_epoch},
                                        {"diverged", run.diverged},
                                        {"divergence", run.divergence}}
                                           .dump(2) +
                                       "\n");
  save_checkpoint(run.model->params(), dir / "checkpoint",
                  {run.config.model.dtype, run.config.seed, run_hash(run.config)});
}

TrainedRun load_run(const fs::path& dir) {
  TrainedRun run;
  const json config = read_json(dir / "config.json");
  try {
    run.config = config.at("train").get<TrainConfig>();
    run.config.video_dims_from_data = false;
    run.config.model.tab_dim = config.at("train").at("tab_dim").get<std::size_t>();
    run.data_path = config.value("data", std::string{});
    const json split = read_json(dir / "split.json");
    run.train_ids = split.at("train").get<std::vector<std::string>>();
    run.val_ids = split.at("val").get<std::vector<std::string>>();
    run.test_ids = split.at("test").get<std::vector<std::string>>();
    const json pre = read_json(dir / "preprocess.json");
    run.schema = pre.at("schema").get<TabularSchema>();
    run.scaler = pre.at("target_scaler").get<TargetScaler>();
    const json summary = read_json(dir / "summary.json");
    run.steps = summary.at("steps").get<std::size_t>();
    run.final_lr = summary.at("final_lr").get<double>();
    run.best_epoch = summary.at("best_epoch").get<std::size_t>();
    run.diverged = summary.at("diverged").get<bool>();
    run.divergence = summary.at("divergence").get<std::string>();
  } catch (const json::exception& e) {
    throw ParseError("run directory " + dir.string() + ": " + e.what());
  }
  if (run.schema.width() != run.config.model.tab_dim) {
    throw ValidationError("run " + dir.string() + ": schema width " +
                          std::to_string(run.schema.width()) + " does not match tab_dim " +
                          std::to_string(run.config.model.tab_dim));
  }
  run.model = std::make_unique<MultimodalModel>(run.config.model, run.config.seed);
  load_checkpoint(run.model->params(), dir / "checkpoint", run_hash(run.config));
  return run;
}

std::vector<MultimodalSample> select_split(const TrainedRun& run, const Dataset& dataset,
                                           const std::string& split) {
  const std::vector<std::string>* ids = nullptr;
  if (split == "train") ids = &run.train_ids;
  if (split == "val") ids = &run.val_ids;
  if (split == "test") ids = &run.test_ids;
  if (!ids) throw ValidationError("unknown split '" + split + "' (expected train, val or test)");
  std::map<std::string, const MultimodalSample*> by_id;
  for (const auto& s : dataset.samples) by_id[s.id] = &s;
  std::vector<MultimodalSample> out;
  for (const auto& id : *ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw ValidationError("split sample '" + id + "' is missing from the dataset");
    }
    out.push_back(*it->second);
  }
  return out;
}

}  // namespace tabmixer
