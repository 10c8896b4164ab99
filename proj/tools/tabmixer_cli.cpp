// Copyright 2026 The TabMixer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command line front end. Human-readable tables go to stdout; machine-readable
// CSV/JSON files go under --out. Exit codes: 0 success, 2 invalid input,
// 3 numerical failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "table.hpp"
#include "tabmixer/bench.hpp"
#include "tabmixer/errors.hpp"
#include "tabmixer/fusion.hpp"
#include "tabmixer/noise.hpp"
#include "tabmixer/synthetic.hpp"
#include "tabmixer/tabmixer.hpp"
#include "tabmixer/train.hpp"
#include "tabmixer/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using tabmixer::cli::fixed;
using tabmixer::cli::sci;
using tabmixer::cli::Table;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw tabmixer::IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw tabmixer::ParseError(path + ": byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

void write_out(const std::string& dir, const std::string& name, const std::string& text) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw tabmixer::IoError("cannot create " + dir + ": " + ec.message());
  const fs::path path = fs::path(dir) / name;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw tabmixer::IoError("cannot write " + path.string());
  out << text;
  if (!out) throw tabmixer::IoError("failed writing " + path.string());
  std::cout << "wrote " << path.string() << '\n';
}

std::string shortest(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// params

struct ParamsArgs {
  std::string config;
  std::vector<std::size_t> dims;
  std::size_t aux_hidden = tabmixer::kDefaultAuxHidden;
  std::string out;
};

int run_params(const ParamsArgs& a) {
  tabmixer::TabMixerConfig cfg{1024, 4, 6, 6, 29};
  if (!a.config.empty()) cfg = read_json_file(a.config).get<tabmixer::TabMixerConfig>();
  if (!a.dims.empty()) {
    if (a.dims.size() != 5) throw tabmixer::ValidationError("--dims expects C,T,H,W,D");
    cfg.C = a.dims[0];
    cfg.T = a.dims[1];
    cfg.H = a.dims[2];
    cfg.W = a.dims[3];
    cfg.D = a.dims[4];
  }
  cfg.validate();

  struct Row {
    std::string module;
    std::size_t registry;
    std::size_t formula;
  };
  std::vector<Row> rows;
  tabmixer::ParamRegistry main_reg;
  tabmixer::TabMixer mixer(cfg, main_reg);
  rows.push_back({"tabmixer", main_reg.total(), tabmixer::param_count_formula(cfg)});

  tabmixer::TabMixerConfig wo_cm = cfg;
  wo_cm.enable_channel = false;
  tabmixer::ParamRegistry wo_reg;
  tabmixer::TabMixer wo_mixer(wo_cm, wo_reg);
  rows.push_back({"tabmixer_wo_cm", wo_reg.total(), tabmixer::param_count_formula(wo_cm)});

  if (cfg.D > 0) {
    tabmixer::ParamRegistry film_reg;
    tabmixer::FilmModule film(cfg.C, cfg.D, a.aux_hidden, film_reg);
    rows.push_back({"film", film_reg.total(), tabmixer::film_param_count(cfg.C, cfg.D, a.aux_hidden)});
  }
  tabmixer::ParamRegistry daft_reg;
  tabmixer::DaftModule daft(cfg.C, cfg.D, a.aux_hidden, daft_reg);
  rows.push_back({"daft", daft_reg.total(), tabmixer::daft_param_count(cfg.C, cfg.D, a.aux_hidden)});

  std::cout << "dims C=" << cfg.C << " T=" << cfg.T << " H=" << cfg.H << " W=" << cfg.W
            << " D=" << cfg.D << "  (S=" << cfg.S() << ")\n\n";
  Table table({"module", "params", "closed_form", "millions"});
  std::string csv = "module,params,closed_form\n";
  json j = json::object();
  j["config"] = cfg;
  j["modules"] = json::array();
  bool consistent = true;
  for (const auto& r : rows) {
    table.add({r.module, std::to_string(r.registry), std::to_string(r.formula),
               fixed(static_cast<double>(r.registry) / 1e6, 6)});
    csv += r.module + "," + std::to_string(r.registry) + "," + std::to_string(r.formula) + "\n";
    j["modules"].push_back({{"module", r.module}, {"params", r.registry}, {"closed_form", r.formula}});
    consistent = consistent && r.registry == r.formula;
  }
  table.print(std::cout);

  std::cout << "\ntabmixer breakdown\n";
  Table breakdown({"prefix", "params"});
  json jb = json::array();
  for (const auto& [prefix, count] : tabmixer::count_params(main_reg).breakdown) {
    breakdown.add({prefix, std::to_string(count)});
    jb.push_back({{"prefix", prefix}, {"params", count}});
  }
  breakdown.print(std::cout);
  j["tabmixer_breakdown"] = jb;

  write_out(a.out, "params.csv", csv);
  write_out(a.out, "params.json", j.dump(2) + "\n");
  if (!consistent) throw tabmixer::NumericalError("registry count differs from the closed form");
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradArgs {
  std::string module = "tabmixer";
  std::uint64_t seed = 0;
  std::size_t seeds = 1;
  std::vector<std::size_t> dims{8, 4, 4, 4, 5};
  std::string fusion = "tabmixer";
  double tolerance = 1e-4;
  std::size_t max_per_param = 0;
  std::string out;
};

int run_gradcheck(const GradArgs& a) {
  if (a.dims.size() != 5) throw tabmixer::ValidationError("--dims expects C,T,H,W,D");
  Table table({"module", "seed", "checked", "max_rel_error", "worst_param", "status"});
  std::string csv = "module,seed,checked,max_rel_error,worst_param,worst_index,analytic,numeric\n";
  bool ok = true;
  for (std::size_t k = 0; k < a.seeds; ++k) {
    tabmixer::GradScenario s;
    s.module = a.module;
    s.seed = a.seed + k;
    s.C = a.dims[0];
    s.T = a.dims[1];
    s.H = a.dims[2];
    s.W = a.dims[3];
    s.D = a.dims[4];
    s.fusion = tabmixer::parse_fusion(a.fusion);
    s.max_per_param = a.max_per_param;
    const tabmixer::GradCheckResult r = tabmixer::run_gradcheck(s);
    const bool pass = r.max_rel_error <= a.tolerance;
    ok = ok && pass;
    table.add({a.module, std::to_string(s.seed), std::to_string(r.checked), sci(r.max_rel_error),
               r.worst_param + "[" + std::to_string(r.worst_index) + "]", pass ? "ok" : "FAIL"});
    csv += a.module + "," + std::to_string(s.seed) + "," + std::to_string(r.checked) + "," +
           shortest(r.max_rel_error) + "," + r.worst_param + "," + std::to_string(r.worst_index) +
           "," + shortest(r.analytic) + "," + shortest(r.numeric) + "\n";
  }
  table.print(std::cout);
  write_out(a.out, "gradcheck.csv", csv);
  if (!ok) {
    throw tabmixer::NumericalError("gradient check exceeded tolerance " + sci(a.tolerance));
  }
  return 0;
}

// ---------------------------------------------------------------------------
// synth

int run_synth(const tabmixer::SyntheticConfig& cfg, const std::string& out) {
  const tabmixer::SyntheticData data = tabmixer::generate_synthetic(cfg, out);
  std::size_t bins[4] = {0, 0, 0, 0};
  std::vector<std::string> patients;
  for (const auto& s : data.dataset.samples) {
    ++bins[std::min<std::size_t>(3, tabmixer::target_bin(s.target, cfg.bin_edges))];
    if (patients.empty() || patients.back() != s.patient_id) patients.push_back(s.patient_id);
  }
  Table table({"samples", "patients", "video", "features", "bin<=20", "bin<=25", "bin<=30",
               "bin>30"});
  table.add({std::to_string(data.dataset.samples.size()), std::to_string(patients.size()),
             "1x" + std::to_string(cfg.frames) + "x" + std::to_string(cfg.height) + "x" +
                 std::to_string(cfg.width),
             std::to_string(data.dataset.features.size()), std::to_string(bins[0]),
             std::to_string(bins[1]), std::to_string(bins[2]), std::to_string(bins[3])});
  table.print(std::cout);
  std::cout << "dataset written to " << out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// train / eval / noise

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::size_t epochs = 0;
  std::int64_t seed = -1;
  bool quiet = false;
};

void print_report(const std::string& split, const tabmixer::MetricsReport& m) {
  Table table({"split", "n", "MAE", "RMSE", "MAPE%"});
  table.add({split, std::to_string(m.n), fixed(m.mae), fixed(m.rmse), fixed(m.mape)});
  table.print(std::cout);
}

json report_json(const tabmixer::MetricsReport& m) {
  return json{{"n", m.n}, {"mae", m.mae}, {"rmse", m.rmse}, {"mape", m.mape},
              {"mape_excluded", m.mape_excluded}};
}

tabmixer::Dataset load_with_report(const std::string& path) {
  tabmixer::LoadReport report;
  tabmixer::Dataset ds = tabmixer::load_dataset(path, &report);
  std::cout << "loaded " << report.loaded << " samples";
  if (!report.excluded.empty()) {
    std::cout << ", excluded " << report.excluded.size() << " with missing tabular values";
  }
  std::cout << '\n';
  for (const auto& [id, reason] : report.excluded) std::cout << "  excluded " << id << ": " << reason << '\n';
  return ds;
}

int run_train(const TrainArgs& a) {
  tabmixer::TrainConfig cfg = read_json_file(a.config).get<tabmixer::TrainConfig>();
  if (a.epochs > 0) cfg.epochs = a.epochs;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  const tabmixer::Dataset ds = load_with_report(a.data);

  Table progress({"epoch", "train_loss", "val_mae", "lr"});
  auto on_epoch = [&](const tabmixer::EpochLog& e) {
    if (a.quiet) return;
    std::cout << "epoch " << e.epoch << "  train_loss " << fixed(e.train_loss, 6) << "  val_mae "
              << fixed(e.val_mae) << "  lr " << sci(e.lr) << '\n';
  };
  tabmixer::TrainedRun run = tabmixer::train(cfg, ds, on_epoch);
  run.data_path = fs::absolute(a.data).string();
  for (const auto& w : run.schema.warnings()) std::cout << "warning: " << w << '\n';
  std::cout << "fusion " << tabmixer::to_string(run.config.model.fusion) << ", tabular width "
            << run.schema.width() << ", parameters " << run.model->params().total() << ", steps "
            << run.steps << ", best epoch " << run.best_epoch << '\n';
  tabmixer::save_run(run, a.out);
  std::cout << "run written to " << a.out << '\n';
  if (run.diverged) throw tabmixer::NumericalError("training diverged: " + run.divergence);
  return 0;
}

struct EvalArgs {
  std::string run;
  std::string split = "test";
  std::string data;
  std::size_t workers = 1;
  std::string out;
};

int run_eval(const EvalArgs& a) {
  const tabmixer::TrainedRun run = tabmixer::load_run(a.run);
  const tabmixer::Dataset ds = load_with_report(a.data.empty() ? run.data_path : a.data);
  const auto samples = run.prepare(tabmixer::select_split(run, ds, a.split));
  const tabmixer::Evaluation ev = tabmixer::evaluate(run, samples, a.workers);
  print_report(a.split, ev.metrics);
  std::string csv = "id,target,prediction,abs_error\n";
  for (std::size_t i = 0; i < ev.ids.size(); ++i) {
    csv += ev.ids[i] + "," + shortest(ev.targets[i]) + "," + shortest(ev.predictions[i]) + "," +
           shortest(ev.metrics.abs_errors[i]) + "\n";
  }
  write_out(a.out, "metrics_" + a.split + ".json", report_json(ev.metrics).dump(2) + "\n");
  write_out(a.out, "predictions_" + a.split + ".csv", csv);
  return 0;
}

struct NoiseArgs {
  std::string run;
  std::string target = "imaging";
  std::vector<double> sigmas{0.0, 0.25, 0.5, 1.0, 2.0};
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
  std::string split = "test";
  std::string data;
  std::size_t workers = 1;
  std::string out;
};

int run_noise(const NoiseArgs& a) {
  const tabmixer::TrainedRun run = tabmixer::load_run(a.run);
  const tabmixer::Dataset ds = load_with_report(a.data.empty() ? run.data_path : a.data);
  const auto samples = run.prepare(tabmixer::select_split(run, ds, a.split));
  tabmixer::NoiseSweepConfig cfg;
  cfg.target = tabmixer::parse_noise_target(a.target);
  cfg.sigmas = a.sigmas;
  cfg.repeats = a.repeats;
  cfg.seed = a.seed;
  const auto rows = tabmixer::noise_sweep(run, samples, cfg, a.workers);
  Table table({"sigma", "repeats", "MAE mean", "MAE sd", "RMSE mean"});
  for (const auto& r : rows) {
    table.add({fixed(r.sigma, 3), std::to_string(r.repeats), fixed(r.mae_mean), fixed(r.mae_sd),
               fixed(r.rmse_mean)});
  }
  std::cout << "noise target " << a.target << " on " << a.split << " (" << samples.size()
            << " samples)\n";
  table.print(std::cout);
  write_out(a.out, "noise_" + a.target + ".csv", tabmixer::noise_csv(rows, cfg.target));
  return 0;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::vector<std::size_t> dims{1024, 4, 6, 6};
  std::size_t tab_dim = 29;
  std::size_t iters = 100;
  std::size_t warmup = 3;
  std::vector<std::string> modules{"tabmixer_wo_cm", "film", "daft", "tabmixer"};
  std::string out;
};

int run_bench(const BenchArgs& a) {
  if (a.dims.size() != 4) throw tabmixer::ValidationError("--dims expects C,T,H,W");
  tabmixer::BenchConfig cfg;
  cfg.C = a.dims[0];
  cfg.T = a.dims[1];
  cfg.H = a.dims[2];
  cfg.W = a.dims[3];
  cfg.D = a.tab_dim;
  cfg.iters = a.iters;
  cfg.warmup = a.warmup;
  cfg.modules = a.modules;
  const tabmixer::HardwareInfo hw = tabmixer::hardware_fingerprint();
  std::cout << "cpu: " << hw.cpu << "\nthreads: " << hw.threads << "\ncompiler: " << hw.compiler
            << "\nbuild: " << hw.build << "\n\n";
  const auto rows = tabmixer::run_bench(cfg);
  Table table({"module", "params", "iters", "mean_ms", "p50_ms", "p95_ms"});
  json jrows = json::array();
  for (const auto& r : rows) {
    table.add({r.module, std::to_string(r.params), std::to_string(r.iters), fixed(r.mean_ms, 3),
               fixed(r.p50_ms, 3), fixed(r.p95_ms, 3)});
    jrows.push_back({{"module", r.module}, {"params", r.params}, {"iters", r.iters},
                     {"mean_ms", r.mean_ms}, {"p50_ms", r.p50_ms}, {"p95_ms", r.p95_ms},
                     {"min_ms", r.min_ms}});
  }
  table.print(std::cout);
  const json doc{{"hardware",
                  {{"cpu", hw.cpu}, {"threads", hw.threads}, {"compiler", hw.compiler},
                   {"build", hw.build}}},
                 {"dims", a.dims},
                 {"tab_dim", a.tab_dim},
                 {"warmup", a.warmup},
                 {"rows", jrows}};
  write_out(a.out, "bench.csv", tabmixer::bench_csv(rows));
  write_out(a.out, "bench.json", doc.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TabMixer imaging-tabular fusion toolkit"};
  app.require_subcommand(1);
  int status = 0;

  ParamsArgs params;
  auto* p = app.add_subcommand("params", "Parameter counts of TabMixer and the fusion baselines");
  p->add_option("--config", params.config, "TabMixer config JSON");
  p->add_option("--dims", params.dims, "C,T,H,W,D")->delimiter(',');
  p->add_option("--aux-hidden", params.aux_hidden, "FiLM/DAFT hidden width");
  p->add_option("--out", params.out, "Output directory for CSV/JSON");
  p->callback([&] { status = run_params(params); });

  GradArgs grad;
  auto* g = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  g->add_option("--module", grad.module, "tabmixer|film|daft|backbone|model")
      ->check(CLI::IsMember({"tabmixer", "film", "daft", "backbone", "model"}));
  g->add_option("--seed", grad.seed, "First seed");
  g->add_option("--seeds", grad.seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);
  g->add_option("--dims", grad.dims, "C,T,H,W,D at the fusion point")->delimiter(',');
  g->add_option("--fusion", grad.fusion, "Fusion of the model scenario");
  g->add_option("--tolerance", grad.tolerance, "Maximum relative error");
  g->add_option("--max-per-param", grad.max_per_param, "Scalars perturbed per tensor (0 = all)");
  g->add_option("--out", grad.out, "Output directory for CSV");
  g->callback([&] { status = run_gradcheck(grad); });

  tabmixer::SyntheticConfig synth;
  std::string synth_out;
  auto* s = app.add_subcommand("synth", "Generate a synthetic multimodal dataset");
  s->add_option("--out", synth_out, "Dataset directory")->required();
  s->add_option("--n", synth.n_samples, "Number of samples");
  s->add_option("--seed", synth.seed, "Generator seed");
  s->add_option("--noise-std", synth.noise_std, "Target noise standard deviation");
  s->add_option("--a-img", synth.a_img, "Weight of the imaging latent");
  s->add_option("--a-tab", synth.a_tab, "Weight of the tabular latent");
  s->add_option("--frames", synth.frames, "Frames per video");
  s->add_option("--height", synth.height, "Video height");
  s->add_option("--width", synth.width, "Video width");
  s->add_option("--n-numeric", synth.n_numeric, "Numeric features including the marker");
  s->add_option("--n-categorical", synth.n_categorical, "Categorical features");
  s->add_option("--repeat-prob", synth.repeat_patient_prob, "Probability of a repeated patient");
  s->callback([&] { status = run_synth(synth, synth_out); });

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model on a dataset");
  t->add_option("--config", train.config, "Training config JSON")->required();
  t->add_option("--data", train.data, "Dataset directory or manifest")->required();
  t->add_option("--out", train.out, "Run directory")->required();
  t->add_option("--epochs", train.epochs, "Override the configured epochs");
  t->add_option("--seed", train.seed, "Override the configured seed");
  t->add_flag("--quiet", train.quiet, "Do not print per-epoch progress");
  t->callback([&] { status = run_train(train); });

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate a trained run on one split");
  e->add_option("--run", eval.run, "Run directory")->required();
  e->add_option("--split", eval.split, "train|val|test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  e->add_option("--data", eval.data, "Dataset override (default: the training data)");
  e->add_option("--workers", eval.workers, "Evaluation threads")->check(CLI::PositiveNumber);
  e->add_option("--out", eval.out, "Output directory for metrics and predictions");
  e->callback([&] { status = run_eval(eval); });

  NoiseArgs noise;
  auto* n = app.add_subcommand("noise", "Noise-robustness sweep of a trained run");
  n->add_option("--run", noise.run, "Run directory")->required();
  n->add_option("--target", noise.target, "imaging|tabular|both")
      ->check(CLI::IsMember({"imaging", "tabular", "both"}));
  n->add_option("--sigmas", noise.sigmas, "Ascending noise levels")->delimiter(',');
  n->add_option("--repeats", noise.repeats, "Evaluations per sigma")->check(CLI::PositiveNumber);
  n->add_option("--seed", noise.seed, "Noise seed");
  n->add_option("--split", noise.split, "train|val|test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  n->add_option("--data", noise.data, "Dataset override (default: the training data)");
  n->add_option("--workers", noise.workers, "Evaluation threads")->check(CLI::PositiveNumber);
  n->add_option("--out", noise.out, "Output directory for CSV");
  n->callback([&] { status = run_noise(noise); });

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Inference latency of the fusion modules");
  b->add_option("--dims", bench.dims, "C,T,H,W")->delimiter(',');
  b->add_option("--tab-dim", bench.tab_dim, "Tabular width D");
  b->add_option("--iters", bench.iters, "Timed iterations (>= 10)");
  b->add_option("--warmup", bench.warmup, "Untimed warmup iterations");
  b->add_option("--modules", bench.modules, "film,daft,tabmixer,tabmixer_wo_cm")->delimiter(',');
  b->add_option("--out", bench.out, "Output directory for CSV/JSON");
  b->callback([&] { status = run_bench(bench); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 2;
  } catch (const tabmixer::NumericalError& err) {
    std::cerr << "numerical error: " << err.what() << '\n';
    return 3;
  } catch (const tabmixer::ValidationError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  } catch (const tabmixer::Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return status;
}
