// Command-line driver: dataset synthesis, baseline training, transfer-learning
// fine-tuning, the qubit/repetition grid search, evaluation under ideal and
// noisy backends, circuit description, and report aggregation.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "qtl/config.hpp"
#include "qtl/data.hpp"
#include "qtl/model_io.hpp"
#include "qtl/report.hpp"
#include "qtl/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommandArgs {
  std::string config_path;
  std::string checkpoint;
  std::string mode;  // finetune: ctl | qtl
  std::string backend_override;
  std::optional<double> r1_override, r2_override;
  std::string out_path;
  std::string results_dir;
  int jobs = 0;  // grid worker override; 0 = use the config value
  // synth flags
  int patients = 12;
  int per_patient = 20;
  double signal = 0.6;
  uint64_t seed = 0;
  std::string synth_out;
  // describe-circuit flags
  int qubits = 6;
  int reps = 4;
};

qtl::RunConfig load_config_echo(const std::string& path) {
  qtl::RunConfig cfg = qtl::load_run_config(path);
  std::cerr << "resolved config: " << qtl::run_config_to_json(cfg).dump() << "\n";
  return cfg;
}

qtl::Dataset load_data(const qtl::RunConfig& cfg) {
  if (cfg.data.use_synth)
    return qtl::synth_generate(cfg.data.synth.patients, cfg.data.synth.per_patient, cfg.seed,
                               cfg.data.synth.signal);
  return qtl::load_dataset(cfg.data.manifest);
}

void write_result(const fs::path& path, const qtl::RunConfig& cfg, const qtl::MetricsReport& m,
                  const qtl::TrainResult* train_result) {
  json j{{"config", qtl::run_config_to_json(cfg)}, {"metrics", qtl::metrics_to_json(m)}};
  if (train_result) {
    j["loss_curve"] = train_result->loss_curve;
    j["lr_curve"] = train_result->lr_curve;
    j["final_loss"] = train_result->final_loss;
  }
  std::ofstream out(path);
  if (!out) throw qtl::DataError("cannot write result file " + path.string());
  out << j.dump(2) << "\n";
}

qtl::FrozenFeatures frozen_from_baseline_checkpoint(const std::string& path) {
  qtl::AnyModel model = qtl::load_model(path);
  if (model.kind != qtl::ModelKind::Baseline)
    throw qtl::ConfigError("checkpoint " + path + " does not hold a baseline model");
  return qtl::freeze_features(*model.baseline);
}

int cmd_synth(const CommandArgs& a) {
  if (a.synth_out.empty()) throw qtl::ConfigError("synth: --out directory is required");
  const qtl::Dataset ds =
      qtl::synth_generate(a.patients, a.per_patient, a.seed, a.signal, a.synth_out);
  std::cout << "wrote " << ds.size() << " images and manifest.csv to " << a.synth_out << "\n";
  return 0;
}

int cmd_train_baseline(const CommandArgs& a) {
  const qtl::RunConfig cfg = load_config_echo(a.config_path);
  fs::create_directories(cfg.output_dir);
  const qtl::Dataset data = load_data(cfg);
  const qtl::SplitAssignment split = qtl::split(data, cfg.seed, cfg.test_fraction);

  qtl::BaselineCnn model = qtl::build_baseline(cfg.seed);
  qtl::TrainConfig tc = cfg.train;
  tc.epochs = cfg.baseline_epochs;
  const qtl::TrainResult tr = qtl::train_baseline(model, data, split.train, tc);
  const qtl::MetricsReport metrics = qtl::evaluate_baseline(model, data, split.test, "baseline");

  const fs::path ckpt = fs::path(cfg.output_dir) / "baseline.qtlc";
  qtl::save_model(ckpt.string(), model);
  write_result(fs::path(cfg.output_dir) / "result_baseline.json", cfg, metrics, &tr);
  std::cout << qtl::report_table({metrics}, 0);
  std::cout << "checkpoint: " << ckpt.string() << "\n";
  return 0;
}

int cmd_finetune(const CommandArgs& a) {
  if (a.mode != "ctl" && a.mode != "qtl")
    throw qtl::ConfigError("finetune: --mode must be ctl or qtl");
  const qtl::RunConfig cfg = load_config_echo(a.config_path);
  fs::create_directories(cfg.output_dir);
  const std::string baseline_path =
      a.checkpoint.empty() ? (fs::path(cfg.output_dir) / "baseline.qtlc").string() : a.checkpoint;

  qtl::FrozenFeatures frozen = frozen_from_baseline_checkpoint(baseline_path);
  const qtl::Dataset data = load_data(cfg);
  const qtl::SplitAssignment split = qtl::split(data, cfg.seed, cfg.test_fraction);
  const qtl::TensorF features = qtl::extract_all_features(frozen, data);
  const qtl::TensorF labels = qtl::dataset_labels(data);

  if (a.mode == "ctl") {
    qtl::CtlModel model = qtl::make_ctl_model(frozen, cfg.seed);
    const qtl::TrainResult tr = qtl::train_ctl(model, features, labels, split.train, cfg.train);
    const qtl::MetricsReport metrics = qtl::evaluate_ctl(model, features, data, split.test, "ctl");
    const fs::path ckpt = fs::path(cfg.output_dir) / "ctl.qtlc";
    qtl::save_model(ckpt.string(), model);
    write_result(fs::path(cfg.output_dir) / "result_ctl.json", cfg, metrics, &tr);
    std::cout << qtl::report_table({metrics}, -1);
    std::cout << "checkpoint: " << ckpt.string() << "\n";
  } else {
    qtl::QtlModel model = qtl::make_qtl_model(frozen, cfg.model.n_qubits, cfg.model.reps, cfg.seed);
    const qtl::TrainResult tr = qtl::train_qtl(model, features, labels, split.train, cfg.train,
                                               qtl::QuantumBackend::ideal());
    const std::string tag =
        "qtl_q" + std::to_string(cfg.model.n_qubits) + "_r" + std::to_string(cfg.model.reps);
    const qtl::MetricsReport metrics =
        qtl::evaluate_qtl(model, features, data, split.test, cfg.backend.backend(), tag);
    const fs::path ckpt = fs::path(cfg.output_dir) / (tag + ".qtlc");
    qtl::save_model(ckpt.string(), model);
    write_result(fs::path(cfg.output_dir) / ("result_" + tag + ".json"), cfg, metrics, &tr);
    std::cout << qtl::report_table({metrics}, -1);
    std::cout << "checkpoint: " << ckpt.string() << "\n";
  }
  return 0;
}

int cmd_grid(const CommandArgs& a) {
  const qtl::RunConfig cfg = load_config_echo(a.config_path);
  fs::create_directories(cfg.output_dir);
  const std::string baseline_path =
      a.checkpoint.empty() ? (fs::path(cfg.output_dir) / "baseline.qtlc").string() : a.checkpoint;

  qtl::FrozenFeatures frozen = frozen_from_baseline_checkpoint(baseline_path);
  const qtl::Dataset data = load_data(cfg);
  const qtl::SplitAssignment split = qtl::split(data, cfg.seed, cfg.test_fraction);
  const qtl::TensorF features = qtl::extract_all_features(frozen, data);
  const qtl::TensorF labels = qtl::dataset_labels(data);

  const qtl::TensorF train_feat = qtl::slice_rows(features, split.train);
  const qtl::TensorF train_lab = qtl::slice_labels(labels, split.train);
  const qtl::TensorF test_feat = qtl::slice_rows(features, split.test);
  std::vector<int> test_lab;
  for (int i : split.test) test_lab.push_back(data.samples[i].label);

  const std::string grid_dir = (fs::path(cfg.output_dir) / "grid").string();
  const int jobs = a.jobs > 0 ? a.jobs : cfg.jobs;
  const qtl::GridOutcome outcome =
      qtl::grid_search(train_feat, train_lab, test_feat, test_lab, cfg.grid, cfg.train,
                       cfg.backend.backend(), grid_dir, jobs);

  const qtl::GridCellResult& best = outcome.cells.at(outcome.best_index);
  json summary{{"cells", outcome.cells.size()},
               {"best", {{"n_qubits", best.n_qubits}, {"reps", best.reps},
                         {"metrics", qtl::metrics_to_json(best.metrics)}}}};
  std::ofstream(fs::path(cfg.output_dir) / "grid_summary.json") << summary.dump(2) << "\n";

  std::vector<qtl::MetricsReport> rows;
  for (const auto& c : outcome.cells) rows.push_back(c.metrics);
  std::cout << qtl::report_table(rows, -1);
  std::cout << "best: " << best.n_qubits << " qubits, " << best.reps
            << " reps (test accuracy " << best.metrics.accuracy << ")\n";
  return 0;
}

int cmd_evaluate(const CommandArgs& a) {
  const qtl::RunConfig cfg = a.config_path.empty()
                                 ? qtl::run_config_from_json(nlohmann::json::object())
                                 : load_config_echo(a.config_path);
  if (a.checkpoint.empty()) throw qtl::ConfigError("evaluate: --checkpoint is required");

  qtl::BackendConfig backend_cfg = cfg.backend;
  if (!a.backend_override.empty()) {
    if (a.backend_override == "noisy")
      backend_cfg.noisy = true;
    else if (a.backend_override == "ideal")
      backend_cfg.noisy = false;
    else
      throw qtl::ConfigError("evaluate: --backend must be ideal or noisy");
  }
  if (a.r1_override) backend_cfg.r_1q = *a.r1_override;
  if (a.r2_override) backend_cfg.r_2q = *a.r2_override;
  if (backend_cfg.r_1q < 0 || backend_cfg.r_1q > 1 || backend_cfg.r_2q < 0 || backend_cfg.r_2q > 1)
    throw qtl::ConfigError("evaluate: depolarizing rates must lie in [0,1]");

  qtl::AnyModel model = qtl::load_model(a.checkpoint);
  const qtl::Dataset data = load_data(cfg);
  const qtl::SplitAssignment split = qtl::split(data, cfg.seed, cfg.test_fraction);

  qtl::MetricsReport metrics;
  if (model.kind == qtl::ModelKind::Baseline) {
    if (backend_cfg.noisy)
      throw qtl::ConfigError("evaluate: the baseline model has no quantum backend; use --backend ideal");
    metrics = qtl::evaluate_baseline(*model.baseline, data, split.test, "baseline");
  } else if (model.kind == qtl::ModelKind::Ctl) {
    if (backend_cfg.noisy)
      throw qtl::ConfigError("evaluate: the ctl model has no quantum backend; use --backend ideal");
    const qtl::TensorF features = qtl::extract_all_features(model.ctl->frozen, data);
    metrics = qtl::evaluate_ctl(*model.ctl, features, data, split.test, "ctl");
  } else {
    const qtl::TensorF features = qtl::extract_all_features(model.qtl->frozen, data);
    const std::string tag = "qtl_q" + std::to_string(model.qtl->dqn.n_qubits());
    metrics =
        qtl::evaluate_qtl(*model.qtl, features, data, split.test, backend_cfg.backend(), tag);
  }

  std::cout << qtl::report_csv({metrics}, -1);
  if (!a.out_path.empty()) write_result(a.out_path, cfg, metrics, nullptr);
  return 0;
}

int cmd_describe_circuit(const CommandArgs& a) {
  const json j = qtl::circuit_to_json(qtl::build_ansatz(a.qubits, a.reps));
  if (a.out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(a.out_path);
    if (!out) throw qtl::DataError("cannot write " + a.out_path);
    out << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_report(const CommandArgs& a) {
  if (a.results_dir.empty()) throw qtl::ConfigError("report: --results directory is required");
  if (!fs::is_directory(a.results_dir))
    throw qtl::ConfigError("report: " + a.results_dir + " is not a directory");

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(a.results_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if ((name.rfind("result_", 0) == 0 || name.rfind("cell_", 0) == 0) &&
        entry.path().extension() == ".json")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<qtl::MetricsReport> rows;
  for (const auto& path : files) {
    std::ifstream in(path);
    json j;
    try {
      in >> j;
      rows.push_back(qtl::metrics_from_json(j.at("metrics")));
    } catch (const json::exception& e) {
      throw qtl::DataError("malformed result file " + path.string() + ": " + e.what());
    }
  }
  if (rows.empty()) throw qtl::ConfigError("report: no completed results in " + a.results_dir);

  std::stable_sort(rows.begin(), rows.end(),
                   [](const qtl::MetricsReport& x, const qtl::MetricsReport& y) {
                     const bool xb = x.model_tag == "baseline", yb = y.model_tag == "baseline";
                     if (xb != yb) return xb;
                     if (x.model_tag != y.model_tag) return x.model_tag < y.model_tag;
                     return x.backend_tag < y.backend_tag;
                   });

  const int base = qtl::find_baseline_row(rows);
  const std::string csv = qtl::report_csv(rows, rows.size() > 1 ? base : -1);
  std::cout << qtl::report_table(rows, rows.size() > 1 ? base : -1);
  if (a.out_path.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(a.out_path);
    if (!out) throw qtl::DataError("cannot write " + a.out_path);
    out << csv;
    std::cout << "csv: " << a.out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum transfer learning on frozen CNN features"};
  app.require_subcommand(1);
  CommandArgs a;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic PGM dataset + manifest");
  synth->add_option("--patients", a.patients, "number of patients (>= 4)");
  synth->add_option("--per-patient", a.per_patient, "images per patient");
  synth->add_option("--seed", a.seed, "generator seed");
  synth->add_option("--signal", a.signal, "planted class-signal strength");
  synth->add_option("--out", a.synth_out, "output directory")->required();

  CLI::App* train_b = app.add_subcommand("train-baseline", "train the weak baseline CNN");
  train_b->add_option("--config", a.config_path, "run config JSON")->required();

  CLI::App* finetune = app.add_subcommand("finetune", "train a transfer-learning head");
  finetune->add_option("--mode", a.mode, "ctl or qtl")->required();
  finetune->add_option("--config", a.config_path, "run config JSON")->required();
  finetune->add_option("--checkpoint", a.checkpoint, "baseline checkpoint (default <output_dir>/baseline.qtlc)");

  CLI::App* grid = app.add_subcommand("grid", "qubit/repetition grid search");
  grid->add_option("--config", a.config_path, "run config JSON")->required();
  grid->add_option("--checkpoint", a.checkpoint, "baseline checkpoint (default <output_dir>/baseline.qtlc)");
  grid->add_option("--jobs", a.jobs, "parallel cell workers (default 1)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
  evaluate->add_option("--config", a.config_path,
                       "run config JSON (defaults select the stock synthetic dataset)");
  evaluate->add_option("--checkpoint", a.checkpoint, "model checkpoint")->required();
  evaluate->add_option("--backend", a.backend_override, "ideal or noisy");
  double r1 = -1, r2 = -1;
  auto* r1_opt = evaluate->add_option("--r1", r1, "single-qubit depolarizing rate");
  auto* r2_opt = evaluate->add_option("--r2", r2, "two-qubit depolarizing rate");
  evaluate->add_option("--out", a.out_path, "write the metrics row as JSON");

  CLI::App* describe = app.add_subcommand("describe-circuit", "emit the ansatz as JSON");
  describe->add_option("--qubits", a.qubits, "qubit count in [3,10]");
  describe->add_option("--reps", a.reps, "repetitions in [2,4]");
  describe->add_option("--out", a.out_path, "output file (stdout otherwise)");

  CLI::App* report = app.add_subcommand("report", "aggregate results into CSV + table");
  report->add_option("--results", a.results_dir, "directory with result/cell JSON files")->required();
  report->add_option("--out", a.out_path, "CSV output file (stdout otherwise)");

  try {
    app.parse(argc, argv);
    if (r1_opt->count()) a.r1_override = r1;
    if (r2_opt->count()) a.r2_override = r2;

    if (synth->parsed()) return cmd_synth(a);
    if (train_b->parsed()) return cmd_train_baseline(a);
    if (finetune->parsed()) return cmd_finetune(a);
    if (grid->parsed()) return cmd_grid(a);
    if (evaluate->parsed()) return cmd_evaluate(a);
    if (describe->parsed()) return cmd_describe_circuit(a);
    if (report->parsed()) return cmd_report(a);
    return 1;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help();
    return 1;
  } catch (const qtl::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const qtl::DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const qtl::MetricError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const qtl::DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 2;
  }
}
