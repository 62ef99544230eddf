#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "qtl/checkpoint.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

TEST_SUITE_BEGIN("cli");

namespace {

#ifndef QTL_BIN
#error "QTL_BIN must point at the built qtl executable"
#endif

int run(const std::string& args) {
  const std::string cmd = std::string(QTL_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string capture(const std::string& args) {
  const fs::path tmp = fs::temp_directory_path() / "qtl_cli_capture.txt";
  const std::string cmd =
      std::string(QTL_BIN) + " " + args + " > " + tmp.string() + " 2>/dev/null";
  std::system(cmd.c_str());
  std::ifstream in(tmp);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("synth writes the advertised number of PGMs plus a manifest") {
  TempDir dir("qtl_cli_synth");
  CHECK(run("synth --patients 12 --per-patient 20 --seed 7 --out " + dir.path.string()) == 0);
  size_t pgms = 0;
  for (const auto& e : fs::directory_iterator(dir.path))
    if (e.path().extension() == ".pgm") ++pgms;
  CHECK(pgms == 240);
  CHECK(fs::exists(dir.path / "manifest.csv"));
}

TEST_CASE("unknown flags and bad configs exit with code 1") {
  CHECK(run("synth --nonsense 1") == 1);
  CHECK(run("definitely-not-a-subcommand") == 1);

  TempDir dir("qtl_cli_badcfg");
  std::ofstream(dir.path / "cfg.json") << R"({"sede": 3})";
  CHECK(run("train-baseline --config " + (dir.path / "cfg.json").string()) == 1);
  CHECK(run("train-baseline --config " + (dir.path / "missing.json").string()) == 1);
}

TEST_CASE("describe-circuit emits the documented JSON schema") {
  const std::string text = capture("describe-circuit --qubits 4 --reps 2");
  const json j = json::parse(text);
  CHECK(j.at("n_qubits") == 4);
  CHECK(j.at("n_embedding_params") == 4);
  CHECK(j.at("n_trainable_params") == 16);
  CHECK(j.at("gates").size() == 4 + 2 * 12);
  const auto& cnot = j.at("gates").at(4 + 4);
  CHECK(cnot.at("kind") == "CNOT");
  CHECK(cnot.at("param_slot").is_null());
  CHECK(run("describe-circuit --qubits 20 --reps 2") == 1);
}

TEST_CASE("end-to-end: baseline, finetune, evaluate, report, determinism") {
  TempDir dir("qtl_cli_e2e");
  const fs::path out1 = dir.path / "run1";
  const fs::path out2 = dir.path / "run2";
  const fs::path cfg_path = dir.path / "cfg.json";

  auto write_cfg = [&](const fs::path& out_dir) {
    json cfg{{"seed", 5},
             {"output_dir", out_dir.string()},
             {"data", {{"synth", {{"patients", 12}, {"per_patient", 3}, {"signal", 0.8}}}}},
             {"train",
              {{"lr", 0.002},
               {"batch_size", 8},
               {"epochs", 2},
               {"baseline_epochs", 1},
               {"scheduler", {{"step_size", 10}, {"gamma", 0.75}}}}},
             {"model", {{"kind", "qtl"}, {"n_qubits", 3}, {"reps", 2}}}};
    std::ofstream(cfg_path) << cfg.dump(2);
  };

  write_cfg(out1);
  REQUIRE(run("train-baseline --config " + cfg_path.string()) == 0);
  REQUIRE(fs::exists(out1 / "baseline.qtlc"));
  REQUIRE(run("finetune --mode ctl --config " + cfg_path.string()) == 0);
  REQUIRE(run("finetune --mode qtl --config " + cfg_path.string()) == 0);
  REQUIRE(fs::exists(out1 / "qtl_q3_r2.qtlc"));

  // evaluate with explicit noisy rates prints one CSV row
  const std::string row =
      capture("evaluate --config " + cfg_path.string() + " --checkpoint " +
              (out1 / "qtl_q3_r2.qtlc").string() + " --backend noisy --r1 2.67e-4 --r2 4.94e-3");
  CHECK(row.find("model,backend,") != std::string::npos);
  CHECK(row.find("noisy") != std::string::npos);

  // noisy evaluation of a classical model is a validation error
  CHECK(run("evaluate --config " + cfg_path.string() + " --checkpoint " +
            (out1 / "baseline.qtlc").string() + " --backend noisy") == 1);

  // --config is optional: the stock synthetic dataset stands in
  const std::string configless = capture("evaluate --checkpoint " +
                                         (out1 / "qtl_q3_r2.qtlc").string() +
                                         " --backend noisy --r1 2.67e-4 --r2 4.94e-3");
  CHECK(configless.find("model,backend,") != std::string::npos);
  CHECK(configless.find("noisy") != std::string::npos);

  // report over the results directory
  const std::string report = capture("report --results " + out1.string());
  CHECK(report.find("baseline") != std::string::npos);
  CHECK(report.find("ctl") != std::string::npos);
  CHECK(report.find("qtl_q3_r2") != std::string::npos);

  // identical command + seed reproduce byte-identical checkpoints
  write_cfg(out2);
  REQUIRE(run("train-baseline --config " + cfg_path.string()) == 0);
  CHECK(slurp(out1 / "baseline.qtlc") == slurp(out2 / "baseline.qtlc"));

  // corrupting the checkpoint magic turns evaluate into a runtime failure
  std::string bytes = slurp(out1 / "baseline.qtlc");
  bytes[0] = 'X';
  std::ofstream(out1 / "broken.qtlc", std::ios::binary) << bytes;
  CHECK(run("evaluate --config " + cfg_path.string() + " --checkpoint " +
            (out1 / "broken.qtlc").string()) == 2);

  // report on an empty directory is a validation error
  fs::create_directories(dir.path / "empty");
  CHECK(run("report --results " + (dir.path / "empty").string()) == 1);
}

TEST_CASE("grid over the default ranges leaves 24 result files") {
  TempDir dir("qtl_cli_grid");
  const fs::path out = dir.path / "run";
  const fs::path cfg_path = dir.path / "cfg.json";
  json cfg{{"seed", 3},
           {"output_dir", out.string()},
           {"data", {{"synth", {{"patients", 12}, {"per_patient", 2}, {"signal", 0.8}}}}},
           {"train",
            {{"lr", 0.003}, {"batch_size", 24}, {"epochs", 1}, {"baseline_epochs", 1}}},
           {"jobs", 2}};
  std::ofstream(cfg_path) << cfg.dump(2);

  REQUIRE(run("train-baseline --config " + cfg_path.string()) == 0);
  REQUIRE(run("grid --config " + cfg_path.string() + " --jobs 2") == 0);
  size_t cells = 0;
  for (const auto& e : fs::directory_iterator(out / "grid"))
    if (e.path().filename().string().rfind("cell_", 0) == 0) ++cells;
  CHECK(cells == 24);
  CHECK(fs::exists(out / "grid_summary.json"));

  const std::string report = capture("report --results " + (out / "grid").string());
  CHECK(report.find("qtl_q10_r4") != std::string::npos);
}

TEST_CASE("QTL_OUTPUT_DIR is the output_dir fallback") {
  TempDir dir("qtl_cli_env");
  const fs::path out = dir.path / "from_env";
  const fs::path cfg_path = dir.path / "cfg.json";
  json cfg{{"seed", 2},
           {"data", {{"synth", {{"patients", 12}, {"per_patient", 2}, {"signal", 0.8}}}}},
           {"train", {{"batch_size", 16}, {"baseline_epochs", 1}}}};
  std::ofstream(cfg_path) << cfg.dump(2);

  const std::string cmd = "QTL_OUTPUT_DIR=" + out.string() + " " + std::string(QTL_BIN) +
                          " train-baseline --config " + cfg_path.string() + " >/dev/null 2>&1";
  REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
  CHECK(fs::exists(out / "baseline.qtlc"));
  CHECK(fs::exists(out / "result_baseline.json"));
}

TEST_SUITE_END();
