#include "qtl/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace qtl {

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const std::string& context) {
  if (!j.is_object()) throw ConfigError("config section '" + context + "' must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in config section '" + context + "'");
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig cfg;
  check_keys(j, {"seed", "output_dir", "data", "train", "model", "backend", "test_fraction",
                 "grid", "jobs"},
             "(root)");
  read(j, "seed", cfg.seed);
  read(j, "output_dir", cfg.output_dir);
  read(j, "test_fraction", cfg.test_fraction);
  read(j, "jobs", cfg.jobs);

  if (j.contains("data")) {
    const auto& d = j.at("data");
    check_keys(d, {"manifest", "synth"}, "data");
    if (d.contains("manifest") && d.contains("synth"))
      throw ConfigError("data: give either 'manifest' or 'synth', not both");
    if (d.contains("manifest")) {
      cfg.data.use_synth = false;
      cfg.data.manifest = d.at("manifest").get<std::string>();
    } else if (d.contains("synth")) {
      const auto& s = d.at("synth");
      check_keys(s, {"patients", "per_patient", "signal"}, "data.synth");
      cfg.data.use_synth = true;
      read(s, "patients", cfg.data.synth.patients);
      read(s, "per_patient", cfg.data.synth.per_patient);
      read(s, "signal", cfg.data.synth.signal);
    }
  }

  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t, {"lr", "batch_size", "epochs", "scheduler", "baseline_epochs"}, "train");
    read(t, "lr", cfg.train.lr);
    read(t, "batch_size", cfg.train.batch_size);
    read(t, "epochs", cfg.train.epochs);
    read(t, "baseline_epochs", cfg.baseline_epochs);
    if (t.contains("scheduler")) {
      const auto& s = t.at("scheduler");
      check_keys(s, {"step_size", "gamma"}, "train.scheduler");
      read(s, "step_size", cfg.train.scheduler.step_size);
      read(s, "gamma", cfg.train.scheduler.gamma);
    }
  }
  cfg.train.seed = cfg.seed;
  cfg.train.validate();
  if (cfg.baseline_epochs < 0) throw ConfigError("train.baseline_epochs must be non-negative");

  if (j.contains("model")) {
    const auto& m = j.at("model");
    check_keys(m, {"kind", "n_qubits", "reps"}, "model");
    read(m, "kind", cfg.model.kind);
    read(m, "n_qubits", cfg.model.n_qubits);
    read(m, "reps", cfg.model.reps);
    if (cfg.model.kind != "baseline" && cfg.model.kind != "ctl" && cfg.model.kind != "qtl")
      throw ConfigError("model.kind must be baseline, ctl, or qtl");
  }

  if (j.contains("backend")) {
    const auto& b = j.at("backend");
    check_keys(b, {"kind", "r_1q", "r_2q"}, "backend");
    std::string kind = "ideal";
    read(b, "kind", kind);
    if (kind == "noisy")
      cfg.backend.noisy = true;
    else if (kind != "ideal")
      throw ConfigError("backend.kind must be ideal or noisy");
    read(b, "r_1q", cfg.backend.r_1q);
    read(b, "r_2q", cfg.backend.r_2q);
    if (cfg.backend.r_1q < 0 || cfg.backend.r_1q > 1 || cfg.backend.r_2q < 0 ||
        cfg.backend.r_2q > 1)
      throw ConfigError("backend rates must lie in [0,1]");
  }

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    check_keys(g, {"q_min", "q_max", "r_min", "r_max"}, "grid");
    read(g, "q_min", cfg.grid.q_min);
    read(g, "q_max", cfg.grid.q_max);
    read(g, "r_min", cfg.grid.r_min);
    read(g, "r_max", cfg.grid.r_max);
    cfg.grid.validate();
  }

  if (cfg.test_fraction <= 0.0 || cfg.test_fraction >= 1.0)
    throw ConfigError("test_fraction must lie in (0,1)");
  if (cfg.jobs < 1) throw ConfigError("jobs must be at least 1");

  if (cfg.output_dir.empty()) {
    const char* env = std::getenv("QTL_OUTPUT_DIR");
    cfg.output_dir = env && *env ? env : "out";
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return run_config_from_json(j);
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json data;
  if (cfg.data.use_synth)
    data = {{"synth",
             {{"patients", cfg.data.synth.patients},
              {"per_patient", cfg.data.synth.per_patient},
              {"signal", cfg.data.synth.signal}}}};
  else
    data = {{"manifest", cfg.data.manifest}};

  return nlohmann::json{
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir},
      {"data", data},
      {"train",
       {{"lr", cfg.train.lr},
        {"batch_size", cfg.train.batch_size},
        {"epochs", cfg.train.epochs},
        {"baseline_epochs", cfg.baseline_epochs},
        {"scheduler",
         {{"step_size", cfg.train.scheduler.step_size}, {"gamma", cfg.train.scheduler.gamma}}}}},
      {"model", {{"kind", cfg.model.kind}, {"n_qubits", cfg.model.n_qubits}, {"reps", cfg.model.reps}}},
      {"backend",
       {{"kind", cfg.backend.noisy ? "noisy" : "ideal"},
        {"r_1q", cfg.backend.r_1q},
        {"r_2q", cfg.backend.r_2q}}},
      {"test_fraction", cfg.test_fraction},
      {"grid",
       {{"q_min", cfg.grid.q_min},
        {"q_max", cfg.grid.q_max},
        {"r_min", cfg.grid.r_min},
        {"r_max", cfg.grid.r_max}}},
      {"jobs", cfg.jobs}};
}

}  // namespace qtl
