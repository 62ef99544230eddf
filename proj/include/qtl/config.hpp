#pragma once

#include <cstdint>
#include <string>

#include "qtl/density.hpp"
#include "qtl/train.hpp"

#include <json.hpp>

namespace qtl {

struct SynthSpec {
  int patients = 12;
  int per_patient = 20;
  double signal = 0.6;
};

struct DataConfig {
  bool use_synth = true;
  std::string manifest;  // when !use_synth
  SynthSpec synth;
};

struct ModelConfig {
  std::string kind = "qtl";  // baseline | ctl | qtl
  int n_qubits = 6;
  int reps = 4;
};

struct BackendConfig {
  bool noisy = false;
  double r_1q = 2.67e-4;
  double r_2q = 4.94e-3;

  QuantumBackend backend() const {
    return noisy ? QuantumBackend::noisy(NoiseModel(r_1q, r_2q)) : QuantumBackend::ideal();
  }
};

/// Run configuration with strict parsing: unknown keys anywhere fail before
/// any computation; omitted training fields fall back to the stock recipe
/// (Adam, lr 1e-4, step 10 / gamma 0.75, batch 64, 100
/// epochs).
struct RunConfig {
  uint64_t seed = 0;
  std::string output_dir;  // falls back to $QTL_OUTPUT_DIR, then "out"
  DataConfig data;
  TrainConfig train;
  int baseline_epochs = 10;  // deliberate under-training budget for the weak baseline
  ModelConfig model;
  BackendConfig backend;
  double test_fraction = 0.30;
  GridSpec grid;
  int jobs = 1;
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json run_config_to_json(const RunConfig& cfg);

}  // namespace qtl
