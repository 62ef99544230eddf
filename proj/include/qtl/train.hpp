#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "qtl/data.hpp"
#include "qtl/metrics.hpp"
#include "qtl/models.hpp"
#include "qtl/params.hpp"

#include <json.hpp>

namespace qtl {

struct SchedulerConfig {
  int step_size = 10;
  double gamma = 0.75;
};

struct TrainConfig {
  double lr = 1e-4;
  SchedulerConfig scheduler;
  int batch_size = 64;
  int epochs = 100;
  uint64_t seed = 0;

  void validate() const {
    if (lr < 0 || batch_size < 1 || epochs < 0 || scheduler.step_size < 1 ||
        scheduler.gamma <= 0 || scheduler.gamma > 1)
      throw ConfigError("invalid training configuration");
  }
};

/// lr = base_lr * gamma^floor(epoch / step_size).
double step_lr(int epoch, double base_lr = 1e-4, int step_size = 10, double gamma = 0.75);

struct TrainResult {
  std::vector<double> loss_curve;  // per-epoch mean batch loss
  std::vector<double> lr_curve;    // per-epoch learning rate
  double final_loss = 0.0;
};

/// Generic epoch/batch loop: per-epoch seeded shuffle, Adam with the step
/// scheduler, per-epoch mean loss recording. `make_loss(tape, batch_indices,
/// dropout_rng)` builds the scalar loss for one batch.
template <typename MakeLoss>
TrainResult train_loop(ParameterSet<float>& params, std::vector<int> indices,
                       const TrainConfig& cfg, MakeLoss&& make_loss) {
  cfg.validate();
  if (indices.empty()) throw ConfigError("train: empty training set");
  Rng shuffle_rng(Rng::derive(cfg.seed, 101));
  Rng dropout_rng(Rng::derive(cfg.seed, 102));

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = step_lr(epoch, cfg.lr, cfg.scheduler.step_size, cfg.scheduler.gamma);
    shuffle_rng.shuffle(indices);
    double epoch_loss = 0.0;
    int n_batches = 0;
    for (size_t start = 0; start < indices.size(); start += cfg.batch_size) {
      const size_t end = std::min(start + cfg.batch_size, indices.size());
      std::vector<int> batch(indices.begin() + start, indices.begin() + end);
      const auto diag = [&](const std::string& what) {
        return "training aborted: " + what + " at epoch " + std::to_string(epoch) + ", batch " +
               std::to_string(n_batches) + ", lr " + std::to_string(lr);
      };
      Tape<float> tape;
      double loss_value;
      Var loss;
      try {
        loss = make_loss(tape, batch, dropout_rng);
        loss_value = static_cast<double>(tape.value(loss).values[0]);
      } catch (const NumericError& e) {
        throw NumericError(diag(e.what()));
      }
      if (!std::isfinite(loss_value)) throw NumericError(diag("non-finite loss"));
      backward(tape, loss, params);
      params.adam_step(lr);
      epoch_loss += loss_value;
      ++n_batches;
    }
    result.loss_curve.push_back(epoch_loss / n_batches);
    result.lr_curve.push_back(lr);
  }
  result.final_loss = result.loss_curve.empty() ? 0.0 : result.loss_curve.back();
  return result;
}

/// Row-gather: features [N,D] -> [|indices|, D].
TensorF slice_rows(const TensorF& features, const std::vector<int>& indices);
TensorF slice_labels(const TensorF& labels, const std::vector<int>& indices);

/// Frozen features for every sample, extracted in fixed-size chunks.
TensorF extract_all_features(FrozenFeatures& frozen, const Dataset& data, int chunk = 32);
/// Labels as a [N,1] tensor in dataset order.
TensorF dataset_labels(const Dataset& data);

TrainResult train_baseline(BaselineCnn& model, const Dataset& data,
                           const std::vector<int>& indices, const TrainConfig& cfg);
TrainResult train_ctl(CtlModel& model, const TensorF& features, const TensorF& labels,
                      const std::vector<int>& indices, const TrainConfig& cfg);
/// Training always runs on the ideal backend; a noisy backend is rejected.
TrainResult train_qtl(QtlModel& model, const TensorF& features, const TensorF& labels,
                      const std::vector<int>& indices, const TrainConfig& cfg,
                      const QuantumBackend& backend);

std::vector<double> predict_proba_baseline(BaselineCnn& model, const Dataset& data,
                                           const std::vector<int>& indices);
std::vector<double> predict_proba_ctl(CtlModel& model, const TensorF& features,
                                      const std::vector<int>& indices);
std::vector<double> predict_proba_qtl(QtlModel& model, const TensorF& features,
                                      const std::vector<int>& indices,
                                      const QuantumBackend& backend);

MetricsReport evaluate_baseline(BaselineCnn& model, const Dataset& data,
                                const std::vector<int>& indices, const std::string& model_tag);
MetricsReport evaluate_ctl(CtlModel& model, const TensorF& features, const Dataset& data,
                           const std::vector<int>& indices, const std::string& model_tag);
MetricsReport evaluate_qtl(QtlModel& model, const TensorF& features, const Dataset& data,
                           const std::vector<int>& indices, const QuantumBackend& backend,
                           const std::string& model_tag);

// ---- grouped cross-validation ---------------------------------------------

struct FoldSplit {
  std::vector<int> train_indices;
  std::vector<int> valid_indices;
};

/// Partition the non-{1,2} patients into k folds (patients, not samples).
/// Patients 1 and 2 join every training fold and never a validation fold.
std::vector<FoldSplit> kfold_patient_folds(const std::vector<int>& patient_per_sample, int k,
                                           uint64_t seed);

struct CvStats {
  std::vector<MetricsReport> folds;
  MetricsReport mean;
  MetricsReport stddev;  // population std over folds
};

CvStats summarize_folds(const std::vector<MetricsReport>& folds);

template <typename FoldRunner>
CvStats kfold_cv(const std::vector<int>& patient_per_sample, int k, uint64_t seed,
                 FoldRunner&& runner) {
  const std::vector<FoldSplit> folds = kfold_patient_folds(patient_per_sample, k, seed);
  std::vector<MetricsReport> reports;
  for (size_t f = 0; f < folds.size(); ++f) reports.push_back(runner(static_cast<int>(f), folds[f]));
  return summarize_folds(reports);
}

// ---- grid search -----------------------------------------------------------

struct GridSpec {
  int q_min = 3, q_max = 10;
  int r_min = 2, r_max = 4;

  void validate() const {
    if (q_min < 3 || q_max > 10 || q_min > q_max || r_min < 2 || r_max > 4 || r_min > r_max)
      throw ConfigError("grid ranges must satisfy 3 <= q <= 10, 2 <= r <= 4");
  }
  int cells() const { return (q_max - q_min + 1) * (r_max - r_min + 1); }
};

struct GridCellResult {
  int n_qubits = 0;
  int reps = 0;
  uint64_t seed = 0;
  MetricsReport metrics;
  std::vector<double> loss_curve;
  double final_loss = 0.0;
  double wall_seconds = 0.0;
  bool completed = false;
};

struct GridOutcome {
  std::vector<GridCellResult> cells;
  int best_index = -1;  // argmax accuracy, ties to fewer qubits then fewer reps
};

/// Argmax of test accuracy over cells; on ties the smaller circuit wins
/// (fewer qubits first, then fewer repetitions).
int best_cell_index(const std::vector<GridCellResult>& cells);

nlohmann::json metrics_to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& j);
nlohmann::json grid_cell_to_json(const GridCellResult& c);
GridCellResult grid_cell_from_json(const nlohmann::json& j);

/// Sweep every (n_qubits, reps) cell: train a fresh QTL head on the frozen
/// features, evaluate, and persist one JSON per cell under `state_dir`.
/// Cells whose file is already marked completed are loaded, not re-run; cell
/// seeds derive from (cfg.seed, cell), so a resumed sweep reproduces a fresh
/// one exactly. Cells are independent jobs; `jobs` bounds the worker count.
GridOutcome grid_search(const TensorF& train_features, const TensorF& train_labels,
                        const TensorF& test_features, const std::vector<int>& test_labels,
                        const GridSpec& spec, const TrainConfig& cfg,
                        const QuantumBackend& eval_backend, const std::string& state_dir,
                        int jobs = 1);

// ---- barren-plateau flatness diagnostic ------------------------------------

struct FlatnessStats {
  std::vector<double> mean;      // per-parameter mean gradient over draws
  std::vector<double> variance;  // per-parameter population variance
  double mean_abs_gradient = 0.0;
  double mean_variance = 0.0;
};

/// Resample the parameter vector uniformly from [-pi, pi]^P and aggregate
/// gradient statistics from `grad_fn`.
FlatnessStats flatness_core(int n_params,
                            const std::function<std::vector<double>(const std::vector<double>&)>& grad_fn,
                            int n_samples, uint64_t seed);

/// Gradient statistics of the probe-batch BCE loss w.r.t. theta under random
/// theta draws. Purely diagnostic: the model's theta is restored afterwards.
FlatnessStats flatness_diagnostic(QtlModel& model, const TensorF& probe_features,
                                  const TensorF& probe_labels, int n_param_samples,
                                  uint64_t seed);

}  // namespace qtl
