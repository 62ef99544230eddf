#include "qtl/train.hpp"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

namespace fs = std::filesystem;

namespace qtl {

namespace {

constexpr int kEvalBatch = 32;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<int> label_subset(const Dataset& data, const std::vector<int>& indices) {
  std::vector<int> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(data.samples.at(i).label);
  return out;
}

std::vector<std::vector<int>> eval_batches(const std::vector<int>& indices) {
  std::vector<std::vector<int>> out;
  for (size_t start = 0; start < indices.size(); start += kEvalBatch) {
    const size_t end = std::min(start + kEvalBatch, indices.size());
    out.emplace_back(indices.begin() + start, indices.begin() + end);
  }
  return out;
}

void append_probs(const Tensor<float>& logits, std::vector<double>& probs) {
  for (float l : logits.values) probs.push_back(sigmoid(static_cast<double>(l)));
}

}  // namespace

double step_lr(int epoch, double base_lr, int step_size, double gamma) {
  if (epoch < 0) throw ConfigError("step_lr: epoch must be non-negative");
  if (step_size < 1) throw ConfigError("step_lr: step size must be positive");
  return base_lr * std::pow(gamma, static_cast<double>(epoch / step_size));
}

TensorF slice_rows(const TensorF& features, const std::vector<int>& indices) {
  if (features.shape.size() != 2) throw DimensionError("slice_rows expects [N,D]");
  const int64_t d = features.shape[1];
  TensorF out(Shape{static_cast<int64_t>(indices.size()), d});
  for (size_t i = 0; i < indices.size(); ++i)
    std::copy(features.values.begin() + indices[i] * d,
              features.values.begin() + (indices[i] + 1) * d, out.values.begin() + i * d);
  return out;
}

TensorF slice_labels(const TensorF& labels, const std::vector<int>& indices) {
  TensorF out(Shape{static_cast<int64_t>(indices.size()), 1});
  for (size_t i = 0; i < indices.size(); ++i) out.values[i] = labels.values.at(indices[i]);
  return out;
}

TensorF extract_all_features(FrozenFeatures& frozen, const Dataset& data, int chunk) {
  if (data.empty()) throw ConfigError("extract_all_features: empty dataset");
  const int64_t n = static_cast<int64_t>(data.size());
  TensorF out(Shape{n, frozen.feature_dim()});
  for (int64_t start = 0; start < n; start += chunk) {
    const int64_t end = std::min<int64_t>(start + chunk, n);
    std::vector<int> idx(end - start);
    std::iota(idx.begin(), idx.end(), static_cast<int>(start));
    auto [images, labels] = data.batch(idx);
    const TensorF feats = feature_extract(frozen, images);
    std::copy(feats.values.begin(), feats.values.end(),
              out.values.begin() + start * frozen.feature_dim());
  }
  return out;
}

TensorF dataset_labels(const Dataset& data) {
  TensorF labels(Shape{static_cast<int64_t>(data.size()), 1});
  for (size_t i = 0; i < data.size(); ++i)
    labels.values[i] = static_cast<float>(data.samples[i].label);
  return labels;
}

TrainResult train_baseline(BaselineCnn& model, const Dataset& data,
                           const std::vector<int>& indices, const TrainConfig& cfg) {
  return train_loop(model.params, indices, cfg,
                    [&](Tape<float>& tape, const std::vector<int>& batch, Rng& dropout_rng) {
                      auto [images, labels] = data.batch(batch);
                      Var logits = model.forward(tape, tape.input(std::move(images)), true, dropout_rng);
                      return tape.bce_with_logits(logits, labels);
                    });
}

TrainResult train_ctl(CtlModel& model, const TensorF& features, const TensorF& labels,
                      const std::vector<int>& indices, const TrainConfig& cfg) {
  return train_loop(model.head.params, indices, cfg,
                    [&](Tape<float>& tape, const std::vector<int>& batch, Rng& dropout_rng) {
                      Var f = tape.input(slice_rows(features, batch));
                      Var logits = model.head.forward(tape, f, true, dropout_rng);
                      return tape.bce_with_logits(logits, slice_labels(labels, batch));
                    });
}

TrainResult train_qtl(QtlModel& model, const TensorF& features, const TensorF& labels,
                      const std::vector<int>& indices, const TrainConfig& cfg,
                      const QuantumBackend& backend) {
  if (backend.is_noisy())
    throw ConfigError("train_qtl: the noisy backend is inference-only; train on the ideal backend");
  return train_loop(model.dqn.params, indices, cfg,
                    [&](Tape<float>& tape, const std::vector<int>& batch, Rng&) {
                      Var f = tape.input(slice_rows(features, batch));
                      Var logits = dqn_forward(tape, model.dqn, f, backend);
                      return tape.bce_with_logits(logits, slice_labels(labels, batch));
                    });
}

std::vector<double> predict_proba_baseline(BaselineCnn& model, const Dataset& data,
                                           const std::vector<int>& indices) {
  std::vector<double> probs;
  Rng unused(0);
  for (const auto& batch : eval_batches(indices)) {
    auto [images, labels] = data.batch(batch);
    Tape<float> tape;
    Var logits = model.forward(tape, tape.input(std::move(images)), false, unused);
    append_probs(tape.value(logits), probs);
  }
  return probs;
}

std::vector<double> predict_proba_ctl(CtlModel& model, const TensorF& features,
                                      const std::vector<int>& indices) {
  std::vector<double> probs;
  Rng unused(0);
  for (const auto& batch : eval_batches(indices)) {
    Tape<float> tape;
    Var logits = model.head.forward(tape, tape.input(slice_rows(features, batch)), false, unused);
    append_probs(tape.value(logits), probs);
  }
  return probs;
}

std::vector<double> predict_proba_qtl(QtlModel& model, const TensorF& features,
                                      const std::vector<int>& indices,
                                      const QuantumBackend& backend) {
  std::vector<double> probs;
  for (const auto& batch : eval_batches(indices)) {
    Tape<float> tape;
    Var logits = dqn_forward(tape, model.dqn, tape.input(slice_rows(features, batch)), backend);
    append_probs(tape.value(logits), probs);
  }
  return probs;
}

MetricsReport evaluate_baseline(BaselineCnn& model, const Dataset& data,
                                const std::vector<int>& indices, const std::string& model_tag) {
  if (indices.empty()) throw MetricError("evaluate: empty test set");
  return make_report(predict_proba_baseline(model, data, indices), label_subset(data, indices),
                     model_tag, "ideal");
}

MetricsReport evaluate_ctl(CtlModel& model, const TensorF& features, const Dataset& data,
                           const std::vector<int>& indices, const std::string& model_tag) {
  if (indices.empty()) throw MetricError("evaluate: empty test set");
  return make_report(predict_proba_ctl(model, features, indices), label_subset(data, indices),
                     model_tag, "ideal");
}

MetricsReport evaluate_qtl(QtlModel& model, const TensorF& features, const Dataset& data,
                           const std::vector<int>& indices, const QuantumBackend& backend,
                           const std::string& model_tag) {
  if (indices.empty()) throw MetricError("evaluate: empty test set");
  return make_report(predict_proba_qtl(model, features, indices, backend),
                     label_subset(data, indices), model_tag,
                     backend.is_noisy() ? "noisy" : "ideal");
}

std::vector<FoldSplit> kfold_patient_folds(const std::vector<int>& patient_per_sample, int k,
                                           uint64_t seed) {
  if (k < 2) throw ConfigError("kfold: k must be at least 2");
  std::set<int> others;
  for (int id : patient_per_sample)
    if (id != 1 && id != 2) others.insert(id);
  if (static_cast<int>(others.size()) < k)
    throw ConfigError("kfold: need at least " + std::to_string(k) +
                      " patients besides IDs 1 and 2, have " + std::to_string(others.size()));

  std::vector<int> pool(others.begin(), others.end());
  Rng rng(Rng::derive(seed, 0xf01d));
  rng.shuffle(pool);

  std::vector<std::set<int>> fold_patients(k);
  for (size_t i = 0; i < pool.size(); ++i) fold_patients[i % k].insert(pool[i]);

  std::vector<FoldSplit> folds(k);
  for (int f = 0; f < k; ++f) {
    for (size_t i = 0; i < patient_per_sample.size(); ++i) {
      if (fold_patients[f].count(patient_per_sample[i]))
        folds[f].valid_indices.push_back(static_cast<int>(i));
      else
        folds[f].train_indices.push_back(static_cast<int>(i));
    }
  }
  return folds;
}

CvStats summarize_folds(const std::vector<MetricsReport>& folds) {
  if (folds.empty()) throw ConfigError("summarize_folds: no folds");
  CvStats stats;
  stats.folds = folds;
  auto fields = [](const MetricsReport& m) {
    return std::array<double, 5>{m.accuracy, m.precision, m.recall, m.f1, m.auc};
  };
  std::array<double, 5> mean{}, var{};
  for (const auto& f : folds) {
    const auto v = fields(f);
    for (int i = 0; i < 5; ++i) mean[i] += v[i];
  }
  for (int i = 0; i < 5; ++i) mean[i] /= static_cast<double>(folds.size());
  for (const auto& f : folds) {
    const auto v = fields(f);
    for (int i = 0; i < 5; ++i) var[i] += (v[i] - mean[i]) * (v[i] - mean[i]);
  }
  for (int i = 0; i < 5; ++i) var[i] /= static_cast<double>(folds.size());

  auto fill = [](MetricsReport& m, const std::array<double, 5>& v) {
    m.accuracy = v[0];
    m.precision = v[1];
    m.recall = v[2];
    m.f1 = v[3];
    m.auc = v[4];
  };
  fill(stats.mean, mean);
  std::array<double, 5> sd{};
  for (int i = 0; i < 5; ++i) sd[i] = std::sqrt(var[i]);
  fill(stats.stddev, sd);
  stats.mean.model_tag = "cv_mean";
  stats.stddev.model_tag = "cv_std";
  return stats;
}

nlohmann::json metrics_to_json(const MetricsReport& m) {
  return nlohmann::json{{"accuracy", m.accuracy}, {"precision", m.precision},
                        {"recall", m.recall},     {"f1", m.f1},
                        {"auc", m.auc},           {"model", m.model_tag},
                        {"backend", m.backend_tag}};
}

MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport m;
  m.accuracy = j.at("accuracy").get<double>();
  m.precision = j.at("precision").get<double>();
  m.recall = j.at("recall").get<double>();
  m.f1 = j.at("f1").get<double>();
  m.auc = j.at("auc").get<double>();
  m.model_tag = j.at("model").get<std::string>();
  m.backend_tag = j.at("backend").get<std::string>();
  return m;
}

nlohmann::json grid_cell_to_json(const GridCellResult& c) {
  return nlohmann::json{
      {"config", {{"n_qubits", c.n_qubits}, {"reps", c.reps}, {"seed", c.seed}}},
      {"metrics", metrics_to_json(c.metrics)},
      {"loss_curve", c.loss_curve},
      {"final_loss", c.final_loss},
      {"wall_seconds", c.wall_seconds},
      {"completed", c.completed}};
}

GridCellResult grid_cell_from_json(const nlohmann::json& j) {
  GridCellResult c;
  c.n_qubits = j.at("config").at("n_qubits").get<int>();
  c.reps = j.at("config").at("reps").get<int>();
  c.seed = j.at("config").at("seed").get<uint64_t>();
  c.metrics = metrics_from_json(j.at("metrics"));
  c.loss_curve = j.at("loss_curve").get<std::vector<double>>();
  c.final_loss = j.at("final_loss").get<double>();
  c.wall_seconds = j.at("wall_seconds").get<double>();
  c.completed = j.at("completed").get<bool>();
  return c;
}

GridOutcome grid_search(const TensorF& train_features, const TensorF& train_labels,
                        const TensorF& test_features, const std::vector<int>& test_labels,
                        const GridSpec& spec, const TrainConfig& cfg,
                        const QuantumBackend& eval_backend, const std::string& state_dir,
                        int jobs) {
  spec.validate();
  cfg.validate();
  if (jobs < 1) throw ConfigError("grid_search: jobs must be at least 1");
  fs::create_directories(state_dir);
  const int feature_dim = static_cast<int>(train_features.shape.at(1));

  std::vector<int> all_train(train_features.shape[0]);
  std::iota(all_train.begin(), all_train.end(), 0);
  std::vector<int> all_test(test_features.shape[0]);
  std::iota(all_test.begin(), all_test.end(), 0);

  std::vector<std::pair<int, int>> cells_qr;
  for (int q = spec.q_min; q <= spec.q_max; ++q)
    for (int r = spec.r_min; r <= spec.r_max; ++r) cells_qr.emplace_back(q, r);

  GridOutcome outcome;
  outcome.cells.resize(cells_qr.size());

  auto run_cell = [&](size_t idx) {
    const auto [q, r] = cells_qr[idx];
    const fs::path cell_path =
        fs::path(state_dir) / ("cell_q" + std::to_string(q) + "_r" + std::to_string(r) + ".json");
    GridCellResult cell;
    bool loaded = false;
    if (fs::exists(cell_path)) {
      std::ifstream in(cell_path);
      nlohmann::json j;
      in >> j;
      cell = grid_cell_from_json(j);
      loaded = cell.completed;
    }
    if (!loaded) {
      const auto t0 = std::chrono::steady_clock::now();
      cell.n_qubits = q;
      cell.reps = r;
      cell.seed = Rng::derive(cfg.seed, static_cast<uint64_t>(q) * 100 + r);

      DressedQuantumNet<float> dqn = make_dqn<float>(feature_dim, q, r, cell.seed);
      TrainConfig cell_cfg = cfg;
      cell_cfg.seed = cell.seed;
      TrainResult tr =
          train_loop(dqn.params, all_train, cell_cfg,
                     [&](Tape<float>& tape, const std::vector<int>& batch, Rng&) {
                       Var f = tape.input(slice_rows(train_features, batch));
                       Var logits = dqn_forward(tape, dqn, f, QuantumBackend::ideal());
                       return tape.bce_with_logits(logits, slice_labels(train_labels, batch));
                     });
      cell.loss_curve = tr.loss_curve;
      cell.final_loss = tr.final_loss;

      std::vector<double> probs;
      for (size_t start = 0; start < all_test.size(); start += kEvalBatch) {
        const size_t end = std::min(start + kEvalBatch, all_test.size());
        std::vector<int> batch(all_test.begin() + start, all_test.begin() + end);
        Tape<float> tape;
        Var logits =
            dqn_forward(tape, dqn, tape.input(slice_rows(test_features, batch)), eval_backend);
        append_probs(tape.value(logits), probs);
      }
      const std::string tag = "qtl_q" + std::to_string(q) + "_r" + std::to_string(r);
      cell.metrics =
          make_report(probs, test_labels, tag, eval_backend.is_noisy() ? "noisy" : "ideal");
      cell.completed = true;
      cell.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::ofstream out(cell_path);
      out << grid_cell_to_json(cell).dump(2) << "\n";
    }
    outcome.cells[idx] = std::move(cell);
  };

  if (jobs == 1) {
    for (size_t i = 0; i < cells_qr.size(); ++i) run_cell(i);
  } else {
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= cells_qr.size()) return;
        try {
          run_cell(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min<int>(jobs, static_cast<int>(cells_qr.size()));
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  outcome.best_index = best_cell_index(outcome.cells);
  return outcome;
}

int best_cell_index(const std::vector<GridCellResult>& cells) {
  int best = -1;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const GridCellResult& c = cells[i];
    const GridCellResult& b = cells[best];
    if (c.metrics.accuracy > b.metrics.accuracy ||
        (c.metrics.accuracy == b.metrics.accuracy &&
         (c.n_qubits < b.n_qubits || (c.n_qubits == b.n_qubits && c.reps < b.reps))))
      best = static_cast<int>(i);
  }
  return best;
}

FlatnessStats flatness_core(
    int n_params, const std::function<std::vector<double>(const std::vector<double>&)>& grad_fn,
    int n_samples, uint64_t seed) {
  if (n_params < 1 || n_samples < 1) throw ConfigError("flatness: need parameters and samples");
  Rng rng(Rng::derive(seed, 0xf1a7));
  std::vector<double> sum(n_params, 0.0), sumsq(n_params, 0.0);
  double abs_sum = 0.0;
  constexpr double kPi = 3.14159265358979323846;
  for (int s = 0; s < n_samples; ++s) {
    std::vector<double> theta(n_params);
    for (auto& v : theta) v = rng.uniform(-kPi, kPi);
    const std::vector<double> g = grad_fn(theta);
    if (static_cast<int>(g.size()) != n_params)
      throw DimensionError("flatness: grad_fn returned wrong size");
    for (int p = 0; p < n_params; ++p) {
      sum[p] += g[p];
      sumsq[p] += g[p] * g[p];
      abs_sum += std::abs(g[p]);
    }
  }
  FlatnessStats stats;
  stats.mean.resize(n_params);
  stats.variance.resize(n_params);
  for (int p = 0; p < n_params; ++p) {
    stats.mean[p] = sum[p] / n_samples;
    stats.variance[p] = sumsq[p] / n_samples - stats.mean[p] * stats.mean[p];
    stats.mean_variance += stats.variance[p];
  }
  stats.mean_variance /= n_params;
  stats.mean_abs_gradient = abs_sum / (static_cast<double>(n_samples) * n_params);
  return stats;
}

FlatnessStats flatness_diagnostic(QtlModel& model, const TensorF& probe_features,
                                  const TensorF& probe_labels, int n_param_samples,
                                  uint64_t seed) {
  if (!model.dqn.has_theta()) throw ConfigError("flatness_diagnostic: model has no theta");
  TensorF& theta = model.dqn.theta();
  const std::vector<float> saved = theta.values;
  const int n_params = static_cast<int>(theta.size());

  auto grad_fn = [&](const std::vector<double>& draw) {
    for (size_t i = 0; i < draw.size(); ++i) theta.values[i] = static_cast<float>(draw[i]);
    Tape<float> tape;
    Var logits = dqn_forward(tape, model.dqn, tape.input(probe_features), QuantumBackend::ideal());
    Var loss = tape.bce_with_logits(logits, probe_labels);
    backward(tape, loss, model.dqn.params);
    std::vector<double> g(n_params);
    for (int i = 0; i < n_params; ++i) g[i] = static_cast<double>(theta.grad[i]);
    return g;
  };
  FlatnessStats stats = flatness_core(n_params, grad_fn, n_param_samples, seed);
  theta.values = saved;  // diagnostic only; restore the model
  return stats;
}

}  // namespace qtl
