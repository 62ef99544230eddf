// Python bindings for the main operations: ansatz construction, statevector
// and density-matrix expectations, adjoint/oracle gradients, embedding
// scaling, metrics, the LR schedule, synthetic data, patient splits, and a
// trainable hybrid head over precomputed features.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qtl/config.hpp"
#include "qtl/data.hpp"
#include "qtl/dqn.hpp"
#include "qtl/gradients.hpp"
#include "qtl/metrics.hpp"
#include "qtl/train.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

qtl::Circuit circuit_from_json_str(const std::string& s) {
  return qtl::circuit_from_json(json::parse(s));
}

std::vector<qtl::Observable> all_wires(const qtl::Circuit& c) {
  std::vector<qtl::Observable> obs(c.n_qubits);
  for (int k = 0; k < c.n_qubits; ++k) obs[k].wire = k;
  return obs;
}

std::vector<std::vector<double>> grad_rows(const qtl::GradMatrix& g) {
  std::vector<std::vector<double>> rows(g.n_obs, std::vector<double>(g.n_params));
  for (int o = 0; o < g.n_obs; ++o)
    for (int p = 0; p < g.n_params; ++p) rows[o][p] = g.at(o, p);
  return rows;
}

qtl::TensorF to_features(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw qtl::DimensionError("features must be non-empty");
  const int64_t n = static_cast<int64_t>(rows.size());
  const int64_t d = static_cast<int64_t>(rows[0].size());
  qtl::TensorF t(qtl::Shape{n, d});
  for (int64_t i = 0; i < n; ++i) {
    if (static_cast<int64_t>(rows[i].size()) != d)
      throw qtl::DimensionError("ragged feature rows");
    for (int64_t j = 0; j < d; ++j) t.values[i * d + j] = static_cast<float>(rows[i][j]);
  }
  return t;
}

qtl::TensorF to_labels(const std::vector<int>& labels) {
  qtl::TensorF t(qtl::Shape{static_cast<int64_t>(labels.size()), 1});
  for (size_t i = 0; i < labels.size(); ++i) t.values[i] = static_cast<float>(labels[i]);
  return t;
}

/// Hybrid head (pre-net, variational circuit, post-net) over precomputed
/// feature rows.
class HybridNet {
 public:
  HybridNet(int feature_dim, int n_qubits, int reps, uint64_t seed)
      : net_(qtl::make_dqn<float>(feature_dim, n_qubits, reps, seed)) {}

  std::vector<double> logits(const std::vector<std::vector<double>>& features, bool noisy,
                             double r_1q, double r_2q) {
    const auto backend = noisy ? qtl::QuantumBackend::noisy(qtl::NoiseModel(r_1q, r_2q))
                               : qtl::QuantumBackend::ideal();
    qtl::Tape<float> tape;
    qtl::Var out = qtl::dqn_forward(tape, net_, tape.input(to_features(features)), backend);
    const auto& v = tape.value(out).values;
    return std::vector<double>(v.begin(), v.end());
  }

  std::vector<double> fit(const std::vector<std::vector<double>>& features,
                          const std::vector<int>& labels, int epochs, double lr, int batch_size,
                          uint64_t seed) {
    const qtl::TensorF x = to_features(features);
    const qtl::TensorF y = to_labels(labels);
    qtl::TrainConfig cfg;
    cfg.lr = lr;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.seed = seed;
    std::vector<int> idx(x.shape[0]);
    std::iota(idx.begin(), idx.end(), 0);
    const qtl::TrainResult r = qtl::train_loop(
        net_.params, idx, cfg, [&](qtl::Tape<float>& tape, const std::vector<int>& batch, qtl::Rng&) {
          qtl::Var f = tape.input(qtl::slice_rows(x, batch));
          qtl::Var logit = qtl::dqn_forward(tape, net_, f, qtl::QuantumBackend::ideal());
          return tape.bce_with_logits(logit, qtl::slice_labels(y, batch));
        });
    return r.loss_curve;
  }

  int n_parameters() { return static_cast<int>(net_.params.parameter_count()); }

 private:
  qtl::DressedQuantumNet<float> net_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "hybrid quantum-classical transfer learning core";

  m.def("ansatz_json", [](int n_qubits, int reps) {
    return qtl::circuit_to_json(qtl::build_ansatz(n_qubits, reps)).dump();
  }, py::arg("n_qubits"), py::arg("reps"),
     "Ansatz circuit description as a JSON string");

  m.def("z_expectations", [](const std::string& circuit_json, const std::vector<double>& params) {
    const qtl::Circuit c = circuit_from_json_str(circuit_json);
    const qtl::StateVector s = qtl::run_circuit(c, params);
    std::vector<double> out(c.n_qubits);
    for (int k = 0; k < c.n_qubits; ++k) out[k] = qtl::expect_z(s, k);
    return out;
  }, py::arg("circuit_json"), py::arg("params"),
     "Per-wire Pauli-Z expectations from the ideal statevector backend");

  m.def("noisy_z_expectations",
        [](const std::string& circuit_json, const std::vector<double>& params, double r_1q,
           double r_2q) {
          const qtl::Circuit c = circuit_from_json_str(circuit_json);
          const qtl::DensityMatrix rho = qtl::simulate_noisy(c, params, qtl::NoiseModel(r_1q, r_2q));
          std::vector<double> out(c.n_qubits);
          for (int k = 0; k < c.n_qubits; ++k) out[k] = qtl::expect_z_dm(rho, k);
          return out;
        },
        py::arg("circuit_json"), py::arg("params"), py::arg("r_1q"), py::arg("r_2q"),
        "Per-wire expectations under per-gate depolarizing noise");

  m.def("adjoint_gradients",
        [](const std::string& circuit_json, const std::vector<double>& params) {
          const qtl::Circuit c = circuit_from_json_str(circuit_json);
          return grad_rows(qtl::adjoint_gradients(c, params, all_wires(c)));
        },
        py::arg("circuit_json"), py::arg("params"),
        "d<Z_k>/dp_j for every wire k and parameter slot j (adjoint method)");

  m.def("oracle_gradients",
        [](const std::string& circuit_json, const std::vector<double>& params) {
          const qtl::Circuit c = circuit_from_json_str(circuit_json);
          return grad_rows(qtl::oracle_gradients(c, params, all_wires(c)));
        },
        py::arg("circuit_json"), py::arg("params"),
        "Parameter-shift / finite-difference reference gradients");

  m.def("scale_embedding", [](const std::vector<double>& prenet_out) {
    return qtl::scale_embedding(prenet_out).angles;
  }, py::arg("prenet_out"), "(pi/2)*tanh(x), elementwise");

  m.def("step_lr", &qtl::step_lr, py::arg("epoch"), py::arg("base_lr") = 1e-4,
        py::arg("step_size") = 10, py::arg("gamma") = 0.75);

  m.def("auc", &qtl::auc, py::arg("scores"), py::arg("labels"), "Mann-Whitney AUC");

  m.def("metrics", [](const std::vector<double>& probabilities, const std::vector<int>& labels) {
    const qtl::MetricsReport r = qtl::make_report(probabilities, labels, "py", "ideal");
    return py::dict(py::arg("accuracy") = r.accuracy, py::arg("precision") = r.precision,
                    py::arg("recall") = r.recall, py::arg("f1") = r.f1, py::arg("auc") = r.auc);
  }, py::arg("probabilities"), py::arg("labels"));

  m.def("synth_dataset",
        [](int patients, int per_patient, uint64_t seed, double signal, const std::string& out_dir) {
          const qtl::Dataset ds = qtl::synth_generate(patients, per_patient, seed, signal, out_dir);
          std::vector<int> labels, ids;
          for (const auto& s : ds.samples) {
            labels.push_back(s.label);
            ids.push_back(s.patient_id);
          }
          return py::make_tuple(ds.size(), labels, ids);
        },
        py::arg("patients"), py::arg("per_patient"), py::arg("seed"), py::arg("signal"),
        py::arg("out_dir") = "",
        "Generate the synthetic dataset; returns (count, labels, patient_ids)");

  m.def("split_patients",
        [](const std::vector<int>& patient_ids, uint64_t seed, double test_fraction) {
          const qtl::SplitAssignment s = qtl::split_by_patient(patient_ids, seed, test_fraction);
          return py::make_tuple(s.train, s.test);
        },
        py::arg("patient_ids"), py::arg("seed"), py::arg("test_fraction") = 0.30,
        "Leakage-free patient-grouped split; returns (train_indices, test_indices)");

  py::class_<HybridNet>(m, "HybridNet")
      .def(py::init<int, int, int, uint64_t>(), py::arg("feature_dim"), py::arg("n_qubits"),
           py::arg("reps"), py::arg("seed"))
      .def("logits", &HybridNet::logits, py::arg("features"), py::arg("noisy") = false,
           py::arg("r_1q") = 0.0, py::arg("r_2q") = 0.0)
      .def("fit", &HybridNet::fit, py::arg("features"), py::arg("labels"), py::arg("epochs"),
           py::arg("lr") = 1e-3, py::arg("batch_size") = 16, py::arg("seed") = 0)
      .def("n_parameters", &HybridNet::n_parameters);

  py::register_exception<qtl::ConfigError>(m, "QtlConfigError", PyExc_ValueError);
  py::register_exception<qtl::DimensionError>(m, "QtlDimensionError", PyExc_ValueError);
  py::register_exception<qtl::MetricError>(m, "QtlMetricError", PyExc_ValueError);
}
