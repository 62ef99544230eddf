#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qtl/circuit.hpp"
#include "qtl/density.hpp"
#include "qtl/gradients.hpp"
#include "qtl/params.hpp"
#include "qtl/statevector.hpp"
#include "qtl/tape.hpp"

namespace qtl {

inline constexpr double kHalfPiD = 1.57079632679489661923;

/// Which simulator evaluates the circuit. The noisy backend is
/// inference-only: asking it for gradients is a state error.
struct QuantumBackend {
  enum class Kind { Ideal, Noisy };
  Kind kind = Kind::Ideal;
  NoiseModel noise;

  static QuantumBackend ideal() { return QuantumBackend{}; }
  static QuantumBackend noisy(NoiseModel n) { return QuantumBackend{Kind::Noisy, n}; }
  bool is_noisy() const { return kind == Kind::Noisy; }
};

/// Angle-embedding inputs, each within [-pi/2, pi/2].
struct EmbeddingAngles {
  std::vector<double> angles;

  static EmbeddingAngles checked(std::vector<double> a) {
    for (double v : a) {
      if (!std::isfinite(v)) throw NumericError("embedding angle is not finite");
      if (std::abs(v) > kHalfPiD * (1.0 + 1e-7))
        throw NumericError("embedding angle " + std::to_string(v) + " outside [-pi/2, pi/2]");
    }
    return EmbeddingAngles{std::move(a)};
  }
};

/// (pi/2) * tanh(x), elementwise; maps any real input into [-pi/2, pi/2].
inline EmbeddingAngles scale_embedding(const std::vector<double>& prenet_out) {
  std::vector<double> a(prenet_out.size());
  for (size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(prenet_out[i])) throw NumericError("scale_embedding: non-finite input");
    a[i] = kHalfPiD * std::tanh(prenet_out[i]);
  }
  return EmbeddingAngles::checked(std::move(a));
}

/// Pre-net (dense D -> n), tanh*pi/2 embedding scaling, variational circuit,
/// post-net (dense n -> 1). All classical weights live in `params`; the
/// circuit's trainable angles are the "theta" entry (absent when the circuit
/// has no trainable slots).
template <typename Real>
struct DressedQuantumNet {
  Circuit ansatz;
  int feature_dim = 0;
  ParameterSet<Real> params;

  int n_qubits() const { return ansatz.n_qubits; }
  bool has_theta() const { return ansatz.n_trainable_params > 0; }

  Tensor<Real>& pre_w() { return params.get("pre_net.weight"); }
  Tensor<Real>& pre_b() { return params.get("pre_net.bias"); }
  Tensor<Real>& theta() { return params.get("theta"); }
  Tensor<Real>& post_w() { return params.get("post_net.weight"); }
  Tensor<Real>& post_b() { return params.get("post_net.bias"); }
  const Tensor<Real>& theta() const { return params.get("theta"); }
};

/// Build a DQN around an arbitrary circuit whose embedding width matches the
/// circuit's qubit count. Glorot pre/post nets with zero biases; theta
/// uniform in [-0.1, 0.1] (small angles keep the initial circuit near
/// identity).
template <typename Real>
DressedQuantumNet<Real> make_dqn_with_circuit(int feature_dim, Circuit circuit, uint64_t seed) {
  circuit.validate();
  if (circuit.n_embedding_params != circuit.n_qubits)
    throw ConfigError("DQN requires one embedding slot per qubit");
  DressedQuantumNet<Real> net;
  net.ansatz = std::move(circuit);
  net.feature_dim = feature_dim;
  const int n = net.ansatz.n_qubits;

  Rng pre_rng(Rng::derive(seed, 1));
  Rng theta_rng(Rng::derive(seed, 2));
  Rng post_rng(Rng::derive(seed, 3));

  net.params.add("pre_net.weight", glorot_dense<Real>(feature_dim, n, pre_rng));
  net.params.add("pre_net.bias", Tensor<Real>(Shape{n}));
  if (net.ansatz.n_trainable_params > 0) {
    Tensor<Real> th(Shape{net.ansatz.n_trainable_params});
    for (auto& v : th.values) v = static_cast<Real>(theta_rng.uniform(-0.1, 0.1));
    net.params.add("theta", std::move(th));
  }
  net.params.add("post_net.weight", glorot_dense<Real>(n, 1, post_rng));
  net.params.add("post_net.bias", Tensor<Real>(Shape{1}));
  return net;
}

template <typename Real>
DressedQuantumNet<Real> make_dqn(int feature_dim, int n_qubits, int reps, uint64_t seed) {
  return make_dqn_with_circuit<Real>(feature_dim, build_ansatz(n_qubits, reps), seed);
}

/// Tape node evaluating the circuit once per sample: angles [B,n] plus the
/// trainable theta produce Z expectations [B,n]. Backward chains the adjoint
/// gradient matrix into both inputs; per-sample evaluation order is fixed.
template <typename Real>
Var quantum_expectations(Tape<Real>& tape, const Circuit& circuit, Var angles, Var theta,
                         const QuantumBackend& backend) {
  const Tensor<Real>& av = tape.value(angles);
  if (av.shape.size() != 2 || av.shape[1] != circuit.n_qubits)
    throw DimensionError("quantum_expectations: angles must be [B," +
                         std::to_string(circuit.n_qubits) + "], got " + shape_str(av.shape));
  const int64_t B = av.shape[0];
  const int n = circuit.n_qubits;
  const int n_emb = circuit.n_embedding_params;
  const int n_train = circuit.n_trainable_params;
  if (n_train > 0 && !theta.valid())
    throw ConfigError("quantum_expectations: circuit has trainable slots but no theta input");

  std::vector<Observable> observables(n);
  for (int k = 0; k < n; ++k) observables[k].wire = k;

  // Assemble the flat parameter vector [angles(b,:), theta] for one sample,
  // reading through the tape so node-vector growth cannot dangle references.
  const int aid = angles.id, tid = theta.id;
  auto sample_params = [aid, tid, n, n_emb, n_train](const Tape<Real>& t, int64_t b) {
    const Tensor<Real>& a = t.value(Var{aid});
    std::vector<double> p(size_t(n_emb) + n_train, 0.0);
    for (int j = 0; j < n_emb; ++j) {
      const double v = static_cast<double>(a.values[b * n + j]);
      if (!std::isfinite(v)) throw NumericError("quantum_expectations: non-finite angle");
      if (std::abs(v) > kHalfPiD * (1.0 + 1e-6))
        throw NumericError("quantum_expectations: angle outside [-pi/2, pi/2]");
      p[j] = v;
    }
    if (n_train > 0) {
      const Tensor<Real>& th = t.value(Var{tid});
      for (int s = 0; s < n_train; ++s) p[n_emb + s] = static_cast<double>(th.values[s]);
    }
    return p;
  };

  Tensor<Real> out(Shape{B, n});
  for (int64_t b = 0; b < B; ++b) {
    const std::vector<double> p = sample_params(tape, b);
    if (backend.is_noisy()) {
      const DensityMatrix rho = simulate_noisy(circuit, p, backend.noise);
      for (int k = 0; k < n; ++k) out.values[b * n + k] = static_cast<Real>(expect_z_dm(rho, k));
    } else {
      const StateVector s = run_circuit(circuit, p);
      for (int k = 0; k < n; ++k) out.values[b * n + k] = static_cast<Real>(expect_z(s, k));
    }
  }

  const bool req = tape.requires_grad(angles) || (theta.valid() && tape.requires_grad(theta));
  const bool noisy = backend.is_noisy();
  Circuit circ = circuit;  // owned by the closure
  auto back = [aid, tid, B, n, n_emb, n_train, noisy, circ = std::move(circ), observables,
               sample_params](Tape<Real>& t) {
    if (noisy) throw StateError("noisy backend is inference-only; no gradients");
    const auto& g = t.grad_of(Var{t.current_id()});
    auto& ga = t.grad_of(Var{aid});
    for (int64_t b = 0; b < B; ++b) {
      const std::vector<double> p = sample_params(t, b);
      const GradMatrix J = adjoint_gradients(circ, p, observables);
      for (int k = 0; k < n; ++k) {
        const double up = static_cast<double>(g[b * n + k]);
        if (up == 0.0) continue;
        for (int j = 0; j < n_emb; ++j)
          ga[b * n + j] += static_cast<Real>(up * J.at(k, j));
        if (n_train > 0) {
          auto& gt = t.grad_of(Var{tid});
          for (int s = 0; s < n_train; ++s)
            gt[s] += static_cast<Real>(up * J.at(k, n_emb + s));
        }
      }
    }
  };
  return tape.add_node(std::move(out), req, req ? std::function<void(Tape<Real>&)>(back) : nullptr,
                       nullptr);
}

/// Full head forward: features [B,D] -> logits [B,1]. The tape is the cached
/// forward state used by dqn_backward.
template <typename Real>
Var dqn_forward(Tape<Real>& tape, DressedQuantumNet<Real>& net, Var features,
                const QuantumBackend& backend) {
  const Tensor<Real>& f = tape.value(features);
  if (f.shape.size() != 2 || f.shape[1] != net.feature_dim)
    throw DimensionError("dqn_forward: features must be [B," + std::to_string(net.feature_dim) +
                         "], got " + shape_str(f.shape));
  Var pre = tape.dense(features, tape.leaf(net.pre_w()), tape.leaf(net.pre_b()));
  Var ang = tape.scale(tape.activation(pre, Activation::Tanh), static_cast<Real>(kHalfPiD));
  Var theta = net.has_theta() ? tape.leaf(net.theta()) : Var{};
  Var expect = quantum_expectations(tape, net.ansatz, ang, theta, backend);
  return tape.dense(expect, tape.leaf(net.post_w()), tape.leaf(net.post_b()));
}

/// Seed d(loss)/d(logit) and sweep the cached tape, populating pre-net,
/// theta, and post-net gradients.
template <typename Real>
void dqn_backward(Tape<Real>& tape, Var logit, const std::vector<Real>& upstream,
                  DressedQuantumNet<Real>& net) {
  net.params.zero_grad();
  tape.backward_with_seed(logit, upstream);
  for (auto& e : net.params.entries()) e.value.ensure_grad();
}

}  // namespace qtl
