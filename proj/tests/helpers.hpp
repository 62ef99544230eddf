#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "qtl/circuit.hpp"
#include "qtl/gradients.hpp"
#include "qtl/rng.hpp"
#include "qtl/statevector.hpp"
#include "qtl/tensor.hpp"

namespace qtltest {

constexpr double kPi = 3.14159265358979323846;

inline qtl::Tensor<double> random_tensor(qtl::Shape shape, qtl::Rng& rng, double lo = -1.0,
                                         double hi = 1.0) {
  qtl::Tensor<double> t(std::move(shape));
  for (auto& v : t.values) v = rng.uniform(lo, hi);
  return t;
}

inline qtl::TensorF random_tensor_f(qtl::Shape shape, qtl::Rng& rng, double lo = -1.0,
                                    double hi = 1.0) {
  qtl::TensorF t(std::move(shape));
  for (auto& v : t.values) v = static_cast<float>(rng.uniform(lo, hi));
  return t;
}

/// Relative error with a small floor so near-zero pairs compare absolutely.
inline double rel_err(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central-difference check of the gradients stored on `params` against the
/// scalar function `loss_value()` (which must recompute the forward pass from
/// the current parameter values). Returns the max relative error.
inline double max_fd_rel_error(std::vector<qtl::Tensor<double>*> params,
                               const std::function<double()>& loss_value, double step = 1e-5) {
  double worst = 0.0;
  for (auto* p : params) {
    for (size_t i = 0; i < p->values.size(); ++i) {
      const double saved = p->values[i];
      p->values[i] = saved + step;
      const double up = loss_value();
      p->values[i] = saved - step;
      const double down = loss_value();
      p->values[i] = saved;
      const double fd = (up - down) / (2.0 * step);
      worst = std::max(worst, rel_err(p->grad.at(i), fd));
    }
  }
  return worst;
}

/// Ansatz-shaped parameter draw: embedding angles within [-pi/2, pi/2],
/// trainables within [-pi, pi].
inline std::vector<double> random_circuit_params(const qtl::Circuit& c, qtl::Rng& rng) {
  std::vector<double> p(c.n_params());
  for (int i = 0; i < c.n_embedding_params; ++i) p[i] = rng.uniform(-kPi / 2, kPi / 2);
  for (int i = c.n_embedding_params; i < c.n_params(); ++i) p[i] = rng.uniform(-kPi, kPi);
  return p;
}

inline std::vector<qtl::Observable> all_z(const qtl::Circuit& c) {
  std::vector<qtl::Observable> obs(c.n_qubits);
  for (int k = 0; k < c.n_qubits; ++k) obs[k].wire = k;
  return obs;
}

/// Test-local finite-difference gradients over every slot, built purely from
/// forward expectation evaluations; the independent side of the gradient
/// triangle.
inline qtl::GradMatrix fd_gradients(const qtl::Circuit& c, const std::vector<double>& params,
                                    const std::vector<qtl::Observable>& obs, double step = 1e-6) {
  qtl::GradMatrix g(static_cast<int>(obs.size()), c.n_params());
  for (int slot = 0; slot < c.n_params(); ++slot) {
    std::vector<double> plus = params, minus = params;
    plus[slot] += step;
    minus[slot] -= step;
    const qtl::StateVector sp = qtl::run_circuit(c, plus);
    const qtl::StateVector sm = qtl::run_circuit(c, minus);
    for (size_t o = 0; o < obs.size(); ++o)
      g.at(static_cast<int>(o), slot) =
          (qtl::expect_z(sp, obs[o].wire) - qtl::expect_z(sm, obs[o].wire)) / (2.0 * step);
  }
  return g;
}

}  // namespace qtltest
