#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qtl/errors.hpp"
#include "qtl/rng.hpp"
#include "qtl/tape.hpp"
#include "qtl/tensor.hpp"

namespace qtl {

/// Named trainable tensors plus their Adam moments. Registration order is the
/// update order, so two runs with identical gradients update identically.
/// The step counter is shared across all parameters of one set.
template <typename Real>
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Tensor<Real> value;
    std::vector<Real> m;  // first moment
    std::vector<Real> v;  // second moment
  };

  Tensor<Real>& add(const std::string& name, Tensor<Real> t) {
    for (const auto& e : entries_)
      if (e.name == name) throw ConfigError("duplicate parameter name: " + name);
    t.requires_grad = true;
    Entry e;
    e.name = name;
    e.value = std::move(t);
    e.m.assign(e.value.values.size(), Real(0));
    e.v.assign(e.value.values.size(), Real(0));
    entries_.push_back(std::move(e));
    return entries_.back().value;
  }

  Tensor<Real>& get(const std::string& name) {
    for (auto& e : entries_)
      if (e.name == name) return e.value;
    throw ConfigError("unknown parameter: " + name);
  }
  const Tensor<Real>& get(const std::string& name) const {
    for (const auto& e : entries_)
      if (e.name == name) return e.value;
    throw ConfigError("unknown parameter: " + name);
  }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  int64_t step_count() const { return step_; }

  int64_t parameter_count() const {
    int64_t n = 0;
    for (const auto& e : entries_) n += e.value.size();
    return n;
  }

  void zero_grad() {
    for (auto& e : entries_) e.value.zero_grad();
  }

  /// Bias-corrected Adam update using the gradients currently stored on each
  /// parameter. Gradients must have been populated by a backward pass.
  void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    for (const auto& e : entries_)
      if (e.value.grad.size() != e.value.values.size())
        throw StateError("adam_step: parameter '" + e.name + "' has no gradient");
    const int64_t t = ++step_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (auto& e : entries_) {
      for (size_t i = 0; i < e.value.values.size(); ++i) {
        const double g = static_cast<double>(e.value.grad[i]);
        const double m = beta1 * static_cast<double>(e.m[i]) + (1.0 - beta1) * g;
        const double v = beta2 * static_cast<double>(e.v[i]) + (1.0 - beta2) * g * g;
        e.m[i] = static_cast<Real>(m);
        e.v[i] = static_cast<Real>(v);
        const double update = lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
        e.value.values[i] = static_cast<Real>(static_cast<double>(e.value.values[i]) - update);
      }
      if (!e.value.all_finite()) throw NumericError("adam_step: parameter '" + e.name + "' went non-finite");
    }
  }

 private:
  std::vector<Entry> entries_;
  int64_t step_ = 0;
};

/// Zero every parameter gradient, then run the tape's reverse sweep so that
/// participating parameters hold d(loss)/d(param) and non-participating ones
/// hold exact zeros.
template <typename Real>
void backward(Tape<Real>& tape, Var loss, ParameterSet<Real>& params) {
  params.zero_grad();
  tape.backward(loss);
  for (auto& e : params.entries()) e.value.ensure_grad();
}

/// Glorot-uniform fill: U(-limit, limit) with limit = sqrt(6/(fan_in+fan_out)).
template <typename Real>
void glorot_fill(Tensor<Real>& t, int64_t fan_in, int64_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& v : t.values) v = static_cast<Real>(rng.uniform(-limit, limit));
}

template <typename Real>
Tensor<Real> glorot_dense(int64_t in_dim, int64_t out_dim, Rng& rng) {
  Tensor<Real> w(Shape{in_dim, out_dim});
  glorot_fill(w, in_dim, out_dim, rng);
  return w;
}

template <typename Real>
Tensor<Real> glorot_conv(int64_t out_c, int64_t in_c, int64_t kh, int64_t kw, Rng& rng) {
  Tensor<Real> w(Shape{out_c, in_c, kh, kw});
  glorot_fill(w, in_c * kh * kw, out_c * kh * kw, rng);
  return w;
}

}  // namespace qtl
