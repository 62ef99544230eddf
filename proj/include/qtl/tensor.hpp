#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qtl/errors.hpp"

namespace qtl {

using Shape = std::vector<int64_t>;

inline int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

/// Dense row-major tensor. `Real` is float in the training pipeline and
/// double in gradient-check mode; reductions accumulate in double either way.
template <typename Real>
struct Tensor {
  Shape shape;
  std::vector<Real> values;
  std::vector<Real> grad;  // sized lazily; empty means "no gradient yet"
  bool requires_grad = false;

  Tensor() = default;

  explicit Tensor(Shape s, Real fill = Real(0))
      : shape(std::move(s)), values(static_cast<size_t>(numel(shape)), fill) {
    check_shape();
  }

  static Tensor from(Shape s, std::vector<Real> v) {
    Tensor t;
    t.shape = std::move(s);
    t.values = std::move(v);
    t.check_shape();
    if (numel(t.shape) != static_cast<int64_t>(t.values.size()))
      throw DimensionError("tensor value count " + std::to_string(t.values.size()) +
                           " does not match shape " + shape_str(t.shape));
    return t;
  }

  int64_t size() const { return static_cast<int64_t>(values.size()); }

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), Real(0));
  }

  void zero_grad() { grad.assign(values.size(), Real(0)); }

  bool all_finite() const {
    for (Real v : values)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

 private:
  void check_shape() const {
    for (int64_t d : shape)
      if (d <= 0) throw DimensionError("non-positive dimension in shape " + shape_str(shape));
  }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace qtl
