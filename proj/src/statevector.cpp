#include "qtl/statevector.hpp"

#include <cmath>

namespace qtl {

namespace {

// Basis labels put qubit 0 in the most significant position.
inline int64_t wire_mask(int n_qubits, int wire) { return int64_t(1) << (n_qubits - 1 - wire); }

double resolve(const Gate& g, const std::vector<double>& params) {
  if (g.param_slot < 0 || g.param_slot >= static_cast<int>(params.size()))
    throw ConfigError("gate parameter slot " + std::to_string(g.param_slot) +
                      " unresolvable against " + std::to_string(params.size()) + " parameters");
  return params[g.param_slot];
}

}  // namespace

StateVector StateVector::zero_state(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 16)
    throw CapacityError("statevector qubit count " + std::to_string(n_qubits) + " outside [1,16]");
  StateVector s;
  s.n_qubits = n_qubits;
  s.amps.assign(size_t(1) << n_qubits, cdouble(0.0, 0.0));
  s.amps[0] = cdouble(1.0, 0.0);
  return s;
}

double StateVector::norm() const {
  double acc = 0.0;
  for (const cdouble& a : amps) acc += std::norm(a);
  return std::sqrt(acc);
}

Mat2 ry_matrix(double theta) {
  const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
  return {cdouble(c, 0), cdouble(-s, 0), cdouble(s, 0), cdouble(c, 0)};
}

Mat2 rz_matrix(double theta) {
  return {std::polar(1.0, -theta / 2.0), cdouble(0, 0), cdouble(0, 0), std::polar(1.0, theta / 2.0)};
}

Mat2 ry_derivative(double theta) {
  const double c = 0.5 * std::cos(theta / 2.0), s = 0.5 * std::sin(theta / 2.0);
  return {cdouble(-s, 0), cdouble(-c, 0), cdouble(c, 0), cdouble(-s, 0)};
}

Mat2 rz_derivative(double theta) {
  // d/dtheta diag(e^{-i t/2}, e^{i t/2}) = diag(-i/2 e^{-i t/2}, i/2 e^{i t/2})
  const cdouble e0 = std::polar(0.5, -theta / 2.0), e1 = std::polar(0.5, theta / 2.0);
  return {cdouble(0, -1) * e0, cdouble(0, 0), cdouble(0, 0), cdouble(0, 1) * e1};
}

void apply_1q(StateVector& s, int wire, const Mat2& u) {
  const int64_t mask = wire_mask(s.n_qubits, wire);
  const int64_t dim = int64_t(1) << s.n_qubits;
  for (int64_t i = 0; i < dim; ++i) {
    if (i & mask) continue;
    const cdouble a = s.amps[i], b = s.amps[i | mask];
    s.amps[i] = u[0] * a + u[1] * b;
    s.amps[i | mask] = u[2] * a + u[3] * b;
  }
}

void apply_controlled_1q(StateVector& s, int control, int target, const Mat2& u) {
  const int64_t cmask = wire_mask(s.n_qubits, control);
  const int64_t tmask = wire_mask(s.n_qubits, target);
  const int64_t dim = int64_t(1) << s.n_qubits;
  for (int64_t i = 0; i < dim; ++i) {
    if (!(i & cmask) || (i & tmask)) continue;
    const cdouble a = s.amps[i], b = s.amps[i | tmask];
    s.amps[i] = u[0] * a + u[1] * b;
    s.amps[i | tmask] = u[2] * a + u[3] * b;
  }
}

void apply_cnot(StateVector& s, int control, int target) {
  const int64_t cmask = wire_mask(s.n_qubits, control);
  const int64_t tmask = wire_mask(s.n_qubits, target);
  const int64_t dim = int64_t(1) << s.n_qubits;
  for (int64_t i = 0; i < dim; ++i) {
    if ((i & cmask) && !(i & tmask)) std::swap(s.amps[i], s.amps[i | tmask]);
  }
}

void apply_gate(StateVector& s, const Gate& g, const std::vector<double>& params) {
  switch (g.kind) {
    case GateKind::RZ: apply_1q(s, g.wires[0], rz_matrix(resolve(g, params))); break;
    case GateKind::RY: apply_1q(s, g.wires[0], ry_matrix(resolve(g, params))); break;
    case GateKind::CNOT: apply_cnot(s, g.wires[0], g.wires[1]); break;
    case GateKind::CRY:
      apply_controlled_1q(s, g.wires[0], g.wires[1], ry_matrix(resolve(g, params)));
      break;
  }
}

void apply_gate_adjoint(StateVector& s, const Gate& g, const std::vector<double>& params) {
  switch (g.kind) {
    case GateKind::RZ: apply_1q(s, g.wires[0], rz_matrix(-resolve(g, params))); break;
    case GateKind::RY: apply_1q(s, g.wires[0], ry_matrix(-resolve(g, params))); break;
    case GateKind::CNOT: apply_cnot(s, g.wires[0], g.wires[1]); break;
    case GateKind::CRY:
      apply_controlled_1q(s, g.wires[0], g.wires[1], ry_matrix(-resolve(g, params)));
      break;
  }
}

void apply_gate_param_derivative(StateVector& s, const Gate& g, const std::vector<double>& params) {
  switch (g.kind) {
    case GateKind::RZ: apply_1q(s, g.wires[0], rz_derivative(resolve(g, params))); break;
    case GateKind::RY: apply_1q(s, g.wires[0], ry_derivative(resolve(g, params))); break;
    case GateKind::CNOT: throw ConfigError("CNOT has no parameter derivative");
    case GateKind::CRY: {
      // d(CRY)/dtheta = |1><1| (x) dRY/dtheta: annihilate control-0, rotate control-1.
      const Mat2 d = ry_derivative(resolve(g, params));
      const int64_t cmask = wire_mask(s.n_qubits, g.wires[0]);
      const int64_t tmask = wire_mask(s.n_qubits, g.wires[1]);
      const int64_t dim = int64_t(1) << s.n_qubits;
      for (int64_t i = 0; i < dim; ++i) {
        if (i & tmask) continue;
        if (i & cmask) {
          const cdouble a = s.amps[i], b = s.amps[i | tmask];
          s.amps[i] = d[0] * a + d[1] * b;
          s.amps[i | tmask] = d[2] * a + d[3] * b;
        } else {
          s.amps[i] = cdouble(0, 0);
          s.amps[i | tmask] = cdouble(0, 0);
        }
      }
      break;
    }
  }
}

StateVector run_circuit(const Circuit& c, const std::vector<double>& params) {
  if (static_cast<int>(params.size()) != c.n_params())
    throw DimensionError("circuit expects " + std::to_string(c.n_params()) + " parameters, got " +
                         std::to_string(params.size()));
  StateVector s = StateVector::zero_state(c.n_qubits);
  for (const Gate& g : c.gates) apply_gate(s, g, params);
  return s;
}

double expect_z(const StateVector& s, int wire) {
  if (wire < 0 || wire >= s.n_qubits)
    throw DimensionError("observable wire " + std::to_string(wire) + " out of range");
  const int64_t mask = wire_mask(s.n_qubits, wire);
  double acc = 0.0;
  for (size_t i = 0; i < s.amps.size(); ++i)
    acc += (static_cast<int64_t>(i) & mask) ? -std::norm(s.amps[i]) : std::norm(s.amps[i]);
  return acc;
}

}  // namespace qtl
