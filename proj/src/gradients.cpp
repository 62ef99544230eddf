#include "qtl/gradients.hpp"

#include <cmath>

namespace qtl {

namespace {

const double kHalfPi = 1.57079632679489661923;
const double kFdStep = 1e-6;

// Gates whose wires never meet the observable's backward light cone commute
// through the evolved observable, so their parameter derivative is exactly
// zero. Walk the gate list in reverse, growing the wire set from the
// observable's wire; mark each gate in or out of the cone.
std::vector<char> light_cone_flags(const Circuit& c, int obs_wire) {
  std::vector<char> in_cone(c.gates.size(), 0);
  std::vector<char> cone(c.n_qubits, 0);
  cone[obs_wire] = 1;
  for (int k = static_cast<int>(c.gates.size()) - 1; k >= 0; --k) {
    const Gate& g = c.gates[k];
    bool touches = false;
    for (int i = 0; i < g.n_wires; ++i) touches = touches || cone[g.wires[i]];
    if (touches) {
      in_cone[k] = 1;
      for (int i = 0; i < g.n_wires; ++i) cone[g.wires[i]] = 1;
    }
  }
  return in_cone;
}

inline cdouble inner(const StateVector& bra, const StateVector& ket) {
  cdouble acc(0, 0);
  for (size_t i = 0; i < bra.amps.size(); ++i) acc += std::conj(bra.amps[i]) * ket.amps[i];
  return acc;
}

void apply_z(StateVector& s, int wire) {
  const int64_t mask = int64_t(1) << (s.n_qubits - 1 - wire);
  for (size_t i = 0; i < s.amps.size(); ++i)
    if (static_cast<int64_t>(i) & mask) s.amps[i] = -s.amps[i];
}

std::vector<double> all_expectations(const Circuit& c, const std::vector<double>& params,
                                     const std::vector<Observable>& observables) {
  StateVector s = run_circuit(c, params);
  std::vector<double> out(observables.size());
  for (size_t k = 0; k < observables.size(); ++k) out[k] = expect_z(s, observables[k].wire);
  return out;
}

}  // namespace

GradMatrix adjoint_gradients(const Circuit& c, const std::vector<double>& params,
                             const std::vector<Observable>& observables) {
  c.validate();
  for (const Gate& g : c.gates)
    if (g.kind != GateKind::RZ && g.kind != GateKind::RY && g.kind != GateKind::CNOT &&
        g.kind != GateKind::CRY)
      throw CapacityError("adjoint differentiation: unsupported gate kind");

  GradMatrix grads(static_cast<int>(observables.size()), c.n_params());
  const StateVector psi = run_circuit(c, params);

  for (size_t o = 0; o < observables.size(); ++o) {
    const int wire = observables[o].wire;
    if (wire < 0 || wire >= c.n_qubits)
      throw DimensionError("observable wire " + std::to_string(wire) + " out of range");
    const std::vector<char> in_cone = light_cone_flags(c, wire);

    StateVector ket = psi;
    StateVector bra = psi;
    apply_z(bra, wire);

    for (int k = static_cast<int>(c.gates.size()) - 1; k >= 0; --k) {
      const Gate& g = c.gates[k];
      apply_gate_adjoint(ket, g, params);
      if (g.has_param() && in_cone[k]) {
        StateVector mu = ket;
        apply_gate_param_derivative(mu, g, params);
        grads.at(static_cast<int>(o), g.param_slot) += 2.0 * inner(bra, mu).real();
      }
      apply_gate_adjoint(bra, g, params);
    }
  }
  return grads;
}

GradMatrix oracle_gradients(const Circuit& c, const std::vector<double>& params,
                            const std::vector<Observable>& observables) {
  c.validate();
  if (static_cast<int>(params.size()) != c.n_params())
    throw DimensionError("oracle_gradients: parameter count mismatch");
  GradMatrix grads(static_cast<int>(observables.size()), c.n_params());

  for (int slot = 0; slot < c.n_params(); ++slot) {
    bool used = false, shift_ok = true;
    for (const Gate& g : c.gates) {
      if (g.param_slot != slot) continue;
      used = true;
      if (g.kind == GateKind::CRY) shift_ok = false;
    }
    if (!used) continue;  // slot drives no gate: derivative stays zero

    std::vector<double> plus = params, minus = params;
    double scale;
    if (shift_ok) {
      plus[slot] += kHalfPi;
      minus[slot] -= kHalfPi;
      scale = 0.5;
    } else {
      plus[slot] += kFdStep;
      minus[slot] -= kFdStep;
      scale = 1.0 / (2.0 * kFdStep);
    }
    const std::vector<double> fp = all_expectations(c, plus, observables);
    const std::vector<double> fm = all_expectations(c, minus, observables);
    for (size_t o = 0; o < observables.size(); ++o)
      grads.at(static_cast<int>(o), slot) = scale * (fp[o] - fm[o]);
  }
  return grads;
}

}  // namespace qtl
