#pragma once

#include <complex>
#include <vector>

#include "qtl/circuit.hpp"

namespace qtl {

using cdouble = std::complex<double>;

/// Pure state over 2^n amplitudes, 64-bit complex throughout.
/// Qubit 0 is the leftmost (most significant) bit of a basis-state label, so
/// |10> on two qubits means qubit 0 in |1>, qubit 1 in |0>, index 0b10 = 2.
struct StateVector {
  int n_qubits = 0;
  std::vector<cdouble> amps;

  static StateVector zero_state(int n_qubits);
  double norm() const;
};

/// 2x2 complex matrix, row-major {u00, u01, u10, u11}.
using Mat2 = std::array<cdouble, 4>;

Mat2 ry_matrix(double theta);
Mat2 rz_matrix(double theta);
Mat2 ry_derivative(double theta);
Mat2 rz_derivative(double theta);

void apply_1q(StateVector& s, int wire, const Mat2& u);
void apply_controlled_1q(StateVector& s, int control, int target, const Mat2& u);
void apply_cnot(StateVector& s, int control, int target);

/// Apply one gate, resolving its parameter slot against `params`.
void apply_gate(StateVector& s, const Gate& g, const std::vector<double>& params);
/// Apply the inverse of one gate.
void apply_gate_adjoint(StateVector& s, const Gate& g, const std::vector<double>& params);
/// Apply dG/dtheta. Non-unitary for CRY, where the control-0 subspace is
/// annihilated and the control-1 subspace gets dRY/dtheta.
void apply_gate_param_derivative(StateVector& s, const Gate& g, const std::vector<double>& params);

StateVector run_circuit(const Circuit& c, const std::vector<double>& params);

double expect_z(const StateVector& s, int wire);

}  // namespace qtl
