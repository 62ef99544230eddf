#pragma once

#include <complex>
#include <vector>

#include "qtl/circuit.hpp"
#include "qtl/statevector.hpp"

namespace qtl {

/// Per-gate depolarizing rates. r_1q follows every single-qubit gate,
/// r_2q every two-qubit gate, applied on exactly the gate's wires.
struct NoiseModel {
  double r_1q = 0.0;
  double r_2q = 0.0;

  NoiseModel() = default;
  NoiseModel(double r1, double r2);
};

/// Mixed state as a dense 2^n x 2^n complex matrix (row-major).
/// Same qubit-0-is-MSB labeling as StateVector.
struct DensityMatrix {
  int n_qubits = 0;
  std::vector<cdouble> rho;

  static DensityMatrix zero_state(int n_qubits);
  int64_t dim() const { return int64_t(1) << n_qubits; }
  cdouble at(int64_t r, int64_t c) const { return rho[size_t(r) * dim() + c]; }
  double trace_real() const;
};

/// rho -> U rho U^dagger for one gate.
void apply_gate_dm(DensityMatrix& rho, const Gate& g, const std::vector<double>& params);

/// rho -> (1-p) rho + p (I/2^k tensor tr_wires(rho)), the depolarizing channel
/// on `wires` with the maximally-mixed replacement convention.
void depolarize(DensityMatrix& rho, const std::vector<int>& wires, double p);

/// Evolve |0..0><0..0| through the circuit, applying the depolarizing channel
/// after every gate on that gate's wires. Inference-only backend.
DensityMatrix simulate_noisy(const Circuit& c, const std::vector<double>& params,
                             const NoiseModel& noise);

double expect_z_dm(const DensityMatrix& rho, int wire);

/// |psi><psi| (cross-backend checks).
DensityMatrix pure_density(const StateVector& s);

}  // namespace qtl
