#pragma once

#include <vector>

#include "qtl/circuit.hpp"
#include "qtl/statevector.hpp"

namespace qtl {

/// d<Z_k>/d(p_j) for every observable k (row) and parameter slot j (column),
/// embedding and trainable slots alike.
struct GradMatrix {
  int n_obs = 0;
  int n_params = 0;
  std::vector<double> data;  // row-major

  GradMatrix() = default;
  GradMatrix(int obs, int params) : n_obs(obs), n_params(params), data(size_t(obs) * params, 0.0) {}
  double& at(int o, int p) { return data[size_t(o) * n_params + p]; }
  double at(int o, int p) const { return data[size_t(o) * n_params + p]; }
};

/// Exact adjoint-method gradients: one forward statevector pass, then one
/// reverse sweep per observable carrying a (bra, ket) pair backward through
/// the gate list. Gates outside an observable's backward light cone commute
/// through the evolved observable, so their contribution is written as an
/// exact zero and the sweep skips their derivative work.
GradMatrix adjoint_gradients(const Circuit& c, const std::vector<double>& params,
                             const std::vector<Observable>& observables);

/// Independent reference gradients: two-term parameter shift
/// (f(t+pi/2) - f(t-pi/2))/2 for slots driving only RZ/RY gates, central
/// finite differences (step 1e-6) for slots touching CRY, where the two-term
/// rule does not hold. Built purely from forward circuit evaluations.
GradMatrix oracle_gradients(const Circuit& c, const std::vector<double>& params,
                            const std::vector<Observable>& observables);

}  // namespace qtl
