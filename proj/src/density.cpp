#include "qtl/density.hpp"

#include <cmath>

namespace qtl {

namespace {

inline int64_t wire_mask(int n_qubits, int wire) { return int64_t(1) << (n_qubits - 1 - wire); }

double resolve(const Gate& g, const std::vector<double>& params) {
  if (g.param_slot < 0 || g.param_slot >= static_cast<int>(params.size()))
    throw ConfigError("gate parameter slot unresolvable");
  return params[g.param_slot];
}

// rho -> U rho acting on the row index.
void rows_1q(DensityMatrix& m, int wire, const Mat2& u) {
  const int64_t dim = m.dim();
  const int64_t mask = wire_mask(m.n_qubits, wire);
  for (int64_t r = 0; r < dim; ++r) {
    if (r & mask) continue;
    cdouble* row0 = &m.rho[size_t(r) * dim];
    cdouble* row1 = &m.rho[size_t(r | mask) * dim];
    for (int64_t c = 0; c < dim; ++c) {
      const cdouble a = row0[c], b = row1[c];
      row0[c] = u[0] * a + u[1] * b;
      row1[c] = u[2] * a + u[3] * b;
    }
  }
}

// rho -> rho U^dagger acting on the column index.
void cols_1q(DensityMatrix& m, int wire, const Mat2& u) {
  const int64_t dim = m.dim();
  const int64_t mask = wire_mask(m.n_qubits, wire);
  for (int64_t r = 0; r < dim; ++r) {
    cdouble* row = &m.rho[size_t(r) * dim];
    for (int64_t c = 0; c < dim; ++c) {
      if (c & mask) continue;
      const cdouble a = row[c], b = row[c | mask];
      row[c] = a * std::conj(u[0]) + b * std::conj(u[1]);
      row[c | mask] = a * std::conj(u[2]) + b * std::conj(u[3]);
    }
  }
}

void rows_controlled(DensityMatrix& m, int control, int target, const Mat2& u) {
  const int64_t dim = m.dim();
  const int64_t cmask = wire_mask(m.n_qubits, control);
  const int64_t tmask = wire_mask(m.n_qubits, target);
  for (int64_t r = 0; r < dim; ++r) {
    if (!(r & cmask) || (r & tmask)) continue;
    cdouble* row0 = &m.rho[size_t(r) * dim];
    cdouble* row1 = &m.rho[size_t(r | tmask) * dim];
    for (int64_t c = 0; c < dim; ++c) {
      const cdouble a = row0[c], b = row1[c];
      row0[c] = u[0] * a + u[1] * b;
      row1[c] = u[2] * a + u[3] * b;
    }
  }
}

void cols_controlled(DensityMatrix& m, int control, int target, const Mat2& u) {
  const int64_t dim = m.dim();
  const int64_t cmask = wire_mask(m.n_qubits, control);
  const int64_t tmask = wire_mask(m.n_qubits, target);
  for (int64_t r = 0; r < dim; ++r) {
    cdouble* row = &m.rho[size_t(r) * dim];
    for (int64_t c = 0; c < dim; ++c) {
      if (!(c & cmask) || (c & tmask)) continue;
      const cdouble a = row[c], b = row[c | tmask];
      row[c] = a * std::conj(u[0]) + b * std::conj(u[1]);
      row[c | tmask] = a * std::conj(u[2]) + b * std::conj(u[3]);
    }
  }
}

void rows_cnot(DensityMatrix& m, int control, int target) {
  const int64_t dim = m.dim();
  const int64_t cmask = wire_mask(m.n_qubits, control);
  const int64_t tmask = wire_mask(m.n_qubits, target);
  for (int64_t r = 0; r < dim; ++r) {
    if ((r & cmask) && !(r & tmask)) {
      cdouble* row0 = &m.rho[size_t(r) * dim];
      cdouble* row1 = &m.rho[size_t(r | tmask) * dim];
      for (int64_t c = 0; c < dim; ++c) std::swap(row0[c], row1[c]);
    }
  }
}

void cols_cnot(DensityMatrix& m, int control, int target) {
  const int64_t dim = m.dim();
  const int64_t cmask = wire_mask(m.n_qubits, control);
  const int64_t tmask = wire_mask(m.n_qubits, target);
  for (int64_t r = 0; r < dim; ++r) {
    cdouble* row = &m.rho[size_t(r) * dim];
    for (int64_t c = 0; c < dim; ++c)
      if ((c & cmask) && !(c & tmask)) std::swap(row[c], row[c | tmask]);
  }
}

}  // namespace

NoiseModel::NoiseModel(double r1, double r2) : r_1q(r1), r_2q(r2) {
  if (r_1q < 0.0 || r_1q > 1.0 || r_2q < 0.0 || r_2q > 1.0)
    throw ConfigError("depolarizing rates must lie in [0,1]");
}

DensityMatrix DensityMatrix::zero_state(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 10)
    throw CapacityError("density-matrix backend supports at most 10 qubits, got " +
                        std::to_string(n_qubits));
  DensityMatrix m;
  m.n_qubits = n_qubits;
  const int64_t dim = int64_t(1) << n_qubits;
  m.rho.assign(size_t(dim) * dim, cdouble(0, 0));
  m.rho[0] = cdouble(1, 0);
  return m;
}

double DensityMatrix::trace_real() const {
  const int64_t d = dim();
  double acc = 0;
  for (int64_t i = 0; i < d; ++i) acc += rho[size_t(i) * d + i].real();
  return acc;
}

void apply_gate_dm(DensityMatrix& rho, const Gate& g, const std::vector<double>& params) {
  switch (g.kind) {
    case GateKind::RZ: {
      const Mat2 u = rz_matrix(resolve(g, params));
      rows_1q(rho, g.wires[0], u);
      cols_1q(rho, g.wires[0], u);
      break;
    }
    case GateKind::RY: {
      const Mat2 u = ry_matrix(resolve(g, params));
      rows_1q(rho, g.wires[0], u);
      cols_1q(rho, g.wires[0], u);
      break;
    }
    case GateKind::CNOT:
      rows_cnot(rho, g.wires[0], g.wires[1]);
      cols_cnot(rho, g.wires[0], g.wires[1]);
      break;
    case GateKind::CRY: {
      const Mat2 u = ry_matrix(resolve(g, params));
      rows_controlled(rho, g.wires[0], g.wires[1], u);
      cols_controlled(rho, g.wires[0], g.wires[1], u);
      break;
    }
  }
}

void depolarize(DensityMatrix& rho, const std::vector<int>& wires, double p) {
  if (p < 0.0 || p > 1.0) throw ConfigError("depolarizing probability outside [0,1]");
  if (p == 0.0) return;
  const int64_t dim = rho.dim();
  int64_t acted_mask = 0;
  for (int w : wires) {
    if (w < 0 || w >= rho.n_qubits) throw DimensionError("depolarize: wire out of range");
    acted_mask |= wire_mask(rho.n_qubits, w);
  }
  const double sub = std::pow(2.0, static_cast<double>(wires.size()));

  // T[rest(r), rest(c)] = sum_b rho[(b,rest(r)), (b,rest(c))], indexed here by
  // the masked-out full-space coordinates (acted bits cleared).
  std::vector<cdouble> traced(rho.rho.size(), cdouble(0, 0));
  for (int64_t r = 0; r < dim; ++r)
    for (int64_t c = 0; c < dim; ++c)
      if ((r & acted_mask) == (c & acted_mask))
        traced[size_t(r & ~acted_mask) * dim + (c & ~acted_mask)] += rho.rho[size_t(r) * dim + c];

  for (int64_t r = 0; r < dim; ++r)
    for (int64_t c = 0; c < dim; ++c) {
      cdouble v = (1.0 - p) * rho.rho[size_t(r) * dim + c];
      if ((r & acted_mask) == (c & acted_mask))
        v += (p / sub) * traced[size_t(r & ~acted_mask) * dim + (c & ~acted_mask)];
      rho.rho[size_t(r) * dim + c] = v;
    }
}

DensityMatrix simulate_noisy(const Circuit& c, const std::vector<double>& params,
                             const NoiseModel& noise) {
  c.validate();
  if (static_cast<int>(params.size()) != c.n_params())
    throw DimensionError("simulate_noisy: parameter count mismatch");
  DensityMatrix rho = DensityMatrix::zero_state(c.n_qubits);
  for (const Gate& g : c.gates) {
    apply_gate_dm(rho, g, params);
    if (g.n_wires == 1)
      depolarize(rho, {g.wires[0]}, noise.r_1q);
    else
      depolarize(rho, {g.wires[0], g.wires[1]}, noise.r_2q);
  }
  return rho;
}

double expect_z_dm(const DensityMatrix& rho, int wire) {
  if (wire < 0 || wire >= rho.n_qubits)
    throw DimensionError("observable wire " + std::to_string(wire) + " out of range");
  const int64_t dim = rho.dim();
  const int64_t mask = wire_mask(rho.n_qubits, wire);
  double acc = 0;
  for (int64_t i = 0; i < dim; ++i) {
    const double d = rho.rho[size_t(i) * dim + i].real();
    acc += (i & mask) ? -d : d;
  }
  return acc;
}

DensityMatrix pure_density(const StateVector& s) {
  DensityMatrix m = DensityMatrix::zero_state(s.n_qubits);
  const int64_t dim = m.dim();
  for (int64_t r = 0; r < dim; ++r)
    for (int64_t c = 0; c < dim; ++c)
      m.rho[size_t(r) * dim + c] = s.amps[r] * std::conj(s.amps[c]);
  return m;
}

}  // namespace qtl
