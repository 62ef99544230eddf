#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qtl/errors.hpp"

#include <json.hpp>

namespace qtl {

enum class GateKind { RZ, RY, CNOT, CRY };
enum class ParamRole { None, Embedding, Trainable };

std::string to_string(GateKind k);
std::string to_string(ParamRole r);
GateKind gate_kind_from_string(const std::string& s);
ParamRole param_role_from_string(const std::string& s);

/// One gate of the supported set. Rotations carry exactly one parameter slot;
/// CNOT carries none. For two-qubit gates wires[0] is the control.
struct Gate {
  GateKind kind;
  std::array<int, 2> wires{-1, -1};
  int n_wires = 1;
  int param_slot = -1;
  ParamRole role = ParamRole::None;

  static Gate rz(int wire, int slot, ParamRole role);
  static Gate ry(int wire, int slot, ParamRole role);
  static Gate cnot(int control, int target);
  static Gate cry(int control, int target, int slot, ParamRole role);

  bool has_param() const { return param_slot >= 0; }
};

/// Ordered gate list over n qubits. Parameter slots index one flat vector:
/// embedding slots [0, n_embedding_params) first, trainable slots after.
struct Circuit {
  int n_qubits = 0;
  std::vector<Gate> gates;
  int n_embedding_params = 0;
  int n_trainable_params = 0;

  int n_params() const { return n_embedding_params + n_trainable_params; }

  /// Enforces the structural invariants: wire bounds, slot bounds, slot/kind
  /// pairing, and embedding-before-trainable slot layout.
  void validate() const;
};

/// Single-wire Pauli-Z expectation target.
struct Observable {
  int wire = 0;
};

/// The variational template: per-wire RY angle embedding, then `reps`
/// repetitions of { RZ layer, CNOT ring, CRY ring }, rings oriented
/// i -> (i+1) mod n. Trainable parameter count is 2*n*reps.
Circuit build_ansatz(int n_qubits, int reps);

nlohmann::json circuit_to_json(const Circuit& c);
Circuit circuit_from_json(const nlohmann::json& j);

}  // namespace qtl
