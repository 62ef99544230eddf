#include "qtl/circuit.hpp"

namespace qtl {

std::string to_string(GateKind k) {
  switch (k) {
    case GateKind::RZ: return "RZ";
    case GateKind::RY: return "RY";
    case GateKind::CNOT: return "CNOT";
    case GateKind::CRY: return "CRY";
  }
  return "?";
}

std::string to_string(ParamRole r) {
  switch (r) {
    case ParamRole::None: return "none";
    case ParamRole::Embedding: return "embedding";
    case ParamRole::Trainable: return "trainable";
  }
  return "?";
}

GateKind gate_kind_from_string(const std::string& s) {
  if (s == "RZ") return GateKind::RZ;
  if (s == "RY") return GateKind::RY;
  if (s == "CNOT") return GateKind::CNOT;
  if (s == "CRY") return GateKind::CRY;
  throw ConfigError("unknown gate kind: " + s);
}

ParamRole param_role_from_string(const std::string& s) {
  if (s == "none") return ParamRole::None;
  if (s == "embedding") return ParamRole::Embedding;
  if (s == "trainable") return ParamRole::Trainable;
  throw ConfigError("unknown param role: " + s);
}

Gate Gate::rz(int wire, int slot, ParamRole role) {
  Gate g;
  g.kind = GateKind::RZ;
  g.wires = {wire, -1};
  g.n_wires = 1;
  g.param_slot = slot;
  g.role = role;
  return g;
}

Gate Gate::ry(int wire, int slot, ParamRole role) {
  Gate g;
  g.kind = GateKind::RY;
  g.wires = {wire, -1};
  g.n_wires = 1;
  g.param_slot = slot;
  g.role = role;
  return g;
}

Gate Gate::cnot(int control, int target) {
  Gate g;
  g.kind = GateKind::CNOT;
  g.wires = {control, target};
  g.n_wires = 2;
  return g;
}

Gate Gate::cry(int control, int target, int slot, ParamRole role) {
  Gate g;
  g.kind = GateKind::CRY;
  g.wires = {control, target};
  g.n_wires = 2;
  g.param_slot = slot;
  g.role = role;
  return g;
}

void Circuit::validate() const {
  if (n_qubits < 1 || n_qubits > 16)
    throw CapacityError("circuit qubit count " + std::to_string(n_qubits) + " outside [1,16]");
  if (n_embedding_params < 0 || n_trainable_params < 0)
    throw ConfigError("negative parameter counts");
  for (const Gate& g : gates) {
    for (int i = 0; i < g.n_wires; ++i)
      if (g.wires[i] < 0 || g.wires[i] >= n_qubits)
        throw DimensionError("gate wire " + std::to_string(g.wires[i]) + " out of range for " +
                             std::to_string(n_qubits) + " qubits");
    if (g.n_wires == 2 && g.wires[0] == g.wires[1])
      throw DimensionError("two-qubit gate with identical wires");
    if (g.kind == GateKind::CNOT) {
      if (g.has_param()) throw ConfigError("CNOT must not carry a parameter slot");
    } else {
      if (!g.has_param()) throw ConfigError(to_string(g.kind) + " must carry a parameter slot");
      if (g.param_slot >= n_params())
        throw ConfigError("parameter slot " + std::to_string(g.param_slot) + " out of range");
      if (g.role == ParamRole::Embedding && g.param_slot >= n_embedding_params)
        throw ConfigError("embedding slot " + std::to_string(g.param_slot) +
                          " falls in the trainable range");
      if (g.role == ParamRole::Trainable && g.param_slot < n_embedding_params)
        throw ConfigError("trainable slot " + std::to_string(g.param_slot) +
                          " falls in the embedding range");
    }
  }
}

Circuit build_ansatz(int n_qubits, int reps) {
  if (n_qubits < 3 || n_qubits > 10)
    throw ConfigError("ansatz qubit count " + std::to_string(n_qubits) + " outside [3,10]");
  if (reps < 2 || reps > 4)
    throw ConfigError("ansatz repetition count " + std::to_string(reps) + " outside [2,4]");

  Circuit c;
  c.n_qubits = n_qubits;
  c.n_embedding_params = n_qubits;
  c.n_trainable_params = 2 * n_qubits * reps;

  for (int w = 0; w < n_qubits; ++w) c.gates.push_back(Gate::ry(w, w, ParamRole::Embedding));

  int slot = n_qubits;
  for (int r = 0; r < reps; ++r) {
    for (int w = 0; w < n_qubits; ++w)
      c.gates.push_back(Gate::rz(w, slot++, ParamRole::Trainable));
    for (int w = 0; w < n_qubits; ++w)
      c.gates.push_back(Gate::cnot(w, (w + 1) % n_qubits));
    for (int w = 0; w < n_qubits; ++w)
      c.gates.push_back(Gate::cry(w, (w + 1) % n_qubits, slot++, ParamRole::Trainable));
  }
  c.validate();
  return c;
}

nlohmann::json circuit_to_json(const Circuit& c) {
  nlohmann::json gates = nlohmann::json::array();
  for (const Gate& g : c.gates) {
    nlohmann::json jg;
    jg["kind"] = to_string(g.kind);
    if (g.n_wires == 1)
      jg["wires"] = {g.wires[0]};
    else
      jg["wires"] = {g.wires[0], g.wires[1]};
    if (g.has_param()) {
      jg["param_slot"] = g.param_slot;
      jg["param_role"] = to_string(g.role);
    } else {
      jg["param_slot"] = nullptr;
      jg["param_role"] = nullptr;
    }
    gates.push_back(jg);
  }
  return nlohmann::json{{"n_qubits", c.n_qubits},
                        {"gates", gates},
                        {"n_embedding_params", c.n_embedding_params},
                        {"n_trainable_params", c.n_trainable_params}};
}

Circuit circuit_from_json(const nlohmann::json& j) {
  Circuit c;
  c.n_qubits = j.at("n_qubits").get<int>();
  c.n_embedding_params = j.at("n_embedding_params").get<int>();
  c.n_trainable_params = j.at("n_trainable_params").get<int>();
  for (const auto& jg : j.at("gates")) {
    Gate g;
    g.kind = gate_kind_from_string(jg.at("kind").get<std::string>());
    const auto& wires = jg.at("wires");
    g.n_wires = static_cast<int>(wires.size());
    if (g.n_wires < 1 || g.n_wires > 2) throw ConfigError("gate must act on 1 or 2 wires");
    for (int i = 0; i < g.n_wires; ++i) g.wires[i] = wires[i].get<int>();
    if (jg.contains("param_slot") && !jg.at("param_slot").is_null()) {
      g.param_slot = jg.at("param_slot").get<int>();
      g.role = param_role_from_string(jg.at("param_role").get<std::string>());
    }
    c.gates.push_back(g);
  }
  c.validate();
  return c;
}

}  // namespace qtl
