#include "qtl/model_io.hpp"

namespace qtl {

namespace {

void copy_into(TensorF& dst, const TensorF& src, const std::string& name) {
  if (dst.shape != src.shape)
    throw CheckpointError("checkpoint tensor '" + name + "' has shape " + shape_str(src.shape) +
                          ", expected " + shape_str(dst.shape));
  dst.values = src.values;
}

void load_params(ParameterSet<float>& params, const LoadedCheckpoint& ckpt,
                 const std::string& prefix) {
  for (auto& e : params.entries()) copy_into(e.value, ckpt.get(prefix + e.name), prefix + e.name);
}

void append_params(std::vector<std::pair<std::string, const TensorF*>>& out,
                   const ParameterSet<float>& params, const std::string& prefix) {
  for (const auto& e : params.entries()) out.emplace_back(prefix + e.name, &e.value);
}

FrozenFeatures frozen_from_checkpoint(const LoadedCheckpoint& ckpt) {
  FrozenFeatures frozen;
  for (int i = 1; i <= 4; ++i) {
    for (const char* part : {".weight", ".bias"}) {
      const std::string name = "conv" + std::to_string(i) + part;
      TensorF t = ckpt.get(name);
      t.requires_grad = false;
      frozen.tensors.emplace_back(name, std::move(t));
    }
  }
  return frozen;
}

void append_frozen(std::vector<std::pair<std::string, const TensorF*>>& out,
                   const FrozenFeatures& frozen) {
  for (const auto& [name, tensor] : frozen.tensors) out.emplace_back(name, &tensor);
}

}  // namespace

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Baseline: return "baseline";
    case ModelKind::Ctl: return "ctl";
    case ModelKind::Qtl: return "qtl";
  }
  return "?";
}

void save_model(const std::string& path, const BaselineCnn& model) {
  std::vector<std::pair<std::string, const TensorF*>> tensors;
  append_params(tensors, model.params, "");
  save_checkpoint(path, nlohmann::json{{"kind", "baseline"}}, tensors);
}

void save_model(const std::string& path, const CtlModel& model) {
  std::vector<std::pair<std::string, const TensorF*>> tensors;
  append_frozen(tensors, model.frozen);
  append_params(tensors, model.head.params, "head.");
  save_checkpoint(path, nlohmann::json{{"kind", "ctl"}}, tensors);
}

void save_model(const std::string& path, const QtlModel& model) {
  std::vector<std::pair<std::string, const TensorF*>> tensors;
  append_frozen(tensors, model.frozen);
  append_params(tensors, model.dqn.params, "dqn.");
  nlohmann::json meta{{"kind", "qtl"},
                      {"feature_dim", model.dqn.feature_dim},
                      {"circuit", circuit_to_json(model.dqn.ansatz)}};
  save_checkpoint(path, meta, tensors);
}

AnyModel load_model(const std::string& path) {
  const LoadedCheckpoint ckpt = load_checkpoint(path);
  std::string kind;
  try {
    kind = ckpt.meta.at("kind").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw CheckpointError("checkpoint metadata is missing the model kind");
  }

  AnyModel out;
  if (kind == "baseline") {
    out.kind = ModelKind::Baseline;
    out.baseline = std::make_unique<BaselineCnn>(build_baseline(0));
    load_params(out.baseline->params, ckpt, "");
  } else if (kind == "ctl") {
    out.kind = ModelKind::Ctl;
    out.ctl = std::make_unique<CtlModel>();
    out.ctl->frozen = frozen_from_checkpoint(ckpt);
    out.ctl->head = make_ctl_head(0);
    load_params(out.ctl->head.params, ckpt, "head.");
  } else if (kind == "qtl") {
    out.kind = ModelKind::Qtl;
    out.qtl = std::make_unique<QtlModel>();
    out.qtl->frozen = frozen_from_checkpoint(ckpt);
    Circuit circuit;
    int feature_dim = 0;
    try {
      circuit = circuit_from_json(ckpt.meta.at("circuit"));
      feature_dim = ckpt.meta.at("feature_dim").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(std::string("qtl checkpoint metadata malformed: ") + e.what());
    }
    out.qtl->dqn = make_dqn_with_circuit<float>(feature_dim, circuit, 0);
    load_params(out.qtl->dqn.params, ckpt, "dqn.");
  } else {
    throw CheckpointError("unknown model kind in checkpoint: " + kind);
  }
  return out;
}

}  // namespace qtl
