#include "qtl/models.hpp"

namespace qtl {

namespace {

// Shared conv-stack walk for the baseline and the frozen extractor.
// `wb[i]` holds (weight, bias) of conv layer i.
Var conv_stack_forward(Tape<float>& tape, Var x,
                       const std::array<std::pair<TensorF*, TensorF*>, 4>& wb) {
  for (size_t i = 0; i < kBaselineConvs.size(); ++i) {
    const ConvSpec& spec = kBaselineConvs[i];
    x = tape.conv2d(x, tape.leaf(*wb[i].first), tape.leaf(*wb[i].second), spec.stride);
    x = tape.activation(x, Activation::Relu);
    if (i + 1 < kBaselineConvs.size()) x = tape.maxpool2d(x, kPoolKernel, kPoolStride);
  }
  const Shape& s = tape.value(x).shape;
  return tape.reshape(x, Shape{s[0], s[1] * s[2] * s[3]});
}

void check_image_batch(const Tensor<float>& t) {
  if (t.shape.size() != 4 || t.shape[1] != 1 || t.shape[2] != kImageSize ||
      t.shape[3] != kImageSize)
    throw DimensionError("expected images [N,1,128,128], got " + shape_str(t.shape));
}

}  // namespace

std::vector<int64_t> baseline_spatial_chain() {
  std::vector<int64_t> chain{kImageSize};
  int64_t d = kImageSize;
  for (size_t i = 0; i < kBaselineConvs.size(); ++i) {
    d = conv_out_dim(d, kBaselineConvs[i].kernel, kBaselineConvs[i].stride);
    chain.push_back(d);
    if (i + 1 < kBaselineConvs.size()) {
      d = conv_out_dim(d, kPoolKernel, kPoolStride);
      chain.push_back(d);
    }
  }
  return chain;
}

BaselineCnn build_baseline(uint64_t seed) {
  BaselineCnn model;
  for (size_t i = 0; i < kBaselineConvs.size(); ++i) {
    const ConvSpec& c = kBaselineConvs[i];
    Rng rng(Rng::derive(seed, 10 + i));
    const std::string base = "conv" + std::to_string(i + 1);
    model.params.add(base + ".weight", glorot_conv<float>(c.out_c, c.in_c, c.kernel, c.kernel, rng));
    model.params.add(base + ".bias", TensorF(Shape{c.out_c}));
  }
  Rng fc1_rng(Rng::derive(seed, 20));
  Rng fc2_rng(Rng::derive(seed, 21));
  model.params.add("fc1.weight", glorot_dense<float>(kFeatureDim, kHeadHidden, fc1_rng));
  model.params.add("fc1.bias", TensorF(Shape{kHeadHidden}));
  model.params.add("fc2.weight", glorot_dense<float>(kHeadHidden, 1, fc2_rng));
  model.params.add("fc2.bias", TensorF(Shape{1}));
  return model;
}

Var BaselineCnn::features(Tape<float>& tape, Var images) {
  check_image_batch(tape.value(images));
  std::array<std::pair<TensorF*, TensorF*>, 4> wb;
  for (size_t i = 0; i < 4; ++i) {
    const std::string base = "conv" + std::to_string(i + 1);
    wb[i] = {&params.get(base + ".weight"), &params.get(base + ".bias")};
  }
  return conv_stack_forward(tape, images, wb);
}

Var BaselineCnn::forward(Tape<float>& tape, Var images, bool training, Rng& dropout_rng) {
  Var f = features(tape, images);
  Var h = tape.dense(f, tape.leaf(params.get("fc1.weight")), tape.leaf(params.get("fc1.bias")));
  h = tape.activation(h, Activation::Relu);
  h = tape.dropout(h, kHeadDropout, training, dropout_rng);
  return tape.dense(h, tape.leaf(params.get("fc2.weight")), tape.leaf(params.get("fc2.bias")));
}

int64_t BaselineCnn::conv_parameter_count() const {
  int64_t n = 0;
  for (const auto& e : params.entries())
    if (e.name.rfind("conv", 0) == 0) n += e.value.size();
  return n;
}

FrozenFeatures freeze_features(const BaselineCnn& model) {
  FrozenFeatures frozen;
  for (const auto& e : model.params.entries()) {
    if (e.name.rfind("conv", 0) != 0) continue;
    TensorF copy = e.value;
    copy.requires_grad = false;
    copy.grad.clear();
    frozen.tensors.emplace_back(e.name, std::move(copy));
  }
  if (frozen.tensors.size() != 8) throw StateError("baseline is missing conv tensors");
  return frozen;
}

Var FrozenFeatures::forward(Tape<float>& tape, Var images) {
  check_image_batch(tape.value(images));
  std::array<std::pair<TensorF*, TensorF*>, 4> wb;
  for (size_t i = 0; i < 4; ++i) wb[i] = {&tensors[2 * i].second, &tensors[2 * i + 1].second};
  return conv_stack_forward(tape, images, wb);
}

TensorF feature_extract(FrozenFeatures& frozen, const TensorF& images) {
  for (float v : images.values)
    if (v < 0.0f || v > 1.0f)
      throw NumericError("feature_extract: input pixels must lie in [0,1]");
  Tape<float> tape;
  Var out = frozen.forward(tape, tape.input(images));
  return tape.value(out);
}

CtlHead make_ctl_head(uint64_t seed) {
  CtlHead head;
  Rng fc1_rng(Rng::derive(seed, 30));
  Rng fc2_rng(Rng::derive(seed, 31));
  head.params.add("fc1.weight", glorot_dense<float>(kFeatureDim, kHeadHidden, fc1_rng));
  head.params.add("fc1.bias", TensorF(Shape{kHeadHidden}));
  head.params.add("fc2.weight", glorot_dense<float>(kHeadHidden, 1, fc2_rng));
  head.params.add("fc2.bias", TensorF(Shape{1}));
  return head;
}

Var CtlHead::forward(Tape<float>& tape, Var features, bool training, Rng& dropout_rng) {
  Var h = tape.dense(features, tape.leaf(params.get("fc1.weight")), tape.leaf(params.get("fc1.bias")));
  h = tape.activation(h, Activation::Relu);
  h = tape.dropout(h, kHeadDropout, training, dropout_rng);
  return tape.dense(h, tape.leaf(params.get("fc2.weight")), tape.leaf(params.get("fc2.bias")));
}

CtlModel make_ctl_model(const FrozenFeatures& frozen, uint64_t seed) {
  return CtlModel{frozen, make_ctl_head(seed)};
}

Var CtlModel::forward(Tape<float>& tape, Var images, bool training, Rng& dropout_rng) {
  return head.forward(tape, frozen.forward(tape, images), training, dropout_rng);
}

QtlModel make_qtl_model(const FrozenFeatures& frozen, int n_qubits, int reps, uint64_t seed) {
  return QtlModel{frozen,
                  make_dqn<float>(static_cast<int>(kFeatureDim), n_qubits, reps, seed)};
}

Var QtlModel::forward(Tape<float>& tape, Var images, const QuantumBackend& backend) {
  return dqn_forward(tape, dqn, frozen.forward(tape, images), backend);
}

}  // namespace qtl
