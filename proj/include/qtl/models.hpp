#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qtl/dqn.hpp"
#include "qtl/params.hpp"
#include "qtl/tape.hpp"

namespace qtl {

/// One conv layer of the baseline stack.
struct ConvSpec {
  int in_c, out_c, kernel, stride;
};

/// The four-conv feature extractor: 1->8 k4 s2, 8->16 k8 s2, 16->32 k8 s2,
/// 32->64 k4 s1, each followed by ReLU and (for the first three) a 2x2
/// stride-1 max pool. On 128x128 input it ends at 64x6x6 = 2304 features.
inline constexpr std::array<ConvSpec, 4> kBaselineConvs{
    {{1, 8, 4, 2}, {8, 16, 8, 2}, {16, 32, 8, 2}, {32, 64, 4, 1}}};
inline constexpr int kPoolKernel = 2;
inline constexpr int kPoolStride = 1;
inline constexpr int kImageSize = 128;
inline constexpr int64_t kFeatureDim = 2304;
inline constexpr int kHeadHidden = 5;
inline constexpr double kHeadDropout = 0.5;

inline int64_t conv_out_dim(int64_t in, int64_t kernel, int64_t stride) {
  if (in < kernel) throw DimensionError("window larger than input dimension");
  return (in - kernel) / stride + 1;
}

/// Spatial side lengths after each conv/pool stage, starting at the input.
std::vector<int64_t> baseline_spatial_chain();

/// Table-style baseline CNN ending in a raw logit (the sigmoid lives in the
/// loss / probability computation).
struct BaselineCnn {
  ParameterSet<float> params;

  Var forward(Tape<float>& tape, Var images, bool training, Rng& dropout_rng);
  Var features(Tape<float>& tape, Var images);
  int64_t conv_parameter_count() const;
};

BaselineCnn build_baseline(uint64_t seed);

/// Frozen copies of the conv-stack weights; requires_grad is false on every
/// tensor, so no backward pass can write gradients into them.
struct FrozenFeatures {
  std::vector<std::pair<std::string, TensorF>> tensors;  // conv{1..4}.{weight,bias}

  Var forward(Tape<float>& tape, Var images);
  int64_t feature_dim() const { return kFeatureDim; }
};

FrozenFeatures freeze_features(const BaselineCnn& model);

/// Run images [N,1,128,128] (values in [0,1]) through the frozen stack.
TensorF feature_extract(FrozenFeatures& frozen, const TensorF& images);

/// Re-initialized classical head: dense 2304->5, ReLU, dropout 0.5,
/// dense 5->1.
struct CtlHead {
  ParameterSet<float> params;

  Var forward(Tape<float>& tape, Var features, bool training, Rng& dropout_rng);
};

CtlHead make_ctl_head(uint64_t seed);

struct CtlModel {
  FrozenFeatures frozen;
  CtlHead head;

  Var forward(Tape<float>& tape, Var images, bool training, Rng& dropout_rng);
};

CtlModel make_ctl_model(const FrozenFeatures& frozen, uint64_t seed);

struct QtlModel {
  FrozenFeatures frozen;
  DressedQuantumNet<float> dqn;

  Var forward(Tape<float>& tape, Var images, const QuantumBackend& backend);
};

QtlModel make_qtl_model(const FrozenFeatures& frozen, int n_qubits, int reps, uint64_t seed);

}  // namespace qtl
