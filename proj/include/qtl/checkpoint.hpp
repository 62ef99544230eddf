#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qtl/errors.hpp"
#include "qtl/tensor.hpp"

#include <json.hpp>

namespace qtl {

/// Checkpoint file layout (all integers little-endian):
///   bytes 0..3   magic "QTLC"
///   bytes 4..7   format version (u32)
///   bytes 8..11  header length in bytes (u32)
///   header       UTF-8 JSON: {"meta": {...}, "tensors": [{name, shape, dtype:"f32"}...]}
///   data         raw f32 values concatenated in header order
inline constexpr uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  TensorF tensor;
};

struct LoadedCheckpoint {
  nlohmann::json meta;
  std::vector<NamedTensor> tensors;

  const TensorF& get(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const nlohmann::json& meta,
                     const std::vector<std::pair<std::string, const TensorF*>>& tensors);

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace qtl
